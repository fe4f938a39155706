//! Candidate proposal on a horizontal grid × height layers, and the
//! seven-layer geometric sanity filter.
//!
//! The filter casts 28 rays per candidate once: 16 horizontal rays at
//! 22.5° azimuth steps, 10 angled rays (5 azimuths at 72° × elevations
//! ±45°), and a dedicated up/down pair. Misses count as infinite distance.
//!
//! | layer | rays       | rejects when                                        |
//! |-------|------------|-----------------------------------------------------|
//! | 1     | up, down   | up > max(5, ceil) or down > max(3, ceil) (or miss)  |
//! | 2     | up, down   | ≥ 2 of them closer than 0.2 m                       |
//! | 3     | horizontal | more than half closer than 1.0 m                    |
//! | 4     | spherical  | hit-rate ≥ 0.9 and CV < 0.3 and max < 8 m           |
//! | 5     | horizontal | min < 0.3 m                                         |
//! | 6     | spherical  | fraction in [0.5, 20] m below 35 %                  |
//! | 7     | horizontal | some opposite pair sums below 1.5 m                 |

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::Bvh;
use crate::{Aabb, Vec3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridConfig {
    pub spacing_m: f64,
    pub margin_m: f64,
    pub cap: usize,
    pub height_layers_m: Vec<f64>,
    /// Offsets above the highest base layer, used when the ceiling allows.
    pub extra_high_layers_m: Vec<f64>,
    pub top_clip_m: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            spacing_m: 0.5,
            margin_m: 0.2,
            cap: 10_000,
            height_layers_m: vec![0.5, 0.8, 1.2, 1.7, 2.1],
            extra_high_layers_m: vec![1.0, 1.5, 2.0, 2.5, 3.0],
            top_clip_m: 0.3,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.spacing_m > 0.0) {
            return Err(Error::config("grid.spacing_m", "must be positive"));
        }
        if !(self.margin_m >= 0.0) {
            return Err(Error::config("grid.margin_m", "must be non-negative"));
        }
        if self.cap == 0 {
            return Err(Error::config("grid.cap", "must be at least 1"));
        }
        if self.height_layers_m.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config(
                "grid.height_layers_m",
                "must be sorted ascending",
            ));
        }
        if self.extra_high_layers_m.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::config(
                "grid.extra_high_layers_m",
                "must be sorted ascending",
            ));
        }
        Ok(())
    }

    /// Heights above the floor that survive the top clip.
    pub fn layer_heights(&self, effective_ceiling_m: f64) -> Vec<f64> {
        let limit = effective_ceiling_m - self.top_clip_m;
        let mut out: Vec<f64> = self
            .height_layers_m
            .iter()
            .copied()
            .filter(|&h| h <= limit)
            .collect();
        if let Some(&top) = self.height_layers_m.last() {
            out.extend(
                self.extra_high_layers_m
                    .iter()
                    .map(|o| top + o)
                    .filter(|&h| h <= limit),
            );
        }
        out
    }
}

/// Grid coordinates along one axis: as many `spacing` steps as fit in the
/// inset interval, centred in it.
fn axis_samples(lo: f64, hi: f64, spacing: f64) -> Vec<f64> {
    let len = hi - lo;
    if len < 0.0 {
        return Vec::new();
    }
    let n = (len / spacing + 1e-9).floor() as usize + 1;
    let offset = (len - (n - 1) as f64 * spacing) / 2.0;
    (0..n).map(|i| lo + offset + i as f64 * spacing).collect()
}

/// Candidate positions, layer-major then x then z. Spacing doubles until the
/// count fits under `cfg.cap`.
pub fn gen_candidates(
    mesh_aabb: Aabb,
    cfg: &GridConfig,
    effective_ceiling_m: f64,
) -> Result<Vec<Vec3>> {
    cfg.validate()?;
    let heights = cfg.layer_heights(effective_ceiling_m);
    let mut spacing = cfg.spacing_m;
    loop {
        let xs = axis_samples(
            mesh_aabb.min.x + cfg.margin_m,
            mesh_aabb.max.x - cfg.margin_m,
            spacing,
        );
        let zs = axis_samples(
            mesh_aabb.min.z + cfg.margin_m,
            mesh_aabb.max.z - cfg.margin_m,
            spacing,
        );
        let count = xs.len() * zs.len() * heights.len();
        if count == 0 {
            return Err(Error::EmptyGrid);
        }
        if count > cfg.cap {
            spacing *= 2.0;
            continue;
        }
        let mut out = Vec::with_capacity(count);
        for &h in &heights {
            for &x in &xs {
                for &z in &zs {
                    out.push(Vec3::new(x, mesh_aabb.min.y + h, z));
                }
            }
        }
        return Ok(out);
    }
}

pub const HORIZONTAL_RAYS: usize = 16;
pub const ANGLED_RAYS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct RayFan {
    pub horizontal: [Vec3; HORIZONTAL_RAYS],
    pub angled: [Vec3; ANGLED_RAYS],
    pub up: Vec3,
    pub down: Vec3,
}

/// Horizontal direction at `azimuth` radians; azimuth 0 is world `-Z`, the
/// forward axis of a level camera.
fn horizontal_dir(azimuth: f64) -> Vec3 {
    Vec3::new(azimuth.sin(), 0.0, -azimuth.cos())
}

impl RayFan {
    pub fn new(angled_azimuths: usize, angled_elevation_deg: f64) -> Self {
        assert_eq!(angled_azimuths * 2, ANGLED_RAYS);
        let tau = std::f64::consts::TAU;
        let horizontal =
            std::array::from_fn(|i| horizontal_dir(tau * i as f64 / HORIZONTAL_RAYS as f64));
        let el = angled_elevation_deg.to_radians();
        let angled = std::array::from_fn(|i| {
            let h = horizontal_dir(tau * (i / 2) as f64 / angled_azimuths as f64);
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            (h * el.cos() + Vec3::new(0.0, sign * el.sin(), 0.0)).normalize()
        });
        RayFan {
            horizontal,
            angled,
            up: Vec3::new(0.0, 1.0, 0.0),
            down: Vec3::new(0.0, -1.0, 0.0),
        }
    }

    /// 16 horizontal + 5 azimuths × ±45°.
    pub fn standard() -> Self {
        RayFan::new(5, 45.0)
    }

    pub fn spherical(&self) -> impl Iterator<Item = Vec3> + '_ {
        self.horizontal.iter().chain(self.angled.iter()).copied()
    }
}

impl Default for RayFan {
    fn default() -> Self {
        RayFan::standard()
    }
}

/// Per-layer thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FilterConfig {
    pub up_max_floor_m: f64,
    pub down_max_floor_m: f64,
    pub inside_dist_m: f64,
    pub inside_count: usize,
    pub corner_dist_m: f64,
    pub corner_fraction: f64,
    pub enclosure_hit_rate: f64,
    pub enclosure_cv: f64,
    pub enclosure_max_m: f64,
    pub wall_min_m: f64,
    pub range_lo_m: f64,
    pub range_hi_m: f64,
    pub range_min_fraction: f64,
    pub gap_pair_sum_m: f64,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            up_max_floor_m: 5.0,
            down_max_floor_m: 3.0,
            inside_dist_m: 0.2,
            inside_count: 2,
            corner_dist_m: 1.0,
            corner_fraction: 0.5,
            enclosure_hit_rate: 0.9,
            enclosure_cv: 0.3,
            enclosure_max_m: 8.0,
            wall_min_m: 0.3,
            range_lo_m: 0.5,
            range_hi_m: 20.0,
            range_min_fraction: 0.35,
            gap_pair_sum_m: 1.5,
        }
    }
}

/// Raw statistics behind each layer's verdict. Distances are `None` on a miss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerDiagnostics {
    pub up_m: Option<f64>,
    pub down_m: Option<f64>,
    pub inside_count: usize,
    pub corner_fraction: f64,
    pub hit_rate: f64,
    pub cv: Option<f64>,
    pub max_hit_m: Option<f64>,
    pub horizontal_min_m: Option<f64>,
    pub in_range_fraction: f64,
    pub min_pair_sum_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub id: usize,
    pub position: Vec3,
    /// Pass flags for layers 1..=7.
    pub layers: [bool; 7],
    pub diagnostics: LayerDiagnostics,
    pub feasible: bool,
}

fn finite(d: f64) -> Option<f64> {
    d.is_finite().then_some(d)
}

/// Evaluates all seven layers at `v`. Every layer is computed even when an
/// earlier one already failed.
pub fn sanity_filter(
    bvh: &Bvh,
    v: Vec3,
    fan: &RayFan,
    ceiling_m: f64,
    cfg: &FilterConfig,
) -> ([bool; 7], LayerDiagnostics) {
    let cast = |d: Vec3| bvh.raycast(v, d).map_or(f64::INFINITY, |h| h.t);
    let horiz: Vec<f64> = fan.horizontal.iter().map(|&d| cast(d)).collect();
    let angled: Vec<f64> = fan.angled.iter().map(|&d| cast(d)).collect();
    let sphere: Vec<f64> = horiz.iter().chain(&angled).copied().collect();
    let up = cast(fan.up);
    let down = cast(fan.down);

    let l1 = up <= cfg.up_max_floor_m.max(ceiling_m) && down <= cfg.down_max_floor_m.max(ceiling_m);

    let inside_count = [up, down]
        .iter()
        .filter(|&&d| d < cfg.inside_dist_m)
        .count();
    let l2 = inside_count < cfg.inside_count;

    let corner_fraction =
        horiz.iter().filter(|&&d| d < cfg.corner_dist_m).count() as f64 / horiz.len() as f64;
    let l3 = corner_fraction <= cfg.corner_fraction;

    let hits: Vec<f64> = sphere.iter().copied().filter(|d| d.is_finite()).collect();
    let hit_rate = hits.len() as f64 / sphere.len() as f64;
    let (cv, max_hit) = if hits.is_empty() {
        (None, None)
    } else {
        let n = hits.len() as f64;
        let mean = hits.iter().sum::<f64>() / n;
        let var = hits.iter().map(|d| (d - mean) * (d - mean)).sum::<f64>() / n;
        (
            Some(var.sqrt() / mean),
            Some(hits.iter().copied().fold(0.0, f64::max)),
        )
    };
    let enclosed = hit_rate >= cfg.enclosure_hit_rate
        && cv.is_some_and(|c| c < cfg.enclosure_cv)
        && max_hit.is_some_and(|m| m < cfg.enclosure_max_m);
    let l4 = !enclosed;

    let horizontal_min = horiz.iter().copied().fold(f64::INFINITY, f64::min);
    let l5 = !(horizontal_min < cfg.wall_min_m);

    let in_range_fraction = sphere
        .iter()
        .filter(|&&d| d >= cfg.range_lo_m && d <= cfg.range_hi_m)
        .count() as f64
        / sphere.len() as f64;
    let l6 = in_range_fraction >= cfg.range_min_fraction;

    let half = HORIZONTAL_RAYS / 2;
    let min_pair = (0..half)
        .map(|i| horiz[i] + horiz[i + half])
        .fold(f64::INFINITY, f64::min);
    let l7 = !(min_pair < cfg.gap_pair_sum_m);

    (
        [l1, l2, l3, l4, l5, l6, l7],
        LayerDiagnostics {
            up_m: finite(up),
            down_m: finite(down),
            inside_count,
            corner_fraction,
            hit_rate,
            cv,
            max_hit_m: max_hit,
            horizontal_min_m: finite(horizontal_min),
            in_range_fraction,
            min_pair_sum_m: finite(min_pair),
        },
    )
}

/// Proposals with their filter verdicts, in generation (= id) order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn get(&self, id: usize) -> &Candidate {
        &self.candidates[id]
    }

    pub fn feasible(&self) -> impl Iterator<Item = &Candidate> + '_ {
        self.candidates.iter().filter(|c| c.feasible)
    }

    pub fn feasible_ids(&self) -> Vec<usize> {
        self.feasible().map(|c| c.id).collect()
    }

    pub fn feasible_count(&self) -> usize {
        self.feasible().count()
    }

    /// Number of candidates failing each layer.
    pub fn layer_rejections(&self) -> [usize; 7] {
        let mut out = [0; 7];
        for c in &self.candidates {
            for (slot, &pass) in out.iter_mut().zip(&c.layers) {
                *slot += !pass as usize;
            }
        }
        out
    }

    /// Keeps only the listed candidates feasible; used to build small
    /// instances out of a full grid.
    pub fn restrict_to(&mut self, keep: &[usize]) {
        for c in &mut self.candidates {
            c.feasible = c.feasible && keep.contains(&c.id);
        }
    }

    /// Candidate set with externally fixed positions, all feasible.
    pub fn from_positions(positions: &[Vec3]) -> Self {
        let candidates = positions
            .iter()
            .enumerate()
            .map(|(id, &position)| Candidate {
                id,
                position,
                layers: [true; 7],
                diagnostics: LayerDiagnostics {
                    up_m: None,
                    down_m: None,
                    inside_count: 0,
                    corner_fraction: 0.0,
                    hit_rate: 0.0,
                    cv: None,
                    max_hit_m: None,
                    horizontal_min_m: None,
                    in_range_fraction: 0.0,
                    min_pair_sum_m: None,
                },
                feasible: true,
            })
            .collect();
        CandidateSet { candidates }
    }
}

/// Runs the filter on every position. Never fails; see [`filter_all`].
pub fn evaluate_all(
    bvh: &Bvh,
    positions: &[Vec3],
    ceiling_m: f64,
    cfg: &FilterConfig,
) -> CandidateSet {
    let fan = RayFan::standard();
    let candidates = positions
        .par_iter()
        .enumerate()
        .map(|(id, &position)| {
            let (layers, diagnostics) = sanity_filter(bvh, position, &fan, ceiling_m, cfg);
            Candidate {
                id,
                position,
                layers,
                diagnostics,
                feasible: layers.iter().all(|&l| l),
            }
        })
        .collect();
    CandidateSet { candidates }
}

/// The feasible set; an error when every proposal is rejected.
pub fn filter_all(
    bvh: &Bvh,
    positions: &[Vec3],
    ceiling_m: f64,
    cfg: &FilterConfig,
) -> Result<CandidateSet> {
    let set = evaluate_all(bvh, positions, ceiling_m, cfg);
    if set.feasible_count() == 0 {
        return Err(Error::NoFeasibleCandidates { total: set.len() });
    }
    Ok(set)
}
