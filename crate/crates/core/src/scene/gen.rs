//! Procedural indoor scenes: a closed room shell, axis-aligned furniture
//! boxes and optional partition walls with doorways.
//!
//! The room occupies `x ∈ [0, width]`, `y ∈ [0, height]`, `z ∈ [0, depth]`
//! with the floor at `y = 0`. Shell faces point inwards, furniture and
//! partition faces point outwards.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scene::TriMesh;
use crate::Vec3;

pub const PARTITION_THICKNESS_M: f64 = 0.1;
pub const DOORWAY_HEIGHT_M: f64 = 2.1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Z,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Doorway {
    pub start_m: f64,
    pub width_m: f64,
}

/// A full-height interior wall perpendicular to `axis` at `offset_m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    pub axis: Axis,
    pub offset_m: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub doorway: Option<Doorway>,
}

/// Extra boxes scattered by the generator's RNG.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RandomFurniture {
    pub count: usize,
    #[serde(default = "default_min_size")]
    pub min_size_m: f64,
    #[serde(default = "default_max_size")]
    pub max_size_m: f64,
    #[serde(default = "default_max_height")]
    pub max_height_m: f64,
}

fn default_min_size() -> f64 {
    0.4
}
fn default_max_size() -> f64 {
    1.4
}
fn default_max_height() -> f64 {
    1.6
}
fn default_tile() -> f64 {
    0.25
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoomSpec {
    pub width_m: f64,
    pub depth_m: f64,
    pub height_m: f64,
    #[serde(default)]
    pub furniture: Vec<BoxSpec>,
    #[serde(default)]
    pub partitions: Vec<Partition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_furniture: Option<RandomFurniture>,
    /// Amplitude of per-vertex displacement along face normals. Surfaces are
    /// tessellated into `tile_m` tiles when non-zero.
    #[serde(default)]
    pub jitter_m: f64,
    #[serde(default = "default_tile")]
    pub tile_m: f64,
}

impl RoomSpec {
    pub fn empty(width_m: f64, depth_m: f64, height_m: f64) -> Self {
        RoomSpec {
            width_m,
            depth_m,
            height_m,
            furniture: Vec::new(),
            partitions: Vec::new(),
            random_furniture: None,
            jitter_m: 0.0,
            tile_m: default_tile(),
        }
    }

    pub fn with_furniture(mut self, min: [f64; 3], max: [f64; 3]) -> Self {
        self.furniture.push(BoxSpec { min, max });
        self
    }

    pub fn with_partition(
        mut self,
        axis: Axis,
        offset_m: f64,
        doorway: Option<(f64, f64)>,
    ) -> Self {
        self.partitions.push(Partition {
            axis,
            offset_m,
            doorway: doorway.map(|(start_m, width_m)| Doorway { start_m, width_m }),
        });
        self
    }

    pub fn with_random_furniture(mut self, count: usize) -> Self {
        self.random_furniture = Some(RandomFurniture {
            count,
            min_size_m: default_min_size(),
            max_size_m: default_max_size(),
            max_height_m: default_max_height(),
        });
        self
    }

    pub fn with_jitter(mut self, jitter_m: f64) -> Self {
        self.jitter_m = jitter_m;
        self
    }

    fn dims(&self) -> [f64; 3] {
        [self.width_m, self.height_m, self.depth_m]
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InfeasibleSpec(msg));
        for (name, v) in [
            ("width_m", self.width_m),
            ("depth_m", self.depth_m),
            ("height_m", self.height_m),
        ] {
            if !(v >= 1.0) || !v.is_finite() {
                return bad(format!("{name} = {v} must be at least 1 m"));
            }
        }
        if self.jitter_m < 0.0 || !self.jitter_m.is_finite() {
            return bad(format!("jitter_m = {} must be non-negative", self.jitter_m));
        }
        if self.jitter_m > 0.0 && !(self.tile_m > 0.0) {
            return bad(format!("tile_m = {} must be positive", self.tile_m));
        }
        let dims = self.dims();
        let mut volume = 0.0;
        for (i, f) in self.furniture.iter().enumerate() {
            for a in 0..3 {
                if !(f.min[a] < f.max[a]) || f.min[a] < 0.0 || f.max[a] > dims[a] {
                    return bad(format!("furniture[{i}] does not fit inside the room"));
                }
            }
            volume += (0..3).map(|a| f.max[a] - f.min[a]).product::<f64>();
        }
        if volume > dims.iter().product::<f64>() {
            return bad("furniture volume exceeds room volume".into());
        }
        for (i, p) in self.partitions.iter().enumerate() {
            let (extent, span) = match p.axis {
                Axis::X => (self.width_m, self.depth_m),
                Axis::Z => (self.depth_m, self.width_m),
            };
            if !(p.offset_m > PARTITION_THICKNESS_M && p.offset_m < extent - PARTITION_THICKNESS_M)
            {
                return bad(format!("partitions[{i}].offset_m outside the room"));
            }
            if let Some(d) = p.doorway {
                if d.start_m < 0.0 || d.width_m <= 0.0 || d.start_m + d.width_m > span {
                    return bad(format!("partitions[{i}].doorway outside the wall"));
                }
            }
        }
        if let Some(r) = self.random_furniture {
            if !(r.min_size_m > 0.0 && r.min_size_m <= r.max_size_m && r.max_height_m > 0.0) {
                return bad("random_furniture sizes inconsistent".into());
            }
            if r.max_size_m >= self.width_m.min(self.depth_m) {
                return bad("random_furniture larger than the room".into());
            }
        }
        Ok(())
    }
}

struct Builder {
    vertices: Vec<Vec3>,
    triangles: Vec<[u32; 3]>,
    colors: Vec<[u8; 3]>,
    jitter: f64,
    tile: f64,
}

impl Builder {
    /// Adds the planar quad `a b c d` (in order around the boundary) with
    /// winding chosen so its normal points along `facing`.
    fn quad(&mut self, rng: &mut ChaCha8Rng, corners: [Vec3; 4], facing: Vec3, color: [u8; 3]) {
        let [a, b, c, d] = corners;
        let flip = (b - a).cross(c - a).dot(facing) < 0.0;
        let normal = if flip {
            -(b - a).cross(c - a).normalize()
        } else {
            (b - a).cross(c - a).normalize()
        };
        let (nu, nv) = if self.jitter > 0.0 {
            (
                ((b - a).norm() / self.tile).ceil().max(1.0) as usize,
                ((d - a).norm() / self.tile).ceil().max(1.0) as usize,
            )
        } else {
            (1, 1)
        };
        let base = self.vertices.len() as u32;
        for j in 0..=nv {
            for i in 0..=nu {
                let s = i as f64 / nu as f64;
                let t = j as f64 / nv as f64;
                let mut p = a + (b - a) * s + (d - a) * t;
                if i > 0 && i < nu && j > 0 && j < nv {
                    p += normal * rng.gen_range(-self.jitter..=self.jitter);
                }
                self.vertices.push(p);
            }
        }
        let idx = |i: usize, j: usize| base + (j * (nu + 1) + i) as u32;
        for j in 0..nv {
            for i in 0..nu {
                let (p00, p10, p11, p01) =
                    (idx(i, j), idx(i + 1, j), idx(i + 1, j + 1), idx(i, j + 1));
                let (t1, t2) = if flip {
                    ([p00, p11, p10], [p00, p01, p11])
                } else {
                    ([p00, p10, p11], [p00, p11, p01])
                };
                self.triangles.push(t1);
                self.triangles.push(t2);
                self.colors.push(color);
                self.colors.push(color);
            }
        }
    }

    /// Outward-facing box; the bottom face is omitted when it rests on the floor.
    fn cuboid(&mut self, rng: &mut ChaCha8Rng, lo: Vec3, hi: Vec3, color: [u8; 3]) {
        let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);
        let faces = [
            (
                [
                    v(hi.x, lo.y, lo.z),
                    v(hi.x, hi.y, lo.z),
                    v(hi.x, hi.y, hi.z),
                    v(hi.x, lo.y, hi.z),
                ],
                v(1.0, 0.0, 0.0),
            ),
            (
                [
                    v(lo.x, lo.y, lo.z),
                    v(lo.x, hi.y, lo.z),
                    v(lo.x, hi.y, hi.z),
                    v(lo.x, lo.y, hi.z),
                ],
                v(-1.0, 0.0, 0.0),
            ),
            (
                [
                    v(lo.x, hi.y, lo.z),
                    v(hi.x, hi.y, lo.z),
                    v(hi.x, hi.y, hi.z),
                    v(lo.x, hi.y, hi.z),
                ],
                v(0.0, 1.0, 0.0),
            ),
            (
                [
                    v(lo.x, lo.y, hi.z),
                    v(hi.x, lo.y, hi.z),
                    v(hi.x, hi.y, hi.z),
                    v(lo.x, hi.y, hi.z),
                ],
                v(0.0, 0.0, 1.0),
            ),
            (
                [
                    v(lo.x, lo.y, lo.z),
                    v(hi.x, lo.y, lo.z),
                    v(hi.x, hi.y, lo.z),
                    v(lo.x, hi.y, lo.z),
                ],
                v(0.0, 0.0, -1.0),
            ),
        ];
        for (corners, facing) in faces {
            self.quad(rng, corners, facing, color);
        }
        if lo.y > 1e-9 {
            let bottom = [
                v(lo.x, lo.y, lo.z),
                v(hi.x, lo.y, lo.z),
                v(hi.x, lo.y, hi.z),
                v(lo.x, lo.y, hi.z),
            ];
            self.quad(rng, bottom, v(0.0, -1.0, 0.0), color);
        }
    }
}

fn random_color(rng: &mut ChaCha8Rng, base: [u8; 3], spread: u8) -> [u8; 3] {
    base.map(|c| {
        let delta = rng.gen_range(-(spread as i32)..=spread as i32);
        (c as i32 + delta).clamp(0, 255) as u8
    })
}

/// Builds the room mesh. Output is bit-identical for a fixed `(spec, seed)`.
pub fn gen_room_scene(spec: &RoomSpec, rng_seed: u64) -> Result<TriMesh> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut b = Builder {
        vertices: Vec::new(),
        triangles: Vec::new(),
        colors: Vec::new(),
        jitter: spec.jitter_m,
        tile: spec.tile_m,
    };
    let (w, h, d) = (spec.width_m, spec.height_m, spec.depth_m);
    let v = |x: f64, y: f64, z: f64| Vec3::new(x, y, z);

    let floor = random_color(&mut rng, [150, 120, 90], 20);
    let ceiling = random_color(&mut rng, [235, 235, 230], 10);
    let wall = random_color(&mut rng, [200, 195, 180], 25);
    b.quad(
        &mut rng,
        [
            v(0.0, 0.0, 0.0),
            v(w, 0.0, 0.0),
            v(w, 0.0, d),
            v(0.0, 0.0, d),
        ],
        v(0.0, 1.0, 0.0),
        floor,
    );
    b.quad(
        &mut rng,
        [v(0.0, h, 0.0), v(w, h, 0.0), v(w, h, d), v(0.0, h, d)],
        v(0.0, -1.0, 0.0),
        ceiling,
    );
    b.quad(
        &mut rng,
        [
            v(0.0, 0.0, 0.0),
            v(0.0, h, 0.0),
            v(0.0, h, d),
            v(0.0, 0.0, d),
        ],
        v(1.0, 0.0, 0.0),
        wall,
    );
    b.quad(
        &mut rng,
        [v(w, 0.0, 0.0), v(w, h, 0.0), v(w, h, d), v(w, 0.0, d)],
        v(-1.0, 0.0, 0.0),
        wall,
    );
    b.quad(
        &mut rng,
        [
            v(0.0, 0.0, 0.0),
            v(w, 0.0, 0.0),
            v(w, h, 0.0),
            v(0.0, h, 0.0),
        ],
        v(0.0, 0.0, 1.0),
        wall,
    );
    b.quad(
        &mut rng,
        [v(0.0, 0.0, d), v(w, 0.0, d), v(w, h, d), v(0.0, h, d)],
        v(0.0, 0.0, -1.0),
        wall,
    );

    // Partition slabs as (lo, hi) boxes, used for placement checks below.
    let mut slabs: Vec<(Vec3, Vec3)> = Vec::new();
    let half = PARTITION_THICKNESS_M / 2.0;
    for p in &spec.partitions {
        let color = random_color(&mut rng, [190, 190, 200], 20);
        let span = match p.axis {
            Axis::X => d,
            Axis::Z => w,
        };
        // Segments along the wall as (along_lo, along_hi, y_lo, y_hi).
        let mut segments = Vec::new();
        match p.doorway {
            Some(door) => {
                if door.start_m > 1e-9 {
                    segments.push((0.0, door.start_m, 0.0, h));
                }
                let end = door.start_m + door.width_m;
                if end < span - 1e-9 {
                    segments.push((end, span, 0.0, h));
                }
                if h > DOORWAY_HEIGHT_M + 1e-9 {
                    segments.push((door.start_m, end, DOORWAY_HEIGHT_M, h));
                }
            }
            None => segments.push((0.0, span, 0.0, h)),
        }
        for (a0, a1, y0, y1) in segments {
            let (lo, hi) = match p.axis {
                Axis::X => (v(p.offset_m - half, y0, a0), v(p.offset_m + half, y1, a1)),
                Axis::Z => (v(a0, y0, p.offset_m - half), v(a1, y1, p.offset_m + half)),
            };
            b.cuboid(&mut rng, lo, hi, color);
        }
        let (lo, hi) = match p.axis {
            Axis::X => (v(p.offset_m - half, 0.0, 0.0), v(p.offset_m + half, h, d)),
            Axis::Z => (v(0.0, 0.0, p.offset_m - half), v(w, h, p.offset_m + half)),
        };
        slabs.push((lo, hi));
    }

    for f in &spec.furniture {
        let color = random_color(&mut rng, [120, 100, 140], 60);
        b.cuboid(
            &mut rng,
            Vec3::from_array(f.min),
            Vec3::from_array(f.max),
            color,
        );
    }

    if let Some(r) = spec.random_furniture {
        // Keep a walkway around partitions so doorways stay usable.
        let clearance = 0.6;
        for _ in 0..r.count {
            for _attempt in 0..50 {
                let sx = rng.gen_range(r.min_size_m..=r.max_size_m);
                let sz = rng.gen_range(r.min_size_m..=r.max_size_m);
                let sy = rng.gen_range(0.3f64.min(r.max_height_m)..=r.max_height_m.min(h - 0.2));
                let x0 = rng.gen_range(0.0..=(w - sx));
                let z0 = rng.gen_range(0.0..=(d - sz));
                let (lo, hi) = (v(x0, 0.0, z0), v(x0 + sx, sy, z0 + sz));
                let blocked = slabs.iter().any(|(slo, shi)| {
                    lo.x < shi.x + clearance
                        && hi.x > slo.x - clearance
                        && lo.z < shi.z + clearance
                        && hi.z > slo.z - clearance
                });
                if blocked {
                    continue;
                }
                let color = random_color(&mut rng, [120, 100, 140], 60);
                b.cuboid(&mut rng, lo, hi, color);
                break;
            }
        }
    }

    let (mesh, _) = TriMesh::new(b.vertices, b.triangles, b.colors)?;
    Ok(mesh)
}

/// Procedural scene families standing in for different source size and
/// noise regimes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SceneFamily {
    /// Single small room, little clutter.
    SmallBox,
    /// Medium room with many furniture boxes.
    Cluttered,
    /// Large room split by partitions with doorways.
    OpenPlan,
    /// `Cluttered` with tessellated, jittered surfaces.
    NoisyCluttered,
}

impl SceneFamily {
    pub const ALL: [SceneFamily; 4] = [
        SceneFamily::SmallBox,
        SceneFamily::Cluttered,
        SceneFamily::OpenPlan,
        SceneFamily::NoisyCluttered,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SceneFamily::SmallBox => "small-box",
            SceneFamily::Cluttered => "cluttered",
            SceneFamily::OpenPlan => "open-plan",
            SceneFamily::NoisyCluttered => "noisy-cluttered",
        }
    }

    /// The `index`-th member of the family. Also returns the generator seed
    /// to pass to [`gen_room_scene`].
    pub fn member(self, index: u64) -> (RoomSpec, u64) {
        let seed = 0x5eed_0000 + index * 7919 + self as u64 * 1_000_003;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = match self {
            SceneFamily::SmallBox => {
                let w = rng.gen_range(3.0..4.0);
                let d = rng.gen_range(2.6..3.4);
                RoomSpec::empty(w, d, rng.gen_range(2.4..2.7)).with_random_furniture(1)
            }
            SceneFamily::Cluttered | SceneFamily::NoisyCluttered => {
                let w = rng.gen_range(5.0..6.5);
                let d = rng.gen_range(4.0..5.5);
                let mut s = RoomSpec::empty(w, d, rng.gen_range(2.6..3.0))
                    .with_random_furniture(rng.gen_range(6..=9));
                if self == SceneFamily::NoisyCluttered {
                    s = s.with_jitter(0.04);
                }
                s
            }
            SceneFamily::OpenPlan => {
                let w = rng.gen_range(9.0..11.0);
                let d = rng.gen_range(6.0..7.5);
                let x1 = w * rng.gen_range(0.3..0.4);
                let x2 = w * rng.gen_range(0.6..0.7);
                RoomSpec::empty(w, d, rng.gen_range(2.8..3.2))
                    .with_partition(Axis::X, x1, Some((rng.gen_range(0.5..d - 1.6), 1.0)))
                    .with_partition(Axis::X, x2, Some((rng.gen_range(0.5..d - 1.6), 1.0)))
                    .with_random_furniture(6)
            }
        };
        (spec, seed)
    }
}
