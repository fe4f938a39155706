//! Re-reads a release directory and re-checks its invariants.

use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::frames::frame_json_path;
use super::{
    read_bytes, read_candidates, read_depth, read_json, read_ppm, read_step_logs,
    CandidateRecord, FrameRecord, PreparedRun, RunConfig, SceneMeta, SelectedViewpoints,
    StepRecord, CANDIDATES_FILE, CONFIG_FILE, CONFIG_HASH_FILE, FRAMES_DIR, MESH_FILE,
    META_FILE, SELECTED_FILE, STEP_LOG_FILE,
};
use crate::curator::CuratorConfig;
use crate::error::{Error, Result};
use crate::geom::{dir_to_pixel, pixel_centre_dir};
use crate::scene::load_mesh;
use crate::{PoseWC, QuatWC, Vec3};

const QUAT_TOL: f64 = 1e-6;
const ROUND_TRIP_TOL_PX: f64 = 0.5;
/// Failure messages kept per check.
const MAX_DETAIL: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditOptions {
    /// Re-run selection at shorter budgets and compare with the log prefix.
    pub replay: bool,
    /// Budgets to replay; empty means half the selected count.
    pub replay_budgets: Vec<usize>,
    /// Valid pixels per frame for the ERP round-trip.
    pub sample_pixels: usize,
}

impl Default for AuditOptions {
    fn default() -> Self {
        AuditOptions {
            replay: true,
            replay_budgets: Vec::new(),
            sample_pixels: 256,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditCheck {
    pub name: String,
    pub passed: usize,
    pub total: usize,
    pub failures: Vec<String>,
}

impl AuditCheck {
    fn new(name: &str) -> Self {
        AuditCheck {
            name: name.into(),
            passed: 0,
            total: 0,
            failures: Vec::new(),
        }
    }

    fn record(&mut self, ok: bool, what: impl FnOnce() -> String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        } else if self.failures.len() < MAX_DETAIL {
            self.failures.push(what());
        }
    }

    fn fail(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        self.record(false, || msg);
    }

    pub fn ok(&self) -> bool {
        self.passed == self.total && self.total > 0
    }

    pub fn rate(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.passed as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(AuditCheck::ok)
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<22} {:>8} {:>8} {:>8}", "check", "passed", "total", "rate")?;
        for c in &self.checks {
            writeln!(
                f,
                "{:<22} {:>8} {:>8} {:>7.1}%",
                c.name,
                c.passed,
                c.total,
                100.0 * c.rate()
            )?;
            for msg in &c.failures {
                writeln!(f, "    {msg}")?;
            }
        }
        Ok(())
    }
}

fn parsed<T>(check: &mut AuditCheck, what: &str, r: Result<T>) -> Option<T> {
    match r {
        Ok(v) => {
            check.record(true, String::new);
            Some(v)
        }
        Err(e) => {
            check.fail(format!("{what}: {e}"));
            None
        }
    }
}

/// Audits the release directory `dir`. Missing or malformed files are
/// reported as failed checks; only a missing directory is an error.
pub fn audit(dir: impl AsRef<Path>, opts: &AuditOptions) -> Result<AuditReport> {
    let dir = dir.as_ref();
    if !dir.is_dir() {
        return Err(Error::io(
            dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }

    let mut parse = AuditCheck::new("files_parse");
    let config: Option<RunConfig> = parsed(&mut parse, CONFIG_FILE, read_json(dir.join(CONFIG_FILE)));
    let hash_file = parsed(
        &mut parse,
        CONFIG_HASH_FILE,
        read_bytes(dir.join(CONFIG_HASH_FILE))
            .map(|b| String::from_utf8_lossy(&b).trim().to_string()),
    );
    let meta: Option<SceneMeta> = parsed(&mut parse, META_FILE, read_json(dir.join(META_FILE)));
    let cands: Option<Vec<CandidateRecord>> =
        parsed(&mut parse, CANDIDATES_FILE, read_candidates(dir.join(CANDIDATES_FILE)));
    let steps: Option<Vec<StepRecord>> =
        parsed(&mut parse, STEP_LOG_FILE, read_step_logs(dir.join(STEP_LOG_FILE)));
    let selected: Option<SelectedViewpoints> =
        parsed(&mut parse, SELECTED_FILE, read_json(dir.join(SELECTED_FILE)));

    // Frames: count sidecars 0, 1, … until one is missing.
    let frames_dir = dir.join(FRAMES_DIR);
    let mut frames: Vec<Option<FrameRecord>> = Vec::new();
    while frame_json_path(&frames_dir, frames.len()).exists() {
        let idx = frames.len();
        frames.push(parsed(
            &mut parse,
            &format!("frame {idx}"),
            read_json(frame_json_path(&frames_dir, idx)),
        ));
    }
    if frames.is_empty() {
        parse.fail("no frames found");
    }

    // Config hash carried by every artifact.
    let mut hashes = AuditCheck::new("config_hash");
    let expected = config.as_ref().map(RunConfig::hash);
    let mut carriers: Vec<(String, Option<String>)> = vec![
        (CONFIG_HASH_FILE.into(), hash_file.clone()),
        (META_FILE.into(), meta.as_ref().map(|m| m.config_hash.clone())),
        (SELECTED_FILE.into(), selected.as_ref().map(|s| s.config_hash.clone())),
    ];
    for (i, f) in frames.iter().enumerate() {
        carriers.push((format!("frame {i}"), f.as_ref().map(|f| f.config_hash.clone())));
    }
    for (name, h) in carriers {
        let ok = h.is_some() && h == expected;
        hashes.record(ok, || format!("{name}: {h:?} != {expected:?}"));
    }

    let mut conventions = AuditCheck::new("meta_conventions");
    if let Some(m) = &meta {
        conventions.record(m.conventions_match(), || "convention strings differ".into());
        conventions.record(m.frame_count == frames.len(), || {
            format!("frame_count {} but {} frames on disk", m.frame_count, frames.len())
        });
    } else {
        conventions.fail("meta.json unreadable");
    }

    let mut schema = AuditCheck::new("pose_schema");
    let mut quats = AuditCheck::new("unit_quaternion");
    let mut origin = AuditCheck::new("frame0_origin");
    let mut lengths = AuditCheck::new("depth_byte_length");
    let mut round_trip = AuditCheck::new("erp_round_trip");
    let origin_world = meta.as_ref().map(|m| Vec3::from_array(m.origin_world));
    for (i, f) in frames.iter().enumerate() {
        let Some(f) = f else {
            schema.fail(format!("frame {i}: unparseable"));
            continue;
        };
        let stem = FrameRecord::stem(i);
        let schema_ok = f.frame == i
            && f.camera_type == "erp"
            && f.width >= 2
            && f.height >= 2
            && f.rgb == format!("{stem}.ppm")
            && f.depth == format!("{stem}.depth")
            && f.quaternion_wxyz.iter().chain(&f.position).all(|x| x.is_finite());
        schema.record(schema_ok, || format!("frame {i}: schema mismatch"));
        let qn = f.quaternion_wxyz.iter().map(|x| x * x).sum::<f64>().sqrt();
        quats.record((qn - 1.0).abs() <= QUAT_TOL, || format!("frame {i}: |q| = {qn}"));
        if i == 0 {
            origin.record(f.position == [0.0; 3], || format!("frame 0 at {:?}", f.position));
        }
        let depth_path = frames_dir.join(&f.depth);
        let len = std::fs::metadata(&depth_path).map(|m| m.len()).ok();
        let want = 4 * f.width as u64 * f.height as u64;
        lengths.record(len == Some(want), || {
            format!("frame {i}: depth {len:?} bytes, expected {want}")
        });
        let rgb_ok = read_ppm(frames_dir.join(&f.rgb))
            .map(|img| (img.width, img.height) == (f.width, f.height));
        lengths.record(matches!(rgb_ok, Ok(true)), || {
            format!("frame {i}: colour image missing or wrong size")
        });

        if let (Some(o), Ok(depth)) = (origin_world, read_depth(&depth_path, f.width, f.height)) {
            let pose = PoseWC::new(
                QuatWC::from_wxyz(f.quaternion_wxyz),
                o + Vec3::from_array(f.position),
            );
            let valid: Vec<usize> = (0..depth.len()).filter(|&p| depth.data[p] > 0.0).collect();
            let step = (valid.len() / opts.sample_pixels.max(1)).max(1);
            let mut worst = 0.0f64;
            for &p in valid.iter().step_by(step) {
                let (col, row) = (p % f.width, p / f.width);
                let d = pixel_centre_dir::<f64>(col, row, f.width, f.height);
                let world = pose.camera_to_world(d * depth.data[p] as f64);
                let back = pose.world_to_camera(world).normalize();
                let (u, v) = dir_to_pixel(back, f.width, f.height);
                let du = (u - (col as f64 + 0.5)).abs();
                let du = du.min(f.width as f64 - du);
                worst = worst.max(du.hypot(v - (row as f64 + 0.5)));
            }
            round_trip.record(worst <= ROUND_TRIP_TOL_PX, || {
                format!("frame {i}: worst reprojection {worst:.3} px")
            });
        } else {
            round_trip.fail(format!("frame {i}: depth or origin unreadable"));
        }
    }

    let selector = config
        .as_ref()
        .map_or_else(|| "cover".to_string(), |c| c.selector.clone());
    let mut winners = AuditCheck::new("winner_consistency");
    let mut order = AuditCheck::new("selection_order");
    let log_ids: Vec<usize> = steps
        .iter()
        .flatten()
        .map(|s| s.selected_id)
        .collect();
    if let Some(steps) = &steps {
        for s in steps {
            winners.record(s.winner_consistent(&selector), || {
                format!("step {}: winner {} inconsistent", s.step, s.selected_id)
            });
        }
        if steps.is_empty() {
            winners.fail("empty step log");
        }
    } else {
        winners.fail("step log unreadable");
    }
    let sel_ids = selected.as_ref().map(SelectedViewpoints::ids);
    order.record(sel_ids.as_ref() == Some(&log_ids), || {
        "selected_viewpoints order differs from log winners".into()
    });
    let frame_ids: Vec<Option<usize>> = frames
        .iter()
        .map(|f| f.as_ref().map(|f| f.candidate_id))
        .collect();
    order.record(
        frame_ids == log_ids.iter().map(|&i| Some(i)).collect::<Vec<_>>(),
        || "frame candidate ids differ from log winners".into(),
    );
    let unique: HashSet<usize> = log_ids.iter().copied().collect();
    order.record(unique.len() == log_ids.len(), || "duplicate selection".into());
    if let Some(cands) = &cands {
        let ok = log_ids
            .iter()
            .all(|&id| cands.get(id).is_some_and(|c| c.feasible));
        order.record(ok, || "a selected id is not a feasible candidate".into());
        if let Some(sel) = &selected {
            let ok = sel.viewpoints.iter().all(|v| {
                cands.get(v.id).is_some_and(|c| c.position == v.position)
            });
            order.record(ok, || "selected positions differ from candidates.jsonl".into());
        }
    }

    let mut checks = vec![
        parse,
        hashes,
        conventions,
        schema,
        quats,
        origin,
        lengths,
        round_trip,
        winners,
        order,
    ];

    if opts.replay {
        checks.push(replay(dir, config.as_ref(), cands.as_deref(), &log_ids, opts));
    }
    Ok(AuditReport { checks })
}

/// Re-runs selection from the stored mesh and config at shorter budgets.
fn replay(
    dir: &Path,
    config: Option<&RunConfig>,
    cands: Option<&[CandidateRecord]>,
    log_ids: &[usize],
    opts: &AuditOptions,
) -> AuditCheck {
    let mut check = AuditCheck::new("k_prefix_replay");
    let Some(config) = config else {
        check.fail("config unreadable");
        return check;
    };
    let prepared = match load_mesh(dir.join(MESH_FILE))
        .and_then(|(mesh, _)| PreparedRun::from_mesh(mesh, &config.grid, &config.filter))
    {
        Ok(p) => p,
        Err(e) => {
            check.fail(format!("{MESH_FILE}: {e}"));
            return check;
        }
    };
    let same_cands = cands.is_some_and(|c| {
        c.len() == prepared.cands.len()
            && c.iter().zip(&prepared.cands.candidates).all(|(r, c)| {
                r.position == c.position.to_array() && r.feasible == c.feasible
            })
    });
    check.record(same_cands, || "candidates do not regenerate from the mesh".into());

    let budgets = if opts.replay_budgets.is_empty() {
        vec![(log_ids.len() / 2).max(1)]
    } else {
        opts.replay_budgets.clone()
    };
    for k in budgets {
        let k = k.min(log_ids.len()).max(1);
        let cfg = RunConfig {
            curator: CuratorConfig {
                k,
                ..config.curator.clone()
            },
            ..config.clone()
        };
        match prepared.select(&cfg) {
            Ok(run) => check.record(run.state.selected == log_ids[..k], || {
                format!("K={k}: replay {:?} != log prefix", run.state.selected)
            }),
            Err(e) => check.fail(format!("K={k}: {e}")),
        }
    }
    check
}
