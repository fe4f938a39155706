//! The end-to-end `select` pipeline writing a release directory.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{
    sha256_hex, to_json_line, write_bytes, write_candidates, write_frame, write_json,
    write_step_logs, SceneMeta, SelectedRecord, SelectedViewpoints, CANDIDATES_FILE,
    CONFIG_FILE, CONFIG_HASH_FILE, FRAMES_DIR, MESH_FILE, META_FILE, SELECTED_FILE,
    STEP_LOG_FILE, WALLCLOCK_FILE,
};
use crate::candidates::{evaluate_all, gen_candidates, CandidateSet, FilterConfig, GridConfig};
use crate::curator::{CuratorConfig, SelectionRun};
use crate::error::{Error, Result};
use crate::eval::{Selector, WallclockEntry};
use crate::render::render_erp;
use crate::scene::{gen_room_scene, load_mesh, save_mesh, Bvh, RoomSpec, SceneFamily, TriMesh};
use crate::PoseWC;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SceneSource {
    /// A member of a procedural family.
    Family { family: SceneFamily, index: u64 },
    /// An explicit room description and generator seed.
    Room { spec: RoomSpec, seed: u64 },
    /// A mesh file.
    Mesh { path: PathBuf },
}

impl SceneSource {
    pub fn scene_id(&self) -> String {
        match self {
            SceneSource::Family { family, index } => format!("{}/{index}", family.name()),
            SceneSource::Room { seed, .. } => format!("room/{seed}"),
            SceneSource::Mesh { path } => path
                .file_stem()
                .map_or_else(|| "mesh".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    pub fn tag(&self) -> &'static str {
        match self {
            SceneSource::Family { .. } => "procedural-family",
            SceneSource::Room { .. } => "procedural-room",
            SceneSource::Mesh { .. } => "mesh-file",
        }
    }
}

/// Everything that determines a run's output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub scene: SceneSource,
    pub selector: String,
    /// Seeds the random baseline.
    pub rng_seed: u64,
    pub grid: GridConfig,
    pub filter: FilterConfig,
    pub curator: CuratorConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scene: SceneSource::Family {
                family: SceneFamily::SmallBox,
                index: 0,
            },
            selector: "cover".into(),
            rng_seed: 0,
            grid: GridConfig::default(),
            filter: FilterConfig::default(),
            curator: CuratorConfig::default(),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.curator.validate()?;
        self.selector()?;
        Ok(())
    }

    pub fn selector(&self) -> Result<Selector> {
        self.selector.parse()
    }

    /// SHA-256 of the single-line JSON form.
    pub fn hash(&self) -> String {
        sha256_hex(to_json_line(self).as_bytes())
    }
}

pub fn load_scene(source: &SceneSource) -> Result<TriMesh> {
    match source {
        SceneSource::Family { family, index } => {
            let (spec, seed) = family.member(*index);
            gen_room_scene(&spec, seed)
        }
        SceneSource::Room { spec, seed } => gen_room_scene(spec, *seed),
        SceneSource::Mesh { path } => Ok(load_mesh(path)?.0),
    }
}

/// A loaded scene with its filtered candidate grid.
#[derive(Debug, Clone)]
pub struct PreparedRun {
    pub mesh: TriMesh,
    pub bvh: Bvh,
    pub cands: CandidateSet,
}

impl PreparedRun {
    pub fn from_mesh(mesh: TriMesh, grid: &GridConfig, filter: &FilterConfig) -> Result<Self> {
        let aabb = mesh.aabb();
        let bvh = Bvh::build(&mesh);
        let ceiling = aabb.extent().y;
        let positions = gen_candidates(aabb, grid, ceiling)?;
        let cands = evaluate_all(&bvh, &positions, ceiling, filter);
        Ok(PreparedRun { mesh, bvh, cands })
    }

    pub fn select(&self, cfg: &RunConfig) -> Result<SelectionRun> {
        cfg.selector()?
            .run(&self.cands, &self.bvh, &cfg.curator, cfg.rng_seed)
    }
}

pub fn prepare_run(cfg: &RunConfig) -> Result<PreparedRun> {
    cfg.validate()?;
    PreparedRun::from_mesh(load_scene(&cfg.scene)?, &cfg.grid, &cfg.filter)
}

#[derive(Debug, Clone)]
pub struct ExportSummary {
    pub scene_id: String,
    pub config_hash: String,
    pub run: SelectionRun,
    pub feasible: usize,
    pub proposed: usize,
}

/// Prepares the scene, runs the configured selector and writes the release
/// layout under `dir`. Candidate diagnostics are written before selection,
/// so they exist even when no candidate is feasible.
pub fn export_run(dir: impl AsRef<Path>, cfg: &RunConfig) -> Result<ExportSummary> {
    let dir = dir.as_ref();
    let prepared = prepare_run(cfg)?;
    let hash = cfg.hash();
    let scene_id = cfg.scene.scene_id();

    write_json(dir.join(CONFIG_FILE), cfg)?;
    write_bytes(dir.join(CONFIG_HASH_FILE), format!("{hash}\n").as_bytes())?;
    let mesh_path = dir.join(MESH_FILE);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_mesh(&prepared.mesh, &mesh_path)?;
    write_candidates(dir.join(CANDIDATES_FILE), &prepared.cands)?;

    let t0 = Instant::now();
    let run = prepared.select(cfg)?;
    let total_s = t0.elapsed().as_secs_f64();
    write_step_logs(dir.join(STEP_LOG_FILE), &run.logs)?;

    let cur = &cfg.curator;
    let poses: Vec<PoseWC> = run
        .state
        .selected
        .iter()
        .map(|&id| PoseWC::level(prepared.cands.get(id).position))
        .collect();
    let selected = SelectedViewpoints {
        scene_id: scene_id.clone(),
        config_hash: hash.clone(),
        selector: cfg.selector.clone(),
        lambda: cur.lambda,
        k: cur.k,
        stopped_early: run.stopped_early,
        viewpoints: run
            .logs
            .iter()
            .enumerate()
            .map(|(frame, log)| SelectedRecord {
                frame,
                id: log.selected_id,
                position: poses[frame].position.to_array(),
                g: log.g,
                l: log.l,
                s: log.s,
            })
            .collect(),
    };
    write_json(dir.join(SELECTED_FILE), &selected)?;

    let frames = dir.join(FRAMES_DIR);
    for (i, (pose, &id)) in poses.iter().zip(&run.state.selected).enumerate() {
        let (depth, rgb) = render_erp(
            &prepared.bvh,
            &prepared.mesh.face_colors,
            pose,
            cur.frame_w,
            cur.frame_h,
        );
        write_frame(&frames, i, id, &rgb, &depth, pose, &poses[0], &hash)?;
    }

    let meta = SceneMeta::new(
        &scene_id,
        cfg.scene.tag(),
        &hash,
        poses[0].position.to_array(),
        poses.len(),
        cur.frame_w,
        cur.frame_h,
    );
    write_json(dir.join(META_FILE), &meta)?;
    write_json(
        dir.join(WALLCLOCK_FILE),
        &[WallclockEntry {
            scene: scene_id.clone(),
            selector: cfg.selector.clone(),
            lambda: cur.lambda,
            k: cur.k,
            rng_seed: cfg.rng_seed,
            total_s,
            per_step_s: run.logs.iter().map(|l| l.runtime_s).collect(),
        }],
    )?;

    Ok(ExportSummary {
        scene_id,
        config_hash: hash,
        feasible: prepared.cands.feasible_count(),
        proposed: prepared.cands.len(),
        run,
    })
}
