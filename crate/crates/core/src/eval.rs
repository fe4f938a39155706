//! Scene-level evaluation: true coverage, coverage per view and conflict of
//! a selection, the selector comparison, the λ sweep and cross-family runs.
//!
//! Conflict of a selection is the mean winner `L` over steps ≥ 2 (the seed
//! has no history to conflict with), `0` for a seed-only selection.

use std::fmt::Write as _;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::candidates::{evaluate_all, gen_candidates, CandidateSet, FilterConfig, GridConfig};
use crate::curator::{
    baseline_select, select_greedy, visibility, BaselineKind, Bitset, CuratorConfig, EarlyStop,
    SelectionRun, StepLog,
};
use crate::error::{Error, Result};
use crate::scene::surface::default_spacing;
use crate::scene::{discretize_surface, gen_room_scene, Bvh, SceneFamily, SurfaceElements, TriMesh};

pub const COVERAGE_CSV_HEADER: &str =
    "scene,selector,lambda,K,coverage,cov_per_view,conflict,frames,runtime_s";

/// A scene ready for selection and exact evaluation.
#[derive(Debug, Clone)]
pub struct EvalScene {
    pub name: String,
    pub mesh: TriMesh,
    pub bvh: Bvh,
    pub cands: CandidateSet,
    pub elements: SurfaceElements,
}

impl EvalScene {
    pub fn new(
        name: impl Into<String>,
        mesh: TriMesh,
        grid: &GridConfig,
        filter: &FilterConfig,
        element_seed: u64,
    ) -> Result<Self> {
        let aabb = mesh.aabb();
        let bvh = Bvh::build(&mesh);
        let ceiling = aabb.extent().y;
        let positions = gen_candidates(aabb, grid, ceiling)?;
        let cands = evaluate_all(&bvh, &positions, ceiling, filter);
        let elements = discretize_surface(&mesh, default_spacing(aabb.diagonal()), element_seed);
        Ok(EvalScene {
            name: name.into(),
            mesh,
            bvh,
            cands,
            elements,
        })
    }

    /// The `index`-th member of a procedural family, named `family/index`.
    pub fn family(
        family: SceneFamily,
        index: u64,
        grid: &GridConfig,
        filter: &FilterConfig,
    ) -> Result<Self> {
        let (spec, seed) = family.member(index);
        let mesh = gen_room_scene(&spec, seed)?;
        EvalScene::new(format!("{}/{index}", family.name()), mesh, grid, filter, seed)
    }
}

/// The proposed selector or one of the baselines.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Selector {
    Cover,
    Baseline(BaselineKind),
}

impl Selector {
    pub const ALL: [Selector; 5] = [
        Selector::Cover,
        Selector::Baseline(BaselineKind::CoverageOnly),
        Selector::Baseline(BaselineKind::LowConflict),
        Selector::Baseline(BaselineKind::SingleProbe),
        Selector::Baseline(BaselineKind::Random),
    ];

    pub fn name(self) -> &'static str {
        match self {
            Selector::Cover => "cover",
            Selector::Baseline(k) => k.name(),
        }
    }

    pub fn run(
        self,
        cands: &CandidateSet,
        bvh: &Bvh,
        cfg: &CuratorConfig,
        rng_seed: u64,
    ) -> Result<SelectionRun> {
        match self {
            Selector::Cover => select_greedy(cands, bvh, cfg),
            Selector::Baseline(kind) => baseline_select(kind, cands, bvh, cfg, rng_seed),
        }
    }
}

impl std::fmt::Display for Selector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Selector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "cover" {
            return Ok(Selector::Cover);
        }
        s.parse::<BaselineKind>()
            .map(Selector::Baseline)
            .map_err(|_| Error::config("selector", format!("unknown selector `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub coverage: f64,
    pub coverage_per_view: f64,
    pub conflict: f64,
    pub frames: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub scene: String,
    pub selector: String,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub coverage: f64,
    pub cov_per_view: f64,
    pub conflict: f64,
    pub frames: usize,
    pub runtime_s: f64,
}

impl EvalRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{}",
            csv_field(&self.scene),
            csv_field(&self.selector),
            self.lambda,
            self.k,
            self.coverage,
            self.cov_per_view,
            self.conflict,
            self.frames,
            self.runtime_s
        )
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn rows_to_csv(rows: &[EvalRow]) -> String {
    let mut out = String::from(COVERAGE_CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv_line());
    }
    out
}

/// Timing of one selection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WallclockEntry {
    pub scene: String,
    pub selector: String,
    pub lambda: f64,
    #[serde(rename = "K")]
    pub k: usize,
    pub rng_seed: u64,
    pub total_s: f64,
    pub per_step_s: Vec<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub wallclock: Vec<WallclockEntry>,
}

impl EvalReport {
    pub fn extend(&mut self, other: EvalReport) {
        self.rows.extend(other.rows);
        self.wallclock.extend(other.wallclock);
    }

    pub fn csv(&self) -> String {
        rows_to_csv(&self.rows)
    }
}

/// Mean winner `L` over the post-seed steps.
pub fn selection_conflict(logs: &[StepLog]) -> f64 {
    if logs.len() < 2 {
        return 0.0;
    }
    logs[1..].iter().map(|l| l.l).sum::<f64>() / (logs.len() - 1) as f64
}

/// Exact union coverage of the selected viewpoints.
pub fn exact_coverage(
    selected: &[usize],
    cands: &CandidateSet,
    elements: &SurfaceElements,
    bvh: &Bvh,
) -> f64 {
    if elements.is_empty() {
        return 0.0;
    }
    let mut covered = Bitset::new(elements.len());
    for &id in selected {
        covered.union_with(&visibility(bvh, elements, cands.get(id).position));
    }
    covered.count() as f64 / elements.len() as f64
}

pub fn evaluate_selection(
    run: &SelectionRun,
    cands: &CandidateSet,
    elements: &SurfaceElements,
    bvh: &Bvh,
) -> Metrics {
    let frames = run.state.selected.len();
    let coverage = exact_coverage(&run.state.selected, cands, elements, bvh);
    Metrics {
        coverage,
        coverage_per_view: if frames > 0 {
            coverage / frames as f64
        } else {
            0.0
        },
        conflict: selection_conflict(&run.logs),
        frames,
    }
}

/// Evaluation runs use a fixed budget.
pub fn fixed_budget(cfg: &CuratorConfig) -> CuratorConfig {
    CuratorConfig {
        early_stop: EarlyStop {
            enabled: false,
            ..cfg.early_stop
        },
        ..cfg.clone()
    }
}

/// Runs one selector on one scene and evaluates it.
pub fn run_and_evaluate(
    scene: &EvalScene,
    selector: Selector,
    cfg: &CuratorConfig,
    rng_seed: u64,
) -> Result<(EvalRow, WallclockEntry, SelectionRun)> {
    let cfg = fixed_budget(cfg);
    let t0 = Instant::now();
    let run = selector.run(&scene.cands, &scene.bvh, &cfg, rng_seed)?;
    let total_s = t0.elapsed().as_secs_f64();
    let m = evaluate_selection(&run, &scene.cands, &scene.elements, &scene.bvh);
    let row = EvalRow {
        scene: scene.name.clone(),
        selector: selector.name().to_string(),
        lambda: cfg.lambda,
        k: cfg.k,
        coverage: m.coverage,
        cov_per_view: m.coverage_per_view,
        conflict: m.conflict,
        frames: m.frames,
        runtime_s: total_s,
    };
    let wall = WallclockEntry {
        scene: scene.name.clone(),
        selector: selector.name().to_string(),
        lambda: cfg.lambda,
        k: cfg.k,
        rng_seed,
        total_s,
        per_step_s: run.logs.iter().map(|l| l.runtime_s).collect(),
    };
    Ok((row, wall, run))
}

fn mean_row(rows: &[EvalRow], scene: &str, selector: &str) -> EvalRow {
    let n = rows.len() as f64;
    let mean = |f: fn(&EvalRow) -> f64| rows.iter().map(f).sum::<f64>() / n;
    EvalRow {
        scene: scene.to_string(),
        selector: selector.to_string(),
        lambda: rows[0].lambda,
        k: rows[0].k,
        coverage: mean(|r| r.coverage),
        cov_per_view: mean(|r| r.cov_per_view),
        conflict: mean(|r| r.conflict),
        frames: (rows.iter().map(|r| r.frames).sum::<usize>() as f64 / n).round() as usize,
        runtime_s: mean(|r| r.runtime_s),
    }
}

fn extreme_row(rows: &[EvalRow], scene: &str, selector: &str, max: bool) -> EvalRow {
    let pick = |f: fn(&EvalRow) -> f64| {
        let it = rows.iter().map(f);
        if max {
            it.fold(f64::NEG_INFINITY, f64::max)
        } else {
            it.fold(f64::INFINITY, f64::min)
        }
    };
    EvalRow {
        scene: scene.to_string(),
        selector: selector.to_string(),
        lambda: rows[0].lambda,
        k: rows[0].k,
        coverage: pick(|r| r.coverage),
        cov_per_view: pick(|r| r.cov_per_view),
        conflict: pick(|r| r.conflict),
        frames: if max {
            rows.iter().map(|r| r.frames).max().unwrap()
        } else {
            rows.iter().map(|r| r.frames).min().unwrap()
        },
        runtime_s: pick(|r| r.runtime_s),
    }
}

/// All five selectors on one scene. The random baseline is run once per
/// entry of `random_seeds` and reported as `random` (mean), `random[min]`
/// and `random[max]` rows.
pub fn compare_selectors(
    scene: &EvalScene,
    cfg: &CuratorConfig,
    random_seeds: &[u64],
) -> Result<EvalReport> {
    let mut report = EvalReport::default();
    for sel in Selector::ALL {
        if sel == Selector::Baseline(BaselineKind::Random) {
            let mut rows = Vec::new();
            for &seed in random_seeds {
                let (row, wall, _) = run_and_evaluate(scene, sel, cfg, seed)?;
                rows.push(row);
                report.wallclock.push(wall);
            }
            if !rows.is_empty() {
                report.rows.push(mean_row(&rows, &scene.name, "random"));
                report.rows.push(extreme_row(&rows, &scene.name, "random[min]", false));
                report.rows.push(extreme_row(&rows, &scene.name, "random[max]", true));
            }
        } else {
            let (row, wall, _) = run_and_evaluate(scene, sel, cfg, 0)?;
            report.rows.push(row);
            report.wallclock.push(wall);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LambdaSweep {
    /// One row per scene and λ, scene-major.
    pub per_scene: EvalReport,
    /// One row per λ: the mean over scenes, scene name `mean`.
    pub mean: Vec<EvalRow>,
    /// `selected[scene][λ index]`.
    pub selected: Vec<Vec<Vec<usize>>>,
}

/// Runs the proposed selector at every λ on every scene, early stop off.
pub fn lambda_sweep(
    scenes: &[EvalScene],
    lambdas: &[f64],
    k: usize,
    cfg: &CuratorConfig,
) -> Result<LambdaSweep> {
    let mut per_scene = EvalReport::default();
    let mut selected = Vec::new();
    for scene in scenes {
        let mut sel = Vec::new();
        for &lambda in lambdas {
            let cfg = CuratorConfig {
                lambda,
                k,
                ..cfg.clone()
            };
            let (row, wall, run) = run_and_evaluate(scene, Selector::Cover, &cfg, 0)?;
            per_scene.rows.push(row);
            per_scene.wallclock.push(wall);
            sel.push(run.state.selected);
        }
        selected.push(sel);
    }
    let mean = (0..lambdas.len())
        .filter(|_| !scenes.is_empty())
        .map(|j| {
            let rows: Vec<EvalRow> = per_scene
                .rows
                .iter()
                .skip(j)
                .step_by(lambdas.len())
                .cloned()
                .collect();
            mean_row(&rows, "mean", "cover")
        })
        .collect();
    Ok(LambdaSweep {
        per_scene,
        mean,
        selected,
    })
}

/// The proposed selector with one fixed configuration on every member of
/// every family; one mean row per family, scene name = family name.
pub fn cross_scene_run(
    families: &[(String, Vec<EvalScene>)],
    cfg: &CuratorConfig,
) -> Result<(Vec<EvalRow>, EvalReport)> {
    let mut summary = Vec::new();
    let mut detail = EvalReport::default();
    for (name, scenes) in families {
        let mut rows = Vec::new();
        for scene in scenes {
            let (row, wall, _) = run_and_evaluate(scene, Selector::Cover, cfg, 0)?;
            rows.push(row.clone());
            detail.rows.push(row);
            detail.wallclock.push(wall);
        }
        if !rows.is_empty() {
            summary.push(mean_row(&rows, name, "cover"));
        }
    }
    Ok((summary, detail))
}
