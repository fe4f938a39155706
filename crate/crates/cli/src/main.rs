//! `cover`: scene generation, candidate filtering, viewpoint selection,
//! evaluation harnesses and the release auditor.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use cover::curator::{exhaustive_optimum, oracle_gap_run, ExactOracle};
use cover::eval::{compare_selectors, cross_scene_run, lambda_sweep, rows_to_csv, EvalReport, EvalScene};
use cover::io::{
    audit, export_run, load_scene, prepare_run, to_json_pretty, write_bytes, write_candidates,
    write_json, AuditOptions, RunConfig, SceneSource, CANDIDATES_FILE, CONFIG_FILE,
    CONFIG_HASH_FILE, WALLCLOCK_FILE,
};
use cover::scene::{save_mesh, RoomSpec, SceneFamily};
use cover::Error;

/// Sweep values used when `--lambdas` is not given.
const DEFAULT_LAMBDAS: [f64; 8] = [0.0, 0.05, 0.1, 0.2, 0.35, 0.5, 0.75, 1.0];

#[derive(Parser)]
#[command(name = "cover", version, about = "Conflict-aware budgeted ERP viewpoint selection")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Write the configured scene as a mesh file.
    GenScene(Common),
    /// Propose and filter candidates; writes candidates.jsonl.
    Candidates(Common),
    /// Select viewpoints and export frames plus metadata.
    Select(Common),
    /// Compare all selectors on the configured scenes.
    Evaluate(Common),
    /// Run the proposed selector over a range of λ.
    SweepLambda(Common),
    /// Run one fixed configuration over several scene families.
    CrossScene(Common),
    /// Compare the warping proxy with exact visibility along one run.
    OracleGap(Common),
    /// Re-check every file of an exported run.
    Audit(AuditArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Args)]
struct Common {
    /// JSON config; flags override its keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Scene: a JSON scene source or room spec, or a mesh file.
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Procedural family instead of --scene.
    #[arg(long)]
    family: Option<String>,
    /// Members of --family to use (starting at index 0).
    #[arg(long)]
    count: Option<u64>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    m: Option<usize>,
    /// Random-baseline seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    probe_w: Option<usize>,
    #[arg(long)]
    probe_h: Option<usize>,
    #[arg(long)]
    frame_w: Option<usize>,
    #[arg(long)]
    frame_h: Option<usize>,
    #[arg(long)]
    stride: Option<usize>,
    #[arg(long, value_enum)]
    early_stop: Option<Toggle>,
    #[arg(long)]
    selector: Option<String>,
    /// Comma-separated λ values for sweep-lambda.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    /// Random-baseline repetitions for evaluate.
    #[arg(long)]
    random_runs: Option<u64>,
}

#[derive(Args)]
struct AuditArgs {
    dir: PathBuf,
    /// Skip re-running selection for the K-prefix check.
    #[arg(long)]
    no_replay: bool,
    /// Budgets to replay (default: half the selection).
    #[arg(long, value_delimiter = ',')]
    replay: Option<Vec<usize>>,
}

/// The config file: a run config plus harness settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
struct CliConfig {
    #[serde(flatten)]
    run: RunConfig,
    /// Scenes for the harnesses; empty means `run.scene` alone.
    scenes: Vec<SceneSource>,
    /// Cross-scene families and members per family.
    families: Vec<SceneFamily>,
    members: u64,
    lambdas: Vec<f64>,
    random_runs: u64,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            run: RunConfig::default(),
            scenes: Vec::new(),
            families: vec![
                SceneFamily::SmallBox,
                SceneFamily::Cluttered,
                SceneFamily::OpenPlan,
                SceneFamily::NoisyCluttered,
            ],
            members: 3,
            lambdas: DEFAULT_LAMBDAS.to_vec(),
            random_runs: 10,
        }
    }
}

/// A failure and the exit code it maps to.
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_config_error() { 2 } else { 1 },
            msg: e.to_string(),
        }
    }
}

fn config_failure(msg: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        msg: msg.into(),
    }
}

fn parse_family(name: &str) -> Result<SceneFamily, Failure> {
    serde_json::from_value(serde_json::Value::String(name.into())).map_err(|_| {
        config_failure(format!(
            "invalid config `family`: unknown family `{name}` (small-box, cluttered, open-plan, noisy-cluttered)"
        ))
    })
}

fn read_scene_arg(path: &Path) -> Result<SceneSource, Failure> {
    if path.extension().is_some_and(|e| e == "json") {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_failure(format!("{}: {e}", path.display())))?;
        if let Ok(src) = serde_json::from_str::<SceneSource>(&text) {
            return Ok(src);
        }
        #[derive(Deserialize)]
        struct Room {
            #[serde(flatten)]
            spec: RoomSpec,
            #[serde(default)]
            seed: u64,
        }
        return serde_json::from_str::<Room>(&text)
            .map(|r| SceneSource::Room {
                spec: r.spec,
                seed: r.seed,
            })
            .map_err(|e| {
                config_failure(format!(
                    "invalid config `scene`: {}: not a scene source or room spec: {e}",
                    path.display()
                ))
            });
    }
    Ok(SceneSource::Mesh {
        path: path.to_path_buf(),
    })
}

fn load_config(c: &Common) -> Result<CliConfig, Failure> {
    let mut cfg = match &c.config {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| config_failure(format!("{}: {e}", p.display())))?;
            serde_json::from_str(&text)
                .map_err(|e| config_failure(format!("{}: {e}", p.display())))?
        }
        None => CliConfig::default(),
    };
    if let Some(p) = &c.scene {
        cfg.run.scene = read_scene_arg(p)?;
        cfg.scenes.clear();
    }
    if let Some(f) = &c.family {
        let family = parse_family(f)?;
        let n = c.count.unwrap_or(1);
        cfg.run.scene = SceneSource::Family { family, index: 0 };
        cfg.scenes = (0..n)
            .map(|index| SceneSource::Family { family, index })
            .collect();
        cfg.families = vec![family];
        cfg.members = n;
    } else if let Some(n) = c.count {
        cfg.members = n;
    }
    let cur = &mut cfg.run.curator;
    if let Some(v) = c.k {
        cur.k = v;
    }
    if let Some(v) = c.lambda {
        cur.lambda = v;
    }
    if let Some(v) = c.tau {
        cur.early_stop.tau = v;
    }
    if let Some(v) = c.m {
        cur.early_stop.m = v;
    }
    if let Some(v) = c.probe_w {
        cur.probe_w = v;
    }
    if let Some(v) = c.probe_h {
        cur.probe_h = v;
    }
    if let Some(v) = c.frame_w {
        cur.frame_w = v;
    }
    if let Some(v) = c.frame_h {
        cur.frame_h = v;
    }
    if let Some(v) = c.stride {
        cur.stride = v;
    }
    if let Some(t) = c.early_stop {
        cur.early_stop.enabled = matches!(t, Toggle::On);
    }
    if let Some(v) = c.seed {
        cfg.run.rng_seed = v;
    }
    if let Some(s) = &c.selector {
        cfg.run.selector = s.clone();
    }
    if let Some(l) = &c.lambdas {
        cfg.lambdas = l.clone();
    }
    if let Some(n) = c.random_runs {
        cfg.random_runs = n;
    }
    cfg.run.validate()?;
    if cfg.lambdas.iter().any(|l| !(l.is_finite() && *l >= 0.0)) {
        return Err(config_failure("invalid config `lambdas`: values must be finite and ≥ 0"));
    }
    Ok(cfg)
}

/// Writes `config.json` and `config_hash` for a harness run.
fn write_config(out: &Path, cfg: &CliConfig) -> Result<String, Failure> {
    let hash = cover::io::sha256_hex(cover::io::to_json_line(cfg).as_bytes());
    write_json(out.join(CONFIG_FILE), cfg)?;
    write_bytes(out.join(CONFIG_HASH_FILE), format!("{hash}\n").as_bytes())?;
    Ok(hash)
}

fn harness_scenes(cfg: &CliConfig) -> Vec<SceneSource> {
    if cfg.scenes.is_empty() {
        vec![cfg.run.scene.clone()]
    } else {
        cfg.scenes.clone()
    }
}

fn eval_scene(src: &SceneSource, cfg: &CliConfig) -> Result<EvalScene, Failure> {
    let mesh = load_scene(src)?;
    Ok(EvalScene::new(
        src.scene_id(),
        mesh,
        &cfg.run.grid,
        &cfg.run.filter,
        cfg.run.rng_seed,
    )?)
}

fn write_report(out: &Path, report: &EvalReport) -> Result<(), Failure> {
    write_bytes(out.join("coverage.csv"), report.csv().as_bytes())?;
    write_json(out.join(WALLCLOCK_FILE), &report.wallclock)?;
    Ok(())
}

fn run(cmd: Cmd) -> Result<String, Failure> {
    match cmd {
        Cmd::GenScene(c) => {
            let cfg = load_config(&c)?;
            let mesh = load_scene(&cfg.run.scene)?;
            let path = if c.out.extension().is_some() {
                c.out.clone()
            } else {
                std::fs::create_dir_all(&c.out)
                    .map_err(|e| Failure::from(Error::Io { path: c.out.clone(), source: e }))?;
                c.out.join("scene.mesh")
            };
            save_mesh(&mesh, &path)?;
            Ok(format!(
                "gen-scene: {} triangles, {:.2} m² -> {}",
                mesh.triangle_count(),
                mesh.total_area(),
                path.display()
            ))
        }
        Cmd::Candidates(c) => {
            let cfg = load_config(&c)?;
            let prepared = prepare_run(&cfg.run)?;
            write_config(&c.out, &cfg)?;
            write_candidates(c.out.join(CANDIDATES_FILE), &prepared.cands)?;
            let rej = prepared.cands.layer_rejections();
            Ok(format!(
                "candidates: {} feasible of {} (rejections by layer L1..L7: {:?}) -> {}",
                prepared.cands.feasible_count(),
                prepared.cands.len(),
                rej,
                c.out.join(CANDIDATES_FILE).display()
            ))
        }
        Cmd::Select(c) => {
            let cfg = load_config(&c)?;
            let s = export_run(&c.out, &cfg.run)?;
            Ok(format!(
                "select: {} {} frames{} from {} feasible, ids {:?}, config {} -> {}",
                s.scene_id,
                s.run.state.selected.len(),
                if s.run.stopped_early { " (early stop)" } else { "" },
                s.feasible,
                s.run.state.selected,
                &s.config_hash[..12],
                c.out.display()
            ))
        }
        Cmd::Evaluate(c) => {
            let cfg = load_config(&c)?;
            write_config(&c.out, &cfg)?;
            let seeds: Vec<u64> = (0..cfg.random_runs).map(|i| cfg.run.rng_seed + i).collect();
            let mut report = EvalReport::default();
            for src in harness_scenes(&cfg) {
                let scene = eval_scene(&src, &cfg)?;
                report.extend(compare_selectors(&scene, &cfg.run.curator, &seeds)?);
            }
            write_report(&c.out, &report)?;
            Ok(format!(
                "evaluate: {} rows -> {}",
                report.rows.len(),
                c.out.join("coverage.csv").display()
            ))
        }
        Cmd::SweepLambda(c) => {
            let cfg = load_config(&c)?;
            write_config(&c.out, &cfg)?;
            let scenes = harness_scenes(&cfg)
                .iter()
                .map(|s| eval_scene(s, &cfg))
                .collect::<Result<Vec<_>, _>>()?;
            let sweep = lambda_sweep(&scenes, &cfg.lambdas, cfg.run.curator.k, &cfg.run.curator)?;
            write_report(&c.out, &sweep.per_scene)?;
            write_bytes(c.out.join("lambda_summary.csv"), rows_to_csv(&sweep.mean).as_bytes())?;
            let conflicts: Vec<String> = sweep
                .mean
                .iter()
                .map(|r| format!("λ={}: {:.4}", r.lambda, r.conflict))
                .collect();
            Ok(format!(
                "sweep-lambda: {} rows, mean conflict {} -> {}",
                sweep.per_scene.rows.len(),
                conflicts.join(", "),
                c.out.join("coverage.csv").display()
            ))
        }
        Cmd::CrossScene(c) => {
            let cfg = load_config(&c)?;
            let hash = write_config(&c.out, &cfg)?;
            let mut families = Vec::new();
            for &f in &cfg.families {
                let scenes = (0..cfg.members)
                    .map(|index| eval_scene(&SceneSource::Family { family: f, index }, &cfg))
                    .collect::<Result<Vec<_>, _>>()?;
                families.push((f.name().to_string(), scenes));
            }
            let (summary, detail) = cross_scene_run(&families, &cfg.run.curator)?;
            write_bytes(c.out.join("coverage.csv"), rows_to_csv(&summary).as_bytes())?;
            write_bytes(c.out.join("coverage_detail.csv"), detail.csv().as_bytes())?;
            write_json(c.out.join(WALLCLOCK_FILE), &detail.wallclock)?;
            Ok(format!(
                "cross-scene: {} families × {} members, config {} -> {}",
                families.len(),
                cfg.members,
                &hash[..12],
                c.out.join("coverage.csv").display()
            ))
        }
        Cmd::OracleGap(c) => {
            let cfg = load_config(&c)?;
            write_config(&c.out, &cfg)?;
            let scene = eval_scene(&cfg.run.scene, &cfg)?;
            let (rep, _) = oracle_gap_run(&scene.cands, &scene.elements, &scene.bvh, &cfg.run.curator)?;
            // The noisy bound needs the optimum; only small instances.
            let ids = scene.cands.feasible_ids();
            let bound = (ids.len() <= 16 && cfg.run.curator.k <= 4).then(|| {
                let oracle = ExactOracle::new(&scene.bvh, &scene.elements, &scene.cands, &ids);
                let (_, opt) = exhaustive_optimum(&oracle, &ids, cfg.run.curator.k);
                serde_json::json!({ "opt": opt, "bound": rep.noisy_bound(opt) })
            });
            write_bytes(
                c.out.join("oracle_gap.json"),
                to_json_pretty(&serde_json::json!({ "report": rep, "exhaustive": bound })).as_bytes(),
            )?;
            Ok(format!(
                "oracle-gap: {} steps, mean ε {:.4}, top-1 {:.2}, coverage gap {:.4}, speedup {:.1}× -> {}",
                rep.records.len(),
                rep.mean_epsilon(),
                rep.top1_rate(),
                rep.coverage_gap,
                rep.speedup,
                c.out.join("oracle_gap.json").display()
            ))
        }
        Cmd::Audit(a) => {
            let opts = AuditOptions {
                replay: !a.no_replay,
                replay_budgets: a.replay.unwrap_or_default(),
                ..Default::default()
            };
            let report = audit(&a.dir, &opts)?;
            print!("{report}");
            let passed = report.checks.iter().filter(|c| c.ok()).count();
            let line = format!("audit: {passed}/{} checks passed", report.checks.len());
            if report.passed() {
                Ok(line)
            } else {
                Err(Failure { code: 1, msg: line })
            }
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("COVER_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .map_err(|_| config_failure(format!("invalid config `COVER_THREADS`: `{v}` is not a count")))?;
    if n > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure { code: 1, msg: e.to_string() })?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|()| run(cli.cmd)) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
