use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::engine::{Engine, Rank};
use super::greedy::{run_greedy, SelectionRun};
use super::{CuratorConfig, StepLog};
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::scene::Bvh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    /// Uniform without replacement after the seed.
    Random,
    /// One scoring pass from the seed's state, top `K−1` by score.
    SingleProbe,
    /// Greedy on `G` alone.
    CoverageOnly,
    /// Greedy on `−L` alone, ties by higher `G`.
    LowConflict,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::Random,
        BaselineKind::SingleProbe,
        BaselineKind::CoverageOnly,
        BaselineKind::LowConflict,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Random => "random",
            BaselineKind::SingleProbe => "single_probe",
            BaselineKind::CoverageOnly => "coverage_only",
            BaselineKind::LowConflict => "low_conflict",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config("selector", format!("unknown baseline `{s}`")))
    }
}

/// Runs a baseline from the same seed as [`super::select_greedy`].
/// Greedy-style baselines honour `cfg.early_stop`; the others always fill
/// the budget.
pub fn baseline_select(
    kind: BaselineKind,
    cands: &CandidateSet,
    bvh: &Bvh,
    cfg: &CuratorConfig,
    rng_seed: u64,
) -> Result<SelectionRun> {
    let mut engine = Engine::new(cands, bvh, cfg)?;
    match kind {
        BaselineKind::CoverageOnly => {
            engine.warm_probes();
            Ok(run_greedy(
                &mut engine,
                Rank::Coverage,
                cfg.k,
                cfg.early_stop,
                |_, _, _| {},
            ))
        }
        BaselineKind::LowConflict => {
            engine.warm_probes();
            Ok(run_greedy(
                &mut engine,
                Rank::LowConflict,
                cfg.k,
                cfg.early_stop,
                |_, _, _| {},
            ))
        }
        BaselineKind::Random => Ok(random(&mut engine, cfg.k, rng_seed)),
        BaselineKind::SingleProbe => Ok(single_probe(&mut engine, cfg.k)),
    }
}

fn seed_step(engine: &mut Engine<'_>) -> StepLog {
    let t0 = Instant::now();
    let (seed, pool, tie) = engine.pick_seed();
    engine.add(seed);
    let w = *pool.iter().find(|s| s.candidate_id == seed).unwrap();
    StepLog {
        step: 1,
        selected_id: seed,
        g: w.g,
        l: w.l,
        s: w.s,
        tie_break: tie,
        candidates: pool,
        runtime_s: t0.elapsed().as_secs_f64(),
    }
}

/// Winners are still scored against the actual accumulated state so the
/// logs carry comparable `G`/`L`.
fn random(engine: &mut Engine<'_>, k: usize, rng_seed: u64) -> SelectionRun {
    let mut logs = vec![seed_step(engine)];
    let mut order = engine.remaining();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
    for id in order.into_iter().take(k.saturating_sub(1)) {
        let t0 = Instant::now();
        let score = engine.score_ids(&[id])[0];
        engine.add(id);
        logs.push(StepLog {
            step: engine.state.step,
            selected_id: id,
            g: score.g,
            l: score.l,
            s: score.s,
            tie_break: false,
            candidates: vec![score],
            runtime_s: t0.elapsed().as_secs_f64(),
        });
    }
    SelectionRun {
        state: std::mem::take(&mut engine.state),
        logs,
        stopped_early: false,
    }
}

/// Every log after the seed lists the not-yet-taken entries of the single
/// scoring pass.
fn single_probe(engine: &mut Engine<'_>, k: usize) -> SelectionRun {
    let mut logs = vec![seed_step(engine)];
    engine.warm_probes();
    let t0 = Instant::now();
    let mut pass = engine.score_all();
    let mut pass_time = t0.elapsed().as_secs_f64();
    while engine.state.selected.len() < k && !pass.is_empty() {
        let t0 = Instant::now();
        let (best, tie) = engine.choose(&pass, Rank::Score);
        let w = pass[best];
        engine.add(w.candidate_id);
        logs.push(StepLog {
            step: engine.state.step,
            selected_id: w.candidate_id,
            g: w.g,
            l: w.l,
            s: w.s,
            tie_break: tie,
            candidates: pass.clone(),
            runtime_s: pass_time + t0.elapsed().as_secs_f64(),
        });
        pass_time = 0.0;
        pass.remove(best);
    }
    SelectionRun {
        state: std::mem::take(&mut engine.state),
        logs,
        stopped_early: false,
    }
}
