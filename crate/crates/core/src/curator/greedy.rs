use std::time::Instant;

use super::engine::{Engine, Rank};
use super::{CuratorConfig, EarlyStop, OracleScore, SelectionState, StepLog};
use crate::candidates::CandidateSet;
use crate::error::Result;
use crate::scene::Bvh;

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRun {
    pub state: SelectionState,
    pub logs: Vec<StepLog>,
    pub stopped_early: bool,
}

impl SelectionRun {
    pub fn seed(&self) -> usize {
        self.state.selected[0]
    }
}

/// Interior seed: probe-coverage argmax over the `M0` feasible candidates
/// nearest the AABB centre.
pub fn pick_seed(cands: &CandidateSet, bvh: &Bvh, cfg: &CuratorConfig) -> Result<usize> {
    Ok(Engine::new(cands, bvh, cfg)?.pick_seed().0)
}

/// Conflict-aware budgeted greedy selection of up to `cfg.k` viewpoints.
pub fn select_greedy(cands: &CandidateSet, bvh: &Bvh, cfg: &CuratorConfig) -> Result<SelectionRun> {
    let mut engine = Engine::new(cands, bvh, cfg)?;
    engine.warm_probes();
    Ok(run_greedy(
        &mut engine,
        Rank::Score,
        cfg.k,
        cfg.early_stop,
        |_, _, _| {},
    ))
}

fn step_log(
    step: usize,
    scores: Vec<OracleScore>,
    best: usize,
    tie: bool,
    runtime_s: f64,
) -> StepLog {
    let w = scores[best];
    StepLog {
        step,
        selected_id: w.candidate_id,
        g: w.g,
        l: w.l,
        s: w.s,
        tie_break: tie,
        candidates: scores,
        runtime_s,
    }
}

/// The selection loop. `observe` sees the engine and the step's scores
/// before the winner is added; its time is not charged to the step.
pub(crate) fn run_greedy(
    engine: &mut Engine<'_>,
    rank: Rank,
    k: usize,
    early_stop: EarlyStop,
    mut observe: impl FnMut(&mut Engine<'_>, usize, &[OracleScore]),
) -> SelectionRun {
    let mut logs = Vec::new();

    let t0 = Instant::now();
    let (seed, pool, tie) = engine.pick_seed();
    let mut runtime = t0.elapsed().as_secs_f64();
    observe(engine, 1, &pool);
    let t1 = Instant::now();
    engine.add(seed);
    runtime += t1.elapsed().as_secs_f64();
    let best = pool.iter().position(|s| s.candidate_id == seed).unwrap();
    logs.push(step_log(1, pool, best, tie, runtime));

    let mut below = 0;
    let mut stopped_early = false;
    while engine.state.selected.len() < k {
        let t0 = Instant::now();
        let scores = engine.score_all();
        if scores.is_empty() {
            break;
        }
        let (best, tie) = engine.choose(&scores, rank);
        let mut runtime = t0.elapsed().as_secs_f64();
        let step = engine.state.step + 1;
        observe(engine, step, &scores);
        let t1 = Instant::now();
        let winner = scores[best];
        engine.add(winner.candidate_id);
        runtime += t1.elapsed().as_secs_f64();
        logs.push(step_log(step, scores, best, tie, runtime));

        if early_stop.enabled {
            below = if winner.g < early_stop.tau {
                below + 1
            } else {
                0
            };
            let n = engine.state.selected.len();
            if below >= early_stop.m && n >= 2 && n < k {
                stopped_early = true;
                break;
            }
        }
    }
    SelectionRun {
        state: std::mem::take(&mut engine.state),
        logs,
        stopped_early,
    }
}
