//! Proxy-vs-exact oracle comparison along one proxy selection run.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::engine::{Engine, Rank};
use super::exact::{exact_greedy_on, ExactOracle};
use super::greedy::{run_greedy, SelectionRun};
use super::CuratorConfig;
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::scene::{Bvh, SurfaceElements};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapEntry {
    pub id: usize,
    /// Proxy gain `G_t(v)`.
    pub proxy_gain: f64,
    /// Exact marginal `Δ_t(v)`.
    pub exact_gain: f64,
    /// `L_t(v)`.
    pub conflict: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleGapRecord {
    pub step: usize,
    pub proxy_winner: usize,
    pub exact_best: usize,
    pub entries: Vec<GapEntry>,
    /// `max |G − Δ|` over the step's candidates.
    pub epsilon: f64,
    pub top1_agree: bool,
    /// `L` at the exact-best candidate.
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleGapReport {
    pub lambda: f64,
    pub records: Vec<OracleGapRecord>,
    pub proxy_selection: Vec<usize>,
    /// Exact greedy from the same seed.
    pub exact_selection: Vec<usize>,
    pub proxy_coverage: f64,
    pub exact_coverage: f64,
    /// `exact_coverage − proxy_coverage`.
    pub coverage_gap: f64,
    /// One-time probe rendering of every feasible candidate.
    pub probe_render_s: f64,
    /// Median proxy step after the seed: incremental warp, classification of
    /// every remaining candidate, and rendering plus unprojecting the winner.
    pub proxy_step_s: f64,
    /// Visibility of every surface element from every feasible candidate,
    /// i.e. what one exact scoring step costs without reuse.
    pub visibility_pass_s: f64,
    /// Median set-difference time per step given cached visibility.
    pub exact_marginal_step_s: f64,
    /// `(visibility_pass_s + exact_marginal_step_s) / proxy_step_s`.
    pub speedup: f64,
    /// OLS slope of `|G − Δ|` against `L` over all post-seed datapoints.
    pub eta_slope: Option<f64>,
    pub datapoints: usize,
    pub scored_per_step: f64,
}

impl OracleGapReport {
    /// `Σ_t (2ε_t + 2λγ_t)`.
    pub fn penalty(&self) -> f64 {
        self.records
            .iter()
            .map(|r| 2.0 * r.epsilon + 2.0 * self.lambda * r.gamma)
            .sum()
    }

    /// `(1 − 1/e)·opt − penalty`.
    pub fn noisy_bound(&self, opt: f64) -> f64 {
        (1.0 - (-1.0f64).exp()) * opt - self.penalty()
    }

    pub fn mean_epsilon(&self) -> f64 {
        self.records.iter().map(|r| r.epsilon).sum::<f64>() / self.records.len() as f64
    }

    pub fn top1_rate(&self) -> f64 {
        self.records.iter().filter(|r| r.top1_agree).count() as f64 / self.records.len() as f64
    }
}

/// Median, robust to the odd step slowed down by something else running.
fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return 0.0;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn ols_slope(xy: &[(f64, f64)]) -> Option<f64> {
    if xy.len() < 2 {
        return None;
    }
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = xy.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = xy.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Runs the proxy greedy selector while evaluating the exact marginal of
/// every scored candidate at every step, then the exact greedy from the same
/// seed for the final coverage gap.
pub fn oracle_gap_run(
    cands: &CandidateSet,
    elements: &SurfaceElements,
    bvh: &Bvh,
    cfg: &CuratorConfig,
) -> Result<(OracleGapReport, SelectionRun)> {
    if elements.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let mut engine = Engine::new(cands, bvh, cfg)?;

    let t0 = Instant::now();
    let oracle = ExactOracle::new(bvh, elements, cands, &engine.feasible);
    let visibility_pass_s = t0.elapsed().as_secs_f64();

    let t0 = Instant::now();
    engine.warm_probes();
    let probe_render_s = t0.elapsed().as_secs_f64();

    let mut records = Vec::new();
    let mut marginal_times = Vec::new();
    let mut scored = 0usize;
    let run = run_greedy(
        &mut engine,
        Rank::Score,
        cfg.k,
        cfg.early_stop,
        |engine, step, scores| {
            // The seed step only scored the pool; compare over every candidate.
            let all;
            let scores = if step == 1 {
                all = engine.score_all();
                &all[..]
            } else {
                scores
            };
            let t0 = Instant::now();
            let covered = oracle.covered(&engine.state.selected);
            let entries: Vec<GapEntry> = scores
                .iter()
                .map(|s| GapEntry {
                    id: s.candidate_id,
                    proxy_gain: s.g,
                    exact_gain: oracle.marginal(&covered, s.candidate_id),
                    conflict: s.l,
                })
                .collect();
            if step > 1 {
                marginal_times.push(t0.elapsed().as_secs_f64());
                scored += entries.len();
            }
            let (best, _) = engine.choose_by(
                entries.len(),
                |i| (entries[i].exact_gain, 0.0),
                |i| entries[i].id,
            );
            let proxy_winner = if step == 1 {
                engine.pick_seed().0
            } else {
                let (w, _) = engine.choose(scores, Rank::Score);
                scores[w].candidate_id
            };
            records.push(OracleGapRecord {
                step,
                proxy_winner,
                exact_best: entries[best].id,
                epsilon: entries
                    .iter()
                    .map(|e| (e.proxy_gain - e.exact_gain).abs())
                    .fold(0.0, f64::max),
                top1_agree: proxy_winner == entries[best].id,
                gamma: entries[best].conflict,
                entries,
            });
        },
    );

    let exact = exact_greedy_on(&engine, &oracle, Some(run.seed()), cfg.k);
    let proxy_coverage = oracle.coverage(&run.state.selected);
    let steps = run.logs.len().saturating_sub(1);
    let step_times: Vec<f64> = run.logs.iter().skip(1).map(|l| l.runtime_s).collect();
    let proxy_step_s = median(&step_times);
    let exact_marginal_step_s = median(&marginal_times);
    let xy: Vec<(f64, f64)> = records
        .iter()
        .filter(|r| r.step > 1)
        .flat_map(|r| {
            r.entries
                .iter()
                .map(|e| (e.conflict, (e.proxy_gain - e.exact_gain).abs()))
        })
        .collect();
    let report = OracleGapReport {
        lambda: cfg.lambda,
        proxy_selection: run.state.selected.clone(),
        exact_selection: exact.selected,
        proxy_coverage,
        exact_coverage: exact.coverage,
        coverage_gap: exact.coverage - proxy_coverage,
        probe_render_s,
        proxy_step_s,
        visibility_pass_s,
        exact_marginal_step_s,
        speedup: if proxy_step_s > 0.0 {
            (visibility_pass_s + exact_marginal_step_s) / proxy_step_s
        } else {
            f64::INFINITY
        },
        eta_slope: ols_slope(&xy),
        datapoints: records.iter().map(|r| r.entries.len()).sum(),
        scored_per_step: if steps > 0 {
            scored as f64 / steps as f64
        } else {
            0.0
        },
        records,
    };
    Ok((report, run))
}
