//! Viewpoint selection: the warping oracle, interior seeding, the
//! conflict-aware budgeted greedy loop, the exact visibility oracle and the
//! baseline selectors.

mod baselines;
mod engine;
mod exact;
mod gap;
mod greedy;
mod oracle;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::render::PointCloud;
use crate::Aabb;

pub use baselines::{baseline_select, BaselineKind};
pub use exact::{
    element_visible, exact_marginal, exhaustive_optimum, select_exact_greedy, visibility, Bitset,
    ExactOracle, ExactRun, SeedRule,
};
pub use gap::{oracle_gap_run, GapEntry, OracleGapRecord, OracleGapReport};
pub use greedy::{pick_seed, select_greedy, SelectionRun};
pub use oracle::{classify, score_candidate, OracleScore, PixelClass};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EarlyStop {
    pub enabled: bool,
    pub tau: f64,
    pub m: usize,
}

impl Default for EarlyStop {
    fn default() -> Self {
        EarlyStop {
            enabled: true,
            tau: 0.01,
            m: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CuratorConfig {
    pub lambda: f64,
    /// Conflict tolerance as a fraction of the scene AABB diagonal, clamped
    /// to `[delta_min_m, delta_max_m]`.
    pub delta_fraction: f64,
    pub delta_min_m: f64,
    pub delta_max_m: f64,
    pub probe_w: usize,
    pub probe_h: usize,
    /// Seed pool size: feasible candidates nearest the AABB centre.
    pub m0: usize,
    pub k: usize,
    pub early_stop: EarlyStop,
    pub frame_w: usize,
    pub frame_h: usize,
    /// Unprojection subsampling of selected frames.
    pub stride: usize,
    pub splat_radius: usize,
    /// Above this, probes and per-candidate warp buffers are recomputed
    /// every step instead of cached.
    pub cache_budget_mb: usize,
}

impl Default for CuratorConfig {
    fn default() -> Self {
        CuratorConfig {
            lambda: 0.35,
            delta_fraction: 0.005,
            delta_min_m: 0.01,
            delta_max_m: 0.2,
            probe_w: 256,
            probe_h: 128,
            m0: 32,
            k: 30,
            early_stop: EarlyStop::default(),
            frame_w: 2048,
            frame_h: 1024,
            stride: 4,
            splat_radius: 1,
            cache_budget_mb: 1024,
        }
    }
}

impl CuratorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::config("lambda", "must be a finite value ≥ 0"));
        }
        if !(self.early_stop.tau > 0.0 && self.early_stop.tau < 1.0) {
            return Err(Error::config("early_stop.tau", "must lie in (0, 1)"));
        }
        if self.early_stop.m == 0 {
            return Err(Error::config("early_stop.m", "must be at least 1"));
        }
        if self.k == 0 {
            return Err(Error::config("k", "must be at least 1"));
        }
        if self.m0 == 0 {
            return Err(Error::config("m0", "must be at least 1"));
        }
        if self.stride == 0 {
            return Err(Error::config("stride", "must be at least 1"));
        }
        for (key, v) in [
            ("probe_w", self.probe_w),
            ("probe_h", self.probe_h),
            ("frame_w", self.frame_w),
            ("frame_h", self.frame_h),
        ] {
            if v < 2 {
                return Err(Error::config(key, "must be at least 2"));
            }
        }
        if !(self.delta_fraction > 0.0
            && self.delta_min_m > 0.0
            && self.delta_min_m <= self.delta_max_m)
        {
            return Err(Error::config(
                "delta_fraction",
                "needs fraction > 0 and 0 < delta_min_m ≤ delta_max_m",
            ));
        }
        Ok(())
    }

    /// Depth agreement tolerance δ for a scene.
    pub fn delta(&self, aabb: Aabb) -> f64 {
        (self.delta_fraction * aabb.diagonal()).clamp(self.delta_min_m, self.delta_max_m)
    }

    pub fn probe_pixels(&self) -> usize {
        self.probe_w * self.probe_h
    }
}

/// `𝒱_t` and `𝒞_t`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SelectionState {
    pub selected: Vec<usize>,
    pub cloud: PointCloud,
    pub step: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub selected_id: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub s: f64,
    /// Whether another candidate matched the winner's ranking key and the
    /// centre-distance / id tie-break decided.
    pub tie_break: bool,
    /// Every candidate scored this step, in id order.
    pub candidates: Vec<OracleScore>,
    #[serde(skip)]
    pub runtime_s: f64,
}

impl StepLog {
    pub fn winner(&self) -> Option<&OracleScore> {
        self.candidates
            .iter()
            .find(|c| c.candidate_id == self.selected_id)
    }
}
