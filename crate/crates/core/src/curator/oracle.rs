use serde::{Deserialize, Serialize};

use super::{CuratorConfig, SelectionState};
use crate::render::{render_depth, warp_cloud, DepthImage};
use crate::scene::Bvh;
use crate::{PoseWC, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelClass {
    /// No probe hit: outside `Q_v`.
    Empty,
    Explained,
    New,
    Conflicted,
}

/// Partition of one probe pixel given the warped history depth.
#[inline]
pub fn classify(probe: f32, history: Option<f32>, delta: f64) -> PixelClass {
    if !(probe > 0.0) {
        return PixelClass::Empty;
    }
    match history {
        None => PixelClass::New,
        Some(h) if ((probe - h) as f64).abs() <= delta => PixelClass::Explained,
        Some(_) => PixelClass::Conflicted,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleScore {
    #[serde(rename = "id")]
    pub candidate_id: usize,
    pub explained: usize,
    pub new: usize,
    pub conflicted: usize,
    pub probe_total: usize,
    #[serde(rename = "G")]
    pub g: f64,
    #[serde(rename = "L")]
    pub l: f64,
    pub s: f64,
}

impl OracleScore {
    pub fn from_counts(
        candidate_id: usize,
        explained: usize,
        new: usize,
        conflicted: usize,
        probe_total: usize,
        lambda: f64,
    ) -> Self {
        let g = new as f64 / probe_total as f64;
        let l = conflicted as f64 / probe_total as f64;
        OracleScore {
            candidate_id,
            explained,
            new,
            conflicted,
            probe_total,
            g,
            l,
            s: g - lambda * l,
        }
    }

    /// `|Q_v|`.
    pub fn valid(&self) -> usize {
        self.explained + self.new + self.conflicted
    }

    /// Scores a probe against dense history depths (`INFINITY` = none).
    pub(crate) fn tally_dense(
        candidate_id: usize,
        probe: &DepthImage,
        hist: &[f32],
        delta: f64,
        lambda: f64,
    ) -> Self {
        let (mut e, mut n, mut c) = (0usize, 0usize, 0usize);
        // Same arithmetic as `classify`, without branches.
        for (&p, &h) in probe.data.iter().zip(hist) {
            let valid = p > 0.0;
            let has = h.is_finite();
            let agree = ((p - h) as f64).abs() <= delta;
            e += (valid & has & agree) as usize;
            c += (valid & has & !agree) as usize;
            n += (valid & !has) as usize;
        }
        OracleScore::from_counts(candidate_id, e, n, c, probe.len(), lambda)
    }

    /// Scores a probe against a history lookup.
    pub(crate) fn tally(
        candidate_id: usize,
        probe: &DepthImage,
        history: impl Fn(usize) -> Option<f32>,
        delta: f64,
        lambda: f64,
    ) -> Self {
        let (mut e, mut n, mut c) = (0, 0, 0);
        for (i, &p) in probe.data.iter().enumerate() {
            if !(p > 0.0) {
                continue;
            }
            match classify(p, history(i), delta) {
                PixelClass::Explained => e += 1,
                PixelClass::New => n += 1,
                PixelClass::Conflicted => c += 1,
                PixelClass::Empty => {}
            }
        }
        OracleScore::from_counts(candidate_id, e, n, c, probe.len(), lambda)
    }
}

/// Stand-alone scoring: renders the probe and warps the whole history cloud
/// from scratch.
pub fn score_candidate(
    state: &SelectionState,
    candidate_id: usize,
    position: Vec3,
    bvh: &Bvh,
    cfg: &CuratorConfig,
) -> OracleScore {
    let pose = PoseWC::level(position);
    let probe = render_depth(bvh, &pose, cfg.probe_w, cfg.probe_h);
    let hist = warp_cloud(
        &state.cloud,
        &pose,
        cfg.probe_w,
        cfg.probe_h,
        cfg.splat_radius,
    );
    let delta = cfg.delta(bvh.bounds());
    OracleScore::tally(
        candidate_id,
        &probe,
        |i| hist.mask[i].then(|| hist.depth.data[i]),
        delta,
        cfg.lambda,
    )
}
