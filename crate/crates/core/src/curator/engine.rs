//! Shared selection machinery: probe cache, incremental history warps,
//! ranking and tie-breaking.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::sync::OnceLock;

use rayon::prelude::*;

use super::{CuratorConfig, OracleScore, SelectionState};
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::render::{render_depth, unproject, warp_cloud, DepthImage, WarpBuffer};
use crate::scene::Bvh;
use crate::{PoseWC, Vec3};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Rank {
    /// `s = G − λL`.
    Score,
    Coverage,
    /// Lowest `L` first, then highest `G`.
    LowConflict,
}

impl Rank {
    fn key(self, s: &OracleScore) -> (f64, f64) {
        match self {
            Rank::Score => (s.s, 0.0),
            Rank::Coverage => (s.g, 0.0),
            Rank::LowConflict => (-s.l, s.g),
        }
    }
}

/// History warp of one candidate, fed lazily from the growing cloud.
struct Hist {
    buf: WarpBuffer,
    absorbed: usize,
}

pub(crate) struct Engine<'a> {
    pub cands: &'a CandidateSet,
    pub bvh: &'a Bvh,
    pub cfg: &'a CuratorConfig,
    pub centre: Vec3,
    pub delta: f64,
    pub feasible: Vec<usize>,
    slot_of: Vec<Option<usize>>,
    cache: bool,
    probes: Vec<OnceLock<DepthImage>>,
    hists: Vec<Option<Hist>>,
    chosen: Vec<bool>,
    pub state: SelectionState,
}

impl<'a> Engine<'a> {
    pub fn new(cands: &'a CandidateSet, bvh: &'a Bvh, cfg: &'a CuratorConfig) -> Result<Self> {
        cfg.validate()?;
        let feasible = cands.feasible_ids();
        if feasible.is_empty() {
            return Err(Error::NoFeasibleCandidates { total: cands.len() });
        }
        let mut slot_of = vec![None; cands.len()];
        for (slot, &id) in feasible.iter().enumerate() {
            slot_of[id] = Some(slot);
        }
        // Probe plus two warp z-buffers, f32 each.
        let per_candidate = cfg.probe_pixels() * 4 * 3;
        let cache = feasible.len().saturating_mul(per_candidate) <= cfg.cache_budget_mb << 20;
        let aabb = bvh.bounds();
        let n = feasible.len();
        Ok(Engine {
            cands,
            bvh,
            cfg,
            centre: aabb.centre(),
            delta: cfg.delta(aabb),
            slot_of,
            cache,
            probes: (0..n).map(|_| OnceLock::new()).collect(),
            hists: (0..n).map(|_| None).collect(),
            chosen: vec![false; n],
            feasible,
            state: SelectionState::default(),
        })
    }

    pub fn position(&self, id: usize) -> Vec3 {
        self.cands.get(id).position
    }

    pub fn centre_distance(&self, id: usize) -> f64 {
        self.position(id).distance(self.centre)
    }

    fn render_probe(&self, id: usize) -> DepthImage {
        render_depth(
            self.bvh,
            &PoseWC::level(self.position(id)),
            self.cfg.probe_w,
            self.cfg.probe_h,
        )
    }

    fn probe(&self, slot: usize) -> Cow<'_, DepthImage> {
        let id = self.feasible[slot];
        if self.cache {
            Cow::Borrowed(self.probes[slot].get_or_init(|| self.render_probe(id)))
        } else {
            Cow::Owned(self.render_probe(id))
        }
    }

    /// Renders every feasible probe up front (when caching).
    pub fn warm_probes(&self) {
        if self.cache {
            (0..self.feasible.len()).into_par_iter().for_each(|slot| {
                self.probe(slot);
            });
        }
    }

    /// Single-view probe coverage: the score against an empty history.
    fn solo_score(&self, slot: usize) -> OracleScore {
        OracleScore::tally(
            self.feasible[slot],
            &self.probe(slot),
            |_| None,
            self.delta,
            self.cfg.lambda,
        )
    }

    /// The `M0` feasible candidates nearest the AABB centre.
    pub fn seed_pool(&self) -> Vec<usize> {
        let mut pool = self.feasible.clone();
        pool.sort_by(|&a, &b| {
            self.centre_distance(a)
                .total_cmp(&self.centre_distance(b))
                .then(a.cmp(&b))
        });
        pool.truncate(self.cfg.m0);
        pool.sort_unstable();
        pool
    }

    /// Probe-coverage argmax over the seed pool; returns the pool scores in
    /// id order.
    pub fn pick_seed(&self) -> (usize, Vec<OracleScore>, bool) {
        let pool = self.seed_pool();
        let scores: Vec<OracleScore> = pool
            .par_iter()
            .map(|&id| self.solo_score(self.slot_of[id].unwrap()))
            .collect();
        let (best, tie) = self.choose(&scores, Rank::Coverage);
        (scores[best].candidate_id, scores, tie)
    }

    /// Feasible, not yet selected ids in id order.
    pub fn remaining(&self) -> Vec<usize> {
        self.feasible
            .iter()
            .zip(&self.chosen)
            .filter(|(_, &c)| !c)
            .map(|(&id, _)| id)
            .collect()
    }

    /// Scores every remaining candidate against the current cloud.
    pub fn score_all(&mut self) -> Vec<OracleScore> {
        let ids = self.remaining();
        self.score_ids(&ids)
    }

    pub fn score_ids(&mut self, ids: &[usize]) -> Vec<OracleScore> {
        let slots: Vec<usize> = ids
            .iter()
            .map(|&id| self.slot_of[id].expect("infeasible candidate"))
            .collect();
        if !self.cache {
            let this = &*self;
            return slots
                .par_iter()
                .map(|&slot| {
                    let id = this.feasible[slot];
                    let pose = PoseWC::level(this.position(id));
                    let cfg = this.cfg;
                    let hist = warp_cloud(
                        &this.state.cloud,
                        &pose,
                        cfg.probe_w,
                        cfg.probe_h,
                        cfg.splat_radius,
                    );
                    OracleScore::tally(
                        id,
                        &this.probe(slot),
                        |i| hist.mask[i].then(|| hist.depth.data[i]),
                        this.delta,
                        cfg.lambda,
                    )
                })
                .collect();
        }

        let mut wanted = vec![false; self.feasible.len()];
        for &s in &slots {
            wanted[s] = true;
        }
        // Make sure probes exist before borrowing `hists` mutably.
        slots.par_iter().for_each(|&s| {
            self.probe(s);
        });
        let Engine {
            hists,
            probes,
            feasible,
            state,
            cfg,
            cands,
            delta,
            ..
        } = self;
        let cloud = &state.cloud.points;
        let (cfg, cands, delta): (&CuratorConfig, &CandidateSet, f64) = (*cfg, *cands, *delta);
        let mut scored: Vec<(usize, OracleScore)> = hists
            .par_iter_mut()
            .enumerate()
            .filter(|(slot, _)| wanted[*slot])
            .map_init(Vec::new, |scratch, (slot, hist)| {
                let id = feasible[slot];
                let h = hist.get_or_insert_with(|| Hist {
                    buf: WarpBuffer::new(
                        PoseWC::level(cands.get(id).position),
                        cfg.probe_w,
                        cfg.probe_h,
                        cfg.splat_radius,
                    ),
                    absorbed: 0,
                });
                h.buf.add_points(&cloud[h.absorbed..]);
                h.absorbed = cloud.len();
                let probe = probes[slot].get().unwrap();
                h.buf.history_into(scratch);
                (
                    slot,
                    OracleScore::tally_dense(id, probe, scratch, delta, cfg.lambda),
                )
            })
            .collect();
        // Back to the caller's order.
        let mut by_slot = vec![None; feasible.len()];
        for (slot, score) in scored.drain(..) {
            by_slot[slot] = Some(score);
        }
        slots.iter().map(|&s| by_slot[s].unwrap()).collect()
    }

    /// Index of the best entry and whether its ranking key was tied.
    /// Ties go to the candidate nearer the AABB centre, then the lower id.
    pub fn choose(&self, scores: &[OracleScore], rank: Rank) -> (usize, bool) {
        self.choose_by(
            scores.len(),
            |i| rank.key(&scores[i]),
            |i| scores[i].candidate_id,
        )
    }

    pub fn choose_by(
        &self,
        n: usize,
        key: impl Fn(usize) -> (f64, f64),
        id: impl Fn(usize) -> usize,
    ) -> (usize, bool) {
        assert!(n > 0);
        let cmp_key = |a: (f64, f64), b: (f64, f64)| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1));
        let mut best = 0;
        for i in 1..n {
            let ord = cmp_key(key(i), key(best)).then_with(|| {
                self.centre_distance(id(best))
                    .total_cmp(&self.centre_distance(id(i)))
                    .then(id(best).cmp(&id(i)))
            });
            if ord == Ordering::Greater {
                best = i;
            }
        }
        let tie = (0..n).any(|i| i != best && cmp_key(key(i), key(best)) == Ordering::Equal);
        (best, tie)
    }

    /// Renders `id` at frame resolution and appends its unprojection to the
    /// cloud.
    pub fn add(&mut self, id: usize) {
        let slot = self.slot_of[id].expect("infeasible candidate");
        assert!(!self.chosen[slot], "candidate {id} selected twice");
        let pose = PoseWC::level(self.position(id));
        let depth = render_depth(self.bvh, &pose, self.cfg.frame_w, self.cfg.frame_h);
        let pts = unproject(&depth, &pose, self.cfg.stride);
        self.state.cloud.extend(&pts);
        self.state.selected.push(id);
        self.state.step += 1;
        self.chosen[slot] = true;
        // A selected candidate is never scored again.
        self.hists[slot] = None;
    }
}
