//! Exact marginal coverage over discretized surface elements.

use rayon::prelude::*;

use super::engine::Engine;
use super::CuratorConfig;
use crate::candidates::CandidateSet;
use crate::error::{Error, Result};
use crate::scene::{Bvh, SurfaceElements};
use crate::Vec3;

/// Slack on the occlusion test so the element's own surface never blocks it.
pub const VISIBILITY_EPS: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitset {
    words: Vec<u64>,
    len: usize,
}

impl Bitset {
    pub fn new(len: usize) -> Self {
        Bitset {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn union_with(&mut self, o: &Bitset) {
        for (a, b) in self.words.iter_mut().zip(&o.words) {
            *a |= b;
        }
    }

    /// `|self \ o|`.
    pub fn count_and_not(&self, o: &Bitset) -> usize {
        self.words
            .iter()
            .zip(&o.words)
            .map(|(a, b)| (a & !b).count_ones() as usize)
            .sum()
    }
}

/// Element `e` is seen from `v` when it faces `v` and nothing lies on the
/// open segment between them.
pub fn element_visible(bvh: &Bvh, v: Vec3, point: Vec3, normal: Vec3) -> bool {
    let to = point - v;
    let dist = to.norm();
    if !(dist > VISIBILITY_EPS) || normal.dot(v - point) <= 0.0 {
        return false;
    }
    bvh.raycast_within(v, to / dist, dist - VISIBILITY_EPS)
        .is_none()
}

pub fn visibility(bvh: &Bvh, elements: &SurfaceElements, v: Vec3) -> Bitset {
    let mut out = Bitset::new(elements.len());
    for (i, (&p, &n)) in elements.points.iter().zip(&elements.normals).enumerate() {
        if element_visible(bvh, v, p, n) {
            out.set(i);
        }
    }
    out
}

/// Cached visibility sets `O(v)` for a fixed list of candidates.
#[derive(Debug, Clone)]
pub struct ExactOracle {
    n: usize,
    vis: Vec<Option<Bitset>>,
}

impl ExactOracle {
    pub fn new(bvh: &Bvh, elements: &SurfaceElements, cands: &CandidateSet, ids: &[usize]) -> Self {
        let sets: Vec<(usize, Bitset)> = ids
            .par_iter()
            .map(|&id| (id, visibility(bvh, elements, cands.get(id).position)))
            .collect();
        let mut vis = vec![None; cands.len()];
        for (id, set) in sets {
            vis[id] = Some(set);
        }
        ExactOracle {
            n: elements.len(),
            vis,
        }
    }

    pub fn element_count(&self) -> usize {
        self.n
    }

    pub fn visible(&self, id: usize) -> &Bitset {
        self.vis[id]
            .as_ref()
            .expect("visibility not computed for candidate")
    }

    pub fn covered(&self, selected: &[usize]) -> Bitset {
        let mut c = Bitset::new(self.n);
        for &id in selected {
            c.union_with(self.visible(id));
        }
        c
    }

    /// `Δ(v | covered)`.
    pub fn marginal(&self, covered: &Bitset, id: usize) -> f64 {
        self.visible(id).count_and_not(covered) as f64 / self.n as f64
    }

    pub fn coverage(&self, selected: &[usize]) -> f64 {
        self.covered(selected).count() as f64 / self.n as f64
    }
}

/// Reference marginal computed from scratch: fraction of elements seen from
/// `v` and from none of `covered_from`.
pub fn exact_marginal(
    covered_from: &[Vec3],
    v: Vec3,
    elements: &SurfaceElements,
    bvh: &Bvh,
) -> f64 {
    let new = (0..elements.len())
        .filter(|&i| {
            let (p, n) = (elements.points[i], elements.normals[i]);
            element_visible(bvh, v, p, n)
                && !covered_from.iter().any(|&u| element_visible(bvh, u, p, n))
        })
        .count();
    new as f64 / elements.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SeedRule {
    /// The probe-coverage seed shared with the proxy selector.
    Shared,
    /// Plain greedy from the empty set.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExactRun {
    pub selected: Vec<usize>,
    /// Marginal gain of each pick at the time it was made.
    pub marginals: Vec<f64>,
    pub coverage: f64,
}

/// Greedy on exact marginals with the proxy selector's tie rule.
pub fn select_exact_greedy(
    cands: &CandidateSet,
    elements: &SurfaceElements,
    bvh: &Bvh,
    cfg: &CuratorConfig,
    seed: SeedRule,
) -> Result<ExactRun> {
    if elements.is_empty() {
        return Err(Error::EmptyMesh);
    }
    let engine = Engine::new(cands, bvh, cfg)?;
    let oracle = ExactOracle::new(bvh, elements, cands, &engine.feasible);
    let seed = match seed {
        SeedRule::Shared => Some(engine.pick_seed().0),
        SeedRule::Exact => None,
    };
    Ok(exact_greedy_on(&engine, &oracle, seed, cfg.k))
}

pub(crate) fn exact_greedy_on(
    engine: &Engine<'_>,
    oracle: &ExactOracle,
    seed: Option<usize>,
    k: usize,
) -> ExactRun {
    let mut selected = Vec::new();
    let mut marginals = Vec::new();
    let mut covered = Bitset::new(oracle.element_count());
    let mut remaining = engine.feasible.clone();
    while selected.len() < k && !remaining.is_empty() {
        let pick = match (selected.is_empty(), seed) {
            (true, Some(s)) => remaining.iter().position(|&id| id == s).unwrap(),
            _ => {
                let gains: Vec<f64> = remaining
                    .iter()
                    .map(|&id| oracle.marginal(&covered, id))
                    .collect();
                engine
                    .choose_by(remaining.len(), |i| (gains[i], 0.0), |i| remaining[i])
                    .0
            }
        };
        let id = remaining.remove(pick);
        marginals.push(oracle.marginal(&covered, id));
        covered.union_with(oracle.visible(id));
        selected.push(id);
    }
    let coverage = covered.count() as f64 / oracle.element_count() as f64;
    ExactRun {
        selected,
        marginals,
        coverage,
    }
}

/// Best coverage over all `min(k, |ids|)`-subsets of `ids`.
pub fn exhaustive_optimum(oracle: &ExactOracle, ids: &[usize], k: usize) -> (Vec<usize>, f64) {
    fn rec(
        oracle: &ExactOracle,
        ids: &[usize],
        k: usize,
        start: usize,
        cur: &mut Vec<usize>,
        covered: &Bitset,
        best: &mut (Vec<usize>, usize),
    ) {
        if cur.len() == k {
            let c = covered.count();
            if c > best.1 {
                *best = (cur.clone(), c);
            }
            return;
        }
        for i in start..=ids.len() - (k - cur.len()) {
            let mut next = covered.clone();
            next.union_with(oracle.visible(ids[i]));
            cur.push(ids[i]);
            rec(oracle, ids, k, i + 1, cur, &next, best);
            cur.pop();
        }
    }
    let k = k.min(ids.len());
    let mut best = (Vec::new(), 0);
    rec(
        oracle,
        ids,
        k,
        0,
        &mut Vec::new(),
        &Bitset::new(oracle.element_count()),
        &mut best,
    );
    if best.0.is_empty() {
        best.0 = ids[..k].to_vec();
    }
    (best.0, best.1 as f64 / oracle.element_count() as f64)
}
