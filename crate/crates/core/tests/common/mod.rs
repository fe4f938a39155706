//! Shared fixtures and brute-force references for the integration tests.
#![allow(dead_code)]

use cover::candidates::{evaluate_all, gen_candidates, CandidateSet, FilterConfig, GridConfig};
use cover::curator::{CuratorConfig, EarlyStop};
use cover::scene::{gen_room_scene, Bvh, RoomSpec, SceneFamily, TriMesh};
use cover::Vec3;

pub struct Fixture {
    pub mesh: TriMesh,
    pub bvh: Bvh,
    pub cands: CandidateSet,
}

pub fn fixture(spec: &RoomSpec, seed: u64) -> Fixture {
    let mesh = gen_room_scene(spec, seed).unwrap();
    let bb = mesh.aabb();
    let bvh = Bvh::build(&mesh);
    let pos = gen_candidates(bb, &GridConfig::default(), bb.extent().y).unwrap();
    let cands = evaluate_all(&bvh, &pos, bb.extent().y, &FilterConfig::default());
    Fixture { mesh, bvh, cands }
}

pub fn family(fam: SceneFamily, index: u64) -> Fixture {
    let (spec, seed) = fam.member(index);
    fixture(&spec, seed)
}

/// Fixed positions instead of the grid, all feasible.
pub fn fixed(spec: &RoomSpec, positions: &[Vec3]) -> Fixture {
    let mesh = gen_room_scene(spec, 0).unwrap();
    let bvh = Bvh::build(&mesh);
    Fixture {
        mesh,
        bvh,
        cands: CandidateSet::from_positions(positions),
    }
}

/// Frames at probe resolution keep the tests fast.
pub fn fast_cfg(k: usize) -> CuratorConfig {
    CuratorConfig {
        k,
        frame_w: 256,
        frame_h: 128,
        stride: 1,
        ..Default::default()
    }
}

pub fn fixed_budget(k: usize) -> CuratorConfig {
    CuratorConfig {
        early_stop: EarlyStop {
            enabled: false,
            ..Default::default()
        },
        ..fast_cfg(k)
    }
}

/// Ray/triangle distance via the supporting plane and edge sign tests.
pub fn ray_triangle(origin: Vec3, dir: Vec3, [a, b, c]: [Vec3; 3]) -> Option<f64> {
    let n = (b - a).cross(c - a);
    let denom = n.dot(dir);
    if denom.abs() < 1e-14 {
        return None;
    }
    let t = n.dot(a - origin) / denom;
    if !(t > 1e-4) {
        return None;
    }
    let p = origin + dir * t;
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|&(x, y)| (y - x).cross(p - x).dot(n) >= 0.0);
    inside.then_some(t)
}

/// Nearest hit over every triangle, no acceleration structure.
pub fn brute_raycast(mesh: &TriMesh, origin: Vec3, dir: Vec3) -> Option<f64> {
    (0..mesh.triangle_count())
        .filter_map(|t| ray_triangle(origin, dir, mesh.corners(t)))
        .min_by(f64::total_cmp)
}

/// Front-facing and unobstructed, checked against every triangle.
pub fn brute_visible(mesh: &TriMesh, v: Vec3, p: Vec3, n: Vec3) -> bool {
    let to = p - v;
    let dist = to.norm();
    if n.dot(v - p) <= 0.0 {
        return false;
    }
    let dir = to / dist;
    (0..mesh.triangle_count()).all(|t| {
        ray_triangle(v, dir, mesh.corners(t)).map_or(true, |h| h >= dist - 1e-4)
    })
}
