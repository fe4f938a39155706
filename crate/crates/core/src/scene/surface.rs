//! Discretization of the observable surface into area-weighted sample
//! elements.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scene::TriMesh;
use crate::Vec3;

#[derive(Debug, Clone, Default)]
pub struct SurfaceElements {
    pub points: Vec<Vec3>,
    /// Surface area represented by each point, m².
    pub weights: Vec<f64>,
    pub normals: Vec<Vec3>,
    pub triangle_ids: Vec<u32>,
}

impl SurfaceElements {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// 0.1 m up to a 10 m scene diagonal, then proportional to the diagonal.
pub fn default_spacing(aabb_diagonal: f64) -> f64 {
    0.1 * (aabb_diagonal / 10.0).max(1.0)
}

/// Stratified per-triangle sampling with an expected density of one point
/// per `spacing²` and at least one point per triangle. Weights split each
/// triangle's area evenly, so they sum to the mesh area.
pub fn discretize_surface(mesh: &TriMesh, spacing: f64, seed: u64) -> SurfaceElements {
    assert!(spacing > 0.0, "spacing must be positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = SurfaceElements::default();
    let cell_area = spacing * spacing;
    let mut cells: Vec<usize> = Vec::new();
    for tri in 0..mesh.triangle_count() {
        let area = mesh.area(tri);
        let expected = area / cell_area;
        let mut n = expected.floor() as usize;
        if rng.gen::<f64>() < expected - expected.floor() {
            n += 1;
        }
        let n = n.max(1);
        let k = (n as f64).sqrt().ceil() as usize;
        cells.clear();
        cells.extend(0..k * k);
        let (chosen, _) = cells.partial_shuffle(&mut rng, n);
        let [a, b, c] = mesh.corners(tri);
        let normal = mesh.normal(tri);
        let weight = area / n as f64;
        for &cell in chosen.iter() {
            let (ci, cj) = (cell % k, cell / k);
            let r1 = (ci as f64 + rng.gen::<f64>()) / k as f64;
            let r2 = (cj as f64 + rng.gen::<f64>()) / k as f64;
            // Area-preserving square-to-triangle map.
            let s = r1.sqrt();
            let p = a * (1.0 - s) + b * (s * (1.0 - r2)) + c * (s * r2);
            out.points.push(p);
            out.weights.push(weight);
            out.normals.push(normal);
            out.triangle_ids.push(tri as u32);
        }
    }
    out
}
