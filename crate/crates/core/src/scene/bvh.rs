//! Bounding volume hierarchy over a triangle mesh.

use crate::scene::TriMesh;
use crate::{Aabb, Vec3};

/// Hits closer than this are ignored so rays leaving a surface do not
/// re-hit it.
pub const T_MIN: f64 = 1e-4;

const LEAF_SIZE: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RayHit {
    pub t: f64,
    pub triangle_id: u32,
    pub point: Vec3,
}

#[derive(Debug, Clone, Copy)]
struct Node {
    bounds: Aabb,
    /// First primitive for leaves, left child otherwise (right = left + 1).
    first: u32,
    count: u32,
}

#[derive(Debug, Clone, Copy)]
struct Prim {
    v0: Vec3,
    e1: Vec3,
    e2: Vec3,
    id: u32,
}

#[derive(Debug, Clone)]
pub struct Bvh {
    nodes: Vec<Node>,
    prims: Vec<Prim>,
    normals: Vec<Vec3>,
}

impl Bvh {
    pub fn build(mesh: &TriMesh) -> Self {
        let n = mesh.triangle_count();
        assert!(n > 0, "BVH needs at least one triangle");
        let mut order: Vec<u32> = (0..n as u32).collect();
        let boxes: Vec<Aabb> = (0..n).map(|t| Aabb::from_points(mesh.corners(t))).collect();
        let centroids: Vec<Vec3> = boxes.iter().map(|b| b.centre()).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF_SIZE + 1);
        nodes.push(Node {
            bounds: Aabb::empty(),
            first: 0,
            count: 0,
        });
        let mut stack = vec![(0usize, 0usize, n)];
        while let Some((node, start, end)) = stack.pop() {
            let slice = &mut order[start..end];
            let bounds = slice
                .iter()
                .fold(Aabb::empty(), |b, &t| b.union(boxes[t as usize]));
            nodes[node].bounds = bounds;
            if slice.len() <= LEAF_SIZE {
                nodes[node].first = start as u32;
                nodes[node].count = slice.len() as u32;
                continue;
            }
            let cbounds = Aabb::from_points(slice.iter().map(|&t| centroids[t as usize]));
            let axis = cbounds.longest_axis();
            let mid = slice.len() / 2;
            slice.select_nth_unstable_by(mid, |&a, &b| {
                centroids[a as usize][axis]
                    .total_cmp(&centroids[b as usize][axis])
                    .then(a.cmp(&b))
            });
            let left = nodes.len();
            nodes.push(Node {
                bounds: Aabb::empty(),
                first: 0,
                count: 0,
            });
            nodes.push(Node {
                bounds: Aabb::empty(),
                first: 0,
                count: 0,
            });
            nodes[node].first = left as u32;
            nodes[node].count = 0;
            stack.push((left, start, start + mid));
            stack.push((left + 1, start + mid, end));
        }
        let prims = order
            .iter()
            .map(|&t| {
                let [a, b, c] = mesh.corners(t as usize);
                Prim {
                    v0: a,
                    e1: b - a,
                    e2: c - a,
                    id: t,
                }
            })
            .collect();
        let normals = (0..n).map(|t| mesh.normal(t)).collect();
        Bvh {
            nodes,
            prims,
            normals,
        }
    }

    pub fn bounds(&self) -> Aabb {
        self.nodes[0].bounds
    }

    pub fn triangle_count(&self) -> usize {
        self.prims.len()
    }

    /// Unit geometric normal of the original mesh triangle.
    pub fn normal(&self, triangle_id: u32) -> Vec3 {
        self.normals[triangle_id as usize]
    }

    /// Nearest hit with `t > T_MIN` along a unit-length direction.
    pub fn raycast(&self, origin: Vec3, dir: Vec3) -> Option<RayHit> {
        self.raycast_within(origin, dir, f64::INFINITY)
    }

    /// Nearest hit with `T_MIN < t < t_max`.
    pub fn raycast_within(&self, origin: Vec3, dir: Vec3, t_max: f64) -> Option<RayHit> {
        let inv = Vec3::new(1.0 / dir.x, 1.0 / dir.y, 1.0 / dir.z);
        let mut best_t = t_max;
        let mut best_id = u32::MAX;
        let mut stack = [0u32; 64];
        let mut sp = 0usize;
        if self.nodes[0]
            .bounds
            .ray_entry(origin, inv, T_MIN, best_t)
            .is_none()
        {
            return None;
        }
        stack[sp] = 0;
        sp += 1;
        while sp > 0 {
            sp -= 1;
            let node = self.nodes[stack[sp] as usize];
            if node.count > 0 {
                let first = node.first as usize;
                for prim in &self.prims[first..first + node.count as usize] {
                    if let Some(t) = intersect(prim, origin, dir) {
                        // Ties go to the lower triangle id so results do not
                        // depend on tree layout.
                        if t < best_t || (t == best_t && best_id != u32::MAX && prim.id < best_id) {
                            best_t = t;
                            best_id = prim.id;
                        }
                    }
                }
                continue;
            }
            let l = node.first as usize;
            let r = l + 1;
            let tl = self.nodes[l].bounds.ray_entry(origin, inv, T_MIN, best_t);
            let tr = self.nodes[r].bounds.ray_entry(origin, inv, T_MIN, best_t);
            match (tl, tr) {
                (Some(a), Some(b)) => {
                    // Near child on top of the stack.
                    let (near, far) = if a <= b { (l, r) } else { (r, l) };
                    stack[sp] = far as u32;
                    stack[sp + 1] = near as u32;
                    sp += 2;
                }
                (Some(_), None) => {
                    stack[sp] = l as u32;
                    sp += 1;
                }
                (None, Some(_)) => {
                    stack[sp] = r as u32;
                    sp += 1;
                }
                (None, None) => {}
            }
        }
        (best_id != u32::MAX).then(|| RayHit {
            t: best_t,
            triangle_id: best_id,
            point: origin + dir * best_t,
        })
    }

    #[cfg(test)]
    fn check_structure(&self) {
        let mut seen = vec![0u32; self.prims.len()];
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = self.nodes[i];
            if node.count > 0 {
                for p in &self.prims[node.first as usize..(node.first + node.count) as usize] {
                    seen[p.id as usize] += 1;
                    for v in [p.v0, p.v0 + p.e1, p.v0 + p.e2] {
                        assert!(node.bounds.contains(v));
                    }
                }
            } else {
                for c in [node.first as usize, node.first as usize + 1] {
                    assert!(node.bounds.contains_box(self.nodes[c].bounds));
                    stack.push(c);
                }
            }
        }
        assert!(
            seen.iter().all(|&c| c == 1),
            "every triangle in exactly one leaf"
        );
    }
}

/// Möller–Trumbore.
#[inline]
fn intersect(p: &Prim, origin: Vec3, dir: Vec3) -> Option<f64> {
    let pvec = dir.cross(p.e2);
    let det = p.e1.dot(pvec);
    if det.abs() < 1e-14 {
        return None;
    }
    let inv_det = 1.0 / det;
    let tvec = origin - p.v0;
    let u = tvec.dot(pvec) * inv_det;
    if !(0.0..=1.0).contains(&u) {
        return None;
    }
    let qvec = tvec.cross(p.e1);
    let v = dir.dot(qvec) * inv_det;
    if v < 0.0 || u + v > 1.0 {
        return None;
    }
    let t = p.e2.dot(qvec) * inv_det;
    (t > T_MIN).then_some(t)
}
