//! ERP rendering, depth unprojection and z-buffered point-cloud warping.

use rayon::prelude::*;

use crate::geom::pixel_centre_dir;
use crate::scene::Bvh;
use crate::{PoseWC, Vec3};

/// Row-major `width × height` ERP buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct ErpImage<P> {
    pub width: usize,
    pub height: usize,
    pub data: Vec<P>,
}

/// Range depth in metres, `0` where the ray hit nothing.
pub type DepthImage = ErpImage<f32>;
pub type RgbImage = ErpImage<[u8; 3]>;

impl<P: Copy> ErpImage<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        ErpImage {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn get(&self, col: usize, row: usize) -> P {
        self.data[row * self.width + col]
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}

impl DepthImage {
    pub fn valid_count(&self) -> usize {
        self.data.iter().filter(|&&d| d > 0.0).count()
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Vec3>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn extend(&mut self, other: &PointCloud) {
        self.points.extend_from_slice(&other.points);
    }
}

/// History pixels `H_v` and their predicted depth.
#[derive(Debug, Clone, PartialEq)]
pub struct WarpResult {
    pub mask: Vec<bool>,
    pub depth: DepthImage,
}

impl WarpResult {
    pub fn masked_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }
}

/// Range depth only; the probe path.
pub fn render_depth(bvh: &Bvh, pose: &PoseWC, width: usize, height: usize) -> DepthImage {
    let data = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let d_world =
                pose.dir_to_world(pixel_centre_dir::<f64>(i % width, i / width, width, height));
            bvh.raycast(pose.position, d_world)
                .map_or(0.0, |hit| hit.t as f32)
        })
        .collect();
    ErpImage {
        width,
        height,
        data,
    }
}

/// Renders range depth and flat-shaded colour: face colour scaled by
/// `|n·d|`.
pub fn render_erp(
    bvh: &Bvh,
    face_colors: &[[u8; 3]],
    pose: &PoseWC,
    width: usize,
    height: usize,
) -> (DepthImage, RgbImage) {
    let pixels: Vec<(f32, [u8; 3])> = (0..width * height)
        .into_par_iter()
        .map(|i| {
            let d_world =
                pose.dir_to_world(pixel_centre_dir::<f64>(i % width, i / width, width, height));
            match bvh.raycast(pose.position, d_world) {
                Some(hit) => {
                    let shade = bvh.normal(hit.triangle_id).dot(d_world).abs();
                    let base = face_colors[hit.triangle_id as usize];
                    (
                        hit.t as f32,
                        base.map(|c| (c as f64 * shade).round().clamp(0.0, 255.0) as u8),
                    )
                }
                None => (0.0, [0, 0, 0]),
            }
        })
        .collect();
    let (depth, rgb) = pixels.into_iter().unzip();
    (
        ErpImage {
            width,
            height,
            data: depth,
        },
        ErpImage {
            width,
            height,
            data: rgb,
        },
    )
}

/// World points for every valid pixel on the `stride` grid.
pub fn unproject(depth: &DepthImage, pose: &PoseWC, stride: usize) -> PointCloud {
    assert!(stride >= 1);
    let (w, h) = (depth.width, depth.height);
    let mut points = Vec::new();
    for row in (0..h).step_by(stride) {
        for col in (0..w).step_by(stride) {
            let r = depth.get(col, row);
            if r > 0.0 {
                let d = pixel_centre_dir::<f64>(col, row, w, h);
                points.push(pose.camera_to_world(d * r as f64));
            }
        }
    }
    PointCloud { points }
}

/// Incrementally maintained warp of a growing cloud into one ERP frame.
///
/// `direct` holds, per pixel, the nearest range of the points projecting
/// into it. A pixel's history depth is its `direct` value when present;
/// otherwise the nearest `direct` value within `splat_radius` pixels (rows
/// clipped, columns wrapping). This equals splatting every point over a
/// `(2r+1)²` footprint into a separate fill buffer, so splats only close
/// holes and never override a direct sample.
///
/// The buffer is a pixelwise minimum, so warping `A ∪ B` equals combining
/// the warps of `A` and `B`; feeding the cloud in chunks gives the same
/// result as [`warp_cloud`] on the whole cloud.
#[derive(Debug, Clone)]
pub struct WarpBuffer {
    pose: PoseWC,
    rot: [[f64; 3]; 3],
    width: usize,
    height: usize,
    radius: usize,
    direct: Vec<f32>,
}

const PROJECT_BATCH: usize = 256;

thread_local! {
    static HORIZ_SCRATCH: std::cell::RefCell<Vec<f32>> = const { std::cell::RefCell::new(Vec::new()) };
}

impl WarpBuffer {
    pub fn new(pose: PoseWC, width: usize, height: usize, splat_radius: usize) -> Self {
        assert!(
            2 * splat_radius < width,
            "splat footprint must be narrower than the image"
        );
        WarpBuffer {
            pose,
            rot: pose.rotation.to_matrix(),
            width,
            height,
            radius: splat_radius,
            direct: vec![f32::INFINITY; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pose(&self) -> &PoseWC {
        &self.pose
    }

    /// Projects a batch to pixel indices (`u32::MAX` for points at the
    /// camera centre) and ranges. Branch-free so it vectorizes; angles use
    /// [`fast_atan2`], which can only move points lying within ~1e-3 px of a
    /// pixel edge.
    fn project_batch(
        &self,
        points: &[Vec3],
        idx: &mut [u32; PROJECT_BATCH],
        range: &mut [f32; PROJECT_BATCH],
    ) {
        use std::f32::consts::FRAC_1_PI;
        let m = self.rot.map(|row| row.map(|v| v as f32));
        let c = self.pose.position;
        let n = points.len();
        // Structure-of-arrays staging so the main loop vectorizes.
        let mut qx = [0f32; PROJECT_BATCH];
        let mut qy = [0f32; PROJECT_BATCH];
        let mut qz = [0f32; PROJECT_BATCH];
        for (i, p) in points.iter().enumerate() {
            qx[i] = (p.x - c.x) as f32;
            qy[i] = (p.y - c.y) as f32;
            qz[i] = (p.z - c.z) as f32;
        }
        // Separate passes: fused, the loop stays scalar and the sign
        // selects in `fast_atan2` turn into mispredicted branches.
        let mut x = [0f32; PROJECT_BATCH];
        let mut y = [0f32; PROJECT_BATCH];
        let mut z = [0f32; PROJECT_BATCH];
        for i in 0..PROJECT_BATCH {
            let (px, py, pz) = (qx[i], qy[i], qz[i]);
            x[i] = m[0][0] * px + m[0][1] * py + m[0][2] * pz;
            y[i] = m[1][0] * px + m[1][1] * py + m[1][2] * pz;
            z[i] = m[2][0] * px + m[2][1] * py + m[2][2] * pz;
        }
        let mut lat = [0f32; PROJECT_BATCH];
        let mut lon = [0f32; PROJECT_BATCH];
        for i in 0..PROJECT_BATCH {
            let planar = (x[i] * x[i] + z[i] * z[i]).sqrt();
            lat[i] = fast_atan2(-y[i], planar);
            lon[i] = fast_atan2(x[i], z[i]);
        }
        let (w, h) = (self.width as f32, self.height as f32);
        let (wi, hi) = (self.width as i32, self.height as i32);
        let mut cols = [0i32; PROJECT_BATCH];
        let mut rows = [0i32; PROJECT_BATCH];
        let mut miss = [0u32; PROJECT_BATCH];
        for i in 0..PROJECT_BATCH {
            let planar2 = x[i] * x[i] + z[i] * z[i];
            let range2 = planar2 + y[i] * y[i];
            let v = (0.5 - lat[i] * FRAC_1_PI) * h;
            let pole = planar2 <= 1e-14 * range2;
            let u = if pole {
                0.5 * w
            } else {
                (lon[i] * (0.5 * FRAC_1_PI) + 0.5) * w
            };
            // SAFETY: `max` maps NaN to 0, so both values are finite and
            // within [0, w] / [0, h]. The checked `as` cast does not
            // vectorize.
            cols[i] = unsafe { u.max(0.0).min(w).to_int_unchecked::<i32>() };
            rows[i] = unsafe { v.max(0.0).min(h).to_int_unchecked::<i32>() };
            miss[i] = if range2 > 1e-18 { 0 } else { u32::MAX };
            range[i] = range2.sqrt();
        }
        for i in 0..PROJECT_BATCH {
            let col = if cols[i] >= wi { cols[i] - wi } else { cols[i] };
            let row = rows[i].min(hi - 1);
            idx[i] = ((row * wi + col) as u32) | miss[i];
        }
        for slot in &mut idx[n..] {
            *slot = u32::MAX;
        }
    }

    pub fn add_points(&mut self, points: &[Vec3]) {
        let mut idx = [0u32; PROJECT_BATCH];
        let mut range = [0f32; PROJECT_BATCH];
        for chunk in points.chunks(PROJECT_BATCH) {
            let n = chunk.len();
            self.project_batch(chunk, &mut idx, &mut range);
            for (&i, &z) in idx[..n].iter().zip(&range[..n]) {
                if let Some(slot) = self.direct.get_mut(i as usize) {
                    *slot = slot.min(z);
                }
            }
        }
    }

    /// History depth of pixel `i`, if any point landed on or near it.
    #[inline]
    pub fn depth_at(&self, i: usize) -> Option<f32> {
        let d = self.direct[i];
        if d.is_finite() {
            return Some(d);
        }
        let (w, r) = (self.width, self.radius);
        if r == 0 {
            return None;
        }
        let (row, col) = (i / w, i % w);
        let mut best = f32::INFINITY;
        for rr in row.saturating_sub(r)..(row + r + 1).min(self.height) {
            let line = &self.direct[rr * w..(rr + 1) * w];
            if col >= r && col + r < w {
                for &v in &line[col - r..=col + r] {
                    best = best.min(v);
                }
            } else {
                for dc in 0..=2 * r {
                    best = best.min(line[(col + w + dc - r) % w]);
                }
            }
        }
        best.is_finite().then_some(best)
    }

    /// Dense history depths, `INFINITY` where none; same values as
    /// [`Self::depth_at`]. Uses a separable min filter, which may include the
    /// centre: that only matters where `direct` is empty, i.e. infinite.
    pub fn history_into(&self, out: &mut Vec<f32>) {
        let (w, h, r) = (self.width, self.height, self.radius);
        out.clear();
        out.extend_from_slice(&self.direct);
        if r == 0 {
            return;
        }
        HORIZ_SCRATCH.with(|cell| {
            let mut horiz = cell.borrow_mut();
            horiz.clear();
            horiz.resize(w * h, f32::INFINITY);
            for row in 0..h {
                let src = &self.direct[row * w..(row + 1) * w];
                let dst = &mut horiz[row * w..(row + 1) * w];
                dst.copy_from_slice(src);
                // Shifted-slice minima, columns wrapping.
                for k in 1..=r {
                    for (d, (&a, &b)) in dst[k..w - k].iter_mut().zip(src[..w - 2 * k].iter().zip(&src[2 * k..])) {
                        *d = d.min(a.min(b));
                    }
                    for col in (0..k).chain(w - k..w) {
                        let m = src[(col + w - k) % w].min(src[(col + k) % w]);
                        dst[col] = dst[col].min(m);
                    }
                }
            }
            let mut col_min = vec![f32::INFINITY; w];
            for row in 0..h {
                col_min.fill(f32::INFINITY);
                for rr in row.saturating_sub(r)..(row + r + 1).min(h) {
                    for (m, &v) in col_min.iter_mut().zip(&horiz[rr * w..(rr + 1) * w]) {
                        *m = m.min(v);
                    }
                }
                // Direct samples stay; only empty pixels take the filter.
                for (o, &m) in out[row * w..(row + 1) * w].iter_mut().zip(&col_min) {
                    *o = if o.is_finite() { *o } else { m };
                }
            }
        });
    }

    pub fn result(&self) -> WarpResult {
        let mut hist = Vec::new();
        self.history_into(&mut hist);
        WarpResult {
            mask: hist.iter().map(|d| d.is_finite()).collect(),
            depth: ErpImage {
                width: self.width,
                height: self.height,
                data: hist
                    .iter()
                    .map(|&d| if d.is_finite() { d } else { 0.0 })
                    .collect(),
            },
        }
    }
}

/// `atan2` via a minimax polynomial on `[0, 1]`; absolute error below
/// 2e-5 rad. Written without branches so batch loops vectorize.
#[inline(always)]
pub fn fast_atan2(y: f32, x: f32) -> f32 {
    use std::f32::consts::{FRAC_PI_2, PI};
    let (ax, ay) = (x.abs(), y.abs());
    let lo = ax.min(ay);
    let hi = ax.max(ay);
    let a = if hi > 0.0 { lo / hi } else { 0.0 };
    let s = a * a;
    let r = ((((0.0208351 * s - 0.085133) * s + 0.180141) * s - 0.3302995) * s + 0.999866) * a;
    let r = if ay > ax { FRAC_PI_2 - r } else { r };
    let r = if x < 0.0 { PI - r } else { r };
    if y < 0.0 {
        -r
    } else {
        r
    }
}

/// Splats every cloud point into the ERP frame of `pose` with a
/// `(2·splat_radius+1)²` footprint; see [`WarpBuffer`] for the depth rule.
pub fn warp_cloud(
    cloud: &PointCloud,
    pose: &PoseWC,
    width: usize,
    height: usize,
    splat_radius: usize,
) -> WarpResult {
    let mut buf = WarpBuffer::new(*pose, width, height, splat_radius);
    buf.add_points(&cloud.points);
    buf.result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::gen::{gen_room_scene, RoomSpec};
    use crate::scene::TriMesh;
    use rand::seq::SliceRandom;
    use rand::SeedableRng;

    fn cube_bvh() -> Bvh {
        let mesh = gen_room_scene(&RoomSpec::empty(2.0, 2.0, 2.0), 0).unwrap();
        Bvh::build(&mesh)
    }

    fn point_triangle_distance(p: Vec3, [a, b, c]: [Vec3; 3]) -> f64 {
        // Closest point by projecting onto the plane and clamping to edges.
        let n = (b - a).cross(c - a).normalize();
        let q = p - n * (p - a).dot(n);
        let inside = [(a, b), (b, c), (c, a)]
            .iter()
            .all(|&(x, y)| (y - x).cross(q - x).dot(n) >= 0.0);
        if inside {
            return (p - q).norm();
        }
        [(a, b), (b, c), (c, a)]
            .iter()
            .map(|&(x, y)| {
                let t = ((p - x).dot(y - x) / (y - x).norm_squared()).clamp(0.0, 1.0);
                (p - (x + (y - x) * t)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn cube_centre_depth_bounds() {
        let bvh = cube_bvh();
        let pose = PoseWC::level(Vec3::splat(1.0));
        for (w, h) in [(64, 32), (128, 64)] {
            let depth = render_depth(&bvh, &pose, w, h);
            for &d in &depth.data {
                assert!((1.0 - 1e-6..=3f32.sqrt() + 1e-6).contains(&d), "{d}");
            }
            let equator_min = (0..w)
                .map(|c| depth.get(c, h / 2))
                .fold(f32::INFINITY, f32::min);
            // One pixel of latitude at the equator.
            let tol = 1.0 / (std::f64::consts::PI / h as f64).cos() - 1.0;
            assert!(
                (equator_min as f64 - 1.0).abs() <= tol + 1e-6,
                "{equator_min}"
            );
        }
    }

    #[test]
    fn outside_camera_sees_nothing_when_facing_away() {
        let bvh = cube_bvh();
        let pose = PoseWC::level(Vec3::new(20.0, 1.0, 1.0));
        let depth = render_depth(&bvh, &pose, 128, 64);
        let to_scene = (Vec3::splat(1.0) - pose.position).normalize();
        let mut hits = 0;
        for row in 0..64 {
            for col in 0..128 {
                let d = pose.dir_to_world(crate::geom::pixel_centre_dir(col, row, 128, 64));
                if d.dot(to_scene) <= 0.0 {
                    assert_eq!(depth.get(col, row), 0.0);
                }
                hits += (depth.get(col, row) > 0.0) as usize;
            }
        }
        assert!(hits > 0 && hits < 128 * 64 / 20);
    }

    #[test]
    fn range_not_z_depth_on_a_plane() {
        // Wall x = 3 spanning a large area.
        let v = |y: f64, z: f64| Vec3::new(3.0, y, z);
        let (mesh, _) = TriMesh::new(
            vec![
                v(-50.0, -50.0),
                v(50.0, -50.0),
                v(50.0, 50.0),
                v(-50.0, 50.0),
            ],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![[200; 3]; 2],
        )
        .unwrap();
        let bvh = Bvh::build(&mesh);
        let pose = PoseWC::level(Vec3::zero());
        let depth = render_depth(&bvh, &pose, 128, 64);
        let mut checked = 0;
        for row in 0..64 {
            for col in 0..128 {
                let d = pose.dir_to_world(crate::geom::pixel_centre_dir(col, row, 128, 64));
                let r = depth.get(col, row) as f64;
                if r > 0.0 {
                    let expected = 3.0 / d.x;
                    assert!(
                        (r - expected).abs() <= 1e-6 * expected.max(1.0),
                        "{r} vs {expected}"
                    );
                    checked += 1;
                }
            }
        }
        assert!(checked > 1000);
    }

    #[test]
    fn rgb_is_face_colour_scaled_by_cosine() {
        let mesh = gen_room_scene(&RoomSpec::empty(2.0, 2.0, 2.0), 0).unwrap();
        let bvh = Bvh::build(&mesh);
        let pose = PoseWC::level(Vec3::splat(1.0));
        let (_, rgb) = render_erp(&bvh, &mesh.face_colors, &pose, 64, 32);
        // Pixel looking straight at the -Z wall (camera forward): |cos| ~ 1.
        let px = rgb.get(32, 16);
        let wall = mesh.face_colors.iter().find(|c| {
            px.iter()
                .zip(c.iter())
                .all(|(&a, &b)| (a as i32 - b as i32).abs() <= 2)
        });
        assert!(wall.is_some(), "{px:?} not close to any face colour");
    }

    #[test]
    fn unproject_zero_depth_is_empty() {
        let depth = DepthImage::filled(32, 16, 0.0);
        assert!(unproject(&depth, &PoseWC::level(Vec3::zero()), 1).is_empty());
    }

    #[test]
    fn unprojected_points_lie_on_the_surface() {
        let mesh =
            gen_room_scene(&RoomSpec::empty(4.0, 3.0, 2.5).with_random_furniture(4), 8).unwrap();
        let bvh = Bvh::build(&mesh);
        let pose = PoseWC::level(Vec3::new(1.7, 1.3, 1.1));
        let depth = render_depth(&bvh, &pose, 128, 64);
        let cloud = unproject(&depth, &pose, 1);
        assert_eq!(cloud.len(), depth.valid_count());
        for p in cloud.points.iter().step_by(7) {
            let best = (0..mesh.triangle_count())
                .map(|t| point_triangle_distance(*p, mesh.corners(t)))
                .fold(f64::INFINITY, f64::min);
            assert!(best <= 1e-4, "{best}");
        }
        let quarter = unproject(&depth, &pose, 2).len() as f64 / cloud.len() as f64;
        assert!((quarter - 0.25).abs() < 0.02, "{quarter}");
    }

    #[test]
    fn empty_cloud_warps_to_empty_mask() {
        let r = warp_cloud(
            &PointCloud::default(),
            &PoseWC::level(Vec3::zero()),
            64,
            32,
            1,
        );
        assert_eq!(r.masked_count(), 0);
    }

    #[test]
    fn dense_history_matches_pointwise_lookup() {
        let mesh =
            gen_room_scene(&RoomSpec::empty(5.0, 4.0, 2.5).with_random_furniture(4), 3).unwrap();
        let bvh = Bvh::build(&mesh);
        let src = PoseWC::level(Vec3::new(2.0, 1.2, 2.0));
        let cloud = unproject(&render_depth(&bvh, &src, 128, 64), &src, 3);
        for radius in [0, 1, 2] {
            let mut buf = WarpBuffer::new(PoseWC::level(Vec3::new(3.1, 1.0, 1.4)), 64, 32, radius);
            buf.add_points(&cloud.points);
            let mut dense = Vec::new();
            buf.history_into(&mut dense);
            for (i, &d) in dense.iter().enumerate() {
                assert_eq!(
                    buf.depth_at(i),
                    d.is_finite().then_some(d),
                    "pixel {i} radius {radius}"
                );
            }
        }
    }

    #[test]
    fn fast_atan2_matches_std() {
        let mut worst = 0.0f32;
        for i in 0..2000 {
            let t = i as f32 / 2000.0 * std::f32::consts::TAU;
            for r in [1e-3f32, 1.0, 37.0] {
                let (y, x) = (r * t.sin(), r * t.cos());
                worst = worst.max((fast_atan2(y, x) - y.atan2(x)).abs());
            }
        }
        assert!(worst < 2e-5, "{worst}");
        assert_eq!(fast_atan2(0.0, 0.0), 0.0);
        assert_eq!(fast_atan2(0.0, 1.0), 0.0);
    }

    #[test]
    fn single_forward_point() {
        let pose = PoseWC::level(Vec3::new(0.5, 1.0, 0.5));
        // Camera forward is world -Z for a level pose.
        let p = pose.camera_to_world(Vec3::new(0.0, 0.0, 2.0));
        let r = warp_cloud(&PointCloud { points: vec![p] }, &pose, 256, 128, 1);
        assert_eq!(r.masked_count(), 9);
        for row in 63..=65 {
            for col in 127..=129 {
                assert!(r.mask[row * 256 + col]);
                assert!((r.depth.get(col, row) - 2.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn direct_samples_beat_nearer_splats() {
        let pose = PoseWC::level(Vec3::zero());
        let near = pose.camera_to_world(pixel_centre_dir::<f64>(100, 40, 256, 128) * 1.0);
        let far = pose.camera_to_world(pixel_centre_dir::<f64>(101, 40, 256, 128) * 3.0);
        let r = warp_cloud(
            &PointCloud {
                points: vec![near, far],
            },
            &pose,
            256,
            128,
            1,
        );
        assert!((r.depth.get(101, 40) - 3.0).abs() < 1e-6);
        assert!((r.depth.get(100, 40) - 1.0).abs() < 1e-6);
        assert!(
            (r.depth.get(99, 40) - 1.0).abs() < 1e-6,
            "near splat fills the hole"
        );
        assert!(
            (r.depth.get(102, 40) - 3.0).abs() < 1e-6,
            "far splat fills the hole"
        );
    }

    #[test]
    fn warp_is_order_invariant_and_composable() {
        let mesh =
            gen_room_scene(&RoomSpec::empty(5.0, 4.0, 2.6).with_random_furniture(5), 3).unwrap();
        let bvh = Bvh::build(&mesh);
        let a = PoseWC::level(Vec3::new(1.2, 1.0, 1.0));
        let b = PoseWC::level(Vec3::new(3.5, 1.6, 2.9));
        let mut cloud = unproject(&render_depth(&bvh, &a, 128, 64), &a, 1);
        cloud.extend(&unproject(&render_depth(&bvh, &b, 128, 64), &b, 2));
        let target = PoseWC::level(Vec3::new(2.5, 1.2, 2.0));
        let whole = warp_cloud(&cloud, &target, 128, 64, 1);

        let mut shuffled = cloud.clone();
        shuffled
            .points
            .shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(1));
        assert_eq!(warp_cloud(&shuffled, &target, 128, 64, 1), whole);

        let mut buf = WarpBuffer::new(target, 128, 64, 1);
        for chunk in cloud.points.chunks(777) {
            buf.add_points(chunk);
        }
        assert_eq!(buf.result(), whole);
    }
}
