mod common;

use std::sync::OnceLock;

use common::brute_raycast;
use cover::scene::{discretize_surface, gen_room_scene, load_mesh, save_mesh, Bvh, RoomSpec, SceneFamily, TriMesh};
use cover::Vec3;
use proptest::prelude::*;

fn scenes() -> &'static Vec<(TriMesh, Bvh)> {
    static S: OnceLock<Vec<(TriMesh, Bvh)>> = OnceLock::new();
    S.get_or_init(|| {
        SceneFamily::ALL
            .iter()
            .map(|f| {
                let (spec, seed) = f.member(1);
                let mesh = gen_room_scene(&spec, seed).unwrap();
                let bvh = Bvh::build(&mesh);
                (mesh, bvh)
            })
            .collect()
    })
}

fn direction() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-1.0..1.0f64)
        .prop_filter("non-zero", |d| d.iter().map(|c| c * c).sum::<f64>() > 1e-4)
        .prop_map(|d| Vec3::from_array(d).normalize())
}

fn point_triangle_distance(p: Vec3, [a, b, c]: [Vec3; 3]) -> f64 {
    let n = (b - a).cross(c - a).normalize();
    let q = p - n * (p - a).dot(n);
    let inside = [(a, b), (b, c), (c, a)]
        .iter()
        .all(|&(s, e)| (e - s).cross(q - s).dot(n) >= -1e-12);
    if inside {
        return (p - q).norm();
    }
    [(a, b), (b, c), (c, a)]
        .iter()
        .map(|&(s, e)| {
            let t = ((p - s).dot(e - s) / (e - s).norm_squared()).clamp(0.0, 1.0);
            (p - (s + (e - s) * t)).norm()
        })
        .fold(f64::INFINITY, f64::min)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn bvh_agrees_with_brute_force(
        scene in 0usize..4,
        f in prop::array::uniform3(0.02..0.98f64),
        dir in direction(),
    ) {
        let (mesh, bvh) = &scenes()[scene];
        let bb = mesh.aabb();
        let e = bb.extent();
        let origin = bb.min + Vec3::new(e.x * f[0], e.y * f[1], e.z * f[2]);
        let hit = bvh.raycast(origin, dir);
        let brute = brute_raycast(mesh, origin, dir);
        match (hit, brute) {
            (Some(h), Some(t)) => {
                prop_assert!((h.t - t).abs() < 1e-9, "{} vs {}", h.t, t);
                prop_assert!(h.t > 0.0);
                prop_assert!((h.point - (origin + dir * h.t)).norm() < 1e-6);
                let tri = mesh.corners(h.triangle_id as usize);
                prop_assert!(point_triangle_distance(h.point, tri) < 1e-6);
            }
            (None, None) => {}
            (h, b) => prop_assert!(false, "bvh {:?} vs brute {:?}", h, b),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn surface_elements_partition_the_area(
        w in 2.0..8.0f64,
        d in 2.0..8.0f64,
        h in 2.2..3.5f64,
        spacing in 0.08..0.4f64,
        seed in 0u64..1000,
    ) {
        let mesh = gen_room_scene(&RoomSpec::empty(w, d, h), seed).unwrap();
        let els = discretize_surface(&mesh, spacing, seed);
        let area = mesh.total_area();
        prop_assert!((els.total_weight() - area).abs() <= 1e-3 * area);
        prop_assert!(els.weights.iter().all(|&x| x > 0.0));
        for i in 0..els.len() {
            let t = els.triangle_ids[i] as usize;
            prop_assert!(point_triangle_distance(els.points[i], mesh.corners(t)) < 1e-6);
            prop_assert!((els.normals[i] - mesh.normal(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn mesh_files_round_trip(
        verts in prop::collection::vec(prop::array::uniform3(-1e3..1e3f64), 3..20),
        tris in prop::collection::vec((prop::array::uniform3(0u32..20), prop::array::uniform3(any::<u8>())), 1..30),
    ) {
        let n = verts.len() as u32;
        let (idx, cols): (Vec<_>, Vec<_>) = tris.into_iter().map(|(t, c)| (t.map(|i| i % n), c)).unzip();
        let Ok((mesh, _)) = TriMesh::new(verts.into_iter().map(Vec3::from_array).collect(), idx, cols) else {
            return Ok(());
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mesh");
        save_mesh(&mesh, &path).unwrap();
        let (back, dropped) = load_mesh(&path).unwrap();
        prop_assert_eq!(dropped, 0);
        prop_assert_eq!(back, mesh);
    }
}

#[test]
fn room_shells_face_inward() {
    for (mesh, bvh) in scenes() {
        let c = mesh.aabb().centre();
        let mut front = 0;
        let mut total = 0;
        for i in 0..64 {
            let a = i as f64 * 0.618 * std::f64::consts::TAU;
            let z = 1.0 - 2.0 * (i as f64 + 0.5) / 64.0;
            let r = (1.0 - z * z).sqrt();
            let dir = Vec3::new(r * a.cos(), z, r * a.sin());
            if let Some(hit) = bvh.raycast(c, dir) {
                total += 1;
                front += (bvh.normal(hit.triangle_id).dot(dir) < 0.0) as usize;
            }
        }
        assert_eq!(front, total);
        assert!(total > 0);
    }
}
