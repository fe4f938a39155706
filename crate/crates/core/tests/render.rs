mod common;

use std::sync::OnceLock;

use common::{brute_raycast, family, Fixture};
use cover::geom::pixel_centre_dir;
use cover::render::{render_depth, unproject, warp_cloud, PointCloud};
use cover::scene::SceneFamily;
use cover::{PoseWC, Vec3};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;

fn room() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| family(SceneFamily::Cluttered, 0))
}

fn feasible_pose(pick: usize) -> PoseWC {
    let ids = room().cands.feasible_ids();
    PoseWC::level(room().cands.get(ids[pick % ids.len()]).position)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn warp_is_invariant_to_point_order(src in any::<usize>(), dst in any::<usize>(), seed in any::<u64>()) {
        let depth = render_depth(&room().bvh, &feasible_pose(src), 128, 64);
        let cloud = unproject(&depth, &feasible_pose(src), 1);
        let mut shuffled = cloud.clone();
        shuffled.points.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let target = feasible_pose(dst);
        let a = warp_cloud(&cloud, &target, 128, 64, 1);
        let b = warp_cloud(&shuffled, &target, 128, 64, 1);
        prop_assert_eq!(&a, &b);
        for (m, d) in a.mask.iter().zip(&a.depth.data) {
            prop_assert_eq!(*m, *d > 0.0);
        }
    }

    #[test]
    fn rendered_depth_is_the_first_hit(pick in any::<usize>(), col in 0usize..64, row in 0usize..32) {
        let pose = feasible_pose(pick);
        let depth = render_depth(&room().bvh, &pose, 64, 32);
        let dir = pose.dir_to_world(pixel_centre_dir(col, row, 64, 32));
        let t = brute_raycast(&room().mesh, pose.position, dir).unwrap_or(0.0);
        prop_assert!((depth.get(col, row) as f64 - t).abs() <= 1e-5 * (1.0 + t));
    }

    #[test]
    fn stride_subsamples_the_valid_pixels(pick in any::<usize>(), stride in 1usize..6) {
        let pose = feasible_pose(pick);
        let depth = render_depth(&room().bvh, &pose, 96, 48);
        let cloud = unproject(&depth, &pose, stride);
        let expected = (0..48)
            .step_by(stride)
            .flat_map(|r| (0..96).step_by(stride).map(move |c| (c, r)))
            .filter(|&(c, r)| depth.get(c, r) > 0.0)
            .count();
        prop_assert_eq!(cloud.len(), expected);
        // Every unprojected point sits at its stored range from the centre.
        for p in &cloud.points {
            let r = (*p - pose.position).norm();
            prop_assert!(r > 0.0 && r.is_finite());
        }
    }
}

#[test]
fn self_warp_reproduces_the_rendered_depth() {
    for pick in [0, 7, 31] {
        let pose = feasible_pose(pick);
        let depth = render_depth(&room().bvh, &pose, 128, 64);
        let warp = warp_cloud(&unproject(&depth, &pose, 1), &pose, 128, 64, 1);
        for (i, &d) in depth.data.iter().enumerate() {
            if d > 0.0 {
                assert!(warp.mask[i]);
                assert!((warp.depth.data[i] - d).abs() <= 1e-4 * d.max(1.0), "{i}");
            }
        }
    }
}

#[test]
fn single_point_lands_in_its_pixel() {
    let pose = PoseWC::level(Vec3::zero());
    // World -Z is camera forward, the centre of the image.
    let cloud = PointCloud { points: vec![Vec3::new(0.0, 0.0, -2.0)] };
    let w = warp_cloud(&cloud, &pose, 64, 32, 0);
    assert_eq!(w.masked_count(), 1);
    let i = w.mask.iter().position(|&m| m).unwrap();
    assert_eq!((i % 64, i / 64), (32, 16));
    assert!((w.depth.data[i] - 2.0).abs() < 1e-6);

    let w = warp_cloud(&cloud, &pose, 64, 32, 1);
    assert_eq!(w.masked_count(), 9);
}
