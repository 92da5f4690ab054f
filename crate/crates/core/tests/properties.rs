mod common;

use common::*;
use lapt::bev::{pillar_sum_pool, unproject_features, FeatureMap, FeaturePointCloud};
use lapt::depth::rasterize_depth_par;
use lapt::eval::bce_loss;
use lapt::geometry::{LIDAR_FRAME, VEHICLE_FRAME};
use lapt::groundtruth::{rasterize_boxes, rasterize_polygons, Box3D, MapPolygon};
use lapt::*;
use nalgebra::{Rotation3, Vector3};
use proptest::prelude::*;

fn transform(angles: [f64; 3], t: [f64; 3], from: &str, to: &str) -> RigidTransform {
    let r = Rotation3::from_euler_angles(angles[0], angles[1], angles[2]).into_inner();
    RigidTransform::new(r, Vector3::from(t), from, to).unwrap()
}

fn angles() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-3.2f64..3.2)
}

fn offsets() -> impl Strategy<Value = [f64; 3]> {
    prop::array::uniform3(-20.0f64..20.0)
}

fn cloud(points: &[[f64; 3]], frame: &str) -> PointCloud {
    PointCloud::new(points.iter().map(|p| Point3::from(*p)).collect(), frame).unwrap()
}

fn projections() -> impl Strategy<Value = Vec<PixelProjection>> {
    prop::collection::vec((-1.0f64..17.0, -1.0f64..13.0, 0.01f64..50.0), 0..200).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (u, v, depth))| PixelProjection {
                u,
                v,
                depth,
                source_index: i,
            })
            .collect()
    })
}

fn grid_cells(x: usize, y: usize) -> impl Strategy<Value = BinaryGrid> {
    prop::collection::vec(any::<bool>(), x * y)
        .prop_map(move |c| BinaryGrid::from_cells(x, y, c).unwrap())
}

proptest! {
    #[test]
    fn projection_round_trip(u in -0.5f64..639.4, v in -0.5f64..479.4, z in 0.002f64..300.0) {
        let intr = camera_640();
        let p = Point3::new((u - intr.cx) * z / intr.fx, (v - intr.cy) * z / intr.fy, z);
        let proj = project_points(&cloud(&[[p.x, p.y, p.z]], "cam"), &intr);
        prop_assert_eq!(proj.len(), 1);
        let back = unproject_pixel(proj[0].u, proj[0].v, proj[0].depth, &intr).unwrap();
        prop_assert!((back - p).norm() <= 1e-9 * p.norm());
    }

    #[test]
    fn composition_matches_sequential(a in angles(), ta in offsets(), b in angles(), tb in offsets(),
                                      pts in prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), 1..50)) {
        let tb_ = transform(b, tb, "x", "y");
        let ta_ = transform(a, ta, "y", "z");
        let c = cloud(&pts, "x");
        let seq = transform_points(&transform_points(&c, &tb_).unwrap(), &ta_).unwrap();
        let once = transform_points(&c, &compose(&ta_, &tb_).unwrap()).unwrap();
        prop_assert_eq!(once.frame(), "z");
        for (p, q) in seq.points().iter().zip(once.points()) {
            prop_assert!((p - q).amax() <= 1e-9 * p.norm().max(1.0));
        }
    }

    #[test]
    fn lidar_to_camera_chain(a in angles(), ta in offsets(), b in angles(), tb in offsets(),
                             pts in prop::collection::vec(prop::array::uniform3(-50.0f64..50.0), 1..50)) {
        let e_p = transform(a, ta, VEHICLE_FRAME, LIDAR_FRAME);
        let e_k = transform(b, tb, VEHICLE_FRAME, "cam");
        let c = cloud(&pts, LIDAR_FRAME);
        let chained = transform_points(&c, &compose(&e_k, &e_p.inverse()).unwrap()).unwrap();
        let stepwise = transform_points(&transform_points(&c, &e_p.inverse()).unwrap(), &e_k).unwrap();
        for (p, q) in chained.points().iter().zip(stepwise.points()) {
            prop_assert!((p - q).amax() <= 1e-9 * p.norm().max(1.0));
        }
    }

    #[test]
    fn projection_is_homogeneous(x in -0.6f64..0.6, y in -0.45f64..0.45, z in 1.0f64..2.0, lambda in 0.01f64..100.0) {
        let intr = camera_640();
        let p = project_points(&cloud(&[[x, y, z]], "cam"), &intr);
        let q = project_points(&cloud(&[[lambda * x, lambda * y, lambda * z]], "cam"), &intr);
        prop_assert_eq!(p.len(), 1);
        prop_assert_eq!(q.len(), 1);
        prop_assert!((p[0].u - q[0].u).abs() <= 1e-9 * p[0].u.abs().max(1.0));
        prop_assert!((p[0].v - q[0].v).abs() <= 1e-9 * p[0].v.abs().max(1.0));
        prop_assert!(rel_close(q[0].depth, lambda * z, 1e-12));
    }

    #[test]
    fn zbuffer_matches_oracle(projs in projections()) {
        let d = rasterize_depth(&projs, 16, 12);
        let oracle = zbuffer_oracle(&projs, 16, 12);
        prop_assert_eq!(d.values().len(), oracle.len());
        for (a, b) in d.values().iter().zip(&oracle) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        prop_assert_eq!(rasterize_depth_par(&projs, 16, 12), d);
    }

    #[test]
    fn adding_a_projection_never_increases_depth(projs in projections(), u in -0.5f64..15.4, v in -0.5f64..11.4, z in 0.01f64..50.0) {
        let before = rasterize_depth(&projs, 16, 12);
        let mut more = projs.clone();
        more.push(PixelProjection { u, v, depth: z, source_index: more.len() });
        let after = rasterize_depth(&more, 16, 12);
        prop_assert!(after.values().iter().zip(before.values()).all(|(a, b)| a <= b));
        let (lb, la) = (minpool(&before, 4).unwrap(), minpool(&after, 4).unwrap());
        prop_assert!(la.values().iter().zip(lb.values()).all(|(a, b)| a <= b));
    }

    #[test]
    fn pooled_depths_come_from_points(projs in projections(), k in prop::sample::select(vec![1usize, 2, 4])) {
        let low = minpool(&rasterize_depth(&projs, 16, 12), k).unwrap();
        for v in low.values().iter().filter(|v| v.is_finite()) {
            prop_assert!(projs.iter().any(|p| p.depth == *v));
        }
    }

    #[test]
    fn minpool_matches_oracle_and_composes(seed in any::<u64>(), a in prop::sample::select(vec![1usize, 2, 4]), b in prop::sample::select(vec![1usize, 2, 4])) {
        let mut r = rng(seed);
        let d = random_depth(&mut r, 32, 16, 0.2);
        let direct = minpool(&d, a * b).unwrap();
        prop_assert_eq!(direct.values(), &minpool_oracle(d.values(), 32, 16, a * b)[..]);
        let chained = minpool(minpool(&d, a).unwrap().image(), b).unwrap();
        prop_assert_eq!(chained.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        direct.values().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        let empty = minpool(&DepthImage::empty(32, 16), a * b).unwrap();
        prop_assert_eq!(empty.image().valid_count(), 0);
    }

    #[test]
    fn pillar_mass_is_conserved(pts in prop::collection::vec((-12.0f64..12.0, -12.0f64..12.0, -3.0f64..3.0, 0.0f32..10.0, -5.0f32..5.0), 0..300),
                                rot in 1usize..300) {
        let config = GridConfig::symmetric(10.0, 0.5).unwrap();
        let points: Vec<Point3> = pts.iter().map(|p| Point3::new(p.0, p.1, p.2)).collect();
        let feats: Vec<f32> = pts.iter().flat_map(|p| [p.3, p.4]).collect();
        let c = FeaturePointCloud::new(2, points.clone(), feats.clone(), VEHICLE_FRAME).unwrap();
        let grid = pillar_sum_pool(&c, &config).unwrap();
        let inside: f64 = pts.iter()
            .filter(|p| p.0 >= -10.0 && p.0 < 10.0 && p.1 >= -10.0 && p.1 < 10.0)
            .map(|p| p.3 as f64 + p.4 as f64)
            .sum();
        let total: f64 = grid.values().iter().map(|&v| v as f64).sum();
        let scale: f64 = pts.iter().map(|p| (p.3.abs() + p.4.abs()) as f64).sum::<f64>().max(1.0);
        prop_assert!((total - inside).abs() <= 1e-5 * scale);

        // rotate the input order
        let k = rot % pts.len().max(1);
        let mut p2 = points.clone();
        p2.rotate_left(k);
        let mut f2 = feats.clone();
        f2.rotate_left(2 * k);
        let permuted = pillar_sum_pool(&FeaturePointCloud::new(2, p2, f2, VEHICLE_FRAME).unwrap(), &config).unwrap();
        for (a, b) in grid.values().iter().zip(permuted.values()) {
            prop_assert!((a - b).abs() <= 1e-5 * a.abs().max(b.abs()));
        }
    }

    #[test]
    fn pillar_translation_equivariance(pts in prop::collection::vec((-80i32..80, -80i32..80, 0.0f32..4.0), 0..200),
                                       si in -10i32..10, sj in -10i32..10) {
        // dyadic coordinates keep every shift exact
        let config = GridConfig::symmetric(8.0, 0.5).unwrap();
        let shifted_cfg = GridConfig::new(-8.0 + si as f64 * 0.5, 8.0 + si as f64 * 0.5,
                                          -8.0 + sj as f64 * 0.5, 8.0 + sj as f64 * 0.5, 0.5).unwrap();
        let base: Vec<Point3> = pts.iter().map(|p| Point3::new(p.0 as f64 / 8.0, p.1 as f64 / 8.0, 0.0)).collect();
        let moved: Vec<Point3> = base.iter().map(|p| Point3::new(p.x + si as f64 * 0.5, p.y + sj as f64 * 0.5, 1.0)).collect();
        let feats: Vec<f32> = pts.iter().map(|p| p.2).collect();
        let a = pillar_sum_pool(&FeaturePointCloud::new(1, base, feats.clone(), VEHICLE_FRAME).unwrap(), &config).unwrap();
        let b = pillar_sum_pool(&FeaturePointCloud::new(1, moved, feats, VEHICLE_FRAME).unwrap(), &shifted_cfg).unwrap();
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn unprojection_ignores_feature_values(seed in any::<u64>(), perm in Just(vec![2usize, 0, 1]).prop_shuffle()) {
        let mut r = rng(seed);
        let intr = CameraIntrinsics::new(40.0, 40.0, 31.5, 15.5, 64, 32).unwrap();
        let depth = minpool(&random_depth(&mut r, 64, 32, 0.3), 4).unwrap();
        let vals: Vec<f32> = (0..3 * 16 * 8).map(|i| (i as f32 * 0.37).sin()).collect();
        let fm = FeatureMap::new(3, 16, 8, 4, vals).unwrap();
        let a = unproject_features(&fm, &depth, &intr, "cam").unwrap();
        let b = unproject_features(&fm.permute_channels(&perm).unwrap(), &depth, &intr, "cam").unwrap();
        prop_assert_eq!(a.points(), b.points());
        for i in 0..a.len() {
            let fa = a.feature(i);
            let fb = b.feature(i);
            for (c, &src) in perm.iter().enumerate() {
                prop_assert_eq!(fb[c].to_bits(), fa[src].to_bits());
            }
        }
    }

    #[test]
    fn box_union_is_monotone(boxes in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0, 0.2f64..6.0, 0.2f64..6.0, -3.2f64..3.2), 1..6)) {
        let config = GridConfig::symmetric(12.0, 0.5).unwrap();
        let all: Vec<Box3D> = boxes.iter().map(|b| Box3D::new([b.0, b.1, 0.0], [b.2, b.3, 1.0], b.4, "x").unwrap()).collect();
        let fewer = rasterize_boxes(&all[..all.len() - 1], &config);
        let more = rasterize_boxes(&all, &config);
        prop_assert!(fewer.is_subset_of(&more));
    }

    #[test]
    fn full_turn_leaves_grid_unchanged(x in -10.0f64..10.0, y in -10.0f64..10.0, l in 0.2f64..6.0, w in 0.2f64..6.0, yaw in -3.1f64..3.1) {
        let config = GridConfig::symmetric(12.0, 0.5).unwrap();
        let b = Box3D::new([x, y, 0.0], [l, w, 1.0], yaw, "x").unwrap();
        let turned = Box3D::new([x, y, 0.0], [l, w, 1.0], yaw + std::f64::consts::TAU, "x").unwrap();
        prop_assert_eq!(rasterize_boxes(&[b], &config), rasterize_boxes(&[turned], &config));
    }

    #[test]
    fn box_area_within_perimeter_band(x in -5.0f64..5.0, y in -5.0f64..5.0, l in 1.0f64..8.0, w in 1.0f64..8.0, yaw in -3.2f64..3.2) {
        let cell = 0.5;
        let config = GridConfig::symmetric(12.0, cell).unwrap();
        let n = rasterize_boxes(&[Box3D::new([x, y, 0.0], [l, w, 1.0], yaw, "x").unwrap()], &config).count();
        let perimeter = 2.0 * (l + w);
        prop_assert!((n as f64 * cell * cell - l * w).abs() <= perimeter * cell);
    }

    #[test]
    fn rotated_boxes_match_oracle(x in -10.0f64..10.0, y in -10.0f64..10.0, l in 0.2f64..6.0, w in 0.2f64..6.0, yaw in -3.2f64..3.2) {
        let config = GridConfig::symmetric(12.0, 0.5).unwrap();
        let g = rasterize_boxes(&[Box3D::new([x, y, 0.0], [l, w, 1.0], yaw, "x").unwrap()], &config);
        let corners = rect_corners(x, y, l, w, yaw);
        for i in 0..config.x_cells() {
            for j in 0..config.y_cells() {
                let (cx, cy) = config.cell_center(i, j);
                prop_assert_eq!(g.get(i, j), convex_contains(&corners, [cx, cy]), "cell ({}, {})", i, j);
            }
        }
    }

    #[test]
    fn convex_polygons_match_oracle(cx in -5.0f64..5.0, cy in -5.0f64..5.0,
                                    radii in prop::collection::vec(0.5f64..6.0, 3..9), start in 0.0f64..6.0) {
        // vertices at increasing angles around a center, then the hull is the polygon itself
        let n = radii.len();
        let r = radii.iter().copied().fold(f64::INFINITY, f64::min);
        let verts: Vec<[f64; 2]> = (0..n)
            .map(|k| {
                let a = start + std::f64::consts::TAU * k as f64 / n as f64;
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        let config = GridConfig::symmetric(12.0, 0.5).unwrap();
        let g = rasterize_polygons(&[MapPolygon::new(verts.clone(), "p").unwrap()], &config).unwrap();
        for i in 0..config.x_cells() {
            for j in 0..config.y_cells() {
                let (px, py) = config.cell_center(i, j);
                prop_assert_eq!(g.get(i, j), convex_contains(&verts, [px, py]), "cell ({}, {})", i, j);
            }
        }
    }

    #[test]
    fn star_polygons_match_winding_oracle(radii in prop::collection::vec(1.0f64..9.0, 5..12), start in 0.0f64..6.0) {
        // star-shaped (concave) polygons are simple, so even-odd and winding agree
        let n = radii.len();
        let verts: Vec<[f64; 2]> = radii.iter().enumerate()
            .map(|(k, r)| {
                let a = start + std::f64::consts::TAU * k as f64 / n as f64;
                [0.3 + r * a.cos(), -0.2 + r * a.sin()]
            })
            .collect();
        let config = GridConfig::symmetric(10.0, 0.5).unwrap();
        let g = rasterize_polygons(&[MapPolygon::new(verts.clone(), "p").unwrap()], &config).unwrap();
        for i in 0..config.x_cells() {
            for j in 0..config.y_cells() {
                let (px, py) = config.cell_center(i, j);
                prop_assert_eq!(g.get(i, j), winding_contains(&verts, [px, py]));
            }
        }
    }

    #[test]
    fn iou_is_symmetric(a in grid_cells(6, 7), b in grid_cells(6, 7)) {
        prop_assert_eq!(iou(&a, &b).unwrap(), iou(&b, &a).unwrap());
    }

    #[test]
    fn iou_grows_with_intersection(pred in grid_cells(5, 5), gt in grid_cells(5, 5)) {
        let before = iou(&pred, &gt).unwrap();
        // add a ground-truth cell the prediction missed: union fixed, intersection grows
        if let Some(k) = (0..25).find(|&k| gt.cells()[k] && !pred.cells()[k]) {
            let mut grown = pred.clone();
            grown.set(k / 5, k % 5, true);
            let after = iou(&grown, &gt).unwrap();
            prop_assert!(after.unwrap() > before.unwrap());
        }
    }

    #[test]
    fn unit_weight_bce_is_plain_bce(cells in prop::collection::vec((-30.0f64..30.0, any::<bool>()), 1..64)) {
        let logits: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let gt = BinaryGrid::from_cells(1, cells.len(), cells.iter().map(|c| c.1).collect()).unwrap();
        let plain = cells.iter()
            .map(|&(l, y)| {
                let p = 1.0 / (1.0 + (-l).exp());
                let q = 1.0 / (1.0 + l.exp());
                if y { -p.ln() } else { -q.ln() }
            })
            .sum::<f64>() / cells.len() as f64;
        prop_assert!((bce_loss(&logits, &gt, 1.0).unwrap() - plain).abs() <= 1e-12);
    }

    #[test]
    fn bce_is_finite(cells in prop::collection::vec((-1e300f64..1e300, any::<bool>()), 1..64), pw in 0.01f64..100.0) {
        let logits: Vec<f64> = cells.iter().map(|c| c.0).collect();
        let gt = BinaryGrid::from_cells(cells.len(), 1, cells.iter().map(|c| c.1).collect()).unwrap();
        prop_assert!(bce_loss(&logits, &gt, pw).unwrap().is_finite());
    }
}
