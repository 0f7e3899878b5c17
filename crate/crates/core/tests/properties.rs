use proptest::prelude::*;
use sczm::conformalize::{conformalize, MARKER_INHERITED};
use sczm::constitutive::{cohesive_traction, commit_state, CohesiveState, TslModel};
use sczm::fe::polygon_area;
use sczm::geometry::{build_classifier_index, classify_brute_force, classify_point, compute_boundary_pca, BoundaryRep};
use sczm::mesh::{build_crossed_tri, build_structured_quad, read_mesh, write_mesh, Bounds, MeshFile};
use sczm::surrogate::clip::{clip_half_plane, triangulate};
use sczm::surrogate::{assign_grain_ids, GrainSet};
use sczm::Vec2;

fn convex_polygon(angles: &[f64], radius: f64) -> Vec<Vec2> {
    let mut a = angles.to_vec();
    a.sort_by(f64::total_cmp);
    a.dedup_by(|x, y| (*x - *y).abs() < 1e-3);
    a.iter().map(|t| Vec2::new(radius * t.cos(), radius * t.sin())).collect()
}

fn rotation(theta: f64) -> nalgebra::Matrix2<f64> {
    let (s, c) = theta.sin_cos();
    nalgebra::Matrix2::new(c, -s, s, c)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn half_plane_clip_partitions_area(
        angles in prop::collection::vec(0.0..std::f64::consts::TAU, 3..12),
        p in (-0.5..0.5f64, -0.5..0.5f64),
        theta in 0.0..std::f64::consts::TAU,
    ) {
        let poly = convex_polygon(&angles, 1.0);
        prop_assume!(poly.len() >= 3 && polygon_area(&poly) > 1e-3);
        let a = Vec2::new(p.0, p.1);
        let b = a + Vec2::new(theta.cos(), theta.sin());
        let left = clip_half_plane(&poly, a, b);
        let right = clip_half_plane(&poly, b, a);
        let total = polygon_area(&left) + polygon_area(&right);
        prop_assert!((total - polygon_area(&poly)).abs() < 1e-12);
    }

    #[test]
    fn triangulation_covers_polygon(angles in prop::collection::vec(0.0..std::f64::consts::TAU, 3..16)) {
        let poly = convex_polygon(&angles, 2.0);
        prop_assume!(poly.len() >= 3 && polygon_area(&poly) > 1e-3);
        let tris = triangulate(&poly);
        prop_assert_eq!(tris.len(), poly.len() - 2);
        let sum: f64 = tris.iter().map(|t| polygon_area(&[poly[t[0]], poly[t[1]], poly[t[2]]])).sum();
        prop_assert!((sum - polygon_area(&poly)).abs() < 1e-12);
        for t in &tris {
            prop_assert!(polygon_area(&[poly[t[0]], poly[t[1]], poly[t[2]]]) > 0.0);
        }
    }

    #[test]
    fn conformalize_conserves_area_and_partitions_markers(
        n in 3usize..9,
        x in 0.2..0.8f64,
        tilt in -1.0..1.0f64,
        tri in any::<bool>(),
    ) {
        let mesh = if tri {
            build_crossed_tri(n, n, Bounds::unit()).unwrap()
        } else {
            build_structured_quad(n, n, Bounds::unit()).unwrap()
        };
        let grains = GrainSet::split_rect(Bounds::unit(), Vec2::new(x, 0.5), Vec2::new(tilt, 1.0), 1, 2).unwrap();
        let labelled = mesh.clone().with_regions(assign_grain_ids(&mesh, &grains).unwrap()).unwrap();
        let ifm = conformalize(&labelled, &grains).unwrap();
        prop_assert!((ifm.mesh.total_area() + ifm.dropped_area - 1.0).abs() < 1e-10);
        prop_assert_eq!(ifm.node_markers.len(), ifm.mesh.nodes.len());
        prop_assert!(ifm.node_markers.iter().all(|&m| m <= 2));
        let inherited = ifm.node_markers.iter().filter(|&&m| m == MARKER_INHERITED).count();
        prop_assert!(inherited <= 2 * mesh.nodes.len());
        for (i, (&m, src)) in ifm.node_markers.iter().zip(&ifm.source_node_ids).enumerate() {
            prop_assert_eq!(m == MARKER_INHERITED, src.is_some());
            if let Some(s) = src {
                prop_assert!((ifm.mesh.nodes[i] - mesh.nodes[*s]).norm() < 1e-12);
            }
        }
        for e in 0..ifm.mesh.elements.len() {
            prop_assert!(ifm.mesh.element_area(e) > 0.0);
        }
    }

    #[test]
    fn traction_is_objective(
        jump in (-0.3..0.3f64, -0.3..0.3f64),
        normal_angle in 0.0..std::f64::consts::TAU,
        theta in 0.0..std::f64::consts::TAU,
        history in 0.0..0.2f64,
        bilinear in any::<bool>(),
    ) {
        let tsl = if bilinear {
            TslModel::BilinearMixedMode { k: 2e3, g_ic: 30.0, g_iic: 10.0, n: 200.0, s: 100.0, eta: 2.2, mu: 1e-3 }
        } else {
            TslModel::Exponential { gc: 50.0, delta0: 0.1, beta: 0.7 }
        };
        let state = CohesiveState { damage: if bilinear { 0.5 * history } else { 1.0 - (-history / 0.1f64).exp() }, max_separation: history };
        let j = Vec2::new(jump.0, jump.1);
        let n = Vec2::new(normal_angle.cos(), normal_angle.sin());
        let r = rotation(theta);
        let a = cohesive_traction(&tsl, &j, &n, &state).unwrap();
        let b = cohesive_traction(&tsl, &(r * j), &(r * n), &state).unwrap();
        let scale = 1.0 + a.traction.norm();
        prop_assert!((r * a.traction - b.traction).norm() < 1e-9 * scale);
        prop_assert!((r * a.tangent * r.transpose() - b.tangent).norm() < 1e-7 * (1.0 + a.tangent.norm()));
        prop_assert!((a.trial.damage - b.trial.damage).abs() < 1e-12);
    }

    #[test]
    fn committed_history_never_decreases(
        path in prop::collection::vec((-0.2..0.4f64, -0.2..0.2f64), 1..20),
    ) {
        let tsl = TslModel::BilinearMixedMode { k: 2e3, g_ic: 30.0, g_iic: 10.0, n: 200.0, s: 100.0, eta: 2.2, mu: 1e-3 };
        let n = Vec2::new(1.0, 0.0);
        let mut state = [CohesiveState::default()];
        for (dn, s) in path {
            let before = state[0];
            let resp = cohesive_traction(&tsl, &Vec2::new(dn, s), &n, &state[0]).unwrap();
            commit_state(&mut state, &[resp.trial]);
            prop_assert!(state[0].damage >= before.damage && state[0].damage <= 1.0);
            prop_assert!(state[0].max_separation >= before.max_separation);
        }
    }

    #[test]
    fn indexed_classifier_matches_brute_force_on_rotated_stars(
        theta in 0.0..std::f64::consts::PI,
        stretch in 0.2..1.0f64,
        spikes in 3usize..9,
        qx in -1.5..1.5f64,
        qy in -1.5..1.5f64,
    ) {
        let m = 2 * spikes;
        let r = rotation(theta);
        let pts: Vec<Vec2> = (0..m)
            .map(|i| {
                let t = i as f64 * std::f64::consts::TAU / m as f64;
                let rad = if i % 2 == 0 { 1.0 } else { 0.45 };
                r * Vec2::new(rad * t.cos(), stretch * rad * t.sin())
            })
            .collect();
        let boundary = BoundaryRep::polygon(&pts).unwrap();
        let index = build_classifier_index(compute_boundary_pca(&boundary.used_vertices()).unwrap(), &boundary).unwrap();
        let q = Vec2::new(qx, qy);
        let d = (0..boundary.facets().len()).map(|f| boundary.distance_to_facet(&q, f)).fold(f64::INFINITY, f64::min);
        prop_assume!(d > 1e-9);
        prop_assert_eq!(classify_point(&q, &boundary, &index).unwrap(), classify_brute_force(&q, &boundary));
    }

    #[test]
    fn mesh_file_round_trip(n in 1usize..5, m in 1usize..5, tri in any::<bool>(), x0 in -3.0..3.0f64, w in 0.1..5.0f64) {
        let bounds = Bounds::new(x0, -x0, x0 + w, -x0 + 0.7 * w);
        let mut mesh = if tri { build_crossed_tri(n, m, bounds).unwrap() } else { build_structured_quad(n, m, bounds).unwrap() };
        mesh.tag_box_sides();
        let regions = (0..mesh.elements.len()).map(|e| 1 + (e % 3) as u32).collect();
        let file = MeshFile { mesh: mesh.with_regions(regions).unwrap(), sections: Default::default() };
        let mut buf = Vec::new();
        write_mesh(&mut buf, &file).unwrap();
        let back = read_mesh(buf.as_slice()).unwrap();
        prop_assert_eq!(back, file);
    }
}
