use proptest::prelude::*;

use ipfem::basis::BasisSet;
use ipfem::interface::{classify_elements, ClassifyOptions};
use ipfem::quadrature::{gauss_1d, volume_rule};
use ipfem::sparse::CsrMatrix;
use ipfem::{Curve, Error, Mesh, Rect, Side, Vec2};

proptest! {
    #![proptest_config(ProptestConfig { cases: std::env::var("PROPTEST_CASES").ok().and_then(|v| v.parse().ok()).unwrap_or(256), failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn triplet_merge_matches_dense_sum(entries in prop::collection::vec((0usize..6, 0usize..5, -10.0f64..10.0), 0..40)) {
        let m = CsrMatrix::from_triplets(6, 5, entries.clone()).unwrap();
        let mut dense = [[0.0f64; 5]; 6];
        for (i, j, v) in &entries {
            dense[*i][*j] += v;
        }
        for i in 0..6 {
            for j in 0..5 {
                prop_assert!((m.get(i, j) - dense[i][j]).abs() < 1e-12);
            }
        }
        let x: Vec<f64> = (0..5).map(|k| k as f64 - 2.0).collect();
        let y = m.mul_vec(&x);
        for i in 0..6 {
            let e: f64 = (0..5).map(|j| dense[i][j] * x[j]).sum();
            prop_assert!((y[i] - e).abs() < 1e-10);
        }
        prop_assert_eq!(m.transpose().transpose(), m);
    }

    #[test]
    fn vertex_functions_partition_unity(p in 1usize..=6, x in -1.0f64..1.0, y in -1.0f64..1.0) {
        let b = BasisSet::new(p).unwrap();
        let n = b.num_functions();
        let (mut v, mut g) = (vec![0.0; n], vec![Vec2::zeros(); n]);
        b.eval(Vec2::new(x, y), &mut v, &mut g);
        let corners = [b.local_index(0, 0), b.local_index(1, 0), b.local_index(0, 1), b.local_index(1, 1)];
        let s: f64 = corners.iter().map(|&k| v[k]).sum();
        let gs: Vec2 = corners.iter().map(|&k| g[k]).sum();
        prop_assert!((s - 1.0).abs() < 1e-13);
        prop_assert!(gs.norm() < 1e-13);
    }

    #[test]
    fn gauss_rules_integrate_their_degree(n in 1usize..=30, k in 0usize..60) {
        let r = gauss_1d(n);
        let k = k % (2 * n);
        let got: f64 = r.points.iter().zip(&r.weights).map(|(x, w)| w * x.powi(k as i32)).sum();
        let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
        prop_assert!((got - exact).abs() < 1e-13);
    }

    #[test]
    fn cut_rules_partition_elements(cx in -0.2f64..0.2, cy in -0.2f64..0.2, r in 0.25f64..0.7, nx in 5usize..14) {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), nx, nx).unwrap();
        let curve = Curve::circle(cx, cy, r);
        let topo = match classify_elements(&mesh, &curve, ClassifyOptions::default()) {
            Ok(t) => t,
            // Two arcs through one element are rejected by design.
            Err(Error::MultiIntersection { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mut inside = 0.0;
        for k in 0..mesh.num_elements() {
            let area = mesh.element(k).unwrap().area();
            let m: Vec<f64> = Side::BOTH
                .iter()
                .map(|&s| volume_rule(&mesh, &topo, k, s, 5).unwrap().map_or(0.0, |q| q.measure()))
                .collect();
            prop_assert!((m[0] + m[1] - area).abs() < 1e-12 * area.max(1.0));
            inside += m[0];
        }
        prop_assert!((inside - std::f64::consts::PI * r * r).abs() < 1e-9);
    }

    #[test]
    fn ellipse_cut_rules_partition_elements(cx in -0.2f64..0.2, cy in -0.2f64..0.2, a in 0.2f64..0.7, b in 0.2f64..0.7, nx in 5usize..14) {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), nx, nx).unwrap();
        let curve = Curve::ellipse(cx, cy, a, b);
        let topo = match classify_elements(&mesh, &curve, ClassifyOptions::default()) {
            Ok(t) => t,
            Err(Error::MultiIntersection { .. }) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        };
        let mut inside = 0.0;
        for k in 0..mesh.num_elements() {
            let area = mesh.element(k).unwrap().area();
            let one = volume_rule(&mesh, &topo, k, Side::One, 6).unwrap().map_or(0.0, |q| q.measure());
            let two = volume_rule(&mesh, &topo, k, Side::Two, 6).unwrap().map_or(0.0, |q| q.measure());
            prop_assert!((one + two - area).abs() < 1e-12 * area.max(1.0));
            inside += one;
        }
        prop_assert!((inside - std::f64::consts::PI * a * b).abs() < 1e-9);
    }
}
