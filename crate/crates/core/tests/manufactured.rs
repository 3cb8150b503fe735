mod common;

use common::{d1, fd_source};
use ipfem::study::{build_case, list_cases};
use ipfem::{Side, Vec2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-3;

#[test]
fn sources_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for case in list_cases() {
        let problem = build_case(case.name).unwrap();
        let exact = problem.exact().unwrap();
        let mut checked = [0usize; 2];
        while checked.iter().any(|&c| c < 40) {
            let p = Vec2::new(rng.random_range(-0.99..0.99), rng.random_range(-0.99..0.99));
            let level = problem.curve.level(p);
            if level.abs() < 1e-2 {
                continue;
            }
            let side = if level < 0.0 { Side::One } else { Side::Two };
            let a = |q: Vec2| problem.coefficient(side, q);
            let u = |q: Vec2| exact.value(side, q);
            let fd = fd_source(&a, &u, p, STEP);
            let f = problem.source(side, p);
            assert!((fd - f).abs() <= 1e-6 * (1.0 + f.abs()), "{}: f={f} fd={fd} at {p:?}", case.name);
            let g = exact.gradient(side, p);
            let gx = d1(&u, p, Vec2::new(1.0, 0.0), STEP);
            let gy = d1(&u, p, Vec2::new(0.0, 1.0), STEP);
            assert!((g - Vec2::new(gx, gy)).norm() <= 1e-8 * (1.0 + g.norm()), "{}: gradient", case.name);
            checked[side.index()] += 1;
        }
    }
}

#[test]
fn jump_data_match_exact_traces() {
    for case in list_cases() {
        let problem = build_case(case.name).unwrap();
        let exact = problem.exact().unwrap();
        let curve = problem.curve;
        for k in 1..50 {
            let xi = curve.period() * k as f64 / 50.0;
            let x = curve.point(xi);
            let n = curve.normal(xi);
            let [u1, u2] = [Side::One, Side::Two].map(|s| exact.value(s, x));
            assert!((problem.g_d(x) - (u1 - u2)).abs() < 1e-12, "{}: g_D", case.name);
            let flux = |s: Side| {
                let u = |q: Vec2| exact.value(s, q);
                problem.coefficient(s, x) * (d1(&u, x, Vec2::new(1.0, 0.0), STEP) * n.x + d1(&u, x, Vec2::new(0.0, 1.0), STEP) * n.y)
            };
            let gn = flux(Side::One) - flux(Side::Two);
            assert!((problem.g_n(x, n) - gn).abs() < 1e-7 * (1.0 + gn.abs()), "{}: g_N {} vs {gn}", case.name, problem.g_n(x, n));
        }
    }
}

#[test]
fn normals_point_into_second_subdomain() {
    for case in list_cases() {
        let curve = build_case(case.name).unwrap().curve;
        for k in 1..20 {
            let xi = curve.period() * k as f64 / 20.0;
            let (x, n) = (curve.point(xi), curve.normal(xi));
            assert!((n.norm() - 1.0).abs() < 1e-14);
            assert!(curve.level(x + 1e-4 * n) > 0.0 && curve.level(x - 1e-4 * n) < 0.0, "{}", case.name);
        }
    }
}
