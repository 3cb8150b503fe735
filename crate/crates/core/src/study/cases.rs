//! Manufactured-solution catalog. Every solution piece is entire and
//! vanishes on `∂Ω` where its side touches the boundary.

use std::sync::Arc;

use serde::Serialize;

use crate::mesh::Rect;
use crate::problem::{Jet, JetField, Problem};
use crate::{Curve, Error, Result, Vec2};

pub const CIRCLE_RADIUS: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CaseInfo {
    pub name: &'static str,
    pub description: &'static str,
}

pub const CATALOG: [CaseInfo; 3] = [
    CaseInfo {
        name: "circle-jump",
        description: "circle R=0.6 in (-1,1)^2, a1=1 inside, a2=10 outside; \
                      u1 = exp(x)*sin(y) + q(x,y) with q = 1 + x*y + x^2; \
                      u2 = (x^2+y^2-R^2)*s(x,y)*(1-x^2)*(1-y^2) with s = 1 + sin(x)*cos(y), \
                      the last factor making u vanish on the boundary; nonzero g_D and g_N",
    },
    CaseInfo {
        name: "aligned-edge",
        description: "interface on the mesh line x=0 of (-1,1)^2 (common-edge branch), a1=1 for x<0, a2=2 for x>0; \
                      u1 = b*(1+x+sin(y)), u2 = b*cos(x+y) with b = (1-x^2)*(1-y^2); nonzero g_D and g_N",
    },
    CaseInfo {
        name: "smooth-nojump",
        description: "circle R=0.6 in (-1,1)^2, a = 1 + (x^2+y^2)/2 on both sides, \
                      u = (1-x^2)*(1-y^2)*exp(x+y) on both sides; g_D = g_N = 0",
    },
];

pub fn list_cases() -> &'static [CaseInfo] {
    &CATALOG
}

fn square() -> Rect {
    Rect::from_bounds(-1.0, -1.0, 1.0, 1.0)
}

/// `(1 - x²)(1 - y²)`.
fn bubble(p: Vec2) -> Jet {
    let (x, y) = (Jet::x(p), Jet::y(p));
    (-(x * x) + 1.0) * (-(y * y) + 1.0)
}

fn constant(c: f64) -> JetField {
    Arc::new(move |_| Jet::constant(c))
}

pub fn circle_jump() -> Result<Problem> {
    let r2 = CIRCLE_RADIUS * CIRCLE_RADIUS;
    let u1: JetField = Arc::new(|p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        x.exp() * y.sin() + x * y + x * x + 1.0
    });
    let u2: JetField = Arc::new(move |p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        (x * x + y * y - r2) * (x.sin() * y.cos() + 1.0) * bubble(p)
    });
    Problem::manufactured(
        "circle-jump",
        square(),
        Curve::circle(0.0, 0.0, CIRCLE_RADIUS),
        [constant(1.0), constant(10.0)],
        [u1, u2],
        (1.0, 10.0),
    )
}

pub fn aligned_edge() -> Result<Problem> {
    let u1: JetField = Arc::new(|p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        bubble(p) * (x + y.sin() + 1.0)
    });
    let u2: JetField = Arc::new(|p| bubble(p) * (Jet::x(p) + Jet::y(p)).cos());
    Problem::manufactured(
        "aligned-edge",
        square(),
        Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0)),
        [constant(1.0), constant(2.0)],
        [u1, u2],
        (1.0, 2.0),
    )
}

pub fn smooth_nojump() -> Result<Problem> {
    let a: JetField = Arc::new(|p| {
        let (x, y) = (Jet::x(p), Jet::y(p));
        (x * x + y * y) * 0.5 + 1.0
    });
    let u: JetField = Arc::new(|p| bubble(p) * (Jet::x(p) + Jet::y(p)).exp());
    Problem::manufactured(
        "smooth-nojump",
        square(),
        Curve::circle(0.0, 0.0, CIRCLE_RADIUS),
        [a.clone(), a],
        [u.clone(), u],
        (1.0, 2.0),
    )
}

pub fn build_case(name: &str) -> Result<Problem> {
    match name {
        "circle-jump" => circle_jump(),
        "aligned-edge" => aligned_edge(),
        "smooth-nojump" => smooth_nojump(),
        other => Err(Error::UnknownCase(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::Side;

    #[test]
    fn catalog_builds() {
        assert!(list_cases().len() >= 3);
        for c in list_cases() {
            let p = build_case(c.name).unwrap();
            assert_eq!(p.name, c.name);
            assert!(p.consistency_defect(50, 5).unwrap() < 1e-10);
            assert!(p.sampled_min_coefficient(20) >= p.coefficient_bounds.0);
        }
        assert!(matches!(build_case("nope"), Err(Error::UnknownCase(_))));
    }

    #[test]
    fn exact_solutions_vanish_on_boundary() {
        let p = circle_jump().unwrap();
        let e = p.exact().unwrap();
        for t in [-1.0, -0.3, 0.2, 1.0] {
            for q in [Vec2::new(t, 1.0), Vec2::new(-1.0, t)] {
                assert!(e.value(Side::Two, q).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn smooth_case_has_no_jumps() {
        let p = smooth_nojump().unwrap();
        let q = Vec2::new(0.6, 0.0);
        assert_eq!(p.g_d(q), 0.0);
        assert_eq!(p.g_n(q, Vec2::new(1.0, 0.0)), 0.0);
    }
}
