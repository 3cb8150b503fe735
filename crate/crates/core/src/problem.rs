//! Interface problem data `-∇·(a∇u) = f` in `Ω₁ ∪ Ω₂`, `u = 0` on `∂Ω`,
//! `[u] = g_D` and `[a∇u·n] = g_N` on `Γ`.
//!
//! Manufactured problems are written with [`Jet`], which carries a value,
//! gradient and Hessian through products and elementary functions, so the
//! source `f_i = -(a_i Δu_i + ∇a_i·∇u_i)` comes from closed forms.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::interface::Side;
use crate::mesh::Rect;
use crate::{Curve, Error, Result, Vec2};

pub type ScalarField = Arc<dyn Fn(Vec2) -> f64 + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Vec2) -> Vec2 + Send + Sync>;
/// Interface flux datum `g_N(x, n)`.
pub type FluxField = Arc<dyn Fn(Vec2, Vec2) -> f64 + Send + Sync>;
pub type JetField = Arc<dyn Fn(Vec2) -> Jet + Send + Sync>;

/// Value, gradient and Hessian `[h_xx, h_xy, h_yy]` at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: Vec2,
    pub h: [f64; 3],
}

impl Jet {
    pub fn constant(c: f64) -> Self {
        Self { v: c, g: Vec2::zeros(), h: [0.0; 3] }
    }

    pub fn x(p: Vec2) -> Self {
        Self { v: p.x, g: Vec2::new(1.0, 0.0), h: [0.0; 3] }
    }

    pub fn y(p: Vec2) -> Self {
        Self { v: p.y, g: Vec2::new(0.0, 1.0), h: [0.0; 3] }
    }

    pub fn laplacian(&self) -> f64 {
        self.h[0] + self.h[2]
    }

    /// `φ(u)` from `φ(u), φ'(u), φ''(u)`.
    fn compose(self, f: f64, df: f64, ddf: f64) -> Self {
        let g = self.g;
        Self {
            v: f,
            g: df * g,
            h: [df * self.h[0] + ddf * g.x * g.x, df * self.h[1] + ddf * g.x * g.y, df * self.h[2] + ddf * g.y * g.y],
        }
    }

    pub fn exp(self) -> Self {
        let e = self.v.exp();
        self.compose(e, e, e)
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.compose(c, -s, -c)
    }

    pub fn scale(self, s: f64) -> Self {
        Self { v: s * self.v, g: s * self.g, h: self.h.map(|e| s * e) }
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        Jet { v: self.v + o.v, g: self.g + o.g, h: [self.h[0] + o.h[0], self.h[1] + o.h[1], self.h[2] + o.h[2]] }
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(self, c: f64) -> Jet {
        Jet { v: self.v + c, ..self }
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(self, c: f64) -> Jet {
        self + (-c)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let (a, b) = (self, o);
        Jet {
            v: a.v * b.v,
            g: a.v * b.g + b.v * a.g,
            h: [
                a.v * b.h[0] + b.v * a.h[0] + 2.0 * a.g.x * b.g.x,
                a.v * b.h[1] + b.v * a.h[1] + a.g.x * b.g.y + a.g.y * b.g.x,
                a.v * b.h[2] + b.v * a.h[2] + 2.0 * a.g.y * b.g.y,
            ],
        }
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, s: f64) -> Jet {
        self.scale(s)
    }
}

/// Two-sided exact solution `(u₁, u₂)`, each extended smoothly to all of `Ω`.
#[derive(Clone)]
pub struct ExactSolution {
    pub value: [ScalarField; 2],
    pub gradient: [VectorField; 2],
}

impl ExactSolution {
    pub fn value(&self, side: Side, p: Vec2) -> f64 {
        (self.value[side.index()])(p)
    }

    pub fn gradient(&self, side: Side, p: Vec2) -> Vec2 {
        (self.gradient[side.index()])(p)
    }
}

#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub domain: Rect,
    pub curve: Curve,
    pub coefficient: [ScalarField; 2],
    pub source: [ScalarField; 2],
    /// `g_D = [u]` on `Γ`.
    pub jump_value: ScalarField,
    /// `g_N = [a∇u·n]` on `Γ` for the unit normal `n` pointing into `Ω₂`.
    pub jump_flux: FluxField,
    pub exact: Option<ExactSolution>,
    /// Lower and upper bounds of `a` over both sides.
    pub coefficient_bounds: (f64, f64),
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("domain", &self.domain)
            .field("curve", &self.curve)
            .field("coefficient_bounds", &self.coefficient_bounds)
            .field("has_exact", &self.exact.is_some())
            .finish()
    }
}

impl Problem {
    /// Manufactured problem from two-sided jets of `a` and `u`; `f`, `g_D`
    /// and `g_N` follow from them.
    pub fn manufactured(
        name: impl Into<String>,
        domain: Rect,
        curve: Curve,
        coefficient: [JetField; 2],
        solution: [JetField; 2],
        coefficient_bounds: (f64, f64),
    ) -> Result<Self> {
        let (lo, hi) = coefficient_bounds;
        if !(lo > 0.0 && hi >= lo) {
            return Err(Error::InvalidArgument(format!("coefficient bounds ({lo}, {hi}) must satisfy 0 < lo <= hi")));
        }
        curve.validate()?;
        let coef = |i: usize| -> ScalarField {
            let a = coefficient[i].clone();
            Arc::new(move |p| a(p).v)
        };
        let src = |i: usize| -> ScalarField {
            let a = coefficient[i].clone();
            let u = solution[i].clone();
            Arc::new(move |p| {
                let (a, u) = (a(p), u(p));
                -(a.v * u.laplacian() + a.g.dot(&u.g))
            })
        };
        let val = |i: usize| -> ScalarField {
            let u = solution[i].clone();
            Arc::new(move |p| u(p).v)
        };
        let grad = |i: usize| -> VectorField {
            let u = solution[i].clone();
            Arc::new(move |p| u(p).g)
        };
        let (u1, u2) = (solution[0].clone(), solution[1].clone());
        let jump_value: ScalarField = Arc::new(move |p| u1(p).v - u2(p).v);
        let (a1, a2, u1, u2) = (coefficient[0].clone(), coefficient[1].clone(), solution[0].clone(), solution[1].clone());
        let jump_flux: FluxField = Arc::new(move |p, n| a1(p).v * u1(p).g.dot(&n) - a2(p).v * u2(p).g.dot(&n));
        Ok(Self {
            name: name.into(),
            domain,
            curve,
            coefficient: [coef(0), coef(1)],
            source: [src(0), src(1)],
            jump_value,
            jump_flux,
            exact: Some(ExactSolution { value: [val(0), val(1)], gradient: [grad(0), grad(1)] }),
            coefficient_bounds,
        })
    }

    pub fn coefficient(&self, side: Side, p: Vec2) -> f64 {
        (self.coefficient[side.index()])(p)
    }

    pub fn source(&self, side: Side, p: Vec2) -> f64 {
        (self.source[side.index()])(p)
    }

    pub fn g_d(&self, p: Vec2) -> f64 {
        (self.jump_value)(p)
    }

    pub fn g_n(&self, p: Vec2, n: Vec2) -> f64 {
        (self.jump_flux)(p, n)
    }

    pub fn exact(&self) -> Result<&ExactSolution> {
        self.exact.as_ref().ok_or(Error::MissingExact)
    }

    /// Largest deviation of `g_D`, `g_N` from the exact jumps over `samples`
    /// random curve points.
    pub fn consistency_defect(&self, samples: usize, seed: u64) -> Result<f64> {
        let exact = self.exact()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let xi = rng.random_range(0.0..self.curve.period());
            let (p, n) = (self.curve.point(xi), self.curve.normal(xi));
            let jd = exact.value(Side::One, p) - exact.value(Side::Two, p);
            let jn = self.coefficient(Side::One, p) * exact.gradient(Side::One, p).dot(&n)
                - self.coefficient(Side::Two, p) * exact.gradient(Side::Two, p).dot(&n);
            worst = worst.max((jd - self.g_d(p)).abs()).max((jn - self.g_n(p, n)).abs());
        }
        Ok(worst)
    }

    /// Lowest coefficient value over a sample grid; must stay positive.
    pub fn sampled_min_coefficient(&self, n: usize) -> f64 {
        let d = self.domain;
        let mut lo = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let p = Vec2::new(d.min.x + d.width() * i as f64 / n as f64, d.min.y + d.height() * j as f64 / n as f64);
                for s in Side::BOTH {
                    lo = lo.min(self.coefficient(s, p));
                }
            }
        }
        lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_hessian(f: impl Fn(Vec2) -> f64, p: Vec2) -> [f64; 3] {
        let s = 1e-4;
        let e = |dx: f64, dy: f64| f(p + Vec2::new(dx, dy));
        [
            (e(s, 0.0) - 2.0 * e(0.0, 0.0) + e(-s, 0.0)) / (s * s),
            (e(s, s) - e(s, -s) - e(-s, s) + e(-s, -s)) / (4.0 * s * s),
            (e(0.0, s) - 2.0 * e(0.0, 0.0) + e(0.0, -s)) / (s * s),
        ]
    }

    #[test]
    fn jet_rules_match_finite_differences() {
        let f = |p: Vec2| {
            let (x, y) = (Jet::x(p), Jet::y(p));
            (x * y + 1.0).exp() * (x - y * 2.0).sin() + (x * x).cos() * y
        };
        for p in [Vec2::new(0.3, -0.2), Vec2::new(-0.7, 0.5)] {
            let j = f(p);
            let h = fd_hessian(|q| f(q).v, p);
            for k in 0..3 {
                assert!((j.h[k] - h[k]).abs() < 1e-5, "{k}: {} vs {}", j.h[k], h[k]);
            }
            let s = 1e-6;
            let gx = (f(p + Vec2::new(s, 0.0)).v - f(p - Vec2::new(s, 0.0)).v) / (2.0 * s);
            assert!((j.g.x - gx).abs() < 1e-8);
        }
    }

    #[test]
    fn manufactured_jumps_are_consistent() {
        let a: [JetField; 2] = [Arc::new(|_| Jet::constant(1.0)), Arc::new(|_| Jet::constant(3.0))];
        let u: [JetField; 2] = [Arc::new(|p| Jet::x(p) * Jet::y(p)), Arc::new(|p| Jet::x(p).exp())];
        let prob = Problem::manufactured("t", Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), Curve::circle(0.0, 0.0, 0.5), a, u, (1.0, 3.0))
            .unwrap();
        assert!(prob.consistency_defect(50, 1).unwrap() < 1e-10);
        let p = Vec2::new(0.1, 0.2);
        assert!((prob.source(Side::One, p)).abs() < 1e-15);
        assert!((prob.source(Side::Two, p) + 3.0 * p.x.exp()).abs() < 1e-14);
        let n = Vec2::new(1.0, 0.0);
        assert!((prob.g_n(p, n) - (p.y - 3.0 * p.x.exp())).abs() < 1e-14);
    }

    #[test]
    fn rejects_nonpositive_coefficient_bounds() {
        let a: [JetField; 2] = [Arc::new(|_| Jet::constant(1.0)), Arc::new(|_| Jet::constant(1.0))];
        let u: [JetField; 2] = [Arc::new(|_| Jet::constant(0.0)), Arc::new(|_| Jet::constant(0.0))];
        let r = Problem::manufactured("t", Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), Curve::circle(0.0, 0.0, 0.5), a, u, (0.0, 1.0));
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}
