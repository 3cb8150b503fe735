//! Independent oracles shared by the integration tests. Nothing here calls
//! the library's quadrature or basis code.
#![allow(dead_code)]

use ipfem::Vec2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton on `P_n`.
pub fn gauss(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut t = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, t);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * t * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let (pn, pn1) = if n == 1 { (t, 1.0) } else { (p1, p0) };
            let dp = n as f64 * (t * pn - pn1) / (t * t - 1.0);
            let dt = pn / dp;
            t -= dt;
            if dt.abs() < 1e-16 {
                w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
                break;
            }
            w[i] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        x[i] = t;
    }
    (x, w)
}

/// `∫_a^b f` by `n`-point Gauss.
pub fn integrate_1d(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let (x, w) = gauss(n);
    let (m, r) = (0.5 * (a + b), 0.5 * (b - a));
    x.iter().zip(&w).map(|(t, w)| w * r * f(m + r * t)).sum()
}

/// `∫ x^a y^b` over the rectangle `[x0, x1] × [y0, y1]`.
pub fn monomial_rect(a: u32, b: u32, x0: f64, x1: f64, y0: f64, y1: f64) -> f64 {
    let ix = (x1.powi(a as i32 + 1) - x0.powi(a as i32 + 1)) / (a + 1) as f64;
    let iy = (y1.powi(b as i32 + 1) - y0.powi(b as i32 + 1)) / (b + 1) as f64;
    ix * iy
}

/// `∫ x^a y^b` over `[x0, x1] × [y0, y1] ∩ {|z - c| < r}` by slicing in `x`
/// with the substitution `x = cx + r sin t`, which makes every piece between
/// breakpoints analytic.
pub fn monomial_rect_disk(a: u32, b: u32, x0: f64, x1: f64, y0: f64, y1: f64, c: Vec2, r: f64) -> f64 {
    let lo = (x0 - c.x).max(-r);
    let hi = (x1 - c.x).min(r);
    if lo >= hi {
        return 0.0;
    }
    let mut breaks = vec![lo, hi];
    for y in [y0, y1] {
        let d = y - c.y;
        if d.abs() < r {
            let s = (r * r - d * d).sqrt();
            for v in [-s, s] {
                if v > lo && v < hi {
                    breaks.push(v);
                }
            }
        }
    }
    breaks.sort_by(f64::total_cmp);
    let column = |t: f64| -> f64 {
        let x = c.x + r * t.sin();
        let half = r * t.cos();
        let top = (c.y + half).min(y1);
        let bot = (c.y - half).max(y0);
        if top <= bot {
            return 0.0;
        }
        let iy = (top.powi(b as i32 + 1) - bot.powi(b as i32 + 1)) / (b + 1) as f64;
        x.powi(a as i32) * iy * r * t.cos()
    };
    breaks
        .windows(2)
        .map(|w| integrate_1d(column, (w[0] / r).clamp(-1.0, 1.0).asin(), (w[1] / r).clamp(-1.0, 1.0).asin(), 40))
        .sum()
}

/// Fourth-order central first derivative along `dir`.
pub fn d1(f: &dyn Fn(Vec2) -> f64, p: Vec2, dir: Vec2, h: f64) -> f64 {
    let s = |k: f64| f(p + dir * (k * h));
    (-s(2.0) + 8.0 * s(1.0) - 8.0 * s(-1.0) + s(-2.0)) / (12.0 * h)
}

/// Fourth-order central second derivative along `dir`.
pub fn d2(f: &dyn Fn(Vec2) -> f64, p: Vec2, dir: Vec2, h: f64) -> f64 {
    let s = |k: f64| f(p + dir * (k * h));
    (-s(2.0) + 16.0 * s(1.0) - 30.0 * s(0.0) + 16.0 * s(-1.0) - s(-2.0)) / (12.0 * h * h)
}

/// `-∇·(a∇u) = -(aΔu + ∇a·∇u)` by finite differences.
pub fn fd_source(a: &dyn Fn(Vec2) -> f64, u: &dyn Fn(Vec2) -> f64, p: Vec2, h: f64) -> f64 {
    let (ex, ey) = (Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0));
    let lap = d2(u, p, ex, h) + d2(u, p, ey, h);
    let grad_dot = d1(a, p, ex, h) * d1(u, p, ex, h) + d1(a, p, ey, h) * d1(u, p, ey, h);
    -(a(p) * lap + grad_dot)
}

/// Deterministic random vector in `[-1, 1]^n`.
pub fn random_vector(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
}
