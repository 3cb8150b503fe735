//! Hierarchical tensor-product basis on the reference square `[-1, 1]²`.
//!
//! 1D local index 0 and 1 are the left and right hats, index `k ≥ 2` is the
//! integrated Legendre bubble `sqrt((2k-1)/2) ∫_{-1}^ξ P_{k-1}`. The 2D
//! function with 1D indices `(a, b)` has local index `b (p + 1) + a`.

use crate::{Error, Result, Vec2};

pub const MAX_DEGREE: usize = 10;

/// Values and derivatives of the `p + 1` 1D shape functions at `xi`.
pub fn shape_1d(p: usize, xi: f64, values: &mut [f64], derivs: &mut [f64]) {
    debug_assert!(values.len() > p && derivs.len() > p);
    values[0] = 0.5 * (1.0 - xi);
    values[1] = 0.5 * (1.0 + xi);
    derivs[0] = -0.5;
    derivs[1] = 0.5;
    if p < 2 {
        return;
    }
    // legendre[k] = P_k(xi)
    let mut legendre = [0.0; MAX_DEGREE + 1];
    legendre[0] = 1.0;
    legendre[1] = xi;
    for k in 2..=p {
        legendre[k] = ((2 * k - 1) as f64 * xi * legendre[k - 1] - (k - 1) as f64 * legendre[k - 2]) / k as f64;
    }
    for k in 2..=p {
        let c = ((2 * k - 1) as f64 / 2.0).sqrt();
        values[k] = c * (legendre[k] - legendre[k - 2]) / (2 * k - 1) as f64;
        derivs[k] = c * legendre[k - 1];
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BasisSet {
    p: usize,
}

impl BasisSet {
    pub fn new(p: usize) -> Result<Self> {
        if p == 0 || p > MAX_DEGREE {
            return Err(Error::InvalidArgument(format!("polynomial degree {p} outside 1..={MAX_DEGREE}")));
        }
        Ok(Self { p })
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn num_functions(&self) -> usize {
        (self.p + 1) * (self.p + 1)
    }

    pub fn local_index(&self, a: usize, b: usize) -> usize {
        b * (self.p + 1) + a
    }

    /// Values and reference gradients of all functions at `r`.
    pub fn eval(&self, r: Vec2, values: &mut [f64], grads: &mut [Vec2]) {
        let n1 = self.p + 1;
        let mut vx = [0.0; MAX_DEGREE + 1];
        let mut dx = [0.0; MAX_DEGREE + 1];
        let mut vy = [0.0; MAX_DEGREE + 1];
        let mut dy = [0.0; MAX_DEGREE + 1];
        shape_1d(self.p, r.x, &mut vx, &mut dx);
        shape_1d(self.p, r.y, &mut vy, &mut dy);
        for b in 0..n1 {
            for a in 0..n1 {
                let i = b * n1 + a;
                values[i] = vx[a] * vy[b];
                grads[i] = Vec2::new(dx[a] * vy[b], vx[a] * dy[b]);
            }
        }
    }

    pub fn values(&self, r: Vec2) -> Vec<f64> {
        let mut v = vec![0.0; self.num_functions()];
        let mut g = vec![Vec2::zeros(); self.num_functions()];
        self.eval(r, &mut v, &mut g);
        v
    }

    pub fn gradients(&self, r: Vec2) -> Vec<Vec2> {
        let mut v = vec![0.0; self.num_functions()];
        let mut g = vec![Vec2::zeros(); self.num_functions()];
        self.eval(r, &mut v, &mut g);
        g
    }
}
