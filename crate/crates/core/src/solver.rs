//! Linear solves for assembled systems: a Jacobi-scaled sparse LU with
//! iterative refinement, Jacobi-preconditioned CG and restarted GMRES.

use std::fmt;
use std::str::FromStr;

use faer::linalg::solvers::Solve;
use serde::{Deserialize, Serialize};

use crate::assembly::AssembledSystem;
use crate::sparse::{dot, norm2, CsrMatrix};
use crate::{Error, Result};

/// Relative residual every successful solve must reach.
pub const RESIDUAL_CONTRACT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMethod {
    Direct,
    Cg,
    Gmres,
}

impl SolveMethod {
    pub fn name(self) -> &'static str {
        match self {
            SolveMethod::Direct => "direct",
            SolveMethod::Cg => "cg",
            SolveMethod::Gmres => "gmres",
        }
    }
}

impl fmt::Display for SolveMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SolveMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "direct" => Ok(SolveMethod::Direct),
            "cg" => Ok(SolveMethod::Cg),
            "gmres" => Ok(SolveMethod::Gmres),
            other => Err(Error::InvalidArgument(format!("unknown solver '{other}' (expected direct, cg or gmres)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    pub method: SolveMethod,
    /// Relative residual target of the iterative paths.
    pub tol: f64,
    /// Iteration cap of the iterative paths; `None` means `10 n + 100`.
    pub max_iter: Option<usize>,
    pub restart: usize,
    pub estimate_condition: bool,
    /// Attempt a Cholesky factorization of symmetric systems.
    pub check_definiteness: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self { method: SolveMethod::Direct, tol: 1e-12, max_iter: None, restart: 50, estimate_condition: false, check_definiteness: false }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub solution: Vec<f64>,
    /// `‖A x - b‖₂ / ‖b‖₂`, or the absolute residual when `b = 0`.
    pub residual: f64,
    pub method: SolveMethod,
    pub iterations: usize,
    /// 2-norm condition number of the Jacobi-scaled matrix.
    pub condition_estimate: Option<f64>,
    pub positive_definite: Option<bool>,
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    let ax = a.mul_vec(x);
    let r: Vec<f64> = ax.iter().zip(b).map(|(p, q)| p - q).collect();
    let nb = norm2(b);
    if nb == 0.0 {
        norm2(&r)
    } else {
        norm2(&r) / nb
    }
}

/// Symmetric scaling `D A D` with `D = diag(|a_ii|^{-1/2})`.
pub fn jacobi_scale(a: &CsrMatrix) -> Result<(CsrMatrix, Vec<f64>)> {
    let d = a.diagonal();
    let mut s = Vec::with_capacity(d.len());
    for (row, v) in d.iter().enumerate() {
        if *v == 0.0 || !v.is_finite() {
            return Err(Error::ZeroDiagonal { row });
        }
        s.push(1.0 / v.abs().sqrt());
    }
    Ok((a.scaled_rows_cols(&s, &s), s))
}

fn to_col(v: &[f64]) -> faer::Col<f64> {
    faer::Col::from_fn(v.len(), |i| v[i])
}

fn from_col(c: &faer::Col<f64>) -> Vec<f64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

struct Factored {
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl Factored {
    fn new(a: &CsrMatrix) -> Result<Self> {
        let lu = a.to_faer()?.sp_lu().map_err(|e| Error::SingularMatrix(format!("LU factorization failed: {e:?}")))?;
        Ok(Self { lu })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        from_col(&self.lu.solve(&to_col(b)))
    }
}

/// Direct solve with Jacobi scaling and up to two refinement steps.
pub fn direct_solve(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let (x, _) = direct_with_scaling(a, b)?;
    Ok(x)
}

fn direct_with_scaling(a: &CsrMatrix, b: &[f64]) -> Result<(Vec<f64>, f64)> {
    if a.nrows() != a.ncols() || a.nrows() != b.len() {
        return Err(Error::InvalidArgument("system dimensions disagree".into()));
    }
    let (scaled, s) = jacobi_scale(a)?;
    let lu = Factored::new(&scaled)?;
    let solve = |rhs: &[f64]| -> Vec<f64> {
        let sb: Vec<f64> = rhs.iter().zip(&s).map(|(v, d)| v * d).collect();
        lu.solve(&sb).iter().zip(&s).map(|(v, d)| v * d).collect()
    };
    let mut x = solve(b);
    let mut res = relative_residual(a, &x, b);
    for _ in 0..2 {
        if !x.iter().all(|v| v.is_finite()) || res <= 1e-14 {
            break;
        }
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let dx = solve(&r);
        let trial: Vec<f64> = x.iter().zip(&dx).map(|(p, q)| p + q).collect();
        let tres = relative_residual(a, &trial, b);
        if tres < res {
            x = trial;
            res = tres;
        } else {
            break;
        }
    }
    if !x.iter().all(|v| v.is_finite()) || !res.is_finite() {
        return Err(Error::SingularMatrix("factorization produced non-finite values".into()));
    }
    if res > RESIDUAL_CONTRACT {
        return Err(Error::SingularMatrix(format!("relative residual {res:e} after refinement exceeds {RESIDUAL_CONTRACT:e}")));
    }
    Ok((x, res))
}

/// Jacobi-preconditioned conjugate gradients.
pub fn cg(a: &CsrMatrix, b: &[f64], tol: f64, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let d = a.diagonal();
    if let Some(row) = d.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroDiagonal { row });
    }
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&d).map(|(r, d)| r / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::ConvergenceFailure(format!("CG breakdown at iteration {it}: pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        if norm2(&r) <= tol * nb {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] / d[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::ConvergenceFailure(format!(
        "CG reached {max_iter} iterations with relative residual {:e}",
        norm2(&r) / nb
    )))
}

/// Restarted GMRES with right Jacobi preconditioning.
pub fn gmres(a: &CsrMatrix, b: &[f64], tol: f64, restart: usize, max_iter: usize) -> Result<(Vec<f64>, usize)> {
    let n = b.len();
    let d = a.diagonal();
    if let Some(row) = d.iter().position(|v| *v == 0.0) {
        return Err(Error::ZeroDiagonal { row });
    }
    let nb = norm2(b);
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok((x, 0));
    }
    let m = restart.max(1);
    let mut total = 0;
    loop {
        let ax = a.mul_vec(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
        let beta = norm2(&r);
        if beta <= tol * nb {
            return Ok((x, total));
        }
        if total >= max_iter {
            return Err(Error::ConvergenceFailure(format!(
                "GMRES reached {max_iter} iterations with relative residual {:e}",
                beta / nb
            )));
        }
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|e| e / beta).collect()];
        let mut h = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k_used = 0;
        for k in 0..m {
            total += 1;
            let zk: Vec<f64> = v[k].iter().zip(&d).map(|(e, d)| e / d).collect();
            let mut w = a.mul_vec(&zk);
            for j in 0..=k {
                h[j][k] = dot(&w, &v[j]);
                for i in 0..n {
                    w[i] -= h[j][k] * v[j][i];
                }
            }
            h[k + 1][k] = norm2(&w);
            for j in 0..k {
                let t = cs[j] * h[j][k] + sn[j] * h[j + 1][k];
                h[j + 1][k] = -sn[j] * h[j][k] + cs[j] * h[j + 1][k];
                h[j][k] = t;
            }
            let den = h[k][k].hypot(h[k + 1][k]);
            if den == 0.0 {
                return Err(Error::ConvergenceFailure("GMRES breakdown: zero Hessenberg column".into()));
            }
            cs[k] = h[k][k] / den;
            sn[k] = h[k + 1][k] / den;
            h[k][k] = den;
            h[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            k_used = k + 1;
            let hk1 = norm2(&w);
            if g[k + 1].abs() <= tol * nb || total >= max_iter || hk1 == 0.0 {
                break;
            }
            v.push(w.iter().map(|e| e / hk1).collect());
        }
        let mut y = vec![0.0; k_used];
        for i in (0..k_used).rev() {
            let mut s = g[i];
            for j in i + 1..k_used {
                s -= h[i][j] * y[j];
            }
            y[i] = s / h[i][i];
        }
        for j in 0..k_used {
            for i in 0..n {
                x[i] += y[j] * v[j][i] / d[i];
            }
        }
    }
}

/// `σ_max / σ_min` of `A` by power iteration on `AᵀA` and on `(AᵀA)⁻¹`.
pub fn condition_estimate(a: &CsrMatrix, iterations: usize) -> Result<f64> {
    let n = a.nrows();
    if n == 0 {
        return Ok(1.0);
    }
    let at = a.transpose();
    let lu = Factored::new(a)?;
    let lut = Factored::new(&at)?;
    let start: Vec<f64> = (0..n).map(|i| 1.0 + ((i * 7919) % 13) as f64 / 13.0).collect();
    let normalize = |v: &mut Vec<f64>| {
        let s = norm2(v);
        v.iter_mut().for_each(|e| *e /= s);
        s
    };
    let mut v = start.clone();
    normalize(&mut v);
    let mut smax2 = 0.0;
    for _ in 0..iterations {
        let mut w = at.mul_vec(&a.mul_vec(&v));
        smax2 = normalize(&mut w);
        v = w;
    }
    let mut v = start;
    normalize(&mut v);
    let mut inv2 = 0.0;
    for _ in 0..iterations {
        let mut w = lu.solve(&lut.solve(&v));
        inv2 = normalize(&mut w);
        v = w;
    }
    let c = (smax2 * inv2).sqrt();
    if c.is_finite() {
        Ok(c)
    } else {
        Err(Error::SingularMatrix("condition estimate is not finite".into()))
    }
}

pub fn solve_matrix(a: &CsrMatrix, b: &[f64], symmetric: bool, opts: &SolveOptions) -> Result<SolveReport> {
    let n = b.len();
    if n == 0 || a.nrows() != n || a.ncols() != n {
        return Err(Error::InvalidArgument(format!("cannot solve a {}x{} system with {} right-hand side entries", a.nrows(), a.ncols(), n)));
    }
    let max_iter = opts.max_iter.unwrap_or(10 * n + 100);
    let (solution, iterations) = match opts.method {
        SolveMethod::Direct => (direct_with_scaling(a, b)?.0, 0),
        SolveMethod::Cg => {
            if !symmetric {
                return Err(Error::InvalidArgument("cg requires a symmetric system".into()));
            }
            cg(a, b, opts.tol, max_iter)?
        }
        SolveMethod::Gmres => gmres(a, b, opts.tol, opts.restart, max_iter)?,
    };
    let residual = relative_residual(a, &solution, b);
    if !(residual <= RESIDUAL_CONTRACT) {
        return Err(Error::ConvergenceFailure(format!("{} solve ended with relative residual {residual:e}", opts.method)));
    }
    let condition_estimate = if opts.estimate_condition {
        Some(condition_estimate(&jacobi_scale(a)?.0, 60)?)
    } else {
        None
    };
    let positive_definite = if opts.check_definiteness && symmetric { Some(is_positive_definite(a)?) } else { None };
    Ok(SolveReport { solution, residual, method: opts.method, iterations, condition_estimate, positive_definite })
}

/// Whether a sparse Cholesky factorization of the Jacobi-scaled symmetric
/// matrix succeeds.
pub fn is_positive_definite(a: &CsrMatrix) -> Result<bool> {
    if a.diagonal().iter().any(|v| *v <= 0.0) {
        return Ok(false);
    }
    let (scaled, _) = jacobi_scale(a)?;
    Ok(scaled.to_faer()?.sp_cholesky(faer::Side::Lower).is_ok())
}

pub fn solve(system: &AssembledSystem, opts: &SolveOptions) -> Result<SolveReport> {
    solve_matrix(&system.matrix, &system.rhs, system.symmetric, opts)
}
