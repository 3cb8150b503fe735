//! Errors in `L²`, broken `H¹` and the two energy norms, and convergence
//! rates over mesh sweeps.
//!
//! Error integrals build their own quadrature rules; callers pick a point
//! count different from assembly so that kernel bugs do not cancel.

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::PenaltyParams;
use crate::discretization::Discretization;
use crate::interface::Side;
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::{segment_rule, volume_rule};
use crate::{Error, Result, Vec2};

/// Squared pieces of the norms of one piecewise function.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct NormTerms {
    pub l2_sq: f64,
    /// `Σ_i ‖a^{1/2} ∇v‖²_{Ω_i}`.
    pub energy_sq: f64,
    /// `Σ_e (γ₀ p²/h) ‖[v]‖²_e`.
    pub j0: f64,
    /// `Σ_e (γ₁ h/p²) ‖[a∇v·n]‖²_e`.
    pub j1: f64,
    /// `Σ_e (h/p²) ‖⟨a∇v·n⟩‖²_e`, to be divided by `γ₀`.
    pub average_flux: f64,
}

impl NormTerms {
    pub fn norm_a_sq(&self) -> f64 {
        self.energy_sq + self.j0 + self.j1
    }

    pub fn norm_b_sq(&self, gamma0: f64) -> Option<f64> {
        (gamma0 > 0.0).then(|| self.norm_a_sq() + self.average_flux / gamma0)
    }
}

impl std::ops::Add for NormTerms {
    type Output = NormTerms;
    fn add(self, o: NormTerms) -> NormTerms {
        NormTerms {
            l2_sq: self.l2_sq + o.l2_sq,
            energy_sq: self.energy_sq + o.energy_sq,
            j0: self.j0 + o.j0,
            j1: self.j1 + o.j1,
            average_flux: self.average_flux + o.average_flux,
        }
    }
}

/// Norm pieces of `u - v_h` (or of `v_h` alone when `exact` is `None`).
pub fn norm_terms(
    disc: &Discretization,
    problem: &Problem,
    params: &PenaltyParams,
    coeffs: &[f64],
    exact: Option<&ExactSolution>,
    n: usize,
) -> Result<NormTerms> {
    disc.check_coefficients(coeffs)?;
    let mesh = disc.mesh();
    let topo = disc.topology();
    let field = |side: Side, element: usize, x: Vec2| -> (f64, Vec2) {
        let (v, g) = disc.evaluate_on(coeffs, element, side, x);
        match exact {
            Some(e) => (e.value(side, x) - v, e.gradient(side, x) - g),
            None => (v, g),
        }
    };
    let volume: Vec<NormTerms> = (0..mesh.num_elements())
        .into_par_iter()
        .map(|k| -> Result<NormTerms> {
            let mut t = NormTerms::default();
            for side in Side::BOTH {
                let Some(rule) = volume_rule(mesh, topo, k, side, n)? else { continue };
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    let (v, g) = field(side, k, *x);
                    t.l2_sq += w * v * v;
                    t.energy_sq += w * problem.coefficient(side, *x) * g.norm_squared();
                }
            }
            Ok(t)
        })
        .collect::<Result<_>>()?;
    let p = disc.degree();
    let interface: Vec<NormTerms> = topo
        .segments()
        .par_iter()
        .map(|seg| {
            let h = mesh.geometry(seg.host).h;
            let rule = segment_rule(topo.curve(), seg, n.max(crate::quadrature::MIN_CURVED_POINTS));
            let mut t = NormTerms::default();
            for q in 0..rule.len() {
                let (x, nrm, w) = (rule.points[q], rule.normals[q], rule.weights[q]);
                let [(v1, g1), (v2, g2)] = Side::BOTH.map(|s| field(s, seg.element_for(s), x));
                let f1 = problem.coefficient(Side::One, x) * g1.dot(&nrm);
                let f2 = problem.coefficient(Side::Two, x) * g2.dot(&nrm);
                t.j0 += w * params.j0_weight(p, h) * (v1 - v2).powi(2);
                t.j1 += w * params.j1_weight(p, h) * (f1 - f2).powi(2);
                t.average_flux += w * h / (p * p) as f64 * (0.5 * (f1 + f2)).powi(2);
            }
            t
        })
        .collect();
    Ok(volume.into_iter().chain(interface).fold(NormTerms::default(), |a, b| a + b))
}

/// `|||v_h|||²` of the energy norm with volume, `J₀` and `J₁` parts.
pub fn broken_norm_sq(disc: &Discretization, problem: &Problem, params: &PenaltyParams, coeffs: &[f64], n: usize) -> Result<f64> {
    Ok(norm_terms(disc, problem, params, coeffs, None, n)?.norm_a_sq())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ErrorReport {
    pub l2: f64,
    pub h1_broken: f64,
    pub norm_a: f64,
    /// Reported only for `γ₀ > 0`.
    pub norm_b: Option<f64>,
    pub j0: f64,
    pub j1: f64,
    pub dofs: usize,
    pub h: f64,
    pub p: usize,
    pub gamma0: f64,
    pub gamma1: f64,
    pub beta: f64,
}

pub fn compute_errors(disc: &Discretization, problem: &Problem, params: &PenaltyParams, coeffs: &[f64], n: usize) -> Result<ErrorReport> {
    let exact = problem.exact()?;
    let t = norm_terms(disc, problem, params, coeffs, Some(exact), n)?;
    Ok(ErrorReport {
        l2: t.l2_sq.sqrt(),
        h1_broken: t.energy_sq.sqrt(),
        norm_a: t.norm_a_sq().sqrt(),
        norm_b: t.norm_b_sq(params.gamma0).map(f64::sqrt),
        j0: t.j0,
        j1: t.j1,
        dofs: disc.num_unknowns(),
        h: disc.h(),
        p: disc.degree(),
        gamma0: params.gamma0,
        gamma1: params.gamma1,
        beta: params.beta(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairRate {
    pub h_coarse: f64,
    pub h_fine: f64,
    pub l2: f64,
    pub h1_broken: f64,
    pub norm_a: f64,
    pub norm_b: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateSummary {
    pub p: usize,
    /// Least-squares slopes over the finest three levels.
    pub l2: f64,
    pub h1_broken: f64,
    pub norm_a: f64,
    pub norm_b: Option<f64>,
    pub pairwise: Vec<PairRate>,
}

/// Least-squares slope of `log e` against `log h`.
pub fn least_squares_slope(h: &[f64], e: &[f64]) -> f64 {
    let n = h.len() as f64;
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = e.iter().map(|v| v.ln()).collect();
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn pair_rate(ec: f64, ef: f64, hc: f64, hf: f64) -> f64 {
    (ec / ef).ln() / (hc / hf).ln()
}

pub fn estimate_rates(reports: &[ErrorReport]) -> Result<RateSummary> {
    if reports.len() < 3 {
        return Err(Error::InsufficientData(format!("rate estimation needs at least 3 levels, got {}", reports.len())));
    }
    let p = reports[0].p;
    if reports.iter().any(|r| r.p != p) {
        return Err(Error::InsufficientData("reports mix polynomial degrees".into()));
    }
    if reports.windows(2).any(|w| !(w[1].h < w[0].h)) {
        return Err(Error::InsufficientData("mesh sizes must be strictly decreasing".into()));
    }
    let fine = &reports[reports.len() - 3..];
    let h: Vec<f64> = fine.iter().map(|r| r.h).collect();
    let slope = |f: &dyn Fn(&ErrorReport) -> f64| least_squares_slope(&h, &fine.iter().map(f).collect::<Vec<_>>());
    let has_b = reports.iter().all(|r| r.norm_b.is_some());
    let pairwise = reports
        .windows(2)
        .map(|w| PairRate {
            h_coarse: w[0].h,
            h_fine: w[1].h,
            l2: pair_rate(w[0].l2, w[1].l2, w[0].h, w[1].h),
            h1_broken: pair_rate(w[0].h1_broken, w[1].h1_broken, w[0].h, w[1].h),
            norm_a: pair_rate(w[0].norm_a, w[1].norm_a, w[0].h, w[1].h),
            norm_b: match (w[0].norm_b, w[1].norm_b) {
                (Some(a), Some(b)) => Some(pair_rate(a, b, w[0].h, w[1].h)),
                _ => None,
            },
        })
        .collect();
    Ok(RateSummary {
        p,
        l2: slope(&|r| r.l2),
        h1_broken: slope(&|r| r.h1_broken),
        norm_a: slope(&|r| r.norm_a),
        norm_b: has_b.then(|| slope(&|r| r.norm_b.unwrap_or(f64::NAN))),
        pairwise,
    })
}
