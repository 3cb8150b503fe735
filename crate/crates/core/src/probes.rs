//! Numerical checks of the trace, inverse-trace and coercivity machinery,
//! and of the far-corner distance function `G`.
//!
//! Random draws are seeded per element from the run seed, so results do not
//! depend on thread scheduling, and all sampled functions are written in
//! element-local coordinates, so results are translation invariant.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble, interface_traces, AssemblyOptions, Method, PenaltyParams};
use crate::basis::BasisSet;
use crate::discretization::Discretization;
use crate::interface::{CutTopology, InterfaceSegment, Side};
use crate::mesh::Mesh;
use crate::problem::Problem;
use crate::quadrature::{segment_rule, tensor_rule, volume_rule, QuadRule2d};
use crate::{cross, Error, Result, Vec2};

/// Power iterations of the inverse-trace refinement.
pub const POWER_ITERATIONS: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ElementConstant {
    pub element: usize,
    pub analysis_side: u8,
    /// Max ratio over random draws.
    pub sampled: f64,
    /// Power-method estimate on the generalized eigenproblem.
    pub refined: f64,
    /// Power-method estimate with `a` weighting both norms.
    pub weighted: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub probe: &'static str,
    pub h: f64,
    pub p: usize,
    pub elements: Vec<ElementConstant>,
    pub max_sampled: f64,
    pub max_refined: f64,
    pub median_refined: f64,
    pub max_weighted: Option<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

fn element_seed(seed: u64, element: usize) -> u64 {
    seed ^ (element as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

/// Volume rule for `K^e ∩ Ω_{i_e}`: the cut rule of the host, or the full
/// element for a segment on a mesh edge.
fn analysis_region(mesh: &Mesh, topology: &CutTopology, seg: &InterfaceSegment, n: usize) -> Result<QuadRule2d> {
    match volume_rule(mesh, topology, seg.host, seg.analysis_side, n)? {
        Some(r) => Ok(r),
        None => Ok(tensor_rule(&mesh.geometry(seg.host), n)),
    }
}

fn report(probe: &'static str, h: f64, p: usize, elements: Vec<ElementConstant>) -> ProbeReport {
    let max = |f: &dyn Fn(&ElementConstant) -> f64| elements.iter().map(f).fold(f64::NEG_INFINITY, f64::max);
    let max_weighted = elements.iter().map(|e| e.weighted).collect::<Option<Vec<_>>>().map(|w| w.into_iter().fold(f64::NEG_INFINITY, f64::max));
    ProbeReport {
        probe,
        h,
        p,
        max_sampled: max(&|e| e.sampled),
        max_refined: max(&|e| e.refined),
        median_refined: median(elements.iter().map(|e| e.refined).collect()),
        max_weighted,
        elements,
    }
}

/// Mass matrices of the host's `P_p` basis on the segment and on the
/// analysis region, optionally `a`-weighted.
fn local_masses(
    mesh: &Mesh,
    topology: &CutTopology,
    seg: &InterfaceSegment,
    basis: &BasisSet,
    n: usize,
    weight: Option<&dyn Fn(Vec2) -> f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = mesh.geometry(seg.host);
    let nb = basis.num_functions();
    let mut v = vec![0.0; nb];
    let mut dv = vec![Vec2::zeros(); nb];
    let mut accumulate = |m: &mut DMatrix<f64>, x: Vec2, w: f64| {
        basis.eval(g.inverse_map(x), &mut v, &mut dv);
        let w = w * weight.map_or(1.0, |a| a(x));
        for i in 0..nb {
            for j in 0..nb {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    };
    let mut me = DMatrix::zeros(nb, nb);
    let sr = segment_rule(topology.curve(), seg, n.max(4));
    for (x, w) in sr.points.iter().zip(&sr.weights) {
        accumulate(&mut me, *x, *w);
    }
    let mut mk = DMatrix::zeros(nb, nb);
    let vr = analysis_region(mesh, topology, seg, n)?;
    for (x, w) in vr.points.iter().zip(&vr.weights) {
        accumulate(&mut mk, *x, *w);
    }
    Ok((me, mk))
}

/// Largest `λ` of `M_e v = λ M_K v` after [`POWER_ITERATIONS`] steps.
fn power_max(me: &DMatrix<f64>, mk: &DMatrix<f64>) -> Result<f64> {
    let chol = mk
        .clone()
        .cholesky()
        .ok_or_else(|| Error::EigenStagnation("region mass matrix is not positive definite".into()))?;
    let n = me.nrows();
    let mut v = DVector::from_fn(n, |i, _| 1.0 + (i % 3) as f64 * 0.1);
    let mut lambda = 0.0;
    for _ in 0..POWER_ITERATIONS {
        let w = chol.solve(&(me * &v));
        let num = v.dot(&(me * &v));
        let den = v.dot(&(mk * &v));
        lambda = num / den;
        let s = w.norm();
        if s == 0.0 || !s.is_finite() {
            return Err(Error::EigenStagnation("power iteration collapsed".into()));
        }
        v = w / s;
    }
    let num = v.dot(&(me * &v));
    let den = v.dot(&(mk * &v));
    Ok(lambda.max(num / den))
}

/// Inverse-trace constant `‖v‖_e h^{1/2} / (p ‖v‖_{K^e_{i_e}})` per segment,
/// maximized over `samples` random `v ∈ P_p(K^e)` and refined by the power
/// method. With a problem, the `a`-weighted constant is reported too.
pub fn probe_inverse_trace(
    mesh: &Mesh,
    topology: &CutTopology,
    p: usize,
    samples: usize,
    seed: u64,
    problem: Option<&Problem>,
) -> Result<ProbeReport> {
    let basis = BasisSet::new(p)?;
    let n = p + 3;
    let elements = topology
        .segments()
        .par_iter()
        .map(|seg| -> Result<ElementConstant> {
            let h = mesh.geometry(seg.host).h;
            let scale = h.sqrt() / p as f64;
            let (me, mk) = local_masses(mesh, topology, seg, &basis, n, None)?;
            let mut rng = ChaCha8Rng::seed_from_u64(element_seed(seed, seg.host));
            let mut sampled: f64 = 0.0;
            for _ in 0..samples {
                let c = DVector::from_fn(basis.num_functions(), |_, _| rng.random_range(-1.0..1.0));
                let den = c.dot(&(&mk * &c));
                if den > 0.0 {
                    sampled = sampled.max((c.dot(&(&me * &c)) / den).sqrt() * scale);
                }
            }
            let refined = power_max(&me, &mk)?.sqrt() * scale;
            let weighted = match problem {
                Some(prob) => {
                    let side = seg.analysis_side;
                    let a = move |x: Vec2| prob.coefficient(side, x);
                    let (mea, mka) = local_masses(mesh, topology, seg, &basis, n, Some(&a))?;
                    Some(power_max(&mea, &mka)?.sqrt() * scale)
                }
                None => None,
            };
            Ok(ElementConstant { element: seg.host, analysis_side: seg.analysis_side.label(), sampled, refined, weighted })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report("invtrace", mesh.h(), p, elements))
}

/// Trace-inequality ratio `‖v‖_e / (h^{-1/2} ‖v‖_K + ‖v‖_K^{1/2} ‖∇v‖_K^{1/2})`
/// on `K = K^e_{i_e}`, maximized over random quadratics and one oscillatory
/// field per segment.
pub fn probe_trace(mesh: &Mesh, topology: &CutTopology, samples: usize, seed: u64) -> Result<ProbeReport> {
    let n = 8;
    let elements = topology
        .segments()
        .par_iter()
        .map(|seg| -> Result<ElementConstant> {
            let g = mesh.geometry(seg.host);
            let (c, h) = (g.center(), g.h);
            let region = analysis_region(mesh, topology, seg, n)?;
            let sr = segment_rule(topology.curve(), seg, n);
            let mut rng = ChaCha8Rng::seed_from_u64(element_seed(seed, seg.host));
            let ratio = |f: &dyn Fn(Vec2) -> (f64, Vec2)| -> Option<f64> {
                let (mut v2, mut g2, mut e2) = (0.0, 0.0, 0.0);
                for (x, w) in region.points.iter().zip(&region.weights) {
                    let (v, d) = f(*x);
                    v2 += w * v * v;
                    g2 += w * d.norm_squared();
                }
                for (x, w) in sr.points.iter().zip(&sr.weights) {
                    e2 += w * f(*x).0.powi(2);
                }
                let (vk, gk) = (v2.sqrt(), g2.sqrt());
                (vk > 0.0).then(|| e2.sqrt() / (vk / h.sqrt() + (vk * gk).sqrt()))
            };
            let mut best: f64 = 0.0;
            for _ in 0..samples {
                let k: [f64; 6] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
                let quad = move |x: Vec2| {
                    let (s, t) = ((x.x - c.x) / h, (x.y - c.y) / h);
                    let v = k[0] + k[1] * s + k[2] * t + k[3] * s * s + k[4] * s * t + k[5] * t * t;
                    let d = Vec2::new(k[1] + 2.0 * k[3] * s + k[4] * t, k[2] + k[4] * s + 2.0 * k[5] * t) / h;
                    (v, d)
                };
                if let Some(r) = ratio(&quad) {
                    best = best.max(r);
                }
            }
            let freq = (4.0 / h).min(64.0);
            let osc = move |x: Vec2| {
                let (s, t) = (freq * (x.x - c.x), freq * (x.y - c.y));
                (s.sin() * t.cos(), freq * Vec2::new(s.cos() * t.cos(), -s.sin() * t.sin()))
            };
            if let Some(r) = ratio(&osc) {
                best = best.max(r);
            }
            Ok(ElementConstant { element: seg.host, analysis_side: seg.analysis_side.label(), sampled: best, refined: best, weighted: None })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(report("trace", mesh.h(), 0, elements))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentG {
    pub host: usize,
    pub far_corner: usize,
    /// `min_ξ G(ξ) / h_{K^e}`.
    pub min_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GReport {
    pub h: f64,
    pub segments: Vec<SegmentG>,
    pub min_ratio: f64,
}

/// `G(ξ) = |(r(ξ) - P) × r'(ξ)| / |r'(ξ)|` with `P` the host's far corner.
pub fn g_value(mesh: &Mesh, topology: &CutTopology, seg: &InterfaceSegment, xi: f64) -> f64 {
    let curve = topology.curve();
    let pc = mesh.geometry(seg.host).corners[seg.far_corner];
    let d = curve.derivative(xi);
    cross(curve.point(xi) - pc, d).abs() / d.norm()
}

pub fn probe_g(mesh: &Mesh, topology: &CutTopology, samples_per_segment: usize) -> GReport {
    let m = samples_per_segment.max(2);
    let segments: Vec<SegmentG> = topology
        .segments()
        .iter()
        .map(|seg| {
            let h = mesh.geometry(seg.host).h;
            let min = (0..m)
                .map(|k| seg.xi[0] + seg.param_length() * k as f64 / (m - 1) as f64)
                .map(|xi| g_value(mesh, topology, seg, xi))
                .fold(f64::INFINITY, f64::min);
            SegmentG { host: seg.host, far_corner: seg.far_corner, min_ratio: min / h }
        })
        .collect();
    let min_ratio = segments.iter().map(|s| s.min_ratio).fold(f64::INFINITY, f64::min);
    GReport { h: mesh.h(), segments, min_ratio }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityPoint {
    pub gamma0: f64,
    pub gamma1: f64,
    /// Smallest generalized eigenvalue of `(A, B)`; `NaN` when `B` is
    /// singular.
    pub min_quotient: f64,
    pub gram_singular: bool,
}

/// Smallest Rayleigh quotient of the SIP matrix against the energy Gram
/// matrix for each `(γ₀, γ₁)` on the grid, by a dense symmetric eigensolve.
pub fn probe_coercivity(disc: &Discretization, problem: &Problem, grid: &[(f64, f64)], opts: AssemblyOptions) -> Result<Vec<CoercivityPoint>> {
    grid.iter()
        .map(|&(gamma0, gamma1)| {
            let params = PenaltyParams::new(Method::Sip, gamma0, gamma1)?;
            let sys = assemble(disc, problem, &params, opts)?;
            let a = sys.matrix.to_dense();
            let b = sys.energy_gram()?.to_dense();
            let a = 0.5 * (&a + a.transpose());
            let b = 0.5 * (&b + b.transpose());
            let Some(chol) = b.cholesky() else {
                return Ok(CoercivityPoint { gamma0, gamma1, min_quotient: f64::NAN, gram_singular: true });
            };
            let l = chol.l();
            let linv = l
                .clone()
                .solve_lower_triangular(&DMatrix::identity(a.nrows(), a.nrows()))
                .ok_or_else(|| Error::EigenStagnation("triangular inverse failed".into()))?;
            let c = &linv * a * linv.transpose();
            let c = 0.5 * (&c + c.transpose());
            let eig = nalgebra::SymmetricEigen::new(c);
            let min = eig.eigenvalues.min();
            if !min.is_finite() {
                return Err(Error::EigenStagnation(format!("non-finite eigenvalue at gamma0={gamma0}, gamma1={gamma1}")));
            }
            Ok(CoercivityPoint { gamma0, gamma1, min_quotient: min, gram_singular: false })
        })
        .collect()
}

/// Max over segment points of the defect of
/// `⟨a∇v·n⟩ = (a∇v)|_{i_e}·n + ((-1)^{i_e}/2) [a∇v·n]`, relative to
/// `max(1, |flux|)`.
pub fn average_identity_defect(disc: &Discretization, problem: &Problem, coeffs: &[f64], n: usize) -> Result<f64> {
    disc.check_coefficients(coeffs)?;
    let topo = disc.topology();
    let mut worst: f64 = 0.0;
    for seg in topo.segments() {
        let rule = segment_rule(topo.curve(), seg, n);
        for (x, nrm) in rule.points.iter().zip(&rule.normals) {
            let (_, f) = interface_traces(disc, problem, coeffs, seg, *x, *nrm);
            let avg = 0.5 * (f[0] + f[1]);
            let jump = f[0] - f[1];
            let (own, sign) = match seg.analysis_side {
                Side::One => (f[0], -1.0),
                Side::Two => (f[1], 1.0),
            };
            let rhs = own + sign * 0.5 * jump;
            worst = worst.max((avg - rhs).abs() / 1f64.max(f[0].abs()).max(f[1].abs()));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::interface::{classify_elements, ClassifyOptions};
    use crate::mesh::Rect;
    use crate::Curve;

    fn circle_setup(n: usize) -> (Mesh, CutTopology) {
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), n, n).unwrap();
        let topo = classify_elements(&mesh, &Curve::circle(0.0, 0.0, 0.5), ClassifyOptions::default()).unwrap();
        (mesh, topo)
    }

    #[test]
    fn aligned_constant_inverse_trace() {
        // Segment of length h on a mesh edge, region = whole host of area h².
        let mesh = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 4, 4).unwrap();
        let curve = Curve::line(Vec2::new(0.0, -1.0), Vec2::new(0.0, 1.0));
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        let seg = topo.segments()[0];
        let basis = BasisSet::new(1).unwrap();
        let (me, mk) = local_masses(&mesh, &topo, &seg, &basis, 4, None).unwrap();
        let one = DVector::from_element(4, 1.0);
        let side: f64 = 0.5;
        let ratio = (one.dot(&(&me * &one)) / one.dot(&(&mk * &one))).sqrt();
        assert!((ratio - (side / (side * side)).sqrt()).abs() < 1e-13);
    }

    #[test]
    fn inverse_trace_is_positive_and_stable_in_h() {
        let (m8, t8) = circle_setup(8);
        let (m16, t16) = circle_setup(16);
        let r8 = probe_inverse_trace(&m8, &t8, 2, 10, 1, None).unwrap();
        let r16 = probe_inverse_trace(&m16, &t16, 2, 10, 1, None).unwrap();
        assert!(r8.max_refined > 0.0 && r8.max_refined.is_finite());
        assert!(r8.elements.iter().all(|e| e.sampled <= e.refined * (1.0 + 1e-9)));
        let q = r16.max_refined / r8.max_refined;
        assert!(q > 0.5 && q < 2.0, "ratio {q}");
    }

    #[test]
    fn g_for_straight_line_is_corner_distance() {
        let mesh = Mesh::new(Rect::from_bounds(0.0, 0.0, 1.0, 1.0), 1, 1).unwrap();
        // x = 0.4 through the single element, Ω₁ to the left.
        let curve = Curve::line(Vec2::new(0.4, 0.0), Vec2::new(0.4, 1.0));
        let topo = classify_elements(&mesh, &curve, ClassifyOptions::default()).unwrap();
        let seg = topo.segments()[0];
        for xi in [0.1, 0.5, 0.9] {
            assert!((g_value(&mesh, &topo, &seg, xi) - 0.6).abs() < 1e-14);
        }
        assert_eq!(seg.analysis_side, Side::Two);
    }

    #[test]
    fn g_bounded_below_for_circle() {
        let (mesh, topo) = circle_setup(16);
        let g = probe_g(&mesh, &topo, 32);
        assert!(g.min_ratio >= 0.2, "{}", g.min_ratio);
    }

    #[test]
    fn trace_ratio_is_finite() {
        let (mesh, topo) = circle_setup(8);
        let r = probe_trace(&mesh, &topo, 5, 3).unwrap();
        assert!(r.elements.iter().all(|e| e.sampled > 0.0 && e.sampled.is_finite()));
    }
}
