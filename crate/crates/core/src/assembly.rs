//! Sparse assembly of `a_h(u, v) = F_h(v)`.
//!
//! Rows index test functions, columns trial functions. On every interface
//! segment `[v] = v₁ - v₂` and `⟨w⟩ = (w₁ + w₂) / 2` with `n` pointing into
//! `Ω₂`; copy `i` is traced from `segment.element_for(i)`. The penalty
//! weights use the host element diameter `h_{K^e}` and the global degree.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::discretization::Discretization;
use crate::interface::{InterfaceSegment, Side};
use crate::problem::Problem;
use crate::quadrature::{segment_rule, volume_rule};
use crate::sparse::CsrMatrix;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Sip,
    Nip,
}

impl Method {
    pub fn beta(self) -> f64 {
        match self {
            Method::Sip => 1.0,
            Method::Nip => -1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Sip => "sip",
            Method::Nip => "nip",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sip" => Ok(Method::Sip),
            "nip" => Ok(Method::Nip),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}' (expected sip or nip)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PenaltyParams {
    pub method: Method,
    pub gamma0: f64,
    pub gamma1: f64,
}

impl PenaltyParams {
    pub fn new(method: Method, gamma0: f64, gamma1: f64) -> Result<Self> {
        let params = Self { method, gamma0, gamma1 };
        params.validate()?;
        Ok(params)
    }

    /// `γ₀ = 20 (1 + max a / min a)`, `γ₁ = 1` for SIP; `γ₀ = γ₁ = 1` for NIP.
    pub fn defaults(method: Method, problem: &Problem) -> Self {
        let (lo, hi) = problem.coefficient_bounds;
        match method {
            Method::Sip => Self { method, gamma0: 20.0 * (1.0 + hi / lo), gamma1: 1.0 },
            Method::Nip => Self { method, gamma0: 1.0, gamma1: 1.0 },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0 && self.gamma1.is_finite() && self.gamma1 >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "penalties must be finite and nonnegative, got gamma0={}, gamma1={}",
                self.gamma0, self.gamma1
            )));
        }
        Ok(())
    }

    pub fn beta(&self) -> f64 {
        self.method.beta()
    }

    /// `γ₀ p² / h`.
    pub fn j0_weight(&self, p: usize, h: f64) -> f64 {
        self.gamma0 * (p * p) as f64 / h
    }

    /// `γ₁ h / p²`.
    pub fn j1_weight(&self, p: usize, h: f64) -> f64 {
        self.gamma1 * h / (p * p) as f64
    }

    /// SIP warning when `γ₀ γ₁` falls below a coercivity estimate `α₀`.
    pub fn coercivity_warning(&self, alpha0: f64) -> Option<String> {
        (self.method == Method::Sip && self.gamma0 * self.gamma1 < alpha0).then(|| {
            format!("gamma0*gamma1 = {} is below the coercivity estimate {alpha0}", self.gamma0 * self.gamma1)
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    /// Added to the default `p + 2` points per direction.
    pub quad_extra: usize,
}

impl AssemblyOptions {
    pub fn volume_points(&self, p: usize) -> usize {
        p + 2 + self.quad_extra
    }

    /// Interface traces are not polynomial in the curve parameter; use at
    /// least as many points as the curved direction of cut cells.
    pub fn segment_points(&self, p: usize) -> usize {
        self.volume_points(p).max(crate::quadrature::MIN_CURVED_POINTS)
    }
}

/// The five load contributions, each over the unknowns.
#[derive(Debug, Clone, PartialEq)]
pub struct LoadTerms {
    /// `∫ f v`.
    pub source: Vec<f64>,
    /// `∫_Γ g_N ⟨v⟩`.
    pub flux_average: Vec<f64>,
    /// `-β ∫_Γ g_D ⟨a∇v·n⟩`.
    pub dirichlet_flux: Vec<f64>,
    /// `J_D(v)`.
    pub j_d: Vec<f64>,
    /// `J_N(v)`.
    pub j_n: Vec<f64>,
}

impl LoadTerms {
    fn zeros(n: usize) -> Self {
        Self { source: vec![0.0; n], flux_average: vec![0.0; n], dirichlet_flux: vec![0.0; n], j_d: vec![0.0; n], j_n: vec![0.0; n] }
    }

    pub fn total(&self) -> Vec<f64> {
        (0..self.source.len())
            .map(|i| self.source[i] + self.flux_average[i] + self.dirichlet_flux[i] + self.j_d[i] + self.j_n[i])
            .collect()
    }
}

/// Interface blocks: consistency/adjoint terms, `J₀`, `J₁`.
#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceBlocks {
    pub interface: CsrMatrix,
    pub j0: CsrMatrix,
    pub j1: CsrMatrix,
}

#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub symmetric: bool,
    pub params: PenaltyParams,
    pub volume: CsrMatrix,
    pub interface: CsrMatrix,
    pub j0: CsrMatrix,
    pub j1: CsrMatrix,
    pub load: LoadTerms,
}

impl AssembledSystem {
    pub fn size(&self) -> usize {
        self.rhs.len()
    }

    /// Gram matrix of the energy norm: volume + `J₀` + `J₁`.
    pub fn energy_gram(&self) -> Result<CsrMatrix> {
        self.volume.add(&self.j0)?.add(&self.j1)
    }

    /// `‖A - Aᵀ‖_max / ‖A‖_max`.
    pub fn relative_asymmetry(&self) -> f64 {
        let m = self.matrix.max_abs();
        if m == 0.0 {
            0.0
        } else {
            self.matrix.symmetry_defect() / m
        }
    }
}

/// Copy-`side` basis traces at an interface point: unknown, value and
/// normal flux `a∇φ·n` per local function.
#[derive(Debug, Clone)]
pub(crate) struct CopyTrace {
    pub unknowns: Vec<Option<usize>>,
    pub values: Vec<f64>,
    pub fluxes: Vec<f64>,
}

pub(crate) fn copy_trace(disc: &Discretization, problem: &Problem, element: usize, side: Side, x: Vec2, n: Vec2) -> CopyTrace {
    let basis = disc.space().dofmap().basis();
    let nb = basis.num_functions();
    let g = disc.mesh().geometry(element);
    let jac = g.jacobian();
    let mut values = vec![0.0; nb];
    let mut grads = vec![Vec2::zeros(); nb];
    basis.eval(g.inverse_map(x), &mut values, &mut grads);
    let a = problem.coefficient(side, x);
    let fluxes = grads.iter().map(|d| a * (d.x / jac.x * n.x + d.y / jac.y * n.y)).collect();
    CopyTrace { unknowns: disc.space().local_unknowns(element, side), values, fluxes }
}

/// Traces of both copies of `coeffs` at an interface point, through the same
/// basis kernel as assembly: `(values, normal fluxes a∇v·n)` per copy.
pub fn interface_traces(
    disc: &Discretization,
    problem: &Problem,
    coeffs: &[f64],
    seg: &InterfaceSegment,
    x: Vec2,
    n: Vec2,
) -> ([f64; 2], [f64; 2]) {
    let mut value = [0.0; 2];
    let mut flux = [0.0; 2];
    for s in Side::BOTH {
        let t = copy_trace(disc, problem, seg.element_for(s), s, x, n);
        for i in 0..t.values.len() {
            if let Some(u) = t.unknowns[i] {
                value[s.index()] += coeffs[u] * t.values[i];
                flux[s.index()] += coeffs[u] * t.fluxes[i];
            }
        }
    }
    (value, flux)
}

type Triplets = Vec<(usize, usize, f64)>;

fn check_consistent(disc: &Discretization, problem: &Problem) -> Result<()> {
    if disc.topology().curve() != &problem.curve {
        return Err(Error::InvalidArgument("discretization was built for a different interface".into()));
    }
    Ok(())
}

/// `Σ_i ∫_{Ω_i} a∇u·∇v` with `n` Gauss points per direction.
pub fn assemble_volume(disc: &Discretization, problem: &Problem, n: usize) -> Result<CsrMatrix> {
    check_consistent(disc, problem)?;
    let size = disc.num_unknowns();
    let blocks: Vec<Triplets> = (0..disc.mesh().num_elements())
        .into_par_iter()
        .map(|k| volume_element(disc, problem, k, n).map(|(t, _)| t))
        .collect::<Result<_>>()?;
    CsrMatrix::from_triplets(size, size, blocks.into_iter().flatten().collect())
}

fn volume_element(disc: &Discretization, problem: &Problem, k: usize, n: usize) -> Result<(Triplets, Vec<(usize, f64)>)> {
    let mesh = disc.mesh();
    let basis = disc.space().dofmap().basis();
    let nb = basis.num_functions();
    let g = mesh.geometry(k);
    let jac = g.jacobian();
    let mut v = vec![0.0; nb];
    let mut dv = vec![Vec2::zeros(); nb];
    let mut grads = vec![Vec2::zeros(); nb];
    let mut triplets = Vec::new();
    let mut load = Vec::new();
    for side in Side::BOTH {
        let Some(rule) = volume_rule(mesh, disc.topology(), k, side, n)? else { continue };
        let locals = disc.space().local_unknowns(k, side);
        let mut elem = vec![0.0; nb * nb];
        let mut rhs = vec![0.0; nb];
        for (x, w) in rule.points.iter().zip(&rule.weights) {
            basis.eval(g.inverse_map(*x), &mut v, &mut dv);
            for (gr, d) in grads.iter_mut().zip(&dv) {
                *gr = Vec2::new(d.x / jac.x, d.y / jac.y);
            }
            let wa = w * problem.coefficient(side, *x);
            let wf = w * problem.source(side, *x);
            for a in 0..nb {
                rhs[a] += wf * v[a];
                for b in 0..nb {
                    elem[a * nb + b] += wa * grads[a].dot(&grads[b]);
                }
            }
        }
        for (a, ua) in locals.iter().enumerate() {
            let Some(ua) = *ua else { continue };
            load.push((ua, rhs[a]));
            for (b, ub) in locals.iter().enumerate() {
                if let Some(ub) = *ub {
                    triplets.push((ua, ub, elem[a * nb + b]));
                }
            }
        }
    }
    Ok((triplets, load))
}

#[derive(Default)]
struct SegmentBlocks {
    interface: Triplets,
    j0: Triplets,
    j1: Triplets,
    flux_average: Vec<(usize, f64)>,
    dirichlet_flux: Vec<(usize, f64)>,
    j_d: Vec<(usize, f64)>,
    j_n: Vec<(usize, f64)>,
}

fn segment_blocks(
    disc: &Discretization,
    problem: &Problem,
    params: &PenaltyParams,
    seg: &InterfaceSegment,
    n: usize,
) -> SegmentBlocks {
    let p = disc.degree();
    let h = disc.mesh().geometry(seg.host).h;
    let (w0, w1, beta) = (params.j0_weight(p, h), params.j1_weight(p, h), params.beta());
    let rule = segment_rule(disc.topology().curve(), seg, n);
    let mut out = SegmentBlocks::default();
    for q in 0..rule.len() {
        let (x, nrm, w) = (rule.points[q], rule.normals[q], rule.weights[q]);
        let traces = Side::BOTH.map(|s| copy_trace(disc, problem, seg.element_for(s), s, x, nrm));
        // (unknown, jump, average flux, flux jump, average value)
        let mut funcs = Vec::new();
        for (s, t) in Side::BOTH.iter().zip(&traces) {
            let sign = s.jump_sign();
            for i in 0..t.values.len() {
                if let Some(u) = t.unknowns[i] {
                    funcs.push((u, sign * t.values[i], 0.5 * t.fluxes[i], sign * t.fluxes[i], 0.5 * t.values[i]));
                }
            }
        }
        let (gd, gn) = (problem.g_d(x), problem.g_n(x, nrm));
        for &(ut, jt, at, ft, vt) in &funcs {
            out.flux_average.push((ut, w * gn * vt));
            out.dirichlet_flux.push((ut, -beta * w * gd * at));
            out.j_d.push((ut, w * w0 * gd * jt));
            out.j_n.push((ut, w * w1 * gn * ft));
            for &(us, js, as_, fs, _) in &funcs {
                out.interface.push((ut, us, -w * (as_ * jt + beta * js * at)));
                out.j0.push((ut, us, w * w0 * js * jt));
                out.j1.push((ut, us, w * w1 * fs * ft));
            }
        }
    }
    out
}

fn all_segment_blocks(disc: &Discretization, problem: &Problem, params: &PenaltyParams, n: usize) -> Result<Vec<SegmentBlocks>> {
    check_consistent(disc, problem)?;
    params.validate()?;
    Ok(disc.topology().segments().par_iter().map(|s| segment_blocks(disc, problem, params, s, n)).collect())
}

/// Consistency/adjoint-consistency terms and both penalties, with `n`
/// points per segment.
pub fn assemble_interface(disc: &Discretization, problem: &Problem, params: &PenaltyParams, n: usize) -> Result<InterfaceBlocks> {
    let size = disc.num_unknowns();
    let blocks = all_segment_blocks(disc, problem, params, n)?;
    let mut it = Vec::new();
    let mut j0 = Vec::new();
    let mut j1 = Vec::new();
    for b in blocks {
        it.extend(b.interface);
        j0.extend(b.j0);
        j1.extend(b.j1);
    }
    Ok(InterfaceBlocks {
        interface: CsrMatrix::from_triplets(size, size, it)?,
        j0: CsrMatrix::from_triplets(size, size, j0)?,
        j1: CsrMatrix::from_triplets(size, size, j1)?,
    })
}

pub fn assemble_j0(disc: &Discretization, problem: &Problem, params: &PenaltyParams, n: usize) -> Result<CsrMatrix> {
    Ok(assemble_interface(disc, problem, params, n)?.j0)
}

pub fn assemble_j1(disc: &Discretization, problem: &Problem, params: &PenaltyParams, n: usize) -> Result<CsrMatrix> {
    Ok(assemble_interface(disc, problem, params, n)?.j1)
}

fn scatter(target: &mut [f64], entries: &[(usize, f64)]) {
    for &(i, v) in entries {
        target[i] += v;
    }
}

/// All five load terms.
pub fn assemble_load(disc: &Discretization, problem: &Problem, params: &PenaltyParams, opts: AssemblyOptions) -> Result<LoadTerms> {
    let p = disc.degree();
    let mut load = LoadTerms::zeros(disc.num_unknowns());
    let volume: Vec<_> = (0..disc.mesh().num_elements())
        .into_par_iter()
        .map(|k| volume_element(disc, problem, k, opts.volume_points(p)).map(|(_, l)| l))
        .collect::<Result<_>>()?;
    for v in &volume {
        scatter(&mut load.source, v);
    }
    for b in all_segment_blocks(disc, problem, params, opts.segment_points(p))? {
        scatter(&mut load.flux_average, &b.flux_average);
        scatter(&mut load.dirichlet_flux, &b.dirichlet_flux);
        scatter(&mut load.j_d, &b.j_d);
        scatter(&mut load.j_n, &b.j_n);
    }
    Ok(load)
}

pub fn assemble(disc: &Discretization, problem: &Problem, params: &PenaltyParams, opts: AssemblyOptions) -> Result<AssembledSystem> {
    check_consistent(disc, problem)?;
    params.validate()?;
    let p = disc.degree();
    let size = disc.num_unknowns();
    let nv = opts.volume_points(p);
    let volume_parts: Vec<_> = (0..disc.mesh().num_elements())
        .into_par_iter()
        .map(|k| volume_element(disc, problem, k, nv))
        .collect::<Result<_>>()?;
    let mut load = LoadTerms::zeros(size);
    let mut vt = Vec::new();
    for (t, l) in volume_parts {
        vt.extend(t);
        scatter(&mut load.source, &l);
    }
    let volume = CsrMatrix::from_triplets(size, size, vt)?;
    let (mut it, mut j0, mut j1) = (Vec::new(), Vec::new(), Vec::new());
    for b in all_segment_blocks(disc, problem, params, opts.segment_points(p))? {
        it.extend(b.interface);
        j0.extend(b.j0);
        j1.extend(b.j1);
        scatter(&mut load.flux_average, &b.flux_average);
        scatter(&mut load.dirichlet_flux, &b.dirichlet_flux);
        scatter(&mut load.j_d, &b.j_d);
        scatter(&mut load.j_n, &b.j_n);
    }
    let interface = CsrMatrix::from_triplets(size, size, it)?;
    let j0 = CsrMatrix::from_triplets(size, size, j0)?;
    let j1 = CsrMatrix::from_triplets(size, size, j1)?;
    let matrix = volume.add(&interface)?.add(&j0)?.add(&j1)?;
    Ok(AssembledSystem {
        matrix,
        rhs: load.total(),
        symmetric: params.method == Method::Sip,
        params: *params,
        volume,
        interface,
        j0,
        j1,
        load,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Rect;
    use crate::problem::{Jet, JetField};
    use crate::Curve;
    use std::sync::Arc;

    fn constant_problem(a: [f64; 2], f: f64, curve: Curve, domain: Rect) -> Problem {
        // u = 0 with source f: build from jets, then overwrite the source.
        let coef: [JetField; 2] = [Arc::new(move |_| Jet::constant(a[0])), Arc::new(move |_| Jet::constant(a[1]))];
        let u: [JetField; 2] = [Arc::new(|_| Jet::constant(0.0)), Arc::new(|_| Jet::constant(0.0))];
        let lo = a[0].min(a[1]);
        let hi = a[0].max(a[1]);
        let mut prob = Problem::manufactured("const", domain, curve, coef, u, (lo, hi)).unwrap();
        prob.source = [Arc::new(move |_| f), Arc::new(move |_| f)];
        prob.exact = None;
        prob
    }

    fn far_curve() -> Curve {
        Curve::circle(10.0, 10.0, 0.5)
    }

    #[test]
    fn one_cell_has_no_unknowns() {
        let domain = Rect::from_bounds(0.0, 0.0, 1.0, 1.0);
        let prob = constant_problem([1.0, 1.0], 1.0, far_curve(), domain);
        let disc = Discretization::for_problem(&prob, 1, 1, 1e-12).unwrap();
        let params = PenaltyParams::defaults(Method::Sip, &prob);
        let sys = assemble(&disc, &prob, &params, AssemblyOptions::default()).unwrap();
        assert_eq!(sys.size(), 0);
        assert_eq!(sys.matrix.nnz(), 0);
    }

    #[test]
    fn bilinear_stencil_center_entry() {
        let domain = Rect::from_bounds(0.0, 0.0, 1.0, 1.0);
        let prob = constant_problem([1.0, 1.0], 1.0, far_curve(), domain);
        let disc = Discretization::for_problem(&prob, 2, 1, 1e-12).unwrap();
        let params = PenaltyParams::defaults(Method::Sip, &prob);
        let sys = assemble(&disc, &prob, &params, AssemblyOptions::default()).unwrap();
        assert_eq!(sys.size(), 1);
        assert!((sys.matrix.get(0, 0) - 8.0 / 3.0).abs() < 1e-14);
        // ∫ hat over 4 cells of size 1/2: 4 · (1/2)² / 4
        assert!((sys.rhs[0] - 0.25).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero_load() {
        let domain = Rect::from_bounds(-1.0, -1.0, 1.0, 1.0);
        let prob = constant_problem([1.0, 2.0], 0.0, Curve::circle(0.0, 0.0, 0.6), domain);
        let disc = Discretization::for_problem(&prob, 8, 2, 1e-12).unwrap();
        let params = PenaltyParams::defaults(Method::Sip, &prob);
        let load = assemble_load(&disc, &prob, &params, AssemblyOptions::default()).unwrap();
        assert!(load.total().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn doubling_coefficient_doubles_volume() {
        let domain = Rect::from_bounds(-1.0, -1.0, 1.0, 1.0);
        let curve = Curve::circle(0.0, 0.0, 0.6);
        let p1 = constant_problem([1.0, 3.0], 0.0, curve, domain);
        let p2 = constant_problem([2.0, 6.0], 0.0, curve, domain);
        let disc = Discretization::for_problem(&p1, 8, 2, 1e-12).unwrap();
        let v1 = assemble_volume(&disc, &p1, 4).unwrap();
        let v2 = assemble_volume(&disc, &p2, 4).unwrap();
        let d = v2.add(&v1.scaled(-2.0)).unwrap();
        assert!(d.max_abs() <= 1e-13 * v1.max_abs());
    }

    #[test]
    fn penalty_linearity_and_zero() {
        let domain = Rect::from_bounds(-1.0, -1.0, 1.0, 1.0);
        let prob = constant_problem([1.0, 3.0], 0.0, Curve::circle(0.0, 0.0, 0.6), domain);
        let disc = Discretization::for_problem(&prob, 8, 2, 1e-12).unwrap();
        let a = assemble_interface(&disc, &prob, &PenaltyParams::new(Method::Sip, 5.0, 2.0).unwrap(), 4).unwrap();
        let b = assemble_interface(&disc, &prob, &PenaltyParams::new(Method::Sip, 10.0, 0.0).unwrap(), 4).unwrap();
        assert!(b.j0.add(&a.j0.scaled(-2.0)).unwrap().max_abs() <= 1e-13 * b.j0.max_abs());
        assert_eq!(b.j1.max_abs(), 0.0);
        let z = assemble_j0(&disc, &prob, &PenaltyParams::new(Method::Sip, 0.0, 1.0).unwrap(), 4).unwrap();
        assert_eq!(z.max_abs(), 0.0);
    }

    #[test]
    fn sip_symmetric_nip_skew_is_twice_consistency() {
        let domain = Rect::from_bounds(-1.0, -1.0, 1.0, 1.0);
        let prob = constant_problem([1.0, 10.0], 0.0, Curve::circle(0.0, 0.0, 0.6), domain);
        let disc = Discretization::for_problem(&prob, 8, 2, 1e-12).unwrap();
        let sip = assemble(&disc, &prob, &PenaltyParams::new(Method::Sip, 40.0, 1.0).unwrap(), AssemblyOptions::default()).unwrap();
        assert!(sip.relative_asymmetry() <= 1e-12);
        let nip = assemble(&disc, &prob, &PenaltyParams::new(Method::Nip, 40.0, 1.0).unwrap(), AssemblyOptions::default()).unwrap();
        // N = -C + Cᵀ with C = consistency term; S = -C - Cᵀ; N - Nᵀ = 2(Cᵀ - C).
        let c = sip.interface.add(&nip.interface).unwrap().scaled(-0.5);
        let skew = nip.interface.add(&nip.interface.transpose().scaled(-1.0)).unwrap();
        let expect = c.transpose().add(&c.scaled(-1.0)).unwrap().scaled(2.0);
        assert!(skew.add(&expect.scaled(-1.0)).unwrap().max_abs() <= 1e-12 * skew.max_abs());
    }

    #[test]
    fn method_parsing() {
        assert_eq!("SIP".parse::<Method>().unwrap(), Method::Sip);
        assert_eq!("nip".parse::<Method>().unwrap().beta(), -1.0);
        assert!("xip".parse::<Method>().is_err());
        assert!(PenaltyParams::new(Method::Sip, -1.0, 1.0).is_err());
        let p = PenaltyParams::new(Method::Sip, 1.0, 1.0).unwrap();
        assert!(p.coercivity_warning(2.0).is_some());
        assert!(p.coercivity_warning(0.5).is_none());
    }
}
