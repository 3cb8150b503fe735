//! Mesh, cut topology and doubled space built together for one problem.

use crate::interface::{classify_elements, ClassifyOptions, CutTopology, Side};
use crate::mesh::{Mesh, Rect};
use crate::problem::{ExactSolution, Problem};
use crate::quadrature::{tensor_rule, volume_rule};
use crate::solver::direct_solve;
use crate::space::{evaluate_discrete, evaluate_on_element, DofMap, DoubledSpace};
use crate::sparse::CsrMatrix;
use crate::{Curve, Error, Result, Vec2};

#[derive(Debug, Clone)]
pub struct Discretization {
    mesh: Mesh,
    topology: CutTopology,
    space: DoubledSpace,
}

impl Discretization {
    pub fn new(domain: Rect, curve: &Curve, nx: usize, ny: usize, p: usize, cut_threshold: f64) -> Result<Self> {
        let mesh = Mesh::new(domain, nx, ny)?;
        let topology = classify_elements(&mesh, curve, ClassifyOptions { cut_threshold })?;
        let space = DoubledSpace::new(DofMap::new(&mesh, p)?, &topology);
        Ok(Self { mesh, topology, space })
    }

    /// Square `nx x nx` mesh of the problem's domain.
    pub fn for_problem(problem: &Problem, nx: usize, p: usize, cut_threshold: f64) -> Result<Self> {
        Self::new(problem.domain, &problem.curve, nx, nx, p, cut_threshold)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn topology(&self) -> &CutTopology {
        &self.topology
    }

    pub fn space(&self) -> &DoubledSpace {
        &self.space
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    pub fn num_unknowns(&self) -> usize {
        self.space.num_unknowns()
    }

    pub fn h(&self) -> f64 {
        self.mesh.h()
    }

    pub fn evaluate(&self, coeffs: &[f64], point: Vec2, side: Option<Side>) -> Result<(f64, Vec2)> {
        evaluate_discrete(&self.space, &self.mesh, &self.topology, coeffs, point, side)
    }

    pub fn evaluate_on(&self, coeffs: &[f64], element: usize, side: Side, point: Vec2) -> (f64, Vec2) {
        evaluate_on_element(&self.space, &self.mesh, coeffs, element, side, point)
    }

    /// Per-copy `L²` projection of two fields, each over the union of the
    /// whole elements active for its copy.
    pub fn project(&self, fields: [&(dyn Fn(Vec2) -> f64 + Sync); 2]) -> Result<Vec<f64>> {
        let n = self.num_unknowns();
        let p = self.degree();
        let basis = *self.space.dofmap().basis();
        let nb = basis.num_functions();
        let mut triplets = Vec::new();
        let mut rhs = vec![0.0; n];
        let mut v = vec![0.0; nb];
        let mut dv = vec![Vec2::zeros(); nb];
        for k in 0..self.mesh.num_elements() {
            let g = self.mesh.geometry(k);
            let rule = tensor_rule(&g, p + 3);
            for side in Side::BOTH {
                if !self.topology.is_active(k, side) {
                    continue;
                }
                let locals = self.space.local_unknowns(k, side);
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    basis.eval(g.inverse_map(*x), &mut v, &mut dv);
                    let f = fields[side.index()](*x);
                    for (a, ua) in locals.iter().enumerate() {
                        let Some(ua) = *ua else { continue };
                        rhs[ua] += w * f * v[a];
                        for (b, ub) in locals.iter().enumerate() {
                            if let Some(ub) = *ub {
                                triplets.push((ua, ub, w * v[a] * v[b]));
                            }
                        }
                    }
                }
            }
        }
        let mass = CsrMatrix::from_triplets(n, n, triplets)?;
        direct_solve(&mass, &rhs)
    }

    pub fn project_exact(&self, exact: &ExactSolution) -> Result<Vec<f64>> {
        let (u1, u2) = (exact.value[0].clone(), exact.value[1].clone());
        self.project([&move |p| u1(p), &move |p| u2(p)])
    }

    /// `|Ω_side|` from the volume rules with `n` points per direction.
    pub fn side_area(&self, side: Side, n: usize) -> Result<f64> {
        let mut area = 0.0;
        for k in 0..self.mesh.num_elements() {
            if let Some(r) = volume_rule(&self.mesh, &self.topology, k, side, n)? {
                area += r.measure();
            }
        }
        Ok(area)
    }

    pub fn check_coefficients(&self, coeffs: &[f64]) -> Result<()> {
        if coeffs.len() != self.num_unknowns() {
            return Err(Error::InvalidArgument(format!(
                "coefficient vector has length {}, expected {}",
                coeffs.len(),
                self.num_unknowns()
            )));
        }
        Ok(())
    }
}
