//! Continuous degree-`p` DOF numbering and the doubled space with per-copy
//! activity masks.
//!
//! DOFs sit on a tensor lattice with `nx p + 1` positions per row: vertex
//! `i` at position `i p`, the bubbles of interval `i` at `i p + 1 ..
//! i p + p - 1`. Every element shares the axis-aligned orientation, so shared
//! edge bubbles need no sign flips.

use crate::basis::BasisSet;
use crate::interface::{signed_side, CutTopology, Side};
use crate::mesh::Mesh;
use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DofClass {
    Vertex,
    Edge,
    Interior,
}

#[derive(Debug, Clone)]
pub struct DofMap {
    basis: BasisSet,
    nx: usize,
    ny: usize,
    element_dofs: Vec<Vec<usize>>,
    boundary: Vec<bool>,
}

/// Lattice position of 1D local index `a` on interval `i`.
fn position(i: usize, p: usize, a: usize) -> usize {
    match a {
        0 => i * p,
        1 => (i + 1) * p,
        _ => i * p + a - 1,
    }
}

impl DofMap {
    pub fn new(mesh: &Mesh, p: usize) -> Result<Self> {
        let basis = BasisSet::new(p)?;
        let (nx, ny) = (mesh.nx(), mesh.ny());
        let row = nx * p + 1;
        let n1 = p + 1;
        let mut element_dofs = Vec::with_capacity(mesh.num_elements());
        for k in 0..mesh.num_elements() {
            let (i, j) = mesh.element_ij(k);
            let mut dofs = vec![0; n1 * n1];
            for b in 0..n1 {
                for a in 0..n1 {
                    dofs[basis.local_index(a, b)] = position(j, p, b) * row + position(i, p, a);
                }
            }
            element_dofs.push(dofs);
        }
        let total = row * (ny * p + 1);
        let boundary = (0..total)
            .map(|d| {
                let (gx, gy) = (d % row, d / row);
                gx == 0 || gx == nx * p || gy == 0 || gy == ny * p
            })
            .collect();
        Ok(Self { basis, nx, ny, element_dofs, boundary })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn degree(&self) -> usize {
        self.basis.degree()
    }

    pub fn num_dofs(&self) -> usize {
        self.boundary.len()
    }

    pub fn num_free(&self) -> usize {
        self.boundary.iter().filter(|b| !**b).count()
    }

    pub fn element_dofs(&self, element: usize) -> &[usize] {
        &self.element_dofs[element]
    }

    pub fn is_boundary(&self, dof: usize) -> bool {
        self.boundary[dof]
    }

    /// Lattice coordinates `(gx, gy)` of a DOF.
    pub fn lattice(&self, dof: usize) -> (usize, usize) {
        let row = self.nx * self.degree() + 1;
        (dof % row, dof / row)
    }

    pub fn class(&self, dof: usize) -> DofClass {
        let p = self.degree();
        let (gx, gy) = self.lattice(dof);
        match (gx % p == 0, gy % p == 0) {
            (true, true) => DofClass::Vertex,
            (false, false) => DofClass::Interior,
            _ => DofClass::Edge,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
}

/// Two copies of the continuous space; copy `i` keeps only the free DOFs
/// whose support meets `Ω_i` with positive area.
#[derive(Debug, Clone)]
pub struct DoubledSpace {
    dofmap: DofMap,
    unknown_of: [Vec<Option<usize>>; 2],
    unknowns: Vec<(Side, usize)>,
}

impl DoubledSpace {
    pub fn new(dofmap: DofMap, topology: &CutTopology) -> Self {
        let n = dofmap.num_dofs();
        let mut active = [vec![false; n], vec![false; n]];
        for (k, dofs) in dofmap.element_dofs.iter().enumerate() {
            for side in Side::BOTH {
                if topology.is_active(k, side) {
                    for &d in dofs {
                        active[side.index()][d] |= !dofmap.boundary[d];
                    }
                }
            }
        }
        let mut unknown_of = [vec![None; n], vec![None; n]];
        let mut unknowns = Vec::new();
        for side in Side::BOTH {
            for d in 0..n {
                if active[side.index()][d] {
                    unknown_of[side.index()][d] = Some(unknowns.len());
                    unknowns.push((side, d));
                }
            }
        }
        Self { dofmap, unknown_of, unknowns }
    }

    pub fn dofmap(&self) -> &DofMap {
        &self.dofmap
    }

    pub fn degree(&self) -> usize {
        self.dofmap.degree()
    }

    pub fn num_unknowns(&self) -> usize {
        self.unknowns.len()
    }

    pub fn num_active(&self, side: Side) -> usize {
        self.unknown_of[side.index()].iter().filter(|u| u.is_some()).count()
    }

    pub fn unknown(&self, side: Side, dof: usize) -> Option<usize> {
        self.unknown_of[side.index()][dof]
    }

    /// `(copy, DOF)` of an unknown.
    pub fn unknown_info(&self, unknown: usize) -> (Side, usize) {
        self.unknowns[unknown]
    }

    /// Unknown indices of copy `side` for each local function of `element`.
    pub fn local_unknowns(&self, element: usize, side: Side) -> Vec<Option<usize>> {
        self.dofmap.element_dofs(element).iter().map(|&d| self.unknown(side, d)).collect()
    }
}

/// Value and physical gradient of copy `side` of `coeffs` at `point`, using
/// `element`'s basis.
pub fn evaluate_on_element(
    space: &DoubledSpace,
    mesh: &Mesh,
    coeffs: &[f64],
    element: usize,
    side: Side,
    point: Vec2,
) -> (f64, Vec2) {
    let g = mesh.geometry(element);
    let basis = space.dofmap().basis();
    let n = basis.num_functions();
    let mut v = vec![0.0; n];
    let mut dv = vec![Vec2::zeros(); n];
    basis.eval(g.inverse_map(point), &mut v, &mut dv);
    let jac = g.jacobian();
    let mut value = 0.0;
    let mut grad = Vec2::zeros();
    for (i, &d) in space.dofmap().element_dofs(element).iter().enumerate() {
        if let Some(u) = space.unknown(side, d) {
            value += coeffs[u] * v[i];
            grad += coeffs[u] * Vec2::new(dv[i].x / jac.x, dv[i].y / jac.y);
        }
    }
    (value, grad)
}

/// Evaluates `v_{ih}` at `point`. `side = None` picks the side containing the
/// point.
pub fn evaluate_discrete(
    space: &DoubledSpace,
    mesh: &Mesh,
    topology: &CutTopology,
    coeffs: &[f64],
    point: Vec2,
    side: Option<Side>,
) -> Result<(f64, Vec2)> {
    if coeffs.len() != space.num_unknowns() {
        return Err(Error::InvalidArgument(format!(
            "coefficient vector has length {}, expected {}",
            coeffs.len(),
            space.num_unknowns()
        )));
    }
    if !mesh.domain().contains(point, 1e-12 * mesh.h()) {
        return Err(Error::InvalidArgument(format!("point ({}, {}) outside the domain", point.x, point.y)));
    }
    let side = match side {
        Some(s) => s,
        None => signed_side(topology.curve(), point, 1e-14)?,
    };
    let element = mesh.locate(point).expect("point inside the domain");
    if !topology.is_active(element, side) {
        return Err(Error::InactiveEvaluation { side: side.label(), x: point.x, y: point.y });
    }
    Ok(evaluate_on_element(space, mesh, coeffs, element, side, point))
}
