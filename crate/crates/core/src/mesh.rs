//! Structured quadrilateral meshes of axis-aligned rectangles.
//!
//! Elements are numbered row-major (`k = j * nx + i`), vertices likewise on
//! the `(nx + 1) x (ny + 1)` lattice. Element corners are stored
//! counterclockwise starting at the lower-left corner.

use serde::{Deserialize, Serialize};

use crate::{Error, Result, Vec2};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Vec2,
    pub max: Vec2,
}

impl Rect {
    pub fn new(min: Vec2, max: Vec2) -> Self {
        Self { min, max }
    }

    pub fn from_bounds(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Self {
        Self::new(Vec2::new(xmin, ymin), Vec2::new(xmax, ymax))
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn area(&self) -> f64 {
        self.width() * self.height()
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        p.x >= self.min.x - tol && p.x <= self.max.x + tol && p.y >= self.min.y - tol && p.y <= self.max.y + tol
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        Self::new(self.min + shift, self.max + shift)
    }
}

/// A mesh edge with its one (boundary) or two (interior) incident elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub elements: Vec<usize>,
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.elements.len() == 1
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    domain: Rect,
    nx: usize,
    ny: usize,
    vertices: Vec<Vec2>,
    elements: Vec<[usize; 4]>,
    edges: Vec<Edge>,
}

/// Corners, size and the affine map from the reference square `[-1, 1]^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementGeometry {
    pub index: usize,
    pub corners: [Vec2; 4],
    /// Element diameter (the diagonal length).
    pub h: f64,
}

impl ElementGeometry {
    pub fn lower_left(&self) -> Vec2 {
        self.corners[0]
    }

    pub fn size(&self) -> Vec2 {
        self.corners[2] - self.corners[0]
    }

    pub fn center(&self) -> Vec2 {
        0.5 * (self.corners[0] + self.corners[2])
    }

    pub fn area(&self) -> f64 {
        let s = self.size();
        s.x * s.y
    }

    /// Diagonal of the (constant) Jacobian of the reference map.
    pub fn jacobian(&self) -> Vec2 {
        0.5 * self.size()
    }

    pub fn map(&self, reference: Vec2) -> Vec2 {
        self.center() + self.jacobian().component_mul(&reference)
    }

    pub fn inverse_map(&self, physical: Vec2) -> Vec2 {
        (physical - self.center()).component_div(&self.jacobian())
    }

    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        Rect::new(self.corners[0], self.corners[2]).contains(p, tol)
    }

    /// Inradius-like size: the shorter side length.
    pub fn min_side(&self) -> f64 {
        let s = self.size();
        s.x.min(s.y)
    }
}

impl Mesh {
    pub fn new(domain: Rect, nx: usize, ny: usize) -> Result<Self> {
        if nx == 0 || ny == 0 {
            return Err(Error::InvalidArgument(format!("element counts must be positive, got {nx}x{ny}")));
        }
        if !(domain.width() > 0.0 && domain.height() > 0.0) || !domain.min.iter().chain(domain.max.iter()).all(|v| v.is_finite())
        {
            return Err(Error::InvalidArgument("degenerate domain rectangle".into()));
        }
        let nvx = nx + 1;
        let mut vertices = Vec::with_capacity(nvx * (ny + 1));
        for j in 0..=ny {
            for i in 0..=nx {
                vertices.push(Vec2::new(grid_coord(domain.min.x, domain.max.x, nx, i), grid_coord(domain.min.y, domain.max.y, ny, j)));
            }
        }
        let vid = |i: usize, j: usize| j * nvx + i;
        let mut elements = Vec::with_capacity(nx * ny);
        for j in 0..ny {
            for i in 0..nx {
                elements.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            }
        }
        let eid = |i: usize, j: usize| j * nx + i;
        let mut edges = Vec::with_capacity(nx * (ny + 1) + ny * (nx + 1));
        // horizontal edges
        for j in 0..=ny {
            for i in 0..nx {
                let mut incident = Vec::with_capacity(2);
                if j > 0 {
                    incident.push(eid(i, j - 1));
                }
                if j < ny {
                    incident.push(eid(i, j));
                }
                edges.push(Edge { vertices: [vid(i, j), vid(i + 1, j)], elements: incident });
            }
        }
        // vertical edges
        for j in 0..ny {
            for i in 0..=nx {
                let mut incident = Vec::with_capacity(2);
                if i > 0 {
                    incident.push(eid(i - 1, j));
                }
                if i < nx {
                    incident.push(eid(i, j));
                }
                edges.push(Edge { vertices: [vid(i, j), vid(i, j + 1)], elements: incident });
            }
        }
        Ok(Self { domain, nx, ny, vertices, elements, edges })
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Element width and height.
    pub fn cell_size(&self) -> Vec2 {
        Vec2::new(self.domain.width() / self.nx as f64, self.domain.height() / self.ny as f64)
    }

    /// Mesh parameter `h`: the largest element diameter.
    pub fn h(&self) -> f64 {
        self.cell_size().norm()
    }

    /// Grid line coordinates `x_0 < ... < x_nx`.
    pub fn x_lines(&self) -> Vec<f64> {
        (0..=self.nx).map(|i| grid_coord(self.domain.min.x, self.domain.max.x, self.nx, i)).collect()
    }

    pub fn y_lines(&self) -> Vec<f64> {
        (0..=self.ny).map(|j| grid_coord(self.domain.min.y, self.domain.max.y, self.ny, j)).collect()
    }

    pub fn element_ij(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn element_index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn element(&self, k: usize) -> Result<ElementGeometry> {
        if k >= self.elements.len() {
            return Err(Error::OutOfRange { index: k, len: self.elements.len() });
        }
        Ok(self.geometry(k))
    }

    /// Infallible variant of [`Mesh::element`] for indices known to be valid.
    pub(crate) fn geometry(&self, k: usize) -> ElementGeometry {
        let v = self.elements[k];
        let corners = [self.vertices[v[0]], self.vertices[v[1]], self.vertices[v[2]], self.vertices[v[3]]];
        ElementGeometry { index: k, corners, h: (corners[2] - corners[0]).norm() }
    }

    /// Element containing `p`; points on shared edges go to the element with
    /// the larger index along each axis unless they sit on the upper domain
    /// boundary.
    pub fn locate(&self, p: Vec2) -> Option<usize> {
        let tol = 1e-12 * self.h();
        if !self.domain.contains(p, tol) {
            return None;
        }
        let s = self.cell_size();
        let fi = ((p.x - self.domain.min.x) / s.x).floor();
        let fj = ((p.y - self.domain.min.y) / s.y).floor();
        let i = (fi.max(0.0) as usize).min(self.nx - 1);
        let j = (fj.max(0.0) as usize).min(self.ny - 1);
        Some(self.element_index(i, j))
    }

    pub fn translated(&self, shift: Vec2) -> Self {
        Self::new(self.domain.translated(shift), self.nx, self.ny).expect("translation preserves validity")
    }
}

fn grid_coord(lo: f64, hi: f64, n: usize, i: usize) -> f64 {
    if i == n {
        hi
    } else {
        lo + (hi - lo) * (i as f64) / (n as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit() -> Rect {
        Rect::from_bounds(0.0, 0.0, 1.0, 1.0)
    }

    #[test]
    fn single_cell() {
        let m = Mesh::new(unit(), 1, 1).unwrap();
        assert_eq!(m.num_elements(), 1);
        assert_eq!(m.vertices().len(), 4);
        assert_eq!(m.edges().len(), 4);
        assert!(m.edges().iter().all(Edge::is_boundary));
    }

    #[test]
    fn two_by_two_counts() {
        let m = Mesh::new(unit(), 2, 2).unwrap();
        assert_eq!(m.num_elements(), 4);
        assert_eq!(m.vertices().len(), 9);
        assert_eq!(m.edges().iter().filter(|e| !e.is_boundary()).count(), 4);
    }

    #[test]
    fn uniform_diameters() {
        let m = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 8, 8).unwrap();
        let expected = (2.0 / 8.0) * 2f64.sqrt();
        for k in 0..m.num_elements() {
            assert!((m.geometry(k).h - expected).abs() < 1e-15);
        }
        assert!((m.h() - expected).abs() < 1e-15);
    }

    #[test]
    fn reference_map() {
        let m = Mesh::new(unit(), 1, 1).unwrap();
        let g = m.element(0).unwrap();
        let p = g.map(Vec2::new(0.2, -0.6));
        assert!((p.x - 0.6).abs() < 1e-15 && (p.y - 0.2).abs() < 1e-15);
        assert_eq!(g.map(Vec2::new(-1.0, -1.0)), g.lower_left());
        assert!((g.inverse_map(p) - Vec2::new(0.2, -0.6)).norm() < 1e-15);
    }

    #[test]
    fn row_major_corners() {
        let m = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 2, 2).unwrap();
        let g = m.element(3).unwrap();
        let expected = [Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(0.0, 1.0)];
        assert_eq!(g.corners, expected);
        assert!(matches!(m.element(4), Err(Error::OutOfRange { .. })));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(Mesh::new(unit(), 0, 3).is_err());
        assert!(Mesh::new(Rect::from_bounds(0.0, 0.0, 0.0, 1.0), 2, 2).is_err());
    }

    #[test]
    fn areas_and_incidence() {
        let m = Mesh::new(Rect::from_bounds(-0.3, 0.1, 1.7, 0.9), 7, 5).unwrap();
        let total: f64 = (0..m.num_elements()).map(|k| m.geometry(k).area()).sum();
        assert!((total - m.domain().area()).abs() <= 1e-13 * m.domain().area());
        for e in m.edges() {
            for &k in &e.elements {
                let verts = m.elements()[k];
                assert!(verts.contains(&e.vertices[0]) && verts.contains(&e.vertices[1]));
            }
        }
    }

    #[test]
    fn locate_interior_points() {
        let m = Mesh::new(Rect::from_bounds(-1.0, -1.0, 1.0, 1.0), 4, 4).unwrap();
        assert_eq!(m.locate(Vec2::new(-0.9, -0.9)), Some(0));
        assert_eq!(m.locate(Vec2::new(0.9, 0.9)), Some(15));
        assert_eq!(m.locate(Vec2::new(1.0, 1.0)), Some(15));
        assert_eq!(m.locate(Vec2::new(1.5, 0.0)), None);
    }
}
