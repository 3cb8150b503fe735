//! hp interface penalty finite elements (symmetric and non-symmetric) for
//! two-dimensional elliptic interface problems on unfitted rectangular meshes.
//!
//! The pipeline is
//! [`mesh`] → [`interface`] → [`quadrature`] → [`space`] → [`assembly`] →
//! [`solver`] → [`norms`], with [`probes`] checking the trace and coercivity
//! machinery numerically and [`study`] driving manufactured-solution sweeps.

pub mod assembly;
pub mod basis;
pub mod discretization;
pub mod error;
pub mod interface;
pub mod mesh;
pub mod norms;
pub mod probes;
pub mod problem;
pub mod quadrature;
pub mod solver;
pub mod space;
pub mod sparse;
pub mod study;

pub use assembly::{assemble, AssembledSystem, Method, PenaltyParams};
pub use discretization::Discretization;
pub use error::{Error, Result};
pub use interface::{CutTopology, Curve, ElementClass, InterfaceSegment, Side};
pub use mesh::{Mesh, Rect};
pub use norms::{compute_errors, estimate_rates, ErrorReport, RateSummary};
pub use problem::{ExactSolution, Problem};
pub use solver::{solve, SolveMethod, SolveOptions, SolveReport};
pub use space::{DofMap, DoubledSpace};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

#[inline]
pub(crate) fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}
