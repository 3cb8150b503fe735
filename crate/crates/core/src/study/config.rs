//! Sweep configuration, loadable from JSON with the same field names as the
//! command-line flags.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assembly::Method;
use crate::solver::SolveMethod;
use crate::{Error, Result};

/// Smallest `nx` accepted for cases with a cut interface.
pub const MIN_NX: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    pub case: String,
    pub method: Method,
    /// `None` selects the method's default.
    pub gamma0: Option<f64>,
    pub gamma1: Option<f64>,
    pub p: Vec<usize>,
    pub nx: Vec<usize>,
    pub quad_extra: usize,
    /// Extra points of the error quadrature over the assembly rule.
    pub error_quad_extra: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub solver: SolveMethod,
    pub estimate_cond: bool,
    pub dump_matrix: bool,
    pub dump_quadrature: bool,
    pub cut_threshold: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            case: "circle-jump".into(),
            method: Method::Sip,
            gamma0: None,
            gamma1: None,
            p: vec![1],
            nx: vec![8, 16, 32],
            quad_extra: 0,
            error_quad_extra: 2,
            seed: 0,
            out: None,
            solver: SolveMethod::Direct,
            estimate_cond: false,
            dump_matrix: false,
            dump_quadrature: false,
            cut_threshold: 1e-12,
        }
    }
}

impl StudyConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?).map_err(|e| e.context(format!("reading {}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        if self.nx.is_empty() {
            return Err(Error::InsufficientData("no mesh sizes (nx) given".into()));
        }
        if self.p.is_empty() {
            return Err(Error::InsufficientData("no polynomial degrees (p) given".into()));
        }
        if let Some(&nx) = self.nx.iter().find(|&&n| n < MIN_NX) {
            return Err(Error::InvalidArgument(format!("nx = {nx} is below the minimum {MIN_NX} for cut cases")));
        }
        if let Some(&p) = self.p.iter().find(|&&p| p == 0 || p > crate::basis::MAX_DEGREE) {
            return Err(Error::InvalidArgument(format!("degree p = {p} outside 1..={}", crate::basis::MAX_DEGREE)));
        }
        for g in [self.gamma0, self.gamma1].into_iter().flatten() {
            if !(g.is_finite() && g >= 0.0) {
                return Err(Error::InvalidArgument(format!("penalty {g} must be finite and nonnegative")));
            }
        }
        if !(self.cut_threshold >= 0.0 && self.cut_threshold < 0.5) {
            return Err(Error::InvalidArgument(format!("cut threshold {} outside [0, 0.5)", self.cut_threshold)));
        }
        if self.solver == SolveMethod::Cg && self.method != Method::Sip {
            return Err(Error::InvalidArgument("cg is only available for sip".into()));
        }
        Ok(())
    }
}
