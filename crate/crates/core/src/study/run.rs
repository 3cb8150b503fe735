//! Sweep execution. Runs are independent and execute concurrently; records
//! come back in config order (degree-major, then mesh size).

use std::fmt::Write as _;
use std::fs;
use std::io::BufWriter;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::assembly::{assemble, AssemblyOptions, PenaltyParams};
use crate::discretization::Discretization;
use crate::norms::{compute_errors, estimate_rates, ErrorReport, RateSummary};
use crate::problem::Problem;
use crate::quadrature::dump_volume_rules;
use crate::solver::{solve, SolveOptions};
use crate::study::cases::build_case;
use crate::study::config::StudyConfig;
use crate::{Error, Result};

pub const CSV_HEADER: &str = "case,method,p,nx,h,dofs,gamma0,gamma1,l2,h1_broken,normA,normB,j0,j1,residual";

pub fn csv_header() -> &'static str {
    CSV_HEADER
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub case: String,
    pub method: String,
    pub p: usize,
    pub nx: usize,
    pub errors: ErrorReport,
    pub residual: f64,
    pub iterations: usize,
    pub condition_estimate: Option<f64>,
}

impl RunRecord {
    pub fn csv_row(&self) -> String {
        let e = &self.errors;
        let norm_b = e.norm_b.map(|v| format!("{v:e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{:e},{},{:e},{:e},{:e},{:e},{:e},{},{:e},{:e},{:e}",
            self.case, self.method, self.p, self.nx, e.h, e.dofs, e.gamma0, e.gamma1, e.l2, e.h1_broken, e.norm_a, norm_b, e.j0, e.j1,
            self.residual
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StudyOutput {
    pub config: StudyConfig,
    pub records: Vec<RunRecord>,
    pub rates: Vec<RateSummary>,
    /// Annotated messages of failed runs.
    pub failures: Vec<String>,
}

impl StudyOutput {
    pub fn csv(&self) -> String {
        let mut s = String::new();
        writeln!(s, "{CSV_HEADER}").expect("string write");
        for r in &self.records {
            writeln!(s, "{}", r.csv_row()).expect("string write");
        }
        s
    }

    pub fn rate_table(&self) -> String {
        let mut s = String::new();
        for r in &self.rates {
            let b = r.norm_b.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into());
            writeln!(s, "p={} slopes (finest 3 levels): l2={:.3} h1_broken={:.3} normA={:.3} normB={b}", r.p, r.l2, r.h1_broken, r.norm_a)
                .expect("string write");
            for pr in &r.pairwise {
                writeln!(s, "  h {:.4e} -> {:.4e}: l2={:.3} h1_broken={:.3} normA={:.3}", pr.h_coarse, pr.h_fine, pr.l2, pr.h1_broken, pr.norm_a)
                    .expect("string write");
            }
        }
        s
    }

    pub fn succeeded(&self) -> bool {
        self.failures.is_empty()
    }
}

pub fn penalties(config: &StudyConfig, problem: &Problem) -> Result<PenaltyParams> {
    let d = PenaltyParams::defaults(config.method, problem);
    PenaltyParams::new(config.method, config.gamma0.unwrap_or(d.gamma0), config.gamma1.unwrap_or(d.gamma1))
}

/// One (p, nx) run: mesh, geometry, space, assembly, solve, errors.
pub fn run_single(problem: &Problem, config: &StudyConfig, p: usize, nx: usize) -> Result<RunRecord> {
    let inner = || -> Result<RunRecord> {
        let params = penalties(config, problem)?;
        let disc = Discretization::for_problem(problem, nx, p, config.cut_threshold)?;
        let opts = AssemblyOptions { quad_extra: config.quad_extra };
        let system = assemble(&disc, problem, &params, opts)?;
        let tag = format!("{}_{}_p{p}_nx{nx}", problem.name, config.method);
        if let Some(dir) = &config.out {
            if config.dump_matrix {
                let mut f = BufWriter::new(fs::File::create(dir.join(format!("matrix_{tag}.txt")))?);
                system.matrix.write_coordinate(&mut f)?;
            }
            if config.dump_quadrature {
                let mut f = BufWriter::new(fs::File::create(dir.join(format!("quadrature_{tag}.csv")))?);
                dump_volume_rules(disc.mesh(), disc.topology(), opts.volume_points(p), &mut f)?;
            }
        }
        let solve_opts = SolveOptions { method: config.solver, estimate_condition: config.estimate_cond, ..Default::default() };
        let report = solve(&system, &solve_opts)?;
        let n_err = opts.volume_points(p) + config.error_quad_extra;
        let errors = compute_errors(&disc, problem, &params, &report.solution, n_err)?;
        Ok(RunRecord {
            case: problem.name.clone(),
            method: config.method.to_string(),
            p,
            nx,
            errors,
            residual: report.residual,
            iterations: report.iterations,
            condition_estimate: report.condition_estimate,
        })
    };
    inner().map_err(|e| e.context(format!("case={} method={} p={p} nx={nx}", problem.name, config.method)))
}

/// Runs every (p, nx) pair. Individual failures are collected, not fatal.
pub fn run_study(config: &StudyConfig) -> Result<StudyOutput> {
    config.validate()?;
    let problem = build_case(&config.case)?;
    let defect = problem.consistency_defect(50, config.seed)?;
    if defect > 1e-10 {
        return Err(Error::InvalidArgument(format!("case {} has inconsistent interface data (defect {defect:e})", config.case)));
    }
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
    }
    let jobs: Vec<(usize, usize)> = config.p.iter().flat_map(|&p| config.nx.iter().map(move |&nx| (p, nx))).collect();
    let results: Vec<Result<RunRecord>> = jobs.par_iter().map(|&(p, nx)| run_single(&problem, config, p, nx)).collect();
    let mut records = Vec::new();
    let mut failures = Vec::new();
    for r in results {
        match r {
            Ok(rec) => records.push(rec),
            Err(e) => failures.push(e.to_string()),
        }
    }
    let mut rates = Vec::new();
    for &p in &config.p {
        let mut levels: Vec<&RunRecord> = records.iter().filter(|r| r.p == p).collect();
        levels.sort_by_key(|r| r.nx);
        levels.dedup_by_key(|r| r.nx);
        let reports: Vec<ErrorReport> = levels.iter().map(|r| r.errors.clone()).collect();
        if reports.len() >= 3 {
            rates.push(estimate_rates(&reports)?);
        }
    }
    let out = StudyOutput { config: config.clone(), records, rates, failures };
    if let Some(dir) = &config.out {
        write_outputs(&out, dir)?;
    }
    Ok(out)
}

pub fn write_outputs(out: &StudyOutput, dir: &Path) -> Result<()> {
    let stem = format!("{}_{}", out.config.case, out.config.method);
    fs::write(dir.join(format!("{stem}.csv")), out.csv())?;
    fs::write(dir.join(format!("{stem}_rates.json")), serde_json::to_string_pretty(&out.rates)? + "\n")?;
    Ok(())
}
