use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use ipfem::assembly::AssemblyOptions;
use ipfem::probes::{probe_coercivity, probe_g, probe_inverse_trace, probe_trace};
use ipfem::study::plots::emit_plots;
use ipfem::study::{build_case, list_cases, run_study, StudyConfig};
use ipfem::{Discretization, Method, Result, SolveMethod};

#[derive(Parser)]
#[command(name = "study", version, about = "Interface penalty FEM convergence studies and probes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an h/p sweep of a manufactured case.
    Run(RunArgs),
    /// Run a numerical probe over a mesh sweep.
    Probes(ProbeArgs),
    /// Print the case catalog.
    ListCases,
    /// Write a gnuplot script for study CSVs.
    Plot {
        #[arg(long, num_args = 1.., required = true)]
        csv: Vec<PathBuf>,
        #[arg(long, default_value = "plots.gp")]
        out: PathBuf,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    /// JSON file with the same fields as the flags; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    case: Option<String>,
    #[arg(long)]
    method: Option<Method>,
    #[arg(long, value_delimiter = ',')]
    p: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    nx: Option<Vec<usize>>,
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    gamma1: Option<f64>,
    /// Repeat the sweep for each listed gamma0 (rows emitted for inspection).
    #[arg(long, value_delimiter = ',')]
    gamma0_sweep: Option<Vec<f64>>,
    #[arg(long)]
    quad_extra: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    solver: Option<SolveMethod>,
    #[arg(long)]
    estimate_cond: bool,
    #[arg(long)]
    dump_matrix: bool,
    #[arg(long)]
    dump_quadrature: bool,
    #[arg(long)]
    cut_threshold: Option<f64>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProbeKind {
    Trace,
    Invtrace,
    Coercivity,
    #[value(name = "G", alias = "g")]
    G,
}

#[derive(clap::Args)]
struct ProbeArgs {
    #[arg(long, value_enum)]
    probe: ProbeKind,
    #[arg(long, default_value = "circle-jump")]
    case: String,
    #[arg(long, value_delimiter = ',', default_value = "2")]
    p: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "8,16,32")]
    nx: Vec<usize>,
    #[arg(long, default_value_t = 20)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Coercivity grid values of gamma0.
    #[arg(long, value_delimiter = ',', default_value = "0.01,1,10,100")]
    gamma0: Vec<f64>,
    /// Coercivity grid values of gamma1.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    gamma1: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn build_config(args: &RunArgs) -> Result<StudyConfig> {
    let mut c = match &args.config {
        Some(path) => StudyConfig::from_json_file(path)?,
        None => StudyConfig::default(),
    };
    if let Some(v) = &args.case {
        c.case = v.clone();
    }
    if let Some(v) = args.method {
        c.method = v;
    }
    if let Some(v) = &args.p {
        c.p = v.clone();
    }
    if let Some(v) = &args.nx {
        c.nx = v.clone();
    }
    if args.gamma0.is_some() {
        c.gamma0 = args.gamma0;
    }
    if args.gamma1.is_some() {
        c.gamma1 = args.gamma1;
    }
    if let Some(v) = args.quad_extra {
        c.quad_extra = v;
    }
    if let Some(v) = args.seed {
        c.seed = v;
    }
    if args.out.is_some() {
        c.out = args.out.clone();
    }
    if let Some(v) = args.solver {
        c.solver = v;
    }
    c.estimate_cond |= args.estimate_cond;
    c.dump_matrix |= args.dump_matrix;
    c.dump_quadrature |= args.dump_quadrature;
    if let Some(v) = args.cut_threshold {
        c.cut_threshold = v;
    }
    Ok(c)
}

fn cmd_run(args: &RunArgs) -> Result<bool> {
    let base = build_config(args)?;
    let configs: Vec<StudyConfig> = match &args.gamma0_sweep {
        Some(values) => values
            .iter()
            .map(|g| {
                let mut c = base.clone();
                c.gamma0 = Some(*g);
                c.out = base.out.as_ref().map(|d| d.join(format!("gamma0_{g}")));
                c
            })
            .collect(),
        None => vec![base],
    };
    let mut ok = true;
    let mut printed_header = false;
    for config in &configs {
        let out = run_study(config)?;
        if config.out.is_none() {
            let csv = out.csv();
            let body = if printed_header { csv.split_once('\n').map(|x| x.1).unwrap_or("") } else { &csv };
            print!("{body}");
            printed_header = true;
        }
        eprint!("{}", out.rate_table());
        for f in &out.failures {
            eprintln!("error: {f}");
        }
        ok &= out.succeeded();
    }
    Ok(ok)
}

fn cmd_probes(args: &ProbeArgs) -> Result<bool> {
    let problem = build_case(&args.case)?;
    let mut csv = String::new();
    match args.probe {
        ProbeKind::Invtrace => {
            csv.push_str("case,p,nx,h,segments,max_sampled,max_refined,median_refined,max_weighted\n");
            for &p in &args.p {
                for &nx in &args.nx {
                    let d = Discretization::for_problem(&problem, nx, p, 1e-12)?;
                    let r = probe_inverse_trace(d.mesh(), d.topology(), p, args.samples, args.seed, Some(&problem))?;
                    csv += &format!(
                        "{},{p},{nx},{:e},{},{:e},{:e},{:e},{}\n",
                        args.case,
                        r.h,
                        r.elements.len(),
                        r.max_sampled,
                        r.max_refined,
                        r.median_refined,
                        r.max_weighted.map(|v| format!("{v:e}")).unwrap_or_default()
                    );
                }
            }
        }
        ProbeKind::Trace => {
            csv.push_str("case,nx,h,segments,max_ratio,median_ratio\n");
            for &nx in &args.nx {
                let d = Discretization::for_problem(&problem, nx, 1, 1e-12)?;
                let r = probe_trace(d.mesh(), d.topology(), args.samples, args.seed)?;
                csv += &format!("{},{nx},{:e},{},{:e},{:e}\n", args.case, r.h, r.elements.len(), r.max_sampled, r.median_refined);
            }
        }
        ProbeKind::G => {
            csv.push_str("case,nx,h,segments,min_g_over_h\n");
            for &nx in &args.nx {
                let d = Discretization::for_problem(&problem, nx, 1, 1e-12)?;
                let r = probe_g(d.mesh(), d.topology(), args.samples.max(2));
                csv += &format!("{},{nx},{:e},{},{:e}\n", args.case, r.h, r.segments.len(), r.min_ratio);
            }
        }
        ProbeKind::Coercivity => {
            csv.push_str("case,p,nx,gamma0,gamma1,min_quotient,gram_singular\n");
            let grid: Vec<(f64, f64)> = args.gamma0.iter().flat_map(|&g0| args.gamma1.iter().map(move |&g1| (g0, g1))).collect();
            for &p in &args.p {
                for &nx in &args.nx {
                    let d = Discretization::for_problem(&problem, nx, p, 1e-12)?;
                    for pt in probe_coercivity(&d, &problem, &grid, AssemblyOptions::default())? {
                        csv += &format!(
                            "{},{p},{nx},{:e},{:e},{:e},{}\n",
                            args.case, pt.gamma0, pt.gamma1, pt.min_quotient, pt.gram_singular
                        );
                    }
                }
            }
        }
    }
    match &args.out {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Probes(args) => cmd_probes(args),
        Command::ListCases => {
            for c in list_cases() {
                println!("{}: {}", c.name, c.description);
            }
            Ok(true)
        }
        Command::Plot { csv, out } => emit_plots(csv, out).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
