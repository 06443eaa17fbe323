//! Command-line front end: flag parsing, config merging and dispatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::assembly::{
    assemble_operator, assemble_operator_unrestricted, OperatorCache, OperatorMatrix,
    QuadratureSpec,
};
use crate::error::{FracError, Result};
use crate::grid::{RadialGrid, MIN_INTERVALS};
use crate::kernel::{normalization_constant, FracOrder, KernelEvaluator};
use crate::poisson::{exhaustion_study, shift_and_mass, BoundStatus, MonotonicityFlags, PoissonSolver};
use crate::semilinear::{
    barrier_and_minimality, boundary_level_bounds, monotone_iteration, thresholds,
    IterationStatus, SemilinearSpec, Thresholds,
};

use super::checks::{dyda_convergence, verify_suite, ConvergenceRow, SuiteParams};
use super::config::{Command, Format, RunConfig, SourceDescriptor};
use super::output::{csv_table, fmt_float, json_text, write_atomic};
use super::report::{CheckStatus, VerificationReport};

#[derive(Debug, Parser)]
#[command(name = "fraclap", version, about = "Regional fractional Laplacian on the unit ball")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Tabulate the killing potential on the grid.
    Phi(Flags),
    /// Solve the linear problem on the ball or on truncated balls.
    Poisson(Flags),
    /// Monotone iteration for the semilinear problem.
    Semilinear(Flags),
    /// Run the property verification suite.
    Verify(Flags),
    /// Extension-identity residuals under grid refinement.
    Convergence(Flags),
}

#[derive(Debug, Args)]
struct Flags {
    /// JSON file with run settings; flags given here take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    dim: Option<usize>,
    /// Number of grid intervals M.
    #[arg(long)]
    nodes: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    /// Truncation radius; repeat for an exhaustion study.
    #[arg(long)]
    r0: Vec<f64>,
    #[arg(long)]
    eps: Vec<f64>,
    #[arg(long)]
    p: Option<f64>,
    /// constant:c | two-minus-r-squared | gaussian:a,b | csv:path
    #[arg(long)]
    source: Option<String>,
    #[arg(long)]
    h1: Option<String>,
    #[arg(long)]
    h2: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
    #[arg(long)]
    allow_large_s: bool,
    /// Accept h1 = 0 (linear problem).
    #[arg(long)]
    allow_zero_h1: bool,
    /// Directory for assembled operators.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

/// Parse arguments (program name first) into a validated configuration.
pub fn parse_config<I, T>(args: I) -> std::result::Result<Result<RunConfig>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    Ok(merge(cli))
}

fn merge(cli: Cli) -> Result<RunConfig> {
    let (command, f) = match cli.command {
        Cmd::Phi(f) => (Command::Phi, f),
        Cmd::Poisson(f) => (Command::Poisson, f),
        Cmd::Semilinear(f) => (Command::Semilinear, f),
        Cmd::Verify(f) => (Command::Verify, f),
        Cmd::Convergence(f) => (Command::Convergence, f),
    };
    let mut cfg = match &f.config {
        Some(path) => RunConfig::from_json_file(path)?,
        None => RunConfig::default(),
    };
    cfg.command = Some(command);
    if let Some(v) = f.s {
        cfg.s = v;
    }
    if let Some(v) = f.dim {
        cfg.dim = v;
    }
    if let Some(v) = f.nodes {
        cfg.nodes = v;
    }
    if let Some(v) = f.beta {
        cfg.beta = v;
    }
    if !f.r0.is_empty() {
        cfg.r0 = f.r0;
    }
    if !f.eps.is_empty() {
        cfg.eps = f.eps;
    }
    if let Some(v) = f.p {
        cfg.p = v;
    }
    if let Some(v) = f.source {
        cfg.source = v;
    }
    if let Some(v) = f.h1 {
        cfg.h1 = v;
    }
    if let Some(v) = f.h2 {
        cfg.h2 = v;
    }
    if let Some(v) = f.seed {
        cfg.seed = v;
    }
    if f.out.is_some() {
        cfg.out = f.out;
    }
    if let Some(v) = f.format {
        cfg.format = match v {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        };
    }
    cfg.allow_large_s |= f.allow_large_s;
    cfg.allow_zero_h1 |= f.allow_zero_h1;
    if f.cache_dir.is_some() {
        cfg.cache_dir = f.cache_dir;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Text produced by a command and whether any verification failed.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub text: String,
    pub failed: bool,
}

/// Operator on the graded grid with `intervals` cells.
pub fn build_operator(cfg: &RunConfig, order: FracOrder, intervals: usize) -> Result<OperatorMatrix> {
    let grid = std::sync::Arc::new(RadialGrid::graded(intervals, cfg.beta, order.dim())?);
    let kernel = KernelEvaluator::new(order);
    let quad = QuadratureSpec::default();
    if order.s() > 0.5 {
        return assemble_operator_unrestricted(grid, &kernel, &quad);
    }
    match &cfg.cache_dir {
        Some(dir) => OperatorCache::new(dir).load_or_assemble(grid, &kernel, &quad),
        None => assemble_operator(grid, &kernel, &quad),
    }
}

/// Execute a validated configuration.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    match cfg.command()? {
        Command::Phi => run_phi(cfg),
        Command::Poisson => run_poisson(cfg),
        Command::Semilinear => run_semilinear(cfg),
        Command::Verify => run_verify(cfg),
        Command::Convergence => run_convergence(cfg),
    }
}

fn ok(text: String) -> Result<RunOutput> {
    Ok(RunOutput {
        text,
        failed: false,
    })
}

#[derive(Serialize)]
struct PhiOutput {
    s: f64,
    dim: usize,
    normalization: f64,
    boundary_constant: f64,
    r: Vec<f64>,
    phi: Vec<f64>,
    killing: Vec<f64>,
}

fn run_phi(cfg: &RunConfig) -> Result<RunOutput> {
    let order = cfg.order()?;
    let kernel = KernelEvaluator::new(order);
    let grid = cfg.grid()?;
    let r: Vec<f64> = grid.nodes()[..grid.last()].to_vec();
    let phi = r.iter().map(|&x| kernel.phi_raw(x)).collect::<Result<Vec<_>>>()?;
    let c = normalization_constant(order);
    let killing: Vec<f64> = phi.iter().map(|v| c * v).collect();
    match cfg.format {
        Format::Csv => ok(csv_table(
            &["r".into(), "phi".into(), "killing".into()],
            &[r, phi, killing],
        )?),
        Format::Json => ok(json_text(&PhiOutput {
            s: order.s(),
            dim: order.dim(),
            normalization: c,
            boundary_constant: kernel.boundary_constant(),
            r,
            phi,
            killing,
        })?),
    }
}

#[derive(Serialize)]
struct ExhaustionOutput {
    radii: Vec<f64>,
    distances: Vec<f64>,
    monotone: Vec<bool>,
    distances_decreasing: bool,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct PoissonOutput {
    s: f64,
    dim: usize,
    M: usize,
    beta: f64,
    r0: f64,
    d: f64,
    mass_residual: Option<f64>,
    linear_residual: f64,
    energy: f64,
    level_upper_bound: Option<BoundStatus>,
    monotonicity: MonotonicityFlags,
    violations: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exhaustion: Option<ExhaustionOutput>,
}

fn run_poisson(cfg: &RunConfig) -> Result<RunOutput> {
    let order = cfg.order()?;
    let op = build_operator(cfg, order, cfg.nodes)?;
    let grid = op.grid().clone();
    let f = SourceDescriptor::parse(&cfg.source)?.sample(grid.clone())?;
    let solver = PoissonSolver::new(&op);
    let radii = if cfg.r0.is_empty() { vec![1.0] } else { cfg.r0.clone() };

    let mut violations = Vec::new();
    let mut exhaustion = None;
    let mut columns = vec![grid.nodes().to_vec()];
    let mut header = vec!["r".to_string()];
    let report = if radii.len() == 1 {
        let rep = if radii[0] >= 1.0 {
            solver.solve_full(&f)?
        } else {
            solver.solve_truncated(&f, radii[0])?
        };
        header.extend(["u".into(), "F".into()]);
        columns.push(rep.solution.values().to_vec());
        columns.push(f.values().to_vec());
        rep
    } else {
        let st = exhaustion_study(&op, &f, &radii)?;
        if !st.all_monotone() {
            violations.push("truncated solutions not nondecreasing in r0".into());
        }
        if !st.distances_decreasing {
            violations.push("distances to the full solve not decreasing".into());
        }
        header.push("F".into());
        columns.push(f.values().to_vec());
        for (r0, u) in st.radii.iter().zip(&st.solutions) {
            header.push(format!("u_r0={r0}"));
            columns.push(u.values().to_vec());
        }
        header.push("u_full".into());
        columns.push(st.full.solution.values().to_vec());
        exhaustion = Some(ExhaustionOutput {
            radii: st.radii.clone(),
            distances: st.distances.clone(),
            monotone: st.monotone.clone(),
            distances_decreasing: st.distances_decreasing,
        });
        st.full
    };

    let mut mass_residual = None;
    let mut level_upper_bound = None;
    if report.r0 >= 1.0 {
        match shift_and_mass(&report, &f) {
            Ok(sh) => {
                mass_residual = Some(sh.mass_residual);
                level_upper_bound = Some(sh.upper);
            }
            Err(e @ FracError::Verification { .. }) => violations.push(e.to_string()),
            Err(e) => return Err(e),
        }
    }

    let text = match cfg.format {
        Format::Csv => csv_table(&header, &columns)?,
        Format::Json => json_text(&PoissonOutput {
            s: order.s(),
            dim: order.dim(),
            M: grid.intervals(),
            beta: grid.beta(),
            r0: report.r0,
            d: report.boundary_level,
            mass_residual,
            linear_residual: report.linear_residual,
            energy: report.energy,
            level_upper_bound,
            monotonicity: report.monotonicity,
            violations: violations.clone(),
            exhaustion,
        })?,
    };
    Ok(RunOutput {
        text,
        failed: !violations.is_empty(),
    })
}

#[derive(Serialize)]
struct EpsRun {
    eps: f64,
    status: IterationStatus,
    iterations: usize,
    deltas: Vec<f64>,
    min_increment: f64,
    max_value: f64,
    u_min: f64,
    u_max: f64,
    d_eps: Option<f64>,
    level_bounds: Option<[f64; 2]>,
    barrier: Option<bool>,
    minimal: Option<bool>,
    violations: Vec<String>,
}

#[derive(Serialize)]
#[allow(non_snake_case)]
struct SemilinearOutput {
    s: f64,
    dim: usize,
    M: usize,
    beta: f64,
    p: f64,
    thresholds: Option<Thresholds>,
    runs: Vec<EpsRun>,
}

fn run_semilinear(cfg: &RunConfig) -> Result<RunOutput> {
    let order = cfg.order()?;
    let op = build_operator(cfg, order, cfg.nodes)?;
    let grid = op.grid().clone();
    let h1 = SourceDescriptor::parse(&cfg.h1)?.sample(grid.clone())?;
    let h2 = SourceDescriptor::parse(&cfg.h2)?.sample(grid.clone())?;
    let mut base = SemilinearSpec::new(h1, h2, cfg.p, 0.0);
    base.allow_zero_h1 = cfg.allow_zero_h1;
    base.validate()?;

    let th = if base.h1.min() > 0.0 {
        let u_h1 = PoissonSolver::new(&op).solve_full(&base.h1)?.solution;
        Some(thresholds(&base, &u_h1)?)
    } else {
        None
    };

    let mut runs = Vec::new();
    let mut header = vec!["r".to_string()];
    let mut columns = vec![grid.nodes().to_vec()];
    let single = cfg.eps.len() == 1;
    for &eps in &cfg.eps {
        let mut spec = base.clone();
        spec.eps = eps;
        let rep = monotone_iteration(&op, &spec)?;
        let mut violations = Vec::new();
        if rep.converged() && !rep.monotone() {
            violations.push(format!("iterates decrease by {:e}", -rep.min_increment()));
        }
        let (mut d_eps, mut level_bounds, mut barrier, mut minimal) = (None, None, None, None);
        let mut shifted = None;
        if rep.converged() {
            match boundary_level_bounds(&rep, &spec) {
                Ok(lv) => {
                    d_eps = Some(lv.level);
                    level_bounds = Some([lv.lower, lv.upper]);
                    shifted = Some(lv.shifted);
                }
                Err(e @ FracError::Verification { .. }) => violations.push(e.to_string()),
                Err(e) => return Err(e),
            }
            match barrier_and_minimality(&op, &spec, &rep) {
                Ok(fl) => {
                    barrier = fl.barrier;
                    minimal = Some(fl.minimal);
                }
                Err(e @ FracError::Verification { .. }) => violations.push(e.to_string()),
                Err(e) => return Err(e),
            }
        }
        let suffix = if single { String::new() } else { format!("={eps}") };
        header.push(format!("u_eps{suffix}"));
        header.push(format!("w_eps{suffix}"));
        let level = rep.solution.boundary_value();
        columns.push(rep.solution.values().to_vec());
        columns.push(
            shifted
                .unwrap_or_else(|| rep.solution.map(|v| v - level))
                .into_values(),
        );
        runs.push(EpsRun {
            eps,
            status: rep.status,
            iterations: rep.iterations(),
            deltas: rep.history[1..].iter().map(|h| h.delta).collect(),
            min_increment: rep.min_increment(),
            max_value: rep.max_value(),
            u_min: rep.solution.min(),
            u_max: rep.solution.max(),
            d_eps,
            level_bounds,
            barrier,
            minimal,
            violations,
        });
    }
    let failed = runs.iter().any(|r| !r.violations.is_empty());
    let text = match cfg.format {
        Format::Csv => csv_table(&header, &columns)?,
        Format::Json => json_text(&SemilinearOutput {
            s: order.s(),
            dim: order.dim(),
            M: grid.intervals(),
            beta: grid.beta(),
            p: cfg.p,
            thresholds: th,
            runs,
        })?,
    };
    Ok(RunOutput { text, failed })
}

/// The verification report for a configuration.
pub fn verification_report(cfg: &RunConfig) -> Result<VerificationReport<RunConfig>> {
    let order = cfg.order()?;
    let params = SuiteParams {
        order,
        intervals: cfg.nodes,
        beta: cfg.beta,
        seed: cfg.seed,
    };
    let checks = verify_suite(&params, &|m| build_operator(cfg, order, m))?;
    Ok(VerificationReport::new(cfg.clone(), checks))
}

fn run_verify(cfg: &RunConfig) -> Result<RunOutput> {
    let report = verification_report(cfg)?;
    for c in &report.checks {
        eprintln!(
            "{:<34} {:<12} {:>8.3}s",
            c.name,
            format!("{:?}", c.status).to_lowercase(),
            c.runtime.as_secs_f64()
        );
    }
    let text = match cfg.format {
        Format::Json => json_text(&report)?,
        Format::Csv => {
            let mut out = String::from("name,status,measured,tolerance\n");
            for c in &report.checks {
                let status = match c.status {
                    CheckStatus::Pass => "pass",
                    CheckStatus::Fail => "fail",
                    CheckStatus::Inconclusive => "inconclusive",
                    CheckStatus::Skipped => "skipped",
                };
                let num = |v: Option<f64>| v.map(fmt_float).unwrap_or_default();
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    c.name,
                    status,
                    num(c.measured),
                    num(c.tolerance)
                ));
            }
            out
        }
    };
    Ok(RunOutput {
        text,
        failed: report.any_failed(),
    })
}

#[derive(Serialize)]
struct ConvergenceOutput {
    s: f64,
    dim: usize,
    beta: f64,
    rows: Vec<ConvergenceRow>,
}

/// `M/8, M/4, M/2, M`, keeping sizes of at least 8.
fn refinement_ladder(m: usize) -> Vec<usize> {
    let mut sizes: Vec<usize> = (0..4)
        .rev()
        .filter(|&k| m.is_multiple_of(1 << k) && m >> k >= MIN_INTERVALS)
        .map(|k| m >> k)
        .collect();
    sizes.dedup();
    sizes
}

fn run_convergence(cfg: &RunConfig) -> Result<RunOutput> {
    let order = cfg.order()?;
    let ops = refinement_ladder(cfg.nodes)
        .into_iter()
        .map(|m| build_operator(cfg, order, m))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&OperatorMatrix> = ops.iter().collect();
    let rows = dyda_convergence(&refs)?;
    let text = match cfg.format {
        Format::Csv => {
            let mut out = String::from("M,residual,order\n");
            for r in &rows {
                out.push_str(&format!(
                    "{},{},{}\n",
                    r.intervals,
                    fmt_float(r.residual),
                    r.order.map(fmt_float).unwrap_or_default()
                ));
            }
            out
        }
        Format::Json => json_text(&ConvergenceOutput {
            s: order.s(),
            dim: order.dim(),
            beta: cfg.beta,
            rows,
        })?,
    };
    ok(text)
}

/// Parse, run and emit; returns the process exit status.
pub fn main_with_args<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cfg = match parse_config(args) {
        Ok(Ok(cfg)) => cfg,
        Ok(Err(e)) => {
            let _ = writeln!(stderr, "fraclap: {e}");
            return e.exit_code();
        }
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = if e.use_stderr() {
                write!(stderr, "{}", e.render())
            } else {
                write!(stdout, "{}", e.render())
            };
            return code;
        }
    };
    let result = run(&cfg).and_then(|out| {
        match &cfg.out {
            Some(path) => write_atomic(path, &out.text)?,
            None => stdout.write_all(out.text.as_bytes())?,
        }
        Ok(out.failed)
    });
    match result {
        Ok(false) => 0,
        Ok(true) => {
            let _ = writeln!(stderr, "fraclap: verification failed");
            1
        }
        Err(e) => {
            let _ = writeln!(stderr, "fraclap: {e}");
            e.exit_code()
        }
    }
}
