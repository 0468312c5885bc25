//! The `stab-adams` command line.
//!
//! Exit codes: 0 success, 1 runtime failure or failed verification, 2 optimizer did
//! not converge, 3 some table cells failed, 4 every integration diverged, 64 usage error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;
use crate::integrate::{self, RunStatus};
use crate::problems::{self, ProblemOptions, BURGERS_MU, BURGERS_N};
use crate::stability;
use crate::synth::json::sig17;
use crate::synth::{self, MethodSpec, OptimizeOptions, RESIDUAL_TOL};
use crate::tables::{self, TableKind};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_NOT_CONVERGED: i32 = 2;
pub const EXIT_PARTIAL: i32 = 3;
pub const EXIT_ALL_DIVERGED: i32 = 4;
pub const EXIT_USAGE: i32 = 64;

/// Largest step count accepted by `synth` and `damp`.
pub const MAX_STEPS: usize = 15;

#[derive(Debug, Parser)]
#[command(name = "stab-adams", version, about = "Explicit Adams-type methods with long real stability intervals")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Synthesize a (k, p) method and write it as JSON.
    Synth(SynthArgs),
    /// Damp the first-order k-step method.
    Damp(DampArgs),
    /// Trace the root locus curve as CSV and/or SVG.
    Stability(StabilityArgs),
    /// Measure the stability interval by formula and by the root condition.
    Interval(MethodArg),
    /// Re-check order conditions, interval length and error constant of a method file.
    Verify(MethodArg),
    /// Integrate a test problem with a fixed step.
    Integrate(IntegrateArgs),
    /// Run a fixed-step convergence study.
    Converge(ConvergeArgs),
    /// Regenerate one of the coefficient tables as CSV.
    Tables(TablesArgs),
}

#[derive(Debug, Args)]
pub struct OptimizerArgs {
    /// Seed of the multi-start optimizer.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of optimizer starts.
    #[arg(long, default_value_t = 64)]
    pub attempts: usize,
}

impl OptimizerArgs {
    fn options(&self) -> OptimizeOptions {
        OptimizeOptions { attempts: self.attempts, seed: self.seed, ..OptimizeOptions::default() }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub p: usize,
    /// Damping parameter (first-order methods only).
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Output JSON file; without it the JSON goes to standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

#[derive(Debug, Args)]
pub struct DampArgs {
    #[arg(long)]
    pub k: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct MethodArg {
    /// Method JSON file as written by `synth`.
    #[arg(long)]
    pub method: PathBuf,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[arg(long)]
    pub method: PathBuf,
    /// Samples on the unit circle.
    #[arg(long, default_value_t = 1000)]
    pub points: usize,
    /// Locus CSV (`phi,re,im`); printed to standard output when neither output is given.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProblemArgs {
    /// One of linear, hires, burgers.
    #[arg(long)]
    pub problem: String,
    /// Eigenvalue of the linear problem.
    #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
    pub lambda: f64,
    /// Viscosity of the Burgers problem.
    #[arg(long, default_value_t = BURGERS_MU)]
    pub mu: f64,
    /// Interior grid points of the Burgers problem.
    #[arg(long, default_value_t = BURGERS_N)]
    pub n: usize,
}

impl ProblemArgs {
    fn build(&self) -> Result<problems::OdeProblem, Error> {
        problems::by_name(&self.problem, &ProblemOptions { lambda: self.lambda, mu: self.mu, n: self.n })
    }
}

#[derive(Debug, Args)]
pub struct IntegrateArgs {
    #[arg(long)]
    pub method: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub tau: f64,
    /// Endpoint CSV (`index,value`).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ConvergeArgs {
    #[arg(long)]
    pub method: PathBuf,
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// Comma-separated, strictly decreasing step sizes.
    #[arg(long, value_delimiter = ',', conflicts_with = "steps", required_unless_present = "steps")]
    pub taus: Vec<f64>,
    /// Comma-separated, strictly increasing step counts over the problem interval.
    #[arg(long, value_delimiter = ',')]
    pub steps: Vec<usize>,
    /// Report CSV (`tau,error,status`); printed to standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Log-log error plot.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TablesArgs {
    /// One of delta, errconst, coeffs.
    #[arg(long)]
    pub which: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub optimizer: OptimizerArgs,
}

/// A failure carrying the process exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::NotConverged { .. } => EXIT_NOT_CONVERGED,
            Error::InvalidInput(_) | Error::Json(_) | Error::Io(_) => EXIT_USAGE,
            _ => EXIT_FAILURE,
        };
        Failure { code, message: e.to_string() }
    }
}

type CmdResult = Result<i32, Failure>;

/// Parses `args` (including the program name), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match dispatch(&cli.command) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: &Command) -> CmdResult {
    match command {
        Command::Synth(a) => cmd_synth(a),
        Command::Damp(a) => cmd_damp(a),
        Command::Stability(a) => cmd_stability(a),
        Command::Interval(a) => cmd_interval(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Integrate(a) => cmd_integrate(a),
        Command::Converge(a) => cmd_converge(a),
        Command::Tables(a) => cmd_tables(a),
    }
}

fn write_output(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure { code: EXIT_FAILURE, message: format!("{}: {e}", path.display()) })
}

fn read_method(path: &Path) -> Result<MethodSpec, Failure> {
    MethodSpec::read_json(path).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))
}

fn summary(m: &MethodSpec) -> String {
    format!("k = {}\np = {}\nepsilon = {}\nell = {}\nC = {}\n", m.k, m.p, m.epsilon, sig17(m.ell), sig17(m.error_const))
}

/// Writes the method JSON to `out`, or to standard output with the summary on standard error.
fn emit_method(m: &MethodSpec, out: Option<&Path>) -> CmdResult {
    let json = m.to_json()?;
    match out {
        Some(path) => {
            write_output(path, &json)?;
            print!("{}", summary(m));
        }
        None => {
            println!("{json}");
            eprint!("{}", summary(m));
        }
    }
    Ok(EXIT_OK)
}

fn check_steps(k: usize) -> Result<(), Failure> {
    if k == 0 || k > MAX_STEPS {
        return Err(Failure::usage(format!("--k must be in 1..={MAX_STEPS}, got {k}")));
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<(), Failure> {
    if !(epsilon >= 0.0) || !epsilon.is_finite() {
        return Err(Failure::usage(format!("--epsilon must be finite and non-negative, got {epsilon}")));
    }
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> CmdResult {
    check_steps(a.k)?;
    if a.p == 0 || a.p > a.k {
        return Err(Failure::usage(format!("--p must be in 1..={}, got {}", a.k, a.p)));
    }
    check_epsilon(a.epsilon)?;
    if a.epsilon > 0.0 && a.p > 1 {
        return Err(Failure::usage("damping is only defined for first-order methods (--p 1)"));
    }
    if a.optimizer.attempts == 0 {
        return Err(Failure::usage("--attempts must be positive"));
    }
    let method = synth::synthesize(a.k, a.p, &a.optimizer.options())?;
    let method = if a.epsilon > 0.0 { synth::apply_damping(&method.beta, a.epsilon)? } else { method };
    emit_method(&method, a.out.as_deref())
}

fn cmd_damp(a: &DampArgs) -> CmdResult {
    check_steps(a.k)?;
    check_epsilon(a.epsilon)?;
    let method = synth::apply_damping(&synth::first_order(a.k)?.beta, a.epsilon)?;
    emit_method(&method, a.out.as_deref())
}

fn cmd_stability(a: &StabilityArgs) -> CmdResult {
    let method = read_method(&a.method)?;
    let curve = stability::trace_locus(&method.beta, a.points)?;
    if a.csv.is_none() && a.svg.is_none() {
        print!("{}", curve.to_csv());
    }
    if let Some(path) = &a.csv {
        write_output(path, &curve.to_csv())?;
    }
    if let Some(path) = &a.svg {
        let title = format!("Root locus, k = {}, p = {}, epsilon = {}", method.k, method.p, method.epsilon);
        write_output(path, &curve.to_svg(&title))?;
    }
    Ok(EXIT_OK)
}

fn cmd_interval(a: &MethodArg) -> CmdResult {
    let method = read_method(&a.method)?;
    let r = stability::measure_interval(&method.beta);
    println!("ell_formula = {}", sig17(r.ell_formula));
    println!("ell_oracle = {}", sig17(r.ell_oracle));
    println!("agree = {}", r.agree);
    Ok(if r.agree { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_verify(a: &MethodArg) -> CmdResult {
    let m = read_method(&a.method)?;
    // (name, deviation, tolerance)
    let mut checks: Vec<(String, f64, f64)> = synth::order_residuals(&m.beta, m.p)
        .iter()
        .enumerate()
        .map(|(i, r)| (format!("G_{}", i + 1), *r, synth::residual_tolerance(&m.beta, i + 1).max(RESIDUAL_TOL)))
        .collect();
    checks.push(("ell - formula".into(), m.ell - stability::ell_formula(&m.beta), 1e-9 * (1.0 + m.ell)));
    let interval = stability::measure_interval(&m.beta);
    checks.push((
        "ell - root condition".into(),
        interval.ell_oracle - interval.ell_formula,
        stability::INTERVAL_AGREEMENT * (1.0 + m.ell),
    ));
    let mut ok = true;
    match stability::error_constant(&m.beta, m.p) {
        Ok(c) => checks.push(("C - recomputed".into(), m.error_const - c, 1e-9 * (1.0 + c.abs()))),
        Err(e) => {
            ok = false;
            println!("FAIL error constant: {e}");
        }
    }
    for (name, value, tol) in &checks {
        let pass = value.abs() <= *tol;
        ok &= pass;
        println!("{} {name} = {:.3e} (tol {tol:.0e})", if pass { "PASS" } else { "FAIL" }, value.abs());
    }
    Ok(if ok { EXIT_OK } else { EXIT_FAILURE })
}

fn cmd_integrate(a: &IntegrateArgs) -> CmdResult {
    let method = read_method(&a.method)?;
    let problem = a.problem.build()?;
    let run = integrate::run_fixed(&problem, &method, a.tau)?;
    println!("problem = {}", problem.name);
    println!("status = {}", run.status.label());
    if let RunStatus::Diverged { step } = run.status {
        println!("diverged_at_step = {step}");
    }
    println!("steps = {}", run.steps);
    println!("f_evals = {}", run.f_evals);
    println!("starter_f_evals = {}", run.starter_f_evals);
    if run.status.is_ok() {
        let exact = problem.reference()?.state_at(problem.t_end);
        let error = run.endpoint.iter().zip(&exact).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        println!("error = {}", sig17(error));
    }
    if let Some(path) = &a.out {
        let mut csv = String::from("index,value\n");
        for (i, v) in run.endpoint.iter().enumerate() {
            let _ = writeln!(csv, "{i},{}", sig17(*v));
        }
        write_output(path, &csv)?;
    }
    Ok(if run.status.is_ok() { EXIT_OK } else { EXIT_ALL_DIVERGED })
}

fn cmd_converge(a: &ConvergeArgs) -> CmdResult {
    let method = read_method(&a.method)?;
    let problem = a.problem.build()?;
    let taus = if a.steps.is_empty() {
        a.taus.clone()
    } else {
        if a.steps.iter().any(|&n| n == 0) {
            return Err(Failure::usage("--steps must be positive"));
        }
        let span = problem.t_end - problem.t0;
        a.steps.iter().map(|&n| span / n as f64).collect()
    };
    let report = integrate::converge_study(&problem, &method, &taus)?;
    match &a.out {
        Some(path) => write_output(path, &report.to_csv())?,
        None => print!("{}", report.to_csv()),
    }
    if let Some(path) = &a.svg {
        let label = format!("k = {}, p = {}, epsilon = {}", method.k, method.p, method.epsilon);
        write_output(path, &report.to_svg(&label))?;
    }
    match report.observed_order {
        Some(order) => eprintln!("observed order = {order:.3}"),
        None => eprintln!("observed order = n/a"),
    }
    Ok(if report.all_diverged() { EXIT_ALL_DIVERGED } else { EXIT_OK })
}

fn cmd_tables(a: &TablesArgs) -> CmdResult {
    let kind: TableKind = a.which.parse().map_err(|e: Error| Failure::usage(e.to_string()))?;
    if a.optimizer.attempts == 0 {
        return Err(Failure::usage("--attempts must be positive"));
    }
    let table = tables::build_table(kind, &a.optimizer.options())?;
    let csv = table.to_csv();
    match &a.out {
        Some(path) => write_output(path, &csv)?,
        None => print!("{csv}"),
    }
    let failures = table.unexpected_failures();
    if failures.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("cells that did not converge: {failures:?}");
        Ok(EXIT_PARTIAL)
    }
}
