//! Command-line front end for the tree-mvs library.
//!
//! Four subcommands share one problem-document format: `check` classifies
//! solvability, `solve` writes the field on a truncated tree, `study`
//! tabulates root-value convergence over several depths, and `simulate`
//! plays the associated board game by Monte Carlo.
//!
//! Exit codes are a stable contract: 0 success (for `check`: Solvable),
//! 2 Unsolvable, 3 Undetermined, 1 bad document (message names the offending
//! key path), 4 iteration did not converge (message carries the residual),
//! 5 the requested tree exceeds the memory cap. 64 flags a usage error,
//! 66 an unreadable config file, 70 any other runtime failure.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::exit;
use std::str::FromStr;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use tree_mvs::coefficients::{classify_solvability, Solvability, SolvabilityReport, VerdictBasis};
use tree_mvs::config::{load_problem, ProblemConfig};
use tree_mvs::game::{estimate_value, greedy_strategy, simulate_episode, GameState};
use tree_mvs::solver::{
    convergence_study, residual_sup, solve_directed_exact, solve_fixed_point, FixedPointOptions,
    SolutionField, SolverChoice, StudyOptions, SystemConfig,
};
use tree_mvs::tree::NodeId;
use tree_mvs::{Error, Result};

const EXIT_CONFIG: i32 = 1;
const EXIT_UNSOLVABLE: i32 = 2;
const EXIT_UNDETERMINED: i32 = 3;
const EXIT_NONCONVERGENCE: i32 = 4;
const EXIT_MEMORY: i32 = 5;
const EXIT_USAGE: i32 = 64;
const EXIT_NOINPUT: i32 = 66;
const EXIT_RUNTIME: i32 = 70;

/// Partial-sum horizon for solvability reports; verdicts themselves are
/// analytic, so this only bounds the recorded evidence.
const CLASSIFY_TRUNCATION: usize = 256;

#[derive(Parser)]
#[command(
    name = "tree-mvs",
    version,
    about = "Solve, classify, and simulate coupled mean-value problems on regular trees"
)]
struct Cli {
    /// Problem document (JSON).
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Primary output file; the run manifest lands next to it as
    /// `<out>.manifest.json`.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,

    /// Master seed for Monte Carlo runs.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Convergence tolerance; overrides the document's `tol`.
    #[arg(long, global = true, value_name = "EPS")]
    tol: Option<f64>,

    /// Truncation depth; overrides the document's `depth`.
    #[arg(long, global = true, value_name = "L")]
    depth: Option<usize>,

    /// Solver backend. Default: the one-pass backward sweep when no equation
    /// looks toward the root, Jacobi iteration otherwise.
    #[arg(long, global = true, value_enum, value_name = "NAME")]
    method: Option<MethodFlag>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodFlag {
    /// One backward sweep; requires every predecessor weight to vanish.
    Exact,
    /// Jacobi iteration to the requested tolerance.
    FixedPoint,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a problem document and classify its solvability.
    Check,
    /// Solve on the truncated tree and write the whole field as CSV.
    Solve {
        /// Sweep budget for the iterative backend.
        #[arg(long, default_value_t = 100_000, value_name = "N")]
        max_sweeps: usize,
    },
    /// Solve at several depths and tabulate how root values settle.
    Study {
        /// Comma-separated, strictly increasing truncation depths.
        #[arg(long, value_delimiter = ',', required = true, value_name = "L1,L2,...")]
        depths: Vec<usize>,

        /// Sweep budget for the iterative backend.
        #[arg(long, default_value_t = 100_000, value_name = "N")]
        max_sweeps: usize,
    },
    /// Estimate the game value at a start state and compare with the solver.
    Simulate {
        /// Start node in dotted digit notation; `@` is the root.
        #[arg(long, default_value = "@", value_name = "NODE")]
        start_node: String,

        /// Start board, 1-based.
        #[arg(long, default_value_t = 1, value_name = "I")]
        start_board: usize,

        /// Number of episodes to play.
        #[arg(long, value_name = "N")]
        episodes: u64,

        /// Also write the first episode's trajectory as CSV.
        #[arg(long, value_name = "PATH")]
        trace_out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            exit(code);
        }
    };
    init_thread_pool();
    match run(&cli) {
        Ok(code) => exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            exit(exit_code_for(&e));
        }
    }
}

/// `TREE_MVS_THREADS` caps intra-sweep parallelism; unset means the rayon
/// default (one worker per CPU).
fn init_thread_pool() {
    if let Ok(raw) = std::env::var("TREE_MVS_THREADS") {
        match raw.trim().parse::<usize>() {
            Ok(n) if n >= 1 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => eprintln!("warning: TREE_MVS_THREADS={raw} is not a positive integer; ignored"),
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::SchemaViolation { .. } | Error::ConfigViolation { .. } | Error::MissingTail(_) => {
            EXIT_CONFIG
        }
        Error::NonConvergence { .. } => EXIT_NONCONVERGENCE,
        Error::MemoryCap { .. } => EXIT_MEMORY,
        Error::MalformedNode(_) | Error::DigitOutOfRange { .. } => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn run(cli: &Cli) -> Result<i32> {
    let started = Instant::now();
    let config_path = require_flag(cli.config.as_deref(), "--config");
    let text = read_config(config_path);
    let problem = load_problem(&text)?;
    match &cli.command {
        Command::Check => cmd_check(cli, started, config_path, &problem),
        Command::Solve { max_sweeps } => {
            cmd_solve(cli, started, config_path, &problem, *max_sweeps)
        }
        Command::Study { depths, max_sweeps } => {
            cmd_study(cli, started, config_path, &problem, depths, *max_sweeps)
        }
        Command::Simulate { start_node, start_board, episodes, trace_out } => cmd_simulate(
            cli,
            started,
            config_path,
            &problem,
            start_node,
            *start_board,
            *episodes,
            trace_out.as_deref(),
        ),
    }
}

fn require_flag<'a, T: ?Sized>(value: Option<&'a T>, flag: &str) -> &'a T {
    match value {
        Some(v) => v,
        None => {
            eprintln!("error: {flag} is required for this command");
            exit(EXIT_USAGE);
        }
    }
}

fn read_config(path: &Path) -> String {
    match fs::read_to_string(path) {
        Ok(text) => text,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            exit(EXIT_NOINPUT);
        }
    }
}

fn resolve_depth(flag: Option<usize>, doc: Option<usize>) -> Result<usize> {
    match (flag, doc) {
        (Some(f), Some(d)) => {
            eprintln!("note: --depth {f} overrides depth = {d} from the document");
            Ok(f)
        }
        (Some(f), None) => Ok(f),
        (None, Some(d)) => Ok(d),
        (None, None) => Err(Error::Precondition(
            "no truncation depth: set \"depth\" in the document or pass --depth".into(),
        )),
    }
}

fn resolve_tol(flag: Option<f64>, doc: Option<f64>) -> Result<f64> {
    match (flag, doc) {
        (Some(f), Some(d)) => {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Precondition(format!("--tol must be positive, got {f}")));
            }
            eprintln!("note: --tol {f:e} overrides tol = {d:e} from the document");
            Ok(f)
        }
        (Some(f), None) => {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::Precondition(format!("--tol must be positive, got {f}")));
            }
            Ok(f)
        }
        (None, Some(d)) => Ok(d),
        (None, None) => Ok(FixedPointOptions::default().tol),
    }
}

/// Full round-trip precision: one leading digit plus 16 fractional digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn basis_text(basis: &VerdictBasis) -> String {
    match basis {
        VerdictBasis::Analytic { rule } => rule.clone(),
        VerdictBasis::NumericOnly => "numeric partial sums only, no analytic rule applies".into(),
    }
}

fn classification_note(system: &SystemConfig) -> Result<SolvabilityReport> {
    let report = classify_solvability(system, CLASSIFY_TRUNCATION)?;
    eprintln!("note: solvability classification is {:?}", report.overall);
    Ok(report)
}

fn write_output(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents)
        .map_err(|e| Error::OutOfDomain(format!("cannot write {}: {e}", path.display())))
}

fn manifest_path(out: &Path) -> PathBuf {
    let mut os = out.as_os_str().to_owned();
    os.push(".manifest.json");
    PathBuf::from(os)
}

/// Every run that produces files also drops exactly one manifest recording
/// the command, the resolved parameters, and the output paths.
fn write_manifest(
    out: &Path,
    command: &str,
    config_path: &Path,
    parameters: serde_json::Value,
    outputs: &[&Path],
    summary: serde_json::Value,
    started: Instant,
) -> Result<()> {
    let mut doc = json!({
        "command": command,
        "config": config_path.to_string_lossy(),
        "parameters": parameters,
        "outputs": outputs
            .iter()
            .map(|p| p.to_string_lossy().into_owned())
            .collect::<Vec<_>>(),
        "wall_ms": started.elapsed().as_millis() as u64,
        "version": env!("CARGO_PKG_VERSION"),
    });
    if let serde_json::Value::Object(extra) = summary {
        doc.as_object_mut().expect("manifest is an object").extend(extra);
    }
    let rendered = serde_json::to_string_pretty(&doc).expect("manifest serializes") + "\n";
    write_output(&manifest_path(out), &rendered)
}

fn cmd_check(
    cli: &Cli,
    started: Instant,
    config_path: &Path,
    problem: &ProblemConfig,
) -> Result<i32> {
    let report = classify_solvability(&problem.system, CLASSIFY_TRUNCATION)?;
    let mut text = String::new();
    for condition in &report.conditions {
        let _ = writeln!(
            text,
            "{}: {:?} ({})",
            condition.label,
            condition.verdict.status,
            basis_text(&condition.verdict.basis)
        );
    }
    let _ = writeln!(text, "overall: {:?}", report.overall);
    print!("{text}");
    if let Some(out) = cli.out.as_deref() {
        write_output(out, &text)?;
        let summary: Vec<serde_json::Value> = report
            .conditions
            .iter()
            .map(|c| json!({ "label": c.label, "status": format!("{:?}", c.verdict.status) }))
            .collect();
        write_manifest(
            out,
            "check",
            config_path,
            json!({ "truncation": CLASSIFY_TRUNCATION }),
            &[out],
            json!({
                "overall": format!("{:?}", report.overall),
                "conditions": summary,
            }),
            started,
        )?;
    }
    Ok(match report.overall {
        Solvability::Solvable => 0,
        Solvability::Unsolvable => EXIT_UNSOLVABLE,
        Solvability::Undetermined => EXIT_UNDETERMINED,
    })
}

enum Backend {
    Exact,
    FixedPoint,
}

impl Backend {
    fn resolve(flag: Option<MethodFlag>, system: &SystemConfig) -> Backend {
        match flag {
            Some(MethodFlag::Exact) => Backend::Exact,
            Some(MethodFlag::FixedPoint) => Backend::FixedPoint,
            None if system.is_directed() => Backend::Exact,
            None => Backend::FixedPoint,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            Backend::Exact => "exact",
            Backend::FixedPoint => "fixed-point",
        }
    }
}

fn solve_field(
    system: &SystemConfig,
    problem: &ProblemConfig,
    backend: &Backend,
    depth: usize,
    tol: f64,
    max_sweeps: usize,
) -> Result<SolutionField> {
    match backend {
        Backend::Exact => solve_directed_exact(system, &problem.boundary, depth),
        Backend::FixedPoint => {
            let options = FixedPointOptions { tol, max_sweeps, ..FixedPointOptions::default() };
            solve_fixed_point(system, &problem.boundary, depth, &options)
        }
    }
}

fn solve_csv(field: &SolutionField) -> String {
    let m = field.m() as u32;
    let mut csv = String::from("component,node,level,psi,value\n");
    for component in 0..field.component_count() {
        for level in 0..=field.depth() {
            for flat in 0..field.level_slice(component, level).len() {
                let node = NodeId::from_flat(level, flat as u128, m);
                let psi = node.psi(m).expect("flat index is in range for its level");
                let _ = writeln!(
                    csv,
                    "{},{},{},{},{}",
                    component + 1,
                    node,
                    level,
                    fmt_f64(psi),
                    fmt_f64(field.value_flat(component, level, flat)),
                );
            }
        }
    }
    csv
}

fn cmd_solve(
    cli: &Cli,
    started: Instant,
    config_path: &Path,
    problem: &ProblemConfig,
    max_sweeps: usize,
) -> Result<i32> {
    let out = require_flag(cli.out.as_deref(), "--out");
    let depth = resolve_depth(cli.depth, problem.depth)?;
    let tol = resolve_tol(cli.tol, problem.tol)?;
    let backend = Backend::resolve(cli.method, &problem.system);
    let report = classification_note(&problem.system)?;
    let field = solve_field(&problem.system, problem, &backend, depth, tol, max_sweeps)?;
    let residual = residual_sup(&problem.system, &field)?;
    write_output(out, &solve_csv(&field))?;
    write_manifest(
        out,
        "solve",
        config_path,
        json!({
            "depth": depth,
            "tol": tol,
            "method": backend.name(),
            "max_sweeps": max_sweeps,
        }),
        &[out],
        json!({
            "classification": format!("{:?}", report.overall),
            "iterations": field.meta.iterations,
            "residual_sup": residual,
        }),
        started,
    )?;
    println!(
        "solved {} components to depth {} (m = {})",
        field.component_count(),
        depth,
        field.m()
    );
    println!(
        "method={} iterations={} residual_sup={}",
        backend.name(),
        field.meta.iterations,
        fmt_f64(residual)
    );
    Ok(0)
}

fn cmd_study(
    cli: &Cli,
    started: Instant,
    config_path: &Path,
    problem: &ProblemConfig,
    depths: &[usize],
    max_sweeps: usize,
) -> Result<i32> {
    let out = require_flag(cli.out.as_deref(), "--out");
    if cli.depth.is_some() {
        eprintln!("note: study ignores --depth; the depth list comes from --depths");
    }
    let tol = resolve_tol(cli.tol, problem.tol)?;
    let method = match cli.method {
        Some(MethodFlag::Exact) => SolverChoice::DirectedExact,
        Some(MethodFlag::FixedPoint) => SolverChoice::FixedPoint,
        None => SolverChoice::Auto,
    };
    let report = classification_note(&problem.system)?;
    let options = StudyOptions { method, tol, max_sweeps };
    let rows = convergence_study(&problem.system, &problem.boundary, depths, &options)?;
    let mut csv = String::from("L,component,root_value,delta,component_gap\n");
    for row in &rows {
        let delta = row.delta.map(fmt_f64).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{}",
            row.depth,
            row.component + 1,
            fmt_f64(row.root_value),
            delta,
            fmt_f64(row.component_gap),
        );
    }
    write_output(out, &csv)?;
    let last = rows.last().expect("a study has at least one row");
    write_manifest(
        out,
        "study",
        config_path,
        json!({
            "depths": depths,
            "tol": tol,
            "method": match method {
                SolverChoice::Auto => "auto",
                SolverChoice::DirectedExact => "exact",
                SolverChoice::FixedPoint => "fixed-point",
            },
            "max_sweeps": max_sweeps,
        }),
        &[out],
        json!({
            "classification": format!("{:?}", report.overall),
            "rows": rows.len(),
            "final_depth": last.depth,
            "final_component_gap": last.component_gap,
        }),
        started,
    )?;
    println!("studied {} depths up to L = {}", depths.len(), last.depth);
    println!("final component gap {}", fmt_f64(last.component_gap));
    Ok(0)
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    cli: &Cli,
    started: Instant,
    config_path: &Path,
    problem: &ProblemConfig,
    start_node: &str,
    start_board: usize,
    episodes: u64,
    trace_out: Option<&Path>,
) -> Result<i32> {
    let out = require_flag(cli.out.as_deref(), "--out");
    let depth = resolve_depth(cli.depth, problem.depth)?;
    let seed = cli.seed.unwrap_or(0);
    let node = NodeId::from_str(start_node)?;
    let start = GameState::start(node.clone(), start_board);
    let report = classification_note(&problem.system)?;
    let estimate =
        estimate_value(&problem.system, &problem.boundary, &start, depth, episodes, seed)?;
    let mut csv = String::from("start_node,start_board,L,episodes,mean,stderr,solver_value,z_score\n");
    let _ = writeln!(
        csv,
        "{},{},{},{},{},{},{},{}",
        node,
        start_board,
        depth,
        episodes,
        fmt_f64(estimate.mean),
        fmt_f64(estimate.stderr),
        fmt_f64(estimate.solver_value),
        fmt_f64(estimate.z_score),
    );
    write_output(out, &csv)?;

    let mut outputs: Vec<&Path> = vec![out];
    let mut trace_payoff = None;
    if let Some(trace_path) = trace_out {
        // Stream 0 of the master seed is exactly the estimator's first
        // episode, so the trace replays episode 0.
        let field = if problem.system.is_directed() {
            solve_directed_exact(&problem.system, &problem.boundary, depth)?
        } else {
            solve_fixed_point(
                &problem.system,
                &problem.boundary,
                depth,
                &FixedPointOptions::default(),
            )?
        };
        let mut strategy = greedy_strategy(&field);
        let (payoff, trace) =
            simulate_episode(&problem.system, &problem.boundary, &start, &mut strategy, depth, seed)?;
        let mut trace_csv = String::from("step,node,board,level\n");
        for state in &trace {
            let _ = writeln!(
                trace_csv,
                "{},{},{},{}",
                state.step,
                state.node,
                state.board,
                state.node.level(),
            );
        }
        write_output(trace_path, &trace_csv)?;
        outputs.push(trace_path);
        trace_payoff = Some(payoff);
    }

    write_manifest(
        out,
        "simulate",
        config_path,
        json!({
            "depth": depth,
            "episodes": episodes,
            "seed": seed,
            "start_node": node.to_string(),
            "start_board": start_board,
        }),
        &outputs,
        json!({
            "classification": format!("{:?}", report.overall),
            "estimate": estimate,
            "trace_payoff": trace_payoff,
        }),
        started,
    )?;
    println!(
        "episodes={} mean={} stderr={} solver={} z={}",
        episodes,
        fmt_f64(estimate.mean),
        fmt_f64(estimate.stderr),
        fmt_f64(estimate.solver_value),
        fmt_f64(estimate.z_score),
    );
    Ok(0)
}
