use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use gaugeint::checks;
use gaugeint::corpus::{self, ProblemSpec};
use gaugeint::decomposition::{decompose, format_number, DecomposeOptions, IntegralJson, Real, ResidueJson};
use gaugeint::integrator::{gr_integral, ordinary_riemann, random_cross_check, IntegralResult, IntegralStatus};
use gaugeint::partition::{Caps, TagPolicy};
use gaugeint::residue::{basic_sum, point_residue, ResidueStatus};

const EXIT_USAGE: u8 = 1;
const EXIT_NOT_APPLICABLE: u8 = 2;
const EXIT_BUDGET: u8 = 3;
const EXIT_FAILED: u8 = 4;

const BUDGET_VAR: &str = "GAUGEINT_CELL_BUDGET";

/// Gauge integration, residues over exceptional sets, and the
/// decomposition ΔF = R-∫f_ex + ℜ.
#[derive(Parser)]
#[command(name = "gaugeint", version, after_help = EXIT_HELP)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

const EXIT_HELP: &str = "Exit codes: 0 success, 1 usage or problem-file error, 2 NOT_BS or \
INDETERMINATE_FORM, 3 budget exhausted, 4 identity or self-check failure.\n\
The cell budget defaults to 20000000 and can be set with GAUGEINT_CELL_BUDGET.";

#[derive(Subcommand)]
enum Command {
    /// Generalized Riemann integral of the extended integrand f_ex
    Integrate {
        #[command(flatten)]
        run: RunArgs,
        /// Write the convergence trace (k, h_k, gamma_k, cells, value) as CSV
        #[arg(long, value_name = "PATH")]
        trace_csv: Option<PathBuf>,
        /// Ordinary Riemann integral: uniform gauges, E ignored
        #[arg(long)]
        ordinary: bool,
    },
    /// Residue sum of F over the exceptional set
    Residue {
        #[command(flatten)]
        run: RunArgs,
    },
    /// ΔF, the generalized Riemann part and the residue sum, and whether they agree
    Decompose {
        #[command(flatten)]
        run: RunArgs,
    },
    /// List the built-in problems, or print one
    Corpus {
        /// Print this builtin's definition
        name: Option<String>,
    },
    /// Run self-check suites
    Check {
        /// partitions, proximity, additivity, residues, cantor-levels, cantor-evaluator, corpus or all
        #[arg(default_value = "all")]
        suite: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Builtin name, or a problem file given with a path separator (./p.json)
    problem: String,
    /// Tolerance [default: the problem's own, else 1e-6]
    #[arg(long)]
    tol: Option<f64>,
    /// Tag policy: henstock, mcshane, left or right
    #[arg(long, default_value_t = TagPolicy::Henstock)]
    policy: TagPolicy,
    /// Seed of the random-partition cross-check in `integrate`
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here instead of standard output
    #[arg(long, short, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Leave traces and probes out of the report
    #[arg(long)]
    no_trace: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure { code: EXIT_USAGE, message: message.into() }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("gaugeint: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Integrate { run, trace_csv, ordinary } => integrate(&run, trace_csv.as_deref(), ordinary),
        Command::Residue { run } => residue(&run),
        Command::Decompose { run } => decompose_cmd(&run),
        Command::Corpus { name } => corpus_cmd(name.as_deref()),
        Command::Check { suite, seed } => check(&suite, seed),
    }
}

/// Builtins by bare name; anything with a path separator is a file.
fn resolve(problem: &str) -> Result<ProblemSpec, Failure> {
    if problem.contains('/') || problem.contains(std::path::MAIN_SEPARATOR) {
        return corpus::load_problem(problem).map_err(|e| Failure::usage(format!("{}: {e}", e.kind())));
    }
    corpus::builtin(problem).ok_or_else(|| {
        let names: Vec<_> = corpus::builtin_names().collect();
        Failure::usage(format!(
            "no builtin problem `{problem}` (known: {}); give files as ./{problem}",
            names.join(", ")
        ))
    })
}

fn settings(run: &RunArgs, problem: &ProblemSpec) -> Result<DecomposeOptions, Failure> {
    let tol = run.tol.or(problem.tol).unwrap_or(1e-6);
    if !(tol >= 1e-12 && tol.is_finite()) {
        return Err(Failure::usage(format!("--tol must be a finite number >= 1e-12, got {tol}")));
    }
    Ok(DecomposeOptions {
        tol,
        policy: run.policy,
        caps: caps()?,
    })
}

fn caps() -> Result<Caps, Failure> {
    let mut caps = Caps::default();
    if let Ok(raw) = std::env::var(BUDGET_VAR) {
        caps.max_cells = raw
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::usage(format!("{BUDGET_VAR} must be a positive integer, got `{raw}`")))?;
    }
    Ok(caps)
}

fn emit(run: &RunArgs, text: &str) -> Result<(), Failure> {
    match &run.output {
        Some(path) => fs::write(path, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::usage(format!("cannot write the report: {e}"))),
    }
}

fn to_json(value: &impl serde::Serialize) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    text
}

fn integrate(run: &RunArgs, trace_csv: Option<&Path>, ordinary: bool) -> Result<u8, Failure> {
    let problem = resolve(&run.problem)?;
    let opts = settings(run, &problem)?;
    let integrator = opts.integrator(&problem);
    let f = problem.extended_derivative();
    let result = if ordinary {
        ordinary_riemann(&f, problem.ambient, &integrator)
    } else {
        gr_integral(&f, problem.ambient, &problem.exceptional, &integrator)
    };
    if let Some(path) = trace_csv {
        write_trace(path, &result)?;
    }
    // re-sum the finest level over a seeded random partition
    let cross_check = match (ordinary, result.status, result.trace.last()) {
        (false, IntegralStatus::Converged, Some(row)) => {
            random_cross_check(&f, problem.ambient, &problem.exceptional, &integrator, row.k, run.seed)
                .ok()
                .map(|(value, cells)| CrossCheck {
                    seed: run.seed,
                    value: Real(value),
                    cells,
                    deviation: Real((value - result.value).abs()),
                })
        }
        _ => None,
    };
    let report = IntegrateReport {
        problem: &problem.name,
        method: if ordinary { "ordinary" } else { "gauge" },
        tol: Real(opts.tol),
        policy: opts.policy.name(),
        riemann: IntegralJson { result: &result, traces: !run.no_trace },
        cross_check,
    };
    emit(run, &to_json(&report))?;
    Ok(match result.status {
        IntegralStatus::Converged => 0,
        IntegralStatus::Divergent => EXIT_NOT_APPLICABLE,
        IntegralStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

#[derive(Serialize)]
struct IntegrateReport<'a> {
    problem: &'a str,
    method: &'static str,
    tol: Real,
    policy: &'static str,
    riemann: IntegralJson<'a>,
    cross_check: Option<CrossCheck>,
}

#[derive(Serialize)]
struct CrossCheck {
    seed: u64,
    value: Real,
    cells: usize,
    deviation: Real,
}

#[derive(Serialize)]
struct ResidueReport<'a> {
    problem: &'a str,
    tol: Real,
    residue: ResidueJson<'a>,
    points: Vec<PointReport<'a>>,
}

#[derive(Serialize)]
struct PointReport<'a> {
    x: Real,
    residue: ResidueJson<'a>,
}

fn write_trace(path: &Path, result: &IntegralResult) -> Result<(), Failure> {
    let fail = |e: &dyn std::fmt::Display| Failure::usage(format!("cannot write {}: {e}", path.display()));
    let mut out = csv::Writer::from_path(path).map_err(|e| fail(&e))?;
    out.write_record(["k", "h_k", "gamma_k", "cells", "value"]).map_err(|e| fail(&e))?;
    for row in &result.trace {
        out.write_record([
            row.k.to_string(),
            format_number(row.h),
            format_number(row.gamma),
            row.cells.to_string(),
            format_number(row.value),
        ])
        .map_err(|e| fail(&e))?;
    }
    out.flush().map_err(|e| fail(&e))
}

fn residue(run: &RunArgs) -> Result<u8, Failure> {
    let problem = resolve(&run.problem)?;
    let opts = settings(run, &problem)?.residue();
    let big_f = problem.extended_antiderivative();
    let total = basic_sum(&big_f, &problem.exceptional, problem.ambient, &opts);
    let points: Vec<_> = problem
        .exceptional
        .finite_points()
        .iter()
        .map(|&x| (x, point_residue(&big_f, x, problem.ambient, &opts)))
        .collect();
    let report = ResidueReport {
        problem: &problem.name,
        tol: Real(opts.tol),
        residue: ResidueJson { result: &total, traces: !run.no_trace },
        points: points
            .iter()
            .map(|(x, r)| PointReport { x: Real(*x), residue: ResidueJson { result: r, traces: false } })
            .collect(),
    };
    emit(run, &to_json(&report))?;
    Ok(match total.status {
        ResidueStatus::Summable => 0,
        ResidueStatus::NotBasicallySummable => EXIT_NOT_APPLICABLE,
        ResidueStatus::BudgetExhausted => EXIT_BUDGET,
    })
}

fn decompose_cmd(run: &RunArgs) -> Result<u8, Failure> {
    let problem = resolve(&run.problem)?;
    let opts = settings(run, &problem)?;
    let report = decompose(&problem, &opts);
    emit(run, &report.to_json(!run.no_trace))?;
    if run.output.is_some() {
        println!("{}: {}", report.problem, report.verdict);
    }
    Ok(report.verdict.exit_code() as u8)
}

fn corpus_cmd(name: Option<&str>) -> Result<u8, Failure> {
    let mut out = io::stdout().lock();
    let write_fail = |e: io::Error| Failure::usage(format!("cannot write: {e}"));
    match name {
        Some(name) => {
            let text = corpus::builtin_source(name).ok_or_else(|| Failure::usage(format!("no builtin problem `{name}`")))?;
            out.write_all(text.as_bytes()).map_err(write_fail)?;
        }
        None => {
            for p in corpus::builtins() {
                writeln!(out, "{:<14} {:<22} E = {}", p.name, p.ambient.to_string(), describe_set(&p)).map_err(write_fail)?;
            }
        }
    }
    Ok(0)
}

fn describe_set(p: &ProblemSpec) -> String {
    use gaugeint::ExceptionalSet;
    match &p.exceptional {
        ExceptionalSet::Empty => "empty".into(),
        ExceptionalSet::FinitePoints(pts) => {
            let pts: Vec<_> = pts.iter().map(f64::to_string).collect();
            format!("{{{}}}", pts.join(", "))
        }
        ExceptionalSet::CantorMiddleThirds(iv) => format!("Cantor set on {iv}"),
    }
}

fn check(suite: &str, seed: u64) -> Result<u8, Failure> {
    let outcomes = checks::run(suite, seed).map_err(|e| {
        Failure::usage(format!("{e}; choose from {} or all", checks::SUITES.join(", ")))
    })?;
    let mut all = true;
    for o in &outcomes {
        println!("{o}");
        for f in &o.failures {
            println!("    {f}");
        }
        all &= o.passed();
    }
    let failed = outcomes.iter().filter(|o| !o.passed()).count();
    println!("{} suites, {} failed", outcomes.len(), failed);
    Ok(if all { 0 } else { EXIT_FAILED })
}
