//! `hram`: verification suites and data emitters.
//!
//! Exit status is 0 when every check passes, 1 when a check fails and 2 on invalid input.

mod grid;
mod output;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hram_core::qseries::{EisensteinTriple, PHI1_ACCURACY};
use hram_core::sympgrp::{check_symplectic, gsp_multiplier, GROUP_TOL};
use hram_core::verify::{self, SuiteReport, VerifyConfig};
use hram_core::{flows, CMatrix, Error, LeafSpec, SymplecticMatrix, C64};
use serde::Serialize;

use output::{fmt_f64, write_csv, write_json};

#[derive(Parser, Debug)]
#[command(
    name = "hram",
    version,
    about = "Verification suites for the Ramanujan flows and their leaves"
)]
struct Cli {
    /// Seed for every randomised check.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Overrides the tolerance of the selected command.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run verification suites.
    Verify {
        #[command(subcommand)]
        suite: VerifySuite,
    },
    /// Evaluate functions.
    Eval {
        #[command(subcommand)]
        what: EvalCmd,
    },
    /// Check properties of matrices read from JSON files.
    Check {
        #[command(subcommand)]
        what: CheckCmd,
    },
    /// Sample twisted leaves.
    Leaf {
        #[command(subcommand)]
        what: LeafCmd,
    },
}

#[derive(Subcommand, Debug)]
enum VerifySuite {
    /// Every suite in order: ramanujan, gauss-manin, periods, flows.
    All {
        #[arg(long, default_value_t = 200)]
        order: usize,
        #[arg(long, default_value_t = 400)]
        cutoff: usize,
        #[arg(long, default_value_t = 120)]
        terms: usize,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
    /// Exact vanishing of the Ramanujan residual series.
    Ramanujan {
        #[arg(long, default_value_t = 200)]
        order: usize,
    },
    /// Canonical-frame Gauss-Manin derivatives.
    GaussManin {
        #[arg(long)]
        g: Option<usize>,
    },
    /// Riemann relation and Eisenstein identities from lattice sums.
    Periods {
        /// `re,im`; repeat for several points. Defaults to i, 2i and 1/2 + 2i.
        #[arg(long, value_parser = parse_complex_arg)]
        tau: Vec<C64>,
        #[arg(long, default_value_t = 400)]
        cutoff: usize,
        #[arg(long, default_value_t = 120)]
        terms: usize,
    },
    /// Flow integration, leaf identities and translation invariance.
    Flows {
        #[arg(long)]
        g: Option<usize>,
        #[arg(long, default_value_t = 50)]
        trials: usize,
    },
}

#[derive(Subcommand, Debug)]
enum EvalCmd {
    /// `(E2, E4, E6)` at `tau` with certified tail bounds.
    Phi1 {
        #[arg(long, value_parser = parse_complex_arg)]
        tau: C64,
        #[arg(long, default_value_t = 120)]
        terms: usize,
    },
}

#[derive(Subcommand, Debug)]
enum CheckCmd {
    /// Symplecticity and multiplier of a matrix.
    Symplectic {
        #[arg(long)]
        matrix: PathBuf,
    },
}

#[derive(Subcommand, Debug)]
enum LeafCmd {
    /// Points `(tau, psi_delta(tau))` over a grid; CSV unless `--format json`.
    Sample {
        /// Matrix JSON file, or `identity` (with `--g`).
        #[arg(long)]
        delta: String,
        #[arg(long, default_value_t = 1)]
        g: usize,
        /// `a..b:n`, or one such axis per upper-triangular entry of tau separated by `;`.
        #[arg(long)]
        grid: String,
    },
}

fn parse_complex_arg(s: &str) -> Result<C64, String> {
    grid::parse_complex(s)
}

/// Why a command did not succeed.
enum Failure {
    /// Checks ran and at least one failed; the report has been written.
    Checks,
    Input(String),
    Io(io::Error),
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Io(e)
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Input(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

struct Sink<'a> {
    out: Option<&'a Path>,
}

impl Sink<'_> {
    fn writer(&self) -> io::Result<Box<dyn Write>> {
        Ok(match self.out {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout().lock())),
        })
    }

    fn json<T: Serialize>(&self, v: &T) -> io::Result<()> {
        write_json(v, self.writer()?)
    }

    fn csv(&self, header: &[&str], rows: &[Vec<String>]) -> io::Result<()> {
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        write_csv(&header, rows, self.writer()?)
    }
}

fn checked_tol(tol: Option<f64>) -> Result<Option<f64>, Failure> {
    match tol {
        Some(t) if !(t.is_finite() && t >= 0.0) => Err(Failure::Input(format!(
            "tolerance {t} must be finite and nonnegative"
        ))),
        t => Ok(t),
    }
}

#[derive(Serialize)]
struct VerifyReport<'a> {
    passed: bool,
    seed: u64,
    suites: &'a [SuiteReport],
}

fn emit_suites(cli: &Cli, sink: &Sink, suites: &[SuiteReport]) -> Outcome {
    let passed = suites.iter().all(|s| s.passed);
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&VerifyReport {
            passed,
            seed: cli.seed,
            suites,
        })?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = suites
                .iter()
                .flat_map(|s| {
                    s.checks.iter().map(move |c| {
                        vec![
                            s.suite.clone(),
                            c.name.clone(),
                            fmt_f64(c.residual),
                            fmt_f64(c.tolerance),
                            c.passed.to_string(),
                        ]
                    })
                })
                .collect();
            sink.csv(
                &["suite", "check", "residual", "tolerance", "passed"],
                &rows,
            )?;
        }
    }
    if passed {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn run_verify(cli: &Cli, suite: &VerifySuite, sink: &Sink) -> Outcome {
    let base = VerifyConfig {
        seed: cli.seed,
        tol_override: checked_tol(cli.tol)?,
        ..VerifyConfig::default()
    };
    let reports = match suite {
        VerifySuite::All {
            order,
            cutoff,
            terms,
            trials,
        } => {
            let cfg = VerifyConfig {
                order: *order,
                cutoff: *cutoff,
                terms: *terms,
                trials: *trials,
                ..base
            };
            verify::all(&cfg)?
        }
        VerifySuite::Ramanujan { order } => return run_ramanujan(cli, *order, sink),
        VerifySuite::GaussManin { g } => {
            vec![verify::gauss_manin(&VerifyConfig { g: *g, ..base })?]
        }
        VerifySuite::Periods { tau, cutoff, terms } => {
            let taus = if tau.is_empty() {
                base.taus.clone()
            } else {
                tau.clone()
            };
            vec![verify::periods(&VerifyConfig {
                taus,
                cutoff: *cutoff,
                terms: *terms,
                ..base
            })?]
        }
        VerifySuite::Flows { g, trials } => vec![verify::flows(&VerifyConfig {
            g: *g,
            trials: *trials,
            ..base
        })?],
    };
    emit_suites(cli, sink, &reports)
}

#[derive(Serialize)]
struct RamanujanReport {
    order: usize,
    residuals: &'static str,
    nonzero_coefficients: usize,
}

fn run_ramanujan(cli: &Cli, order: usize, sink: &Sink) -> Outcome {
    if order == 0 || order > 20_000 {
        return Err(Failure::Input(format!(
            "order {order} is outside 1..=20000"
        )));
    }
    let nonzero = verify::ramanujan_nonzero(order)?;
    let report = RamanujanReport {
        order,
        residuals: if nonzero == 0 { "zero" } else { "nonzero" },
        nonzero_coefficients: nonzero,
    };
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&report)?,
        Format::Csv => sink.csv(
            &["order", "residuals", "nonzero_coefficients"],
            &[vec![
                order.to_string(),
                report.residuals.into(),
                nonzero.to_string(),
            ]],
        )?,
    }
    if nonzero == 0 {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

#[derive(Serialize)]
struct Phi1Report {
    tau: [f64; 2],
    terms: usize,
    accuracy: f64,
    e2: [f64; 2],
    e4: [f64; 2],
    e6: [f64; 2],
    tail_bounds: TailBounds,
}

#[derive(Serialize)]
struct TailBounds {
    e2: f64,
    e4: f64,
    e6: f64,
}

fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

fn run_eval_phi1(cli: &Cli, tau: C64, terms: usize, sink: &Sink) -> Outcome {
    if terms == 0 || terms > 20_000 {
        return Err(Failure::Input(format!(
            "terms {terms} is outside 1..=20000"
        )));
    }
    let accuracy = checked_tol(cli.tol)?.unwrap_or(PHI1_ACCURACY);
    let phi = EisensteinTriple::new(terms)?
        .eval(tau, accuracy)
        .map_err(|e| match e {
            Error::TailBound { .. } => Failure::Input(format!("{e}; raise --terms")),
            e => e.into(),
        })?;
    let [b2, b4, b6] = phi.tail_bounds;
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&Phi1Report {
            tau: pair(tau),
            terms,
            accuracy,
            e2: pair(phi.point.e2),
            e4: pair(phi.point.e4),
            e6: pair(phi.point.e6),
            tail_bounds: TailBounds {
                e2: b2,
                e4: b4,
                e6: b6,
            },
        })?,
        Format::Csv => {
            let p = phi.point;
            let rows = [("e2", p.e2, b2), ("e4", p.e4, b4), ("e6", p.e6, b6)]
                .iter()
                .map(|(n, z, b)| vec![n.to_string(), fmt_f64(z.re), fmt_f64(z.im), fmt_f64(*b)])
                .collect::<Vec<_>>();
            sink.csv(&["component", "re", "im", "tail_bound"], &rows)?;
        }
    }
    Ok(())
}

fn read_matrix(path: &Path) -> Result<CMatrix, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SymplecticReport {
    symplectic: bool,
    nu: Option<[f64; 2]>,
    defect: f64,
}

fn run_check_symplectic(cli: &Cli, path: &Path, sink: &Sink) -> Outcome {
    let m = read_matrix(path)?;
    let tol = checked_tol(cli.tol)?.unwrap_or(GROUP_TOL);
    let check = check_symplectic(&m, tol)?;
    let nu = gsp_multiplier(&m, tol).ok().map(pair);
    let report = SymplecticReport {
        symplectic: check.symplectic,
        nu,
        defect: check.defect,
    };
    match cli.format.unwrap_or(Format::Json) {
        Format::Json => sink.json(&report)?,
        Format::Csv => {
            let (re, im) = nu.map_or((String::new(), String::new()), |[a, b]| {
                (fmt_f64(a), fmt_f64(b))
            });
            sink.csv(
                &["symplectic", "nu_re", "nu_im", "defect"],
                &[vec![
                    check.symplectic.to_string(),
                    re,
                    im,
                    fmt_f64(check.defect),
                ]],
            )?;
        }
    }
    if check.symplectic {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

#[derive(Serialize)]
struct LeafPoint {
    tau: CMatrix,
    state: CMatrix,
}

fn matrix_columns(prefix: &str, n: usize) -> Vec<String> {
    (1..=n)
        .flat_map(|i| {
            (1..=n)
                .flat_map(move |j| [format!("{prefix}_{i}{j}_re"), format!("{prefix}_{i}{j}_im")])
        })
        .collect()
}

fn matrix_cells(m: &CMatrix) -> impl Iterator<Item = String> + '_ {
    m.entries()
        .iter()
        .flat_map(|z| [fmt_f64(z.re), fmt_f64(z.im)])
}

fn run_leaf_sample(cli: &Cli, delta: &str, g: usize, grid_spec: &str, sink: &Sink) -> Outcome {
    let spec = if delta == "identity" {
        if !(1..=8).contains(&g) {
            return Err(Failure::Input(format!("g = {g} is outside 1..=8")));
        }
        LeafSpec::identity(g)
    } else {
        let m = read_matrix(Path::new(delta))?;
        let tol = checked_tol(cli.tol)?.unwrap_or(GROUP_TOL);
        LeafSpec::new(SymplecticMatrix::new(m, tol)?)
    };
    let points = grid::parse_grid(grid_spec, spec.g()).map_err(Failure::Input)?;
    let samples = flows::sample_leaf(&spec, &points)?;
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let g = spec.g();
            let mut header = matrix_columns("tau", g);
            header.extend(matrix_columns("state", 2 * g));
            let rows: Vec<Vec<String>> = samples
                .iter()
                .map(|s| {
                    matrix_cells(s.tau.tau())
                        .chain(matrix_cells(s.state.matrix()))
                        .collect()
                })
                .collect();
            let header: Vec<&str> = header.iter().map(String::as_str).collect();
            sink.csv(&header, &rows)?;
        }
        Format::Json => {
            let pts: Vec<LeafPoint> = samples
                .iter()
                .map(|s| LeafPoint {
                    tau: s.tau.tau().clone(),
                    state: s.state.matrix().clone(),
                })
                .collect();
            sink.json(&pts)?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Outcome {
    let sink = Sink {
        out: cli.out.as_deref(),
    };
    match &cli.command {
        Command::Verify { suite } => run_verify(cli, suite, &sink),
        Command::Eval {
            what: EvalCmd::Phi1 { tau, terms },
        } => run_eval_phi1(cli, *tau, *terms, &sink),
        Command::Check {
            what: CheckCmd::Symplectic { matrix },
        } => run_check_symplectic(cli, matrix, &sink),
        Command::Leaf {
            what: LeafCmd::Sample { delta, g, grid },
        } => run_leaf_sample(cli, delta, *g, grid, &sink),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    // a panic is a bug, but callers still get the documented exit code
    std::panic::set_hook(Box::new(|info| {
        eprintln!("error: internal failure: {info}")
    }));
    match std::panic::catch_unwind(|| run(&cli)) {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(Failure::Checks)) => ExitCode::from(1),
        Ok(Err(Failure::Input(msg))) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Ok(Err(Failure::Io(e))) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(_) => ExitCode::from(2),
    }
}
