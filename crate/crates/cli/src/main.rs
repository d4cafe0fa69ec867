use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use sympspec::analysis::{
    bounds_check_sweep, bounds_check_with, convergence_stats, gco_check, spectral_sweep,
    symplectic_sweep, BoundsReport, GcoParams, GcoReport, SweepDocument, Verdict,
};
use sympspec::expr::Formula;
use sympspec::matrix::{read_csv_file, write_csv};
use sympspec::operator::OperatorSpec;
use sympspec::sample::random_spd;
use sympspec::{symplectic_eigenvalues, williamson, Error, ErrorClass, SpecFile, TruncationSchedule};

const EXIT_PASS: u8 = 0;
const EXIT_FAIL: u8 = 1;
const EXIT_EVIDENCE_ONLY: u8 = 5;

const EXIT_CODES: &str = "\
Exit codes:
  0  success / all checks pass
  1  a check failed (gco condition, bounds violation)
  2  input error (unreadable file, bad CSV or spec, bad formula, odd order)
  3  precondition violated (not SPD, not commuting, not symplectic)
  4  numerical failure (no convergence, pairing breakdown, formula evaluation)
  5  evidence only (gco conditions neither certified nor refuted)

Errors are reported on stderr as one JSON line: {\"error\", \"message\", \"exit_code\"}.";

#[derive(Parser, Debug)]
#[command(name = "sympspec", version, about = "Symplectic spectra, Williamson normal forms and truncation sweeps", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Williamson normal form of an SPD matrix read from CSV.
    Williamson {
        #[arg(long)]
        matrix: PathBuf,
        /// Include the symplectic matrix M in JSON output.
        #[arg(long)]
        with_m: bool,
        /// Also write M as CSV to this file.
        #[arg(long, value_name = "PATH")]
        m_out: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Symplectic eigenvalues of an SPD matrix read from CSV.
    Sympeig {
        #[arg(long)]
        matrix: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Eigenvalues (H specs) or symplectic eigenvalues (HH specs) of truncations.
    Sweep {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated half-dimensions [default: 5,10,25,50,100,250,500].
        #[arg(long)]
        schedule: Option<String>,
        /// Branch stabilization tolerance.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Gaussian covariance operator conditions for class A/B specs.
    Gco {
        #[arg(long)]
        spec: PathBuf,
        /// Comma-separated truncation orders [default: 5,10,25,50,100,250,500].
        #[arg(long)]
        schedule: Option<String>,
        /// Tail tolerance for both summability conditions.
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        /// Number of trailing increments the tail rule inspects.
        #[arg(long, default_value_t = 3)]
        window: usize,
        /// Entrywise sums run to 2^HORIZON.
        #[arg(long, default_value_t = 16)]
        horizon: u32,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Check symplectic eigenvalues against the ordinary spectrum's extremes.
    Bounds {
        #[command(flatten)]
        source: BoundsSource,
        #[arg(long)]
        schedule: Option<String>,
        /// Relative slack.
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        /// Seed for --random-order.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Evaluate a formula in n, printed to 12 significant digits.
    SeqEval {
        expr: String,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct BoundsSource {
    #[arg(long)]
    matrix: Option<PathBuf>,
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Random SPD matrix of this (even) order, condition number 1e3.
    #[arg(long, value_name = "ORDER")]
    random_order: Option<usize>,
}

#[derive(Args, Debug)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            let code = exit_code(&e);
            let line = json!({"error": e.kind(), "message": e.to_string(), "exit_code": code});
            eprintln!("{line}");
            ExitCode::from(code)
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e.class() {
        ErrorClass::Input => 2,
        ErrorClass::Precondition => 3,
        ErrorClass::Numerical => 4,
    }
}

fn run(command: Command) -> sympspec::Result<u8> {
    match command {
        Command::Williamson {
            matrix,
            with_m,
            m_out,
            output,
        } => {
            let t = read_csv_file(&matrix)?;
            let w = williamson(&t)?;
            if let Some(path) = m_out {
                write_csv(&w.m, File::create(path)?)?;
            }
            let n = w.d.len();
            emit(&output, |f, out| match f {
                Format::Json => {
                    let mut doc = json!({
                        "n": n,
                        "d": w.d,
                        "residual": w.residual,
                        "symplectic_defect": w.symplectic_defect,
                    });
                    if with_m {
                        doc["m"] = serde_json::to_value(&w.m)?;
                    }
                    write_json(out, &doc)
                }
                Format::Csv => write_values_csv(out, n, &w.d),
            })?;
            Ok(EXIT_PASS)
        }
        Command::Sympeig { matrix, output } => {
            let t = read_csv_file(&matrix)?;
            let d = symplectic_eigenvalues(&t)?;
            let n = d.len();
            emit(&output, |f, out| match f {
                Format::Json => write_json(out, &json!({"n": n, "values": d})),
                Format::Csv => write_values_csv(out, n, &d),
            })?;
            Ok(EXIT_PASS)
        }
        Command::Sweep {
            spec,
            schedule,
            tol,
            output,
        } => {
            let file = SpecFile::load(&spec)?;
            let report = match &file.spec {
                OperatorSpec::H(h) => spectral_sweep(h, &schedule_or_default(schedule.as_deref(), None)?)?,
                OperatorSpec::HH(hh) => {
                    let schedule = schedule_or_default(schedule.as_deref(), hh.fixed_half_dim())?;
                    symplectic_sweep(hh, &schedule)?
                }
            };
            let convergence = if report.per_n.len() >= 2 {
                Some(convergence_stats(&report, tol)?)
            } else {
                None
            };
            let doc = SweepDocument {
                report,
                convergence,
                annotations: file.annotations,
            };
            emit(&output, |f, out| match f {
                Format::Json => write_json(out, &doc),
                Format::Csv => doc.report.write_csv(out),
            })?;
            Ok(EXIT_PASS)
        }
        Command::Gco {
            spec,
            schedule,
            tol,
            window,
            horizon,
            output,
        } => {
            let file = SpecFile::load(&spec)?;
            let OperatorSpec::HH(hh) = &file.spec else {
                return Err(Error::Spec("gco needs an HH spec".into()));
            };
            let params = GcoParams {
                schedule: schedule_or_default(schedule.as_deref(), None)?,
                hs_tail_tol: tol,
                trace_tail_tol: tol,
                stagnation_window: window,
                sum_horizon_log2: horizon,
                ..GcoParams::default()
            };
            let report = gco_check(hh, &params)?;
            emit(&output, |f, out| match f {
                Format::Json => write_json(out, &report),
                Format::Csv => write_gco_csv(out, &report),
            })?;
            Ok(match report.verdict() {
                Verdict::Pass => EXIT_PASS,
                Verdict::Fail => EXIT_FAIL,
                Verdict::EvidenceOnly => EXIT_EVIDENCE_ONLY,
            })
        }
        Command::Bounds {
            source,
            schedule,
            tol,
            seed,
            output,
        } => {
            let report = if let Some(path) = source.matrix {
                bounds_check_with(&read_csv_file(path)?, tol)?
            } else if let Some(path) = source.spec {
                let file = SpecFile::load(&path)?;
                let OperatorSpec::HH(hh) = &file.spec else {
                    return Err(Error::Spec("bounds needs an HH spec".into()));
                };
                let schedule = schedule_or_default(schedule.as_deref(), hh.fixed_half_dim())?;
                bounds_check_sweep(hh, &schedule, tol)?
            } else {
                let order = source.random_order.expect("clap enforces one source");
                if order == 0 || order % 2 != 0 {
                    return Err(Error::OddDimension(order));
                }
                let t = random_spd(order, seed, 1e3);
                bounds_check_with(&t, tol)?
            };
            emit(&output, |f, out| match f {
                Format::Json => write_json(out, &report),
                Format::Csv => write_bounds_csv(out, &report),
            })?;
            Ok(if report.violations.is_empty() {
                EXIT_PASS
            } else {
                EXIT_FAIL
            })
        }
        Command::SeqEval { expr, n } => {
            let value = Formula::parse(&expr)?.eval(n)?;
            let rounded: f64 = format!("{value:.11e}").parse().expect("formatted float parses");
            println!("{rounded}");
            Ok(EXIT_PASS)
        }
    }
}

fn schedule_or_default(arg: Option<&str>, fixed: Option<usize>) -> sympspec::Result<TruncationSchedule> {
    match (arg, fixed) {
        (Some(s), _) => TruncationSchedule::parse(s),
        (None, Some(half)) => TruncationSchedule::new(vec![half]),
        (None, None) => Ok(TruncationSchedule::default_sweep()),
    }
}

/// Renders into a buffer first so a failed run leaves no partial output file.
fn emit(
    output: &OutputArgs,
    render: impl FnOnce(Format, &mut Vec<u8>) -> sympspec::Result<()>,
) -> sympspec::Result<()> {
    let mut buf = Vec::new();
    render(output.format, &mut buf)?;
    match &output.out {
        Some(path) => write_file(path, &buf),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(&buf)?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> sympspec::Result<()> {
    std::fs::write(path, bytes)?;
    Ok(())
}

fn write_json<T: serde::Serialize + ?Sized>(out: &mut Vec<u8>, value: &T) -> sympspec::Result<()> {
    serde_json::to_writer_pretty(&mut *out, value)?;
    out.push(b'\n');
    Ok(())
}

fn write_values_csv(out: &mut Vec<u8>, n: usize, values: &[f64]) -> sympspec::Result<()> {
    writeln!(out, "n,k,value")?;
    for (k, v) in values.iter().enumerate() {
        writeln!(out, "{n},{},{v}", k + 1)?;
    }
    Ok(())
}

fn write_gco_csv(out: &mut Vec<u8>, r: &GcoReport) -> sympspec::Result<()> {
    writeln!(out, "condition,n,value")?;
    let series = [
        ("cond1", &r.cond1.min_eig_series),
        ("cond2", &r.cond2.hs_partial_sums),
        ("cond3", &r.cond3.trace_partial_sums),
    ];
    for (name, rows) in series {
        for (n, v) in rows {
            writeln!(out, "{name},{n},{v}")?;
        }
    }
    Ok(())
}

fn write_bounds_csv(out: &mut Vec<u8>, r: &BoundsReport) -> sympspec::Result<()> {
    writeln!(out, "n,k,d_k,excess")?;
    for v in &r.violations {
        writeln!(out, "{},{},{},{}", v.n, v.k, v.d_k, v.excess)?;
    }
    Ok(())
}
