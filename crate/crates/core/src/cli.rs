//! The `rde-lab` command line.
//!
//! Exit codes: `0` success or PASS, `1` input error, `2` FAIL, `3` internal
//! error. Data goes to standard output (or `--out`), diagnostics to standard
//! error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, Write};
use std::panic::{self, AssertUnwindSafe};
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analyze::{classify_regime, persistence_check, semicycle_reference, semicycle_report};
use crate::equilibria::equilibrium_for;
use crate::io::{
    parse_config, summary_csv, sweep_csv, to_json_line, trajectory_bytes, Format, RegimeJson,
    StabilityJson, EquilibriumJson,
};
use crate::linearize::{certify, CertifyOptions, Method};
use crate::sweep::{aggregate, run_sweep, threads_from_env, SweepGrid};
use crate::verify::ClaimId;

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "rde-lab", version, about = "Simulate and analyse a delayed three-component rational difference system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Norm,
    Power,
    Both,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Iterate a configuration and write the trajectory.
    Simulate {
        /// Run configuration file (`-` for standard input).
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the positive equilibrium for A (pick a family member with --mu when A = 1).
    Equilibria {
        #[arg(long = "A", allow_negative_numbers = true)]
        a: f64,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
    },
    /// Certify local stability of the equilibrium.
    Stability {
        #[arg(long = "A", allow_negative_numbers = true)]
        a: f64,
        #[arg(long)]
        m: usize,
        #[arg(long, allow_negative_numbers = true)]
        mu: Option<f64>,
        /// Scaling parameter; by default the smallest norm over a grid below the admissible bound.
        #[arg(long, allow_negative_numbers = true)]
        epsilon: Option<f64>,
        #[arg(long, value_enum, default_value = "both")]
        method: MethodArg,
    },
    /// Classify the long-run behaviour of a configuration (JSON report).
    Classify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded parameter sweep; CSV rows per trial, or per cell with --summary.
    Sweep {
        #[arg(long = "A", value_delimiter = ',', allow_negative_numbers = true)]
        a: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        m: Option<Vec<usize>>,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        horizon: Option<usize>,
        #[arg(long)]
        cap: Option<f64>,
        /// Initial value range as `lo,hi`.
        #[arg(long, value_delimiter = ',', num_args = 1, allow_negative_numbers = true)]
        init_range: Option<Vec<f64>>,
        #[arg(long)]
        summary: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the verification suite for one claim and print PASS/FAIL with evidence.
    VerifyTheorem {
        #[arg(long, value_parser = parse_claim)]
        id: ClaimId,
    },
}

fn parse_claim(s: &str) -> Result<ClaimId, String> {
    s.parse()
}

/// A failure carrying its exit code and message.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn input(msg: impl ToString) -> Self {
        Failure {
            code: EXIT_INPUT,
            message: msg.to_string(),
        }
    }

    fn internal(msg: impl ToString) -> Self {
        Failure {
            code: EXIT_INTERNAL,
            message: msg.to_string(),
        }
    }
}

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        io::read_to_string(io::stdin()).map_err(|e| Failure::input(format!("cannot read standard input: {e}")))
    } else {
        std::fs::read_to_string(path).map_err(|e| Failure::input(format!("cannot read {}: {e}", path.display())))
    }
}

fn write_output(bytes: &[u8], out: Option<&Path>, stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => {
            let mut f = File::create(path).map_err(|e| Failure::input(format!("cannot create {}: {e}", path.display())))?;
            f.write_all(bytes).map_err(Failure::internal)
        }
        None => {
            stdout.write_all(bytes).map_err(Failure::internal)?;
            stdout.flush().map_err(Failure::internal)
        }
    }
}

fn run(cli: Cli, stdout: &mut dyn Write) -> Result<i32, Failure> {
    match cli.command {
        Command::Simulate { config, format, out } => {
            let cfg = parse_config(&read_input(&config)?).map_err(Failure::input)?;
            let traj = cfg.run().map_err(Failure::input)?;
            let format = match format {
                FormatArg::Csv => Format::Csv,
                FormatArg::Json => Format::Json,
            };
            let bytes = trajectory_bytes(&traj, format).map_err(Failure::internal)?;
            write_output(&bytes, out.as_deref(), stdout)?;
        }
        Command::Equilibria { a, mu } => {
            if mu.is_some() && a != 1.0 {
                return Err(Failure::input("--mu only applies when A = 1"));
            }
            let eq = equilibrium_for(a, mu).map_err(Failure::input)?;
            write_output(to_json_line(&EquilibriumJson::from(&eq)).as_bytes(), None, stdout)?;
        }
        Command::Stability {
            a,
            m,
            mu,
            epsilon,
            method,
        } => {
            if m < 1 {
                return Err(Failure::input("m must be at least 1"));
            }
            if mu.is_some() && a != 1.0 {
                return Err(Failure::input("--mu only applies when A = 1"));
            }
            let eq = equilibrium_for(a, mu).map_err(Failure::input)?;
            let method = match method {
                MethodArg::Norm => Method::Norm,
                MethodArg::Power => Method::Power,
                MethodArg::Both => Method::Both,
            };
            let opts = CertifyOptions {
                epsilon,
                method,
                ..CertifyOptions::default()
            };
            let cert = certify(&eq, a, m, &opts).map_err(Failure::input)?;
            let doc = StabilityJson::new(a, m, &eq, method, &cert);
            write_output(to_json_line(&doc).as_bytes(), None, stdout)?;
        }
        Command::Classify { config, out } => {
            let cfg = parse_config(&read_input(&config)?).map_err(Failure::input)?;
            let traj = cfg.run().map_err(Failure::input)?;
            let report = classify_regime(&traj);
            let persistence = persistence_check(&traj);
            let transient = cfg.steps / 10;
            let semis = if traj.overflowed() {
                None
            } else {
                semicycle_reference(&traj).map(|r| semicycle_report(&traj, &r, transient))
            };
            let doc = RegimeJson::new(&traj, cfg.steps, &report, &persistence, semis.as_ref().map(|s| (s, transient)));
            write_output(to_json_line(&doc).as_bytes(), out.as_deref(), stdout)?;
        }
        Command::Sweep {
            a,
            m,
            trials,
            seed,
            horizon,
            cap,
            init_range,
            summary,
            out,
        } => {
            let defaults = SweepGrid::default();
            let init_range = match init_range.as_deref() {
                None => defaults.init_range,
                Some(&[lo, hi]) => (lo, hi),
                Some(_) => return Err(Failure::input("--init-range expects `lo,hi`")),
            };
            let grid = SweepGrid {
                a_values: a.unwrap_or(defaults.a_values),
                m_values: m.unwrap_or(defaults.m_values),
                trials: trials.unwrap_or(defaults.trials),
                init_range,
                seed,
                horizon: horizon.unwrap_or(defaults.horizon),
                cap: cap.unwrap_or(defaults.cap),
            };
            let result = run_sweep(&grid, threads_from_env()).map_err(Failure::input)?;
            let bytes = if summary {
                summary_csv(&aggregate(&result))
            } else {
                sweep_csv(&result)
            }
            .map_err(Failure::internal)?;
            write_output(&bytes, out.as_deref(), stdout)?;
        }
        Command::VerifyTheorem { id } => {
            let reports = id.checks();
            let passed = reports.iter().all(|r| r.passed);
            let mut text = format!("{} {id}: {}\n", if passed { "PASS" } else { "FAIL" }, id.summary());
            for r in &reports {
                text.push_str(&format!("  {r}\n"));
                for line in &r.evidence {
                    text.push_str(&format!("    {line}\n"));
                }
            }
            write_output(text.as_bytes(), None, stdout)?;
            return Ok(if passed { EXIT_OK } else { EXIT_FAIL });
        }
    }
    Ok(EXIT_OK)
}

/// Parses `argv` (program name first), runs the command and returns the exit
/// code, writing data to `stdout` and diagnostics to `stderr`.
pub fn dispatch_to<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let rendered = e.render().to_string();
            let sink: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = sink.write_all(rendered.as_bytes());
            return code;
        }
    };
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| run(cli, stdout)));
    match outcome {
        Ok(Ok(code)) => code,
        Ok(Err(f)) => {
            let _ = writeln!(stderr, "error: {}", f.message);
            f.code
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            let _ = writeln!(stderr, "internal error: {msg}");
            EXIT_INTERNAL
        }
    }
}

/// [`dispatch_to`] on the process's standard streams.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = io::stdout();
    let stderr = io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}
