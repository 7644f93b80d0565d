//! Command-line front end.
//!
//! Exit codes: 0 success, 1 a comparison or drift check failed, 2 invalid
//! configuration or unwritable output, 3 integration aborted.

use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use crate::config::{Config, ConfigError};
use crate::harness::{drift_report, run_scenario, DriftReport, EquivalenceReport};
use crate::integrators::IntegrationError;
use crate::output::write_outputs;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTEGRATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "rotor-stages",
    version,
    about = "Rigid body with three rotors in four reduced formulations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate every configured formulation and write CSV tables plus a JSON summary.
    Simulate {
        config: PathBuf,
        /// Output directory, overriding `output.dir`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Write every N-th sample, overriding `output.stride`.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        stride: Option<u64>,
    },
    /// Compare the configured formulations pairwise and check conservation.
    Compare { config: PathBuf },
    /// Check analytic Noether-current drifts against finite differences.
    Drift { config: PathBuf },
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Integration(#[from] IntegrationError),
    #[error("cannot write output to {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => EXIT_CONFIG,
            CliError::Integration(_) => EXIT_INTEGRATION,
        }
    }
}

/// Runs one command, printing to `out`. Returns whether all checks passed.
pub fn execute(command: &Command, out: &mut impl Write) -> Result<bool, CliError> {
    match command {
        Command::Simulate {
            config,
            out: dir,
            stride,
        } => {
            let cfg = Config::from_file(config)?;
            let dir = dir.clone().unwrap_or(cfg.output.dir);
            let stride = stride.map_or(cfg.output.stride, |s| s as usize);
            let s = &cfg.scenario;
            let (report, runs) = run_scenario(s)?;
            let drift = drift_report(s, &runs);
            let files = write_outputs(&dir, stride, &runs, &report, &drift).map_err(|source| {
                CliError::Output {
                    path: dir.clone(),
                    source,
                }
            })?;
            let _ = writeln!(
                out,
                "{}: {} formulation(s), {} steps of {} with dt = {}",
                s.name,
                runs.len(),
                s.step.steps(),
                s.step.method(),
                s.step.dt()
            );
            for f in &files {
                let _ = writeln!(out, "wrote {}", f.display());
            }
            let _ = writeln!(
                out,
                "equivalence: {}, drift identities: {}",
                verdict(report.passed),
                verdict(drift.passed)
            );
            Ok(true)
        }
        Command::Compare { config } => {
            let cfg = Config::from_file(config)?;
            if cfg.scenario.formulations.len() < 2 {
                return Err(ConfigError::Field {
                    field: "formulations".into(),
                    message: "compare needs at least two formulations".into(),
                }
                .into());
            }
            let (report, _) = run_scenario(&cfg.scenario)?;
            print_equivalence(&report, out);
            Ok(report.passed)
        }
        Command::Drift { config } => {
            let cfg = Config::from_file(config)?;
            let (_, runs) = run_scenario(&cfg.scenario)?;
            let report = drift_report(&cfg.scenario, &runs);
            print_drift(&report, out);
            Ok(report.passed)
        }
    }
}

fn verdict(passed: bool) -> &'static str {
    if passed {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn print_equivalence(report: &EquivalenceReport, out: &mut impl Write) {
    let kinds = &report.formulations;
    let _ = writeln!(
        out,
        "scenario {}: dt = {}, t_end = {}, {}",
        report.scenario, report.dt, report.t_end, report.method
    );
    let _ = writeln!(out, "\nmax |Ω_a − Ω_b| over the run:");
    let _ = write!(out, "{:>14}", "");
    for k in kinds {
        let _ = write!(out, " {:>14}", k.id());
    }
    let _ = writeln!(out);
    for a in kinds {
        let _ = write!(out, "{:>14}", a.id());
        for b in kinds {
            let cell = report
                .deviations
                .iter()
                .find(|d| (d.a == *a && d.b == *b) || (d.a == *b && d.b == *a))
                .map_or_else(|| "-".to_string(), |d| format!("{:.3e}", d.omega));
            let _ = write!(out, " {cell:>14}");
        }
        let _ = writeln!(out);
    }
    let _ = writeln!(out, "\npairwise deviations:");
    let _ = writeln!(
        out,
        "{:>29} {:>11} {:>11} {:>11} {:>11}",
        "pair", "omega", "attitude", "rotor_vel", "momentum"
    );
    for d in &report.deviations {
        let _ = writeln!(
            out,
            "{:>29} {:>11.3e} {:>11.3e} {:>11.3e} {:>11.3e}",
            format!("{}/{}", d.a, d.b),
            d.omega,
            d.attitude,
            d.rotor_velocity,
            d.body_momentum
        );
    }
    let _ = writeln!(out, "\nconservation drift:");
    let _ = writeln!(
        out,
        "{:>14} {:>14} {:>14} {:>14} {:>14}",
        "formulation", "rotor_mom", "energy_rel", "spatial_mom", "|body_mom|"
    );
    for c in &report.conservation {
        let _ = writeln!(
            out,
            "{:>14} {:>14.3e} {:>14.3e} {:>14.3e} {:>14.3e}",
            c.formulation.id(),
            c.rotor_momentum_drift,
            c.energy_relative_drift,
            c.spatial_momentum_drift,
            c.body_momentum_norm_drift
        );
    }
    let failures: Vec<_> = report.failures().collect();
    if !failures.is_empty() {
        let _ = writeln!(out, "\nfailed checks:");
        for v in failures {
            let _ = writeln!(out, "  {}: {:.3e} > {:.3e}", v.check, v.value, v.tolerance);
        }
    }
    let _ = writeln!(
        out,
        "\nresult: {} ({} checks)",
        verdict(report.passed),
        report.verdicts.len()
    );
}

pub fn print_drift(report: &DriftReport, out: &mut impl Write) {
    let _ = writeln!(
        out,
        "scenario {}: dt = {}, t_end = {}",
        report.scenario, report.dt, report.t_end
    );
    if report.checks.is_empty() {
        let _ = writeln!(
            out,
            "no formulation-specific currents in the selected formulations"
        );
    }
    for c in &report.checks {
        if c.conserved {
            let _ = writeln!(
                out,
                "{:>14} {:>8}: conserved, analytic drift identically 0; max |finite-difference drift| = {:.3e} [{}]",
                c.formulation.id(),
                c.current,
                c.max_mismatch,
                verdict(c.passed)
            );
        } else {
            let _ = writeln!(
                out,
                "{:>14} {:>8}: max |analytic − finite-difference drift| = {:.3e} (tolerance {:.1e}, max |drift| = {:.3e}) [{}]",
                c.formulation.id(),
                c.current,
                c.max_mismatch,
                c.tolerance,
                c.max_analytic_drift,
                verdict(c.passed)
            );
        }
    }
    let _ = writeln!(out, "result: {}", verdict(report.passed));
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match execute(&cli.command, &mut out) {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
