use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use viscostep::csv;
use viscostep::integrators::Integrator;
use viscostep_cli::config::{Config, Job, Overrides, Preset};
use viscostep_cli::{audit_job, audit_series, converge, emit, simulate, thread_pool, CliError};

/// Material-point experiments for the finite-strain Maxwell fluid.
///
/// Exit codes: 0 ok, 1 output error, 2 config error, 3 solver failure,
/// 4 audit failure. VISCOSTEP_THREADS caps the worker threads of `converge`.
#[derive(Parser)]
#[command(name = "viscostep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its time series as CSV.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also audit the run; exit code 4 if a check fails.
        #[arg(long)]
        audit: bool,
    },
    /// Error of every integrator against a fine-step reference, per step size.
    Converge {
        #[command(flatten)]
        common: Common,
        /// Step of the reference run [s].
        #[arg(long)]
        reference_dt: Option<f64>,
    },
    /// Run the invariant checks on one simulation.
    Audit {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    /// JSON config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Built-in program; replaces the config's program block.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    /// ebmsc, ebm or em.
    #[arg(long, value_parser = parse_integrator)]
    integrator: Option<Integrator>,
    /// Time step [s]; repeat for a convergence study.
    #[arg(long)]
    dt: Vec<f64>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_integrator(s: &str) -> Result<Integrator, String> {
    s.parse()
        .map_err(|_| format!("unknown integrator {s:?} (ebmsc, ebm, em)"))
}

impl Common {
    fn job(&self, reference_dt: Option<f64>) -> Result<Job, CliError> {
        let cfg = match &self.config {
            Some(p) => Config::load(p)?,
            None => Config::default(),
        };
        Job::resolve(
            cfg,
            Overrides {
                preset: self.preset,
                integrator: self.integrator,
                dt: self.dt.clone(),
                reference_dt,
                out: self.out.clone(),
            },
        )
    }

    fn single_dt(&self) -> Result<(), CliError> {
        if self.dt.len() > 1 {
            return Err(CliError::Config("--dt given more than once".into()));
        }
        Ok(())
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate { common, audit } => {
            common.single_dt()?;
            let job = common.job(None)?;
            let series = simulate(&job)?;
            emit(job.output.as_deref(), &csv::to_csv(&series))?;
            if audit {
                let report = audit_series(&job, &series)?;
                eprint!("{}", report.to_text());
                if !report.passed() {
                    return Err(CliError::Audit(report.failures().join(", ")));
                }
            }
        }
        Command::Converge {
            common,
            reference_dt,
        } => {
            let job = common.job(reference_dt)?;
            let table = converge(&job, &thread_pool()?)?;
            emit(job.output.as_deref(), &csv::convergence_to_csv(&table))?;
        }
        Command::Audit { common } => {
            common.single_dt()?;
            let job = common.job(None)?;
            let report = audit_job(&job)?;
            print!("{}", report.to_text());
            if let Some(p) = &job.output {
                emit(Some(p), &report.to_csv())?;
            }
            if !report.passed() {
                return Err(CliError::Audit(report.failures().join(", ")));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("viscostep: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
