//! Command implementations behind the `viscostep` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod audit;
pub mod config;

use std::path::Path;

use rayon::prelude::*;
use viscostep::driver::{self, ConvergenceTable, Reference, TimeSeries};
use viscostep::integrators::Integrator;

use crate::audit::AuditReport;
use crate::config::{Job, Program};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_AUDIT: i32 = 4;

pub const THREADS_ENV: &str = "VISCOSTEP_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver error: {0}")]
    Solver(viscostep::Error),
    #[error("audit failed: {0}")]
    Audit(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) => EXIT_IO,
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Solver(_) => EXIT_SOLVER,
            CliError::Audit(_) => EXIT_AUDIT,
        }
    }
}

impl From<viscostep::Error> for CliError {
    fn from(e: viscostep::Error) -> Self {
        use viscostep::Error as E;
        match e {
            E::StepFailed { .. }
            | E::NoConvergence { .. }
            | E::LateralSolveFailure { .. }
            | E::DegenerateStep(_) => CliError::Solver(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

/// Writes to `path`, or to stdout when there is none.
pub fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => {
            std::fs::write(p, text).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
        }
        None => {
            use std::io::Write;
            std::io::stdout()
                .lock()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

fn run_series(job: &Job, dt: f64) -> Result<TimeSeries, CliError> {
    Ok(match &job.program {
        Program::Path(p) => driver::run(p, &job.material, job.integrator, dt, job.t_end)?,
        Program::Uniaxial(h) => {
            let driver::Material::GenVisc(p) = &job.material else {
                return Err(CliError::Config(
                    "uniaxial programs need a genvisc material".into(),
                ));
            };
            driver::uniaxial_drive(h, p, job.integrator, dt, job.t_end)?
        }
    })
}

fn require_dt(job: &Job) -> Result<f64, CliError> {
    job.dt
        .ok_or_else(|| CliError::Config("no time step: give --dt or run.dt".into()))
}

pub fn simulate(job: &Job) -> Result<TimeSeries, CliError> {
    let dt = require_dt(job)?;
    if !(dt > 0.0) {
        return Err(CliError::Config(format!("simulate needs dt > 0, got {dt}")));
    }
    run_series(job, dt)
}

/// Runs the job and audits it. A zero step produces only the initial
/// state, on which every check passes trivially.
pub fn audit_job(job: &Job) -> Result<AuditReport, CliError> {
    let dt = require_dt(job)?;
    let series = if dt > 0.0 {
        run_series(job, dt)?
    } else {
        run_series(
            &Job {
                t_end: 0.0,
                ..job.clone()
            },
            1.0,
        )?
    };
    Ok(audit::audit(&series, &job.material, job.integrator, dt)?)
}

/// Audits an already computed run.
pub fn audit_series(job: &Job, series: &TimeSeries) -> Result<AuditReport, CliError> {
    Ok(audit::audit(
        series,
        &job.material,
        job.integrator,
        require_dt(job)?,
    )?)
}

/// Thread pool sized by `VISCOSTEP_THREADS` (all cores when unset).
pub fn thread_pool() -> Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.trim().parse().ok().filter(|n| *n > 0).ok_or_else(|| {
            CliError::Config(format!(
                "{THREADS_ENV} must be a positive integer, got {v:?}"
            ))
        })?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config(e.to_string()))
}

/// Max-over-time error of all three integrators for every step in
/// `job.dts`, against an EBMSC run at `job.reference_dt`. The runs are
/// independent and fan out over `pool`.
pub fn converge(job: &Job, pool: &rayon::ThreadPool) -> Result<ConvergenceTable, CliError> {
    let Program::Path(program) = &job.program else {
        return Err(CliError::Config(
            "converge needs a deformation program, not a uniaxial one".into(),
        ));
    };
    for &dt in &job.dts {
        config::check_positive("dt", dt)?;
    }
    let sample_dt = driver::common_sample_dt(&job.dts, job.reference_dt)?;
    let reference = Reference::compute(
        program,
        &job.material,
        Integrator::Ebmsc,
        job.reference_dt,
        job.t_end,
        sample_dt,
    )?;
    let integrators = Integrator::ALL.to_vec();
    let cells: Vec<(f64, Integrator)> = job
        .dts
        .iter()
        .flat_map(|&dt| integrators.iter().map(move |&i| (dt, i)))
        .collect();
    let errors = pool.install(|| {
        cells
            .par_iter()
            .map(|&(dt, i)| {
                let h = reference.error_history(program, &job.material, i, dt, job.t_end)?;
                Ok(h.iter().map(|e| e.1).fold(0.0, f64::max))
            })
            .collect::<viscostep::Result<Vec<f64>>>()
    })?;
    Ok(ConvergenceTable {
        rows: job
            .dts
            .iter()
            .zip(errors.chunks(integrators.len()))
            .map(|(&dt, e)| (dt, e.to_vec()))
            .collect(),
        integrators,
    })
}
