//! Invariant checks replayed on the states of a finished run.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use viscostep::driver::{Material, TimeSeries};
use viscostep::integrators::{Integrator, StepInput};
use viscostep::maxwell::{free_energy_from_c, MaxwellParams, MaxwellState};
use viscostep::tangent::{consistent_tangent, fd_consistent_tangent, tangent_relative_error};
use viscostep::tensor::rel_diff;
use viscostep::{Result, Tensor2};

pub const DET_TOL: f64 = 1e-12;
pub const INVARIANCE_TOL: f64 = 1e-10;
pub const TANGENT_SYMMETRY_TOL: f64 = 1e-10;
pub const TANGENT_FD_TOL: f64 = 1e-6;
pub const ENERGY_TOL: f64 = 1e-12;

/// Steps replayed per run for the per-step checks.
const SAMPLES: usize = 24;
const SEED: u64 = 0x5eed;

#[derive(Clone, Debug, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub threshold: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.threshold
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AuditReport {
    pub integrator: Integrator,
    pub checks: Vec<Check>,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> Vec<&'static str> {
        self.checks
            .iter()
            .filter(|c| !c.passed())
            .map(|c| c.name)
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("audit ({})\n", self.integrator);
        for c in &self.checks {
            let verdict = if c.passed() { "PASS" } else { "FAIL" };
            writeln!(
                out,
                "  {:<18} {verdict}  {:.3e} (limit {:.0e})",
                c.name, c.value, c.threshold
            )
            .expect("writing to a String cannot fail");
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,value,threshold,pass\n");
        for c in &self.checks {
            writeln!(
                out,
                "{},{:.16e},{:.16e},{}",
                c.name,
                c.value,
                c.threshold,
                c.passed()
            )
            .expect("writing to a String cannot fail");
        }
        out
    }
}

fn branches(material: &Material) -> Vec<MaxwellParams> {
    match material {
        Material::Maxwell(p) => vec![*p],
        Material::GenVisc(p) => p.branches.clone(),
    }
}

fn random_unimodular(rng: &mut ChaCha8Rng) -> Tensor2 {
    loop {
        let mut m = Tensor2::IDENTITY;
        for i in 0..3 {
            for j in 0..3 {
                m[(i, j)] += 0.3 * rng.gen_range(-1.0..1.0);
            }
        }
        if m.det() > 0.1 {
            return m.unimodular().expect("det checked above");
        }
    }
}

fn step(
    integrator: Integrator,
    c_i: Tensor2,
    c: Tensor2,
    dt: f64,
    p: MaxwellParams,
) -> Result<Tensor2> {
    Ok(integrator.step(&StepInput::new(c_i, c, dt, p)?)?.0)
}

/// Largest normalised rise of the branch energy along an increasing
/// sequence of step sizes, from frozen flow to full relaxation.
fn energy_rise(integrator: Integrator, c_i: Tensor2, c: Tensor2, p: MaxwellParams) -> Result<f64> {
    let tau = p.relaxation_time();
    let mut prev = free_energy_from_c(&c, &c_i, p.mu)?;
    let scale = p.mu + prev;
    let mut rise = 0.0_f64;
    for k in -12..=12 {
        let dt = tau * 10f64.powf(k as f64 / 4.0);
        let psi = free_energy_from_c(&c, &step(integrator, c_i, c, dt, p)?, p.mu)?;
        rise = rise.max((psi - prev) / scale);
        prev = psi;
    }
    Ok(rise)
}

/// Runs every check on `series`, which must carry its branch states and
/// have been produced with step `dt`.
pub fn audit(
    series: &TimeSeries,
    material: &Material,
    integrator: Integrator,
    dt: f64,
) -> Result<AuditReport> {
    let params = branches(material);
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let not_spd = series.c_i.iter().flatten().filter(|c| !c.is_spd()).count();
    let (mut invariance, mut symmetry, mut fd, mut energy) = (0.0_f64, 0.0_f64, 0.0_f64, 0.0_f64);

    let n = series.c_i.len().min(series.rows.len());
    let stride = (n.saturating_sub(1) / SAMPLES).max(1);
    for k in (1..n).step_by(stride) {
        let f = series.rows[k].f;
        let c = (f.transpose() * f).sym();
        for (m, p) in params.iter().enumerate() {
            let c_i = series.c_i[k - 1][m];

            let f0 = random_unimodular(&mut rng);
            let f0_inv = f0.inv()?;
            let push = |x: Tensor2| (f0_inv.transpose() * x * f0_inv).sym();
            let lhs = step(integrator, push(c_i), push(c), dt, *p)?;
            let rhs = push(step(integrator, c_i, c, dt, *p)?);
            invariance = invariance.max(rel_diff(&lhs, &rhs));

            let state = MaxwellState::new(c_i.unimodular()?)?;
            let t = consistent_tangent(&c, &state, p, dt)?;
            symmetry = symmetry.max(t.symmetric_defect);
            let fd_t = fd_consistent_tangent(&c, &state, p, dt)?;
            fd = fd.max(tangent_relative_error(&t.dt_dc, &fd_t));

            energy = energy.max(energy_rise(integrator, c_i, c, *p)?);
        }
    }

    Ok(AuditReport {
        integrator,
        checks: vec![
            Check {
                name: "det_drift",
                value: series.max_det_drift(),
                threshold: DET_TOL,
            },
            Check {
                name: "non_spd_states",
                value: not_spd as f64,
                threshold: 0.0,
            },
            Check {
                name: "reference_change",
                value: invariance,
                threshold: INVARIANCE_TOL,
            },
            Check {
                name: "tangent_symmetry",
                value: symmetry,
                threshold: TANGENT_SYMMETRY_TOL,
            },
            Check {
                name: "tangent_fd",
                value: fd,
                threshold: TANGENT_FD_TOL,
            },
            Check {
                name: "energy_rise",
                value: energy,
                threshold: ENERGY_TOL,
            },
        ],
    })
}
