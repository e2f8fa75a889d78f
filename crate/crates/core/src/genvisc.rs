//! Generalized viscoelastic solid: a Yeoh spring with a volumetric term in
//! parallel with N Maxwell branches. Every branch carries its own `Cᵢ,ₘ`
//! and is advanced independently of the others.

use crate::error::{Error, Result};
use crate::integrators::{Integrator, StepInput};
use crate::maxwell::{free_energy_from_c, overstress_pk2_from_c, Kinematics, MaxwellParams};
use crate::tensor::Tensor2;

#[derive(Clone, Debug, PartialEq)]
pub struct GenViscParams {
    pub c10: f64,
    pub c20: f64,
    pub c30: f64,
    /// Bulk modulus [MPa].
    pub k: f64,
    pub branches: Vec<MaxwellParams>,
}

impl GenViscParams {
    pub fn new(c10: f64, c20: f64, c30: f64, k: f64, branches: Vec<MaxwellParams>) -> Result<Self> {
        if !(k > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "bulk modulus must be > 0, got {k}"
            )));
        }
        if ![c10, c20, c30].iter().all(|c| c.is_finite()) {
            return Err(Error::InvalidParameter(
                "Yeoh constants must be finite".into(),
            ));
        }
        Ok(Self {
            c10,
            c20,
            c30,
            k,
            branches,
        })
    }

    /// Rubber-like reference material: c₁₀ = 0.45, c₂₀ = -0.048,
    /// c₃₀ = 0.011, k = 1000 MPa and four branches with μₘ = 0.2 MPa and
    /// ηₘ = 2·10^(m-3) MPa·s, i.e. relaxation times 0.01 … 10 s.
    pub fn rubber() -> Self {
        let branches = (1..=4)
            .map(|m| MaxwellParams {
                mu: 0.2,
                eta: 2.0 * 10f64.powi(m - 3),
            })
            .collect();
        Self {
            c10: 0.45,
            c20: -0.048,
            c30: 0.011,
            k: 1000.0,
            branches,
        }
    }

    pub fn max_relaxation_time(&self) -> f64 {
        self.branches
            .iter()
            .map(MaxwellParams::relaxation_time)
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenViscState {
    pub c_i: Vec<Tensor2>,
}

impl GenViscState {
    /// Stress-free state with `Cᵢ,ₘ = 1` for every branch.
    pub fn fresh(n_branches: usize) -> Self {
        Self {
            c_i: vec![Tensor2::IDENTITY; n_branches],
        }
    }

    fn check(&self, p: &GenViscParams) -> Result<()> {
        if self.c_i.len() != p.branches.len() {
            return Err(Error::InvalidState(format!(
                "{} branch states for {} branches",
                self.c_i.len(),
                p.branches.len()
            )));
        }
        Ok(())
    }
}

/// Equilibrium 2nd Piola–Kirchhoff stress
/// `(2c₁₀ + 4c₂₀(I₁-3) + 6c₃₀(I₁-3)²) C̄ᴰ C⁻¹ + 3k J^(1/3)(J^(1/3) - 1) C⁻¹`
/// with `I₁ = tr C̄`.
pub fn equilibrium_stress(kin: &Kinematics, p: &GenViscParams) -> Result<Tensor2> {
    let c_inv = kin.c.inv()?;
    let c_bar = kin.c.unimodular()?;
    let x = c_bar.trace() - 3.0;
    let g = 2.0 * p.c10 + 4.0 * p.c20 * x + 6.0 * p.c30 * x * x;
    let jc = kin.j.cbrt();
    Ok((c_bar.dev() * c_inv * g + c_inv * (3.0 * p.k * jc * (jc - 1.0))).sym())
}

/// Total 2nd Piola–Kirchhoff stress, equilibrium plus all overstresses.
pub fn total_stress(kin: &Kinematics, state: &GenViscState, p: &GenViscParams) -> Result<Tensor2> {
    state.check(p)?;
    let mut t = equilibrium_stress(kin, p)?;
    for (ci, bp) in state.c_i.iter().zip(&p.branches) {
        t += overstress_pk2_from_c(&kin.c, ci, bp.mu)?;
    }
    Ok(t)
}

/// Equilibrium stored energy `Σ cₙ₀ (I₁-3)ⁿ + (9k/2)(J^(1/3) - 1)²`.
pub fn equilibrium_free_energy(kin: &Kinematics, p: &GenViscParams) -> Result<f64> {
    let x = kin.c.unimodular()?.trace() - 3.0;
    let jc = kin.j.cbrt();
    Ok(p.c10 * x + p.c20 * x * x + p.c30 * x * x * x + 4.5 * p.k * (jc - 1.0).powi(2))
}

/// Total stored energy per unit reference volume [MPa].
pub fn total_free_energy(kin: &Kinematics, state: &GenViscState, p: &GenViscParams) -> Result<f64> {
    state.check(p)?;
    let mut psi = equilibrium_free_energy(kin, p)?;
    for (ci, bp) in state.c_i.iter().zip(&p.branches) {
        psi += free_energy_from_c(&kin.c, ci, bp.mu)?;
    }
    Ok(psi)
}

/// Advances every branch with EBMSC.
pub fn step(
    state: &GenViscState,
    c_np1: &Tensor2,
    dt: f64,
    p: &GenViscParams,
) -> Result<GenViscState> {
    step_with(state, c_np1, dt, p, Integrator::Ebmsc)
}

/// Advances every branch with the chosen local integrator.
pub fn step_with(
    state: &GenViscState,
    c_np1: &Tensor2,
    dt: f64,
    p: &GenViscParams,
    integrator: Integrator,
) -> Result<GenViscState> {
    state.check(p)?;
    let c_i = state
        .c_i
        .iter()
        .zip(&p.branches)
        .map(|(ci, bp)| {
            let input = StepInput::new(*ci, *c_np1, dt, *bp)?;
            integrator.step(&input).map(|(next, _)| next)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GenViscState { c_i })
}
