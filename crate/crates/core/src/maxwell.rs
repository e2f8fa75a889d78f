//! A single Maxwell element: Neo-Hookean spring in series with a Newtonian
//! dashpot, written on the reference configuration in terms of the
//! inelastic right Cauchy–Green tensor `Cᵢ`.
//!
//! The mass density is fixed to one, so every energy is reported per unit
//! reference volume (MPa).

use crate::error::{Error, Result};
use crate::tensor::{sqrt_spd, Tensor2};

/// Tolerance on `|det Cᵢ - 1|` accepted by [`MaxwellState::new`].
pub const UNIMODULAR_TOL: f64 = 1e-10;

/// Shear modulus `mu` [MPa] and viscosity `eta` [MPa·s].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxwellParams {
    pub mu: f64,
    pub eta: f64,
}

impl MaxwellParams {
    /// Rejects `mu < 0` and `eta <= 0`; the hyperelastic limit is reached
    /// with a very large `eta` instead of `eta = 0`.
    pub fn new(mu: f64, eta: f64) -> Result<Self> {
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "shear modulus must be >= 0, got {mu}"
            )));
        }
        if !(eta > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "viscosity must be > 0, got {eta}"
            )));
        }
        Ok(Self { mu, eta })
    }

    /// `tau = eta / mu`.
    pub fn relaxation_time(&self) -> f64 {
        self.eta / self.mu
    }

    /// `mu / eta`, the inverse relaxation time.
    pub fn rate(&self) -> f64 {
        self.mu / self.eta
    }
}

/// Deformation input: `F`, `C = FᵀF` and `J = det F`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Kinematics {
    pub f: Tensor2,
    pub c: Tensor2,
    pub j: f64,
}

impl Kinematics {
    pub fn from_deformation_gradient(f: Tensor2) -> Result<Self> {
        let j = f.det();
        if !(j > 0.0) {
            return Err(Error::NonPositiveDeterminant(j));
        }
        Ok(Self {
            f,
            c: (f.transpose() * f).sym(),
            j,
        })
    }

    /// Uses the right stretch `U = √C` as the deformation gradient, which
    /// is sufficient for every rotation-invariant quantity.
    pub fn from_right_cauchy_green(c: Tensor2) -> Result<Self> {
        let f = sqrt_spd(&c)?;
        Ok(Self {
            f,
            c: c.sym(),
            j: f.det(),
        })
    }

    pub fn identity() -> Self {
        Self {
            f: Tensor2::IDENTITY,
            c: Tensor2::IDENTITY,
            j: 1.0,
        }
    }

    /// Pushes a 2nd Piola–Kirchhoff stress forward to Kirchhoff and Cauchy.
    pub fn stresses_from_pk2(&self, pk2: Tensor2) -> StressResult {
        let kirchhoff = self.f * pk2 * self.f.transpose();
        StressResult {
            pk2,
            kirchhoff,
            cauchy: kirchhoff * self.j.recip(),
        }
    }
}

/// The inelastic right Cauchy–Green tensor `Cᵢ`: symmetric, unimodular, SPD.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MaxwellState(Tensor2);

impl MaxwellState {
    pub fn new(c_i: Tensor2) -> Result<Self> {
        let scale = c_i.norm().max(1.0);
        if c_i.asymmetry() > 1e-12 * scale {
            return Err(Error::InvalidState(format!(
                "C_i not symmetric (defect {:e})",
                c_i.asymmetry()
            )));
        }
        if !c_i.is_spd() {
            return Err(Error::InvalidState("C_i not positive definite".into()));
        }
        let drift = (c_i.det() - 1.0).abs();
        if drift > UNIMODULAR_TOL {
            return Err(Error::InvalidState(format!("det C_i - 1 = {drift:e}")));
        }
        Ok(Self(c_i))
    }

    /// Stress-free initial state `Cᵢ = 1`.
    pub fn identity() -> Self {
        Self(Tensor2::IDENTITY)
    }

    /// Wraps a tensor the caller guarantees to be admissible (for instance
    /// the output of a unimodular projection).
    pub(crate) fn from_unchecked(c_i: Tensor2) -> Self {
        Self(c_i)
    }

    pub fn tensor(&self) -> &Tensor2 {
        &self.0
    }

    pub fn into_tensor(self) -> Tensor2 {
        self.0
    }
}

impl Default for MaxwellState {
    fn default() -> Self {
        Self::identity()
    }
}

/// Stress measures on the reference configuration (2nd Piola–Kirchhoff),
/// the weighted current configuration (Kirchhoff) and the current
/// configuration (Cauchy), all in MPa.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StressResult {
    pub pk2: Tensor2,
    pub kirchhoff: Tensor2,
    pub cauchy: Tensor2,
}

/// `T̃ = μ C⁻¹ (C̄ Cᵢ⁻¹)ᴰ` from `C` alone. `c_i` need not be unimodular.
pub fn overstress_pk2_from_c(c: &Tensor2, c_i: &Tensor2, mu: f64) -> Result<Tensor2> {
    let c_inv = c.inv()?;
    let c_bar = c.unimodular().map_err(|_| Error::SingularTensor)?;
    let inner = (c_bar * c_i.inv()?).dev();
    Ok((c_inv * inner * mu).sym())
}

/// Overstress of the element in all three stress measures.
pub fn overstress_2pk(
    kin: &Kinematics,
    state: &MaxwellState,
    p: &MaxwellParams,
) -> Result<StressResult> {
    let pk2 = overstress_pk2_from_c(&kin.c, state.tensor(), p.mu)?;
    Ok(kin.stresses_from_pk2(pk2))
}

/// `(μ/2)(tr(C̄ Cᵢ⁻¹) - 3)` for a possibly non-unimodular `c_i`.
pub fn free_energy_from_c(c: &Tensor2, c_i: &Tensor2, mu: f64) -> Result<f64> {
    let c_bar = c.unimodular().map_err(|_| Error::SingularTensor)?;
    Ok(0.5 * mu * ((c_bar * c_i.inv()?).trace() - 3.0))
}

/// Stored energy per unit reference volume.
pub fn free_energy(kin: &Kinematics, state: &MaxwellState, p: &MaxwellParams) -> Result<f64> {
    free_energy_from_c(&kin.c, state.tensor(), p.mu)
}

/// Right-hand side of the flow rule, `Ċᵢ = (μ/η)(C̄ Cᵢ⁻¹)ᴰ Cᵢ`.
pub fn flow_rhs(kin: &Kinematics, state: &MaxwellState, p: &MaxwellParams) -> Result<Tensor2> {
    flow_rhs_from_c(&kin.c, state.tensor(), p)
}

pub fn flow_rhs_from_c(c: &Tensor2, c_i: &Tensor2, p: &MaxwellParams) -> Result<Tensor2> {
    let c_bar = c.unimodular().map_err(|_| Error::SingularTensor)?;
    Ok((c_bar * c_i.inv()?).dev() * *c_i * p.rate())
}

/// Eulerian Kirchhoff stress `S = μ (B̄ₑ)ᴰ` from the elastic left
/// Cauchy–Green tensor.
pub fn kirchhoff_from_be(b_e: &Tensor2, mu: f64) -> Result<Tensor2> {
    if !b_e.is_spd() {
        let minors = b_e.sym().leading_minors();
        let bad = minors.into_iter().find(|d| !(*d > 0.0)).unwrap_or(0.0);
        return Err(Error::NotSpd(bad));
    }
    Ok(b_e.unimodular()?.dev() * mu)
}
