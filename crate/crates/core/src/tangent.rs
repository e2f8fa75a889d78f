//! Algorithmic (consistent) tangent of the EBMSC-updated overstress.
//!
//! The updated stress is the map
//! `T̃₁(C) = μ C⁻¹ (C̄ Cᵢ(C)⁻¹)ᴰ` with `Cᵢ(C) = unimodular(ⁿCᵢ + (Δtμ/η) C̄)`,
//! and its derivative is assembled through the chain
//! `∂Φ/∂C → ∂Cᵢ/∂C → ∂Cᵢ⁻¹/∂C → ∂T̃₁/∂C`.

use crate::error::Result;
use crate::maxwell::{overstress_pk2_from_c, MaxwellParams, MaxwellState};
use crate::tensor::{Tensor2, Tensor4, VOIGT_PAIRS};

/// Default relative step of [`fd_tangent`] when used as an oracle.
pub const FD_RELATIVE_STEP: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TangentResult {
    /// `∂T̃₁/∂C` [MPa].
    pub dt_dc: Tensor4,
    /// Largest `|X:𝕋:Y - Y:𝕋:X| / ‖𝕋‖` over symmetric `X`, `Y`.
    pub symmetric_defect: f64,
}

/// The EBMSC-updated 2nd Piola–Kirchhoff overstress `T̃₁(C)`.
pub fn algorithmic_stress(
    c: &Tensor2,
    c_i_n: &MaxwellState,
    p: &MaxwellParams,
    dt: f64,
) -> Result<Tensor2> {
    let a = dt * p.rate();
    let c_bar = c.unimodular()?;
    let c_i = (*c_i_n.tensor() + c_bar * a).unimodular()?;
    overstress_pk2_from_c(c, &c_i, p.mu)
}

/// Consistent tangent `∂T̃₁/∂C` of the EBMSC update.
pub fn consistent_tangent(
    c: &Tensor2,
    c_i_n: &MaxwellState,
    p: &MaxwellParams,
    dt: f64,
) -> Result<TangentResult> {
    let a = dt * p.rate();
    let id = Tensor4::identity();
    let det_c = c.det();
    let c_inv = c.inv()?;
    let c_bar = c.unimodular()?;
    let phi = *c_i_n.tensor() + c_bar * a;
    let c_i = phi.unimodular()?;
    let c_i_inv = c_i.inv()?;

    // ∂Cᵢ⁻¹/∂C through ∂Φ/∂C and ∂Cᵢ/∂C
    let d_phi = (id - Tensor4::dyad(c, &c_inv) * (1.0 / 3.0)) * (a * det_c.cbrt().recip());
    let d_ci = (id - Tensor4::dyad(&phi, &phi.inv()?) * (1.0 / 3.0)).compose(&d_phi)
        * phi.det().cbrt().recip();
    let d_ci_inv = -Tensor4::square(&c_i_inv, &c_i_inv).compose(&d_ci);

    let dt_dc = assemble(c, &c_inv, &c_bar, &c_i_inv, &d_ci_inv, p.mu);
    Ok(TangentResult {
        symmetric_defect: dt_dc.major_symmetry_defect(),
        dt_dc,
    })
}

/// Tangent of `μ C⁻¹ (C̄ Cᵢ⁻¹)ᴰ` at frozen `Cᵢ` (the hyperelastic branch).
pub fn frozen_tangent(c: &Tensor2, c_i: &Tensor2, mu: f64) -> Result<Tensor4> {
    let c_inv = c.inv()?;
    let c_bar = c.unimodular()?;
    Ok(assemble(
        c,
        &c_inv,
        &c_bar,
        &c_i.inv()?,
        &Tensor4::zero(),
        mu,
    ))
}

fn assemble(
    c: &Tensor2,
    c_inv: &Tensor2,
    c_bar: &Tensor2,
    c_i_inv: &Tensor2,
    d_ci_inv: &Tensor4,
    mu: f64,
) -> Tensor4 {
    let id = Tensor4::identity();
    let first = Tensor4::square(c_inv, &(*c_inv * (*c_bar * *c_i_inv).dev())) * -mu;
    let braces = Tensor4::dyad(&(*c * *c_i_inv).dev(), c_inv) * (-1.0 / 3.0)
        + Tensor4::deviatoric().compose(&(id.right_dot(c_i_inv) + d_ci_inv.left_dot(c)));
    first + braces.left_dot(c_inv) * (mu * c.det().cbrt().recip())
}

/// Central-difference Jacobian of a stress map on the symmetric manifold.
///
/// Each of the six independent components of `C` is perturbed by `±h`
/// (off-diagonal entries in mirrored pairs), and the resulting derivative
/// is split evenly over the two index orders, so that `𝕋 : dC` reproduces
/// the directional derivative for every symmetric `dC`.
pub fn fd_tangent<F>(stress_map: F, c: &Tensor2, h: f64) -> Result<Tensor4>
where
    F: Fn(&Tensor2) -> Result<Tensor2>,
{
    let mut t = Tensor4::zero();
    for &(k, l) in &VOIGT_PAIRS {
        let mut e = Tensor2::ZERO;
        e[(k, l)] = 1.0;
        e[(l, k)] = 1.0;
        let plus = stress_map(&(*c + e * h))?;
        let minus = stress_map(&(*c - e * h))?;
        let d = (plus - minus) * (0.5 / h);
        let share = if k == l { 1.0 } else { 0.5 };
        for i in 0..3 {
            for j in 0..3 {
                t.set(i, j, k, l, share * d[(i, j)]);
                t.set(i, j, l, k, share * d[(i, j)]);
            }
        }
    }
    Ok(t)
}

/// `‖sym(𝕋_analytic) - 𝕋_fd‖ / ‖𝕋_fd‖`, comparing only the action on
/// symmetric increments.
pub fn tangent_relative_error(analytic: &Tensor4, fd: &Tensor4) -> f64 {
    (analytic.minor_symmetrize_right() - *fd).norm() / fd.norm().max(crate::tensor::ABS_FLOOR)
}

/// Convenience wrapper: finite-difference tangent of [`algorithmic_stress`].
pub fn fd_consistent_tangent(
    c: &Tensor2,
    c_i_n: &MaxwellState,
    p: &MaxwellParams,
    dt: f64,
) -> Result<Tensor4> {
    let h = FD_RELATIVE_STEP * c.norm();
    fd_tangent(|cc| algorithmic_stress(cc, c_i_n, p, dt), c, h)
}
