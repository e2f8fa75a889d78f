//! One-step updates `ⁿCᵢ → ⁿ⁺¹Cᵢ` of the Maxwell flow rule for a prescribed
//! `ⁿ⁺¹C` and time step.
//!
//! * [`step_ebmsc`]: Euler-backward with subsequent unimodular correction,
//!   in closed form. No local iteration.
//! * [`step_ebm_closed`] / [`step_ebm_iterative`]: the classical Euler-backward
//!   scheme, once in closed form and once by Newton iteration on the
//!   discrete equation (the latter is a test oracle).
//! * [`step_em`] / [`step_em_spectral`]: the implicit exponential-map scheme.
//! * [`step_ebmsc_eulerian`]: the EBMSC update written for `B̂ₑ`.
//! * [`relax_exact`]: the exact relaxation trajectory at fixed `C`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::maxwell::{MaxwellParams, MaxwellState};
use crate::tensor::{expm, sqrt_spd, sym_eigen, Tensor2};

/// Iteration cap shared by the iterative local solvers.
pub const MAX_ITERATIONS: usize = 200;
/// Relative tolerance of the iterative local solvers.
pub const SOLVER_TOL: f64 = 1e-12;

/// Everything a single local step needs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepInput {
    /// `ⁿCᵢ`; unimodular for the geometric schemes, arbitrary SPD for EBM chains.
    pub c_i_n: Tensor2,
    /// `ⁿ⁺¹C`.
    pub c_np1: Tensor2,
    /// Time step [s].
    pub dt: f64,
    pub params: MaxwellParams,
}

impl StepInput {
    pub fn new(c_i_n: Tensor2, c_np1: Tensor2, dt: f64, params: MaxwellParams) -> Result<Self> {
        let input = Self {
            c_i_n,
            c_np1,
            dt,
            params,
        };
        input.validate()?;
        Ok(input)
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "time step must be >= 0, got {}",
                self.dt
            )));
        }
        let det = self.c_np1.det();
        if !(det > 0.0) {
            return Err(Error::NonPositiveDeterminant(det));
        }
        Ok(())
    }

    /// `Δt μ / η`.
    pub fn step_ratio(&self) -> f64 {
        if self.dt == 0.0 {
            0.0
        } else {
            self.dt * self.params.rate()
        }
    }

    fn c_bar(&self) -> Result<Tensor2> {
        self.c_np1.unimodular()
    }
}

/// Per-step solver report.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepDiagnostics {
    /// `|det ⁿ⁺¹Cᵢ - 1|`.
    pub det_drift: f64,
    /// Local iterations; zero for closed forms.
    pub iterations: usize,
    /// Final relative residual of the local solver; zero for closed forms.
    pub residual: f64,
}

impl StepDiagnostics {
    fn closed(c_i: &Tensor2) -> Self {
        Self {
            det_drift: (c_i.det() - 1.0).abs(),
            iterations: 0,
            residual: 0.0,
        }
    }
}

/// Local integration scheme selector.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Integrator {
    /// Euler-backward with subsequent correction (closed form).
    #[default]
    Ebmsc,
    /// Classical Euler-backward (closed form).
    Ebm,
    /// Exponential mapping (iterative).
    Em,
}

impl Integrator {
    pub const ALL: [Integrator; 3] = [Integrator::Ebmsc, Integrator::Ebm, Integrator::Em];

    pub fn name(&self) -> &'static str {
        match self {
            Integrator::Ebmsc => "ebmsc",
            Integrator::Ebm => "ebm",
            Integrator::Em => "em",
        }
    }

    /// True for schemes that keep `det Cᵢ = 1` exactly.
    pub fn is_geometric(&self) -> bool {
        !matches!(self, Integrator::Ebm)
    }

    pub fn step(&self, input: &StepInput) -> Result<(Tensor2, StepDiagnostics)> {
        match self {
            Integrator::Ebmsc => {
                let c_i = step_ebmsc(input)?.into_tensor();
                Ok((c_i, StepDiagnostics::closed(&c_i)))
            }
            Integrator::Ebm => step_ebm_closed(input),
            Integrator::Em => step_em(input).map(|(s, d)| (s.into_tensor(), d)),
        }
    }
}

impl fmt::Display for Integrator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Integrator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ebmsc" => Ok(Integrator::Ebmsc),
            "ebm" => Ok(Integrator::Ebm),
            "em" => Ok(Integrator::Em),
            other => Err(Error::InvalidParameter(format!(
                "unknown integrator '{other}'"
            ))),
        }
    }
}

/// Closed-form EBMSC update
/// `ⁿ⁺¹Cᵢ = unimodular(ⁿCᵢ + (Δt μ/η) · unimodular(ⁿ⁺¹C))`.
///
/// Defined for every `Δt >= 0`, including `Δt = ∞` where it returns
/// `unimodular(ⁿ⁺¹C)`.
pub fn step_ebmsc(input: &StepInput) -> Result<MaxwellState> {
    input.validate()?;
    let a = input.step_ratio();
    if a == 0.0 {
        return Ok(MaxwellState::from_unchecked(input.c_i_n));
    }
    let c_bar = input.c_bar()?;
    if a.is_infinite() {
        return Ok(MaxwellState::from_unchecked(c_bar));
    }
    let phi = input.c_i_n + c_bar * a;
    Ok(MaxwellState::from_unchecked(phi.unimodular()?))
}

/// Closed-form classical Euler-backward update
/// `(1 - (Δtμ/3η) tr(C̄ Φ⁻¹)) · Φ` with `Φ = ⁿCᵢ + (Δtμ/η) C̄`.
///
/// The prefactor is evaluated through the identity
/// `1 - (Δtμ/3η) tr(C̄ Φ⁻¹) = tr(ⁿCᵢ Φ⁻¹) / 3`, which avoids cancellation
/// for large steps and is positive whenever `ⁿCᵢ` is SPD.
///
/// Does not preserve `det Cᵢ = 1`; the drift is reported in the diagnostics.
pub fn step_ebm_closed(input: &StepInput) -> Result<(Tensor2, StepDiagnostics)> {
    input.validate()?;
    let a = input.step_ratio();
    if a == 0.0 {
        return Ok((input.c_i_n, StepDiagnostics::closed(&input.c_i_n)));
    }
    let c_bar = input.c_bar()?;
    let phi = input.c_i_n + c_bar * a;
    let factor = (input.c_i_n * phi.inv()?).trace() / 3.0;
    if !(factor > 0.0) {
        return Err(Error::DegenerateStep(factor));
    }
    let c_i = phi * factor;
    Ok((c_i, StepDiagnostics::closed(&c_i)))
}

/// Euler-backward residual `X - ⁿCᵢ - a (C̄ X⁻¹)ᴰ X`.
fn ebm_residual(x: &Tensor2, c_i_n: &Tensor2, c_bar: &Tensor2, a: f64) -> Result<Tensor2> {
    Ok(*x - *c_i_n - (*c_bar * x.inv()?).dev() * *x * a)
}

/// Solves the discrete Euler-backward equation by Newton's method with the
/// exact 9×9 Jacobian. Serves as an independent check of
/// [`step_ebm_closed`]; converges quadratically for `Δtμ/η` up to at least 10
/// on unit-order inputs.
pub fn step_ebm_iterative(input: &StepInput) -> Result<(Tensor2, StepDiagnostics)> {
    input.validate()?;
    let a = input.step_ratio();
    let c_i_n = input.c_i_n;
    if a == 0.0 {
        return Ok((c_i_n, StepDiagnostics::closed(&c_i_n)));
    }
    let c_bar = input.c_bar()?;
    let mut x = c_i_n;
    let mut residual = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let r = ebm_residual(&x, &c_i_n, &c_bar, a)?;
        let x_inv = x.inv()?;
        let lin = (c_bar * x_inv).dev();
        // dR = dX + a (C̄X⁻¹ dX X⁻¹)ᴰ X - a (C̄X⁻¹)ᴰ dX
        let mut jac = [[0.0; 9]; 9];
        for col in 0..9 {
            let mut dx = Tensor2::ZERO;
            dx[(col / 3, col % 3)] = 1.0;
            let dr = dx + (c_bar * x_inv * dx * x_inv).dev() * x * a - lin * dx * a;
            for (row, v) in dr.components().iter().enumerate() {
                jac[row][col] = *v;
            }
        }
        let rhs = r.components().map(|v| -v);
        let delta = Tensor2::from_components(solve_dense(jac, rhs).ok_or(Error::SingularTensor)?);
        x += delta;
        residual = delta.norm() / x.norm();
        if residual <= SOLVER_TOL {
            let final_r = ebm_residual(&x, &c_i_n, &c_bar, a)?.norm() / x.norm();
            return Ok((
                x,
                StepDiagnostics {
                    det_drift: (x.det() - 1.0).abs(),
                    iterations: it,
                    residual: final_r,
                },
            ));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

/// Gaussian elimination with partial pivoting for a dense 9×9 system.
fn solve_dense<const N: usize>(mut a: [[f64; N]; N], mut b: [f64; N]) -> Option<[f64; N]> {
    for col in 0..N {
        let pivot = (col..N).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col] == 0.0 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..N {
            let f = a[row][col] / a[col][col];
            if f == 0.0 {
                continue;
            }
            for k in col..N {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = [0.0; N];
    for row in (0..N).rev() {
        let s: f64 = (row + 1..N).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - s) / a[row][row];
    }
    Some(x)
}

/// Implicit exponential-map update
/// `ⁿ⁺¹Cᵢ = exp[(Δtμ/η)(C̄ ⁿ⁺¹Cᵢ⁻¹)ᴰ] ⁿCᵢ`.
///
/// Solved by damped fixed-point iteration (damping 0.5 on the first three
/// sweeps, symmetrisation every sweep). The fixed point stops contracting
/// once `Δtμ/η` is of order `1/‖C̄‖`; in that case the solve is handed to
/// [`step_em_spectral`], which converges for any step size.
pub fn step_em(input: &StepInput) -> Result<(MaxwellState, StepDiagnostics)> {
    input.validate()?;
    let a = input.step_ratio();
    let c_i_n = input.c_i_n;
    if a == 0.0 {
        return Ok((
            MaxwellState::from_unchecked(c_i_n),
            StepDiagnostics::closed(&c_i_n),
        ));
    }
    if a.is_finite() {
        let c_bar = input.c_bar()?;
        let mut x = c_i_n;
        let mut prev = f64::INFINITY;
        let mut iterations = 0;
        for it in 1..=MAX_ITERATIONS {
            // a diverging sweep hands the step to the spectral route
            let Ok(x_inv) = x.inv() else { break };
            let g = (expm(&((c_bar * x_inv).dev() * a)) * c_i_n).sym();
            let damping = if it <= 3 { 0.5 } else { 1.0 };
            let next = x + (g - x) * damping;
            let residual = (next - x).norm() / next.norm();
            if !residual.is_finite() {
                break;
            }
            // past the tolerance, keep polishing until the update stalls at roundoff
            if it > 3 && (residual > prev || (prev <= SOLVER_TOL && residual >= 0.5 * prev)) {
                break;
            }
            x = next;
            prev = residual;
            iterations = it;
            if residual <= 1e-16 {
                break;
            }
        }
        if prev <= SOLVER_TOL {
            return Ok((
                MaxwellState::from_unchecked(x),
                StepDiagnostics {
                    det_drift: (x.det() - 1.0).abs(),
                    iterations,
                    residual: prev,
                },
            ));
        }
    }
    step_em_spectral(input)
}

/// Exponential-map update solved in the principal axes of the problem
/// reduced to `ⁿCᵢ = 1`.
///
/// With `U = √ⁿCᵢ` the reduced load `C' = U⁻¹ C̄ U⁻¹` is coaxial with the
/// reduced solution, whose logarithmic eigenvalues `y` satisfy
/// `yₖ = a (gₖ - mean g)` with `gₖ = c'ₖ e^(-yₖ)` and `Σ y = 0`. This is the
/// stationarity condition of a strictly convex function on the plane
/// `Σ y = 0`, so damped Newton converges globally.
pub fn step_em_spectral(input: &StepInput) -> Result<(MaxwellState, StepDiagnostics)> {
    input.validate()?;
    let a = input.step_ratio();
    let c_i_n = input.c_i_n;
    if a == 0.0 {
        return Ok((
            MaxwellState::from_unchecked(c_i_n),
            StepDiagnostics::closed(&c_i_n),
        ));
    }
    let c_bar = input.c_bar()?;
    let u = sqrt_spd(&c_i_n)?;
    let u_inv = u.inv()?;
    let reduced = (u_inv * c_bar * u_inv).sym();
    let (c, q) = sym_eigen(&reduced);

    let (y, iterations, residual) = if a.is_infinite() {
        // a → ∞ forces gₖ equal, i.e. eₖ = c'ₖ up to a unimodular scale
        let mean_log = c.iter().map(|v| v.ln()).sum::<f64>() / 3.0;
        (c.map(|v| v.ln() - mean_log), 0, 0.0)
    } else {
        solve_em_log_stretches(&c, a)?
    };

    let x_reduced = q * Tensor2::diag(y[0].exp(), y[1].exp(), y[2].exp()) * q.transpose();
    let x = (u * x_reduced * u).sym();
    Ok((
        MaxwellState::from_unchecked(x),
        StepDiagnostics {
            det_drift: (x.det() - 1.0).abs(),
            iterations,
            residual,
        },
    ))
}

fn solve_em_log_stretches(c: &[f64; 3], a: f64) -> Result<([f64; 3], usize, f64)> {
    let residual_of = |y: &[f64; 3]| -> [f64; 3] {
        let g = [
            c[0] * (-y[0]).exp(),
            c[1] * (-y[1]).exp(),
            c[2] * (-y[2]).exp(),
        ];
        let mean = (g[0] + g[1] + g[2]) / 3.0;
        [
            y[0] - a * (g[0] - mean),
            y[1] - a * (g[1] - mean),
            y[2] - a * (g[2] - mean),
        ]
    };
    // strictly convex potential whose projected gradient is the residual
    let potential = |y: &[f64; 3]| -> f64 {
        (0..3)
            .map(|k| 0.5 * y[k] * y[k] + a * c[k] * (-y[k]).exp())
            .sum()
    };
    let norm3 = |v: &[f64; 3]| (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();

    let mut y = [0.0_f64; 3];
    let mut step_norm = f64::INFINITY;
    for it in 1..=MAX_ITERATIONS {
        let r = residual_of(&y);
        let g = [
            c[0] * (-y[0]).exp(),
            c[1] * (-y[1]).exp(),
            c[2] * (-y[2]).exp(),
        ];
        let mut jac = Tensor2::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let diag = if i == j { 1.0 + a * g[i] } else { 0.0 };
                jac[(i, j)] = diag - a * g[j] / 3.0;
            }
        }
        let jinv = jac.inv()?;
        let mut delta = [0.0; 3];
        for i in 0..3 {
            delta[i] = -(0..3).map(|j| jinv[(i, j)] * r[j]).sum::<f64>();
        }
        let p0 = potential(&y);
        let mut lambda = 1.0;
        let mut trial = y;
        for _ in 0..60 {
            trial = [
                y[0] + lambda * delta[0],
                y[1] + lambda * delta[1],
                y[2] + lambda * delta[2],
            ];
            // near the solution the potential decrease drowns in roundoff;
            // a smaller residual is then the acceptance test
            if potential(&trial) <= p0
                || norm3(&residual_of(&trial)) < norm3(&r)
                || lambda * norm3(&delta) < 1e-15
            {
                break;
            }
            lambda *= 0.5;
        }
        let mean = (trial[0] + trial[1] + trial[2]) / 3.0;
        y = trial.map(|v| v - mean);
        step_norm = lambda * norm3(&delta) / (1.0 + norm3(&y));
        let scale = 1.0 + a * norm3(&g);
        let res = norm3(&residual_of(&y));
        if res <= 1e-15 * scale || (step_norm <= 1e-15 && res <= 1e-12 * scale) {
            return Ok((y, it, step_norm));
        }
    }
    Err(Error::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual: step_norm,
    })
}

/// EBMSC in the current configuration: returns `ⁿ⁺¹B̂ₑ` from
/// `B̂ₑ⁻¹ = J^(-2/3) · unimodular(unimodular(B̂ₑᵗʳⁱᵃˡ)⁻¹ + (Δtμ/η) 1)` with
/// `B̂ₑᵗʳⁱᵃˡ = F ⁿCᵢ⁻¹ Fᵀ`.
pub fn step_ebmsc_eulerian(
    f_np1: &Tensor2,
    c_i_n: &MaxwellState,
    params: &MaxwellParams,
    dt: f64,
) -> Result<Tensor2> {
    let j = f_np1.det();
    if !(j > 0.0) {
        return Err(Error::NonPositiveDeterminant(j));
    }
    if !(dt >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "time step must be >= 0, got {dt}"
        )));
    }
    let b_trial = (*f_np1 * c_i_n.tensor().inv()? * f_np1.transpose()).sym();
    if dt == 0.0 {
        return Ok(b_trial);
    }
    let a = dt * params.rate();
    let inner = b_trial.unimodular()?.inv()? + Tensor2::IDENTITY * a;
    let b_inv = inner.unimodular()? * j.powf(-2.0 / 3.0);
    Ok(b_inv.inv()?.sym())
}

/// Exact solution of the flow rule at fixed `C` after a hold of length `t`.
///
/// The trajectory is `unimodular(Cᵢ⁰ + φ(t) C̄)` with
/// `φ̇ = (μ/η) det(Cᵢ⁰ + φ C̄)^(1/3)`, `φ(0) = 0`. The scalar problem is
/// integrated in the variable `u = ln(1 + φ)`, whose rate
/// `(μ/η) det(e^(-u) Cᵢ⁰ + (1 - e^(-u)) C̄)^(1/3)` stays bounded for all `t`.
pub fn relax_exact(
    c_i0: &MaxwellState,
    c_fixed: &Tensor2,
    t: f64,
    params: &MaxwellParams,
) -> Result<MaxwellState> {
    let u = relaxation_log_parameter(c_i0, c_fixed, t, params)?;
    let c_bar = c_fixed.unimodular()?;
    let w = (-u).exp();
    let mix = *c_i0.tensor() * w + c_bar * (-(-u).exp_m1());
    Ok(MaxwellState::from_unchecked(mix.unimodular()?))
}

/// The scalar `φ(t)` of the exact relaxation trajectory.
pub fn relaxation_parameter(
    c_i0: &MaxwellState,
    c_fixed: &Tensor2,
    t: f64,
    params: &MaxwellParams,
) -> Result<f64> {
    Ok(relaxation_log_parameter(c_i0, c_fixed, t, params)?.exp_m1())
}

const RELAX_TOL: f64 = 1e-12;

fn relaxation_log_parameter(
    c_i0: &MaxwellState,
    c_fixed: &Tensor2,
    t: f64,
    params: &MaxwellParams,
) -> Result<f64> {
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "hold duration must be >= 0, got {t}"
        )));
    }
    let c_bar = c_fixed.unimodular()?;
    let rate = params.rate();
    if t == 0.0 || rate == 0.0 {
        return Ok(0.0);
    }
    let c0 = *c_i0.tensor();
    let rhs = |u: f64| -> f64 {
        let mix = c0 * (-u).exp() + c_bar * (-(-u).exp_m1());
        rate * mix.det().cbrt()
    };
    let rk4 = |u: f64, h: f64| -> f64 {
        let k1 = rhs(u);
        let k2 = rhs(u + 0.5 * h * k1);
        let k3 = rhs(u + 0.5 * h * k2);
        let k4 = rhs(u + h * k3);
        u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };

    let tau = 1.0 / rate;
    let h_min = 1e-4 * tau;
    let mut h = (0.01 * tau).min(t);
    let mut time = 0.0;
    let mut u = 0.0;
    while time < t {
        let h_try = h.min(t - time);
        let full = rk4(u, h_try);
        let half = rk4(rk4(u, 0.5 * h_try), 0.5 * h_try);
        let err = (half - full).abs() / 15.0;
        let tol = RELAX_TOL * half.abs().max(1.0);
        if err <= tol || h_try <= h_min {
            u = half;
            time = if h_try == t - time { t } else { time + h_try };
            let grow = if err == 0.0 {
                4.0
            } else {
                (0.9 * (tol / err).powf(0.2)).min(4.0)
            };
            h = (h_try * grow).max(h_min);
        } else {
            let shrink = (0.9 * (tol / err).powf(0.2)).max(0.1);
            h = (h_try * shrink).max(h_min);
        }
    }
    Ok(u)
}
