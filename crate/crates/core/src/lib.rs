//! Material-point toolkit for the finite-strain Maxwell fluid (Simo–Miehe
//! type, Neo-Hookean elasticity, incompressible inelastic flow).
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: 3×3 second- and fourth-order tensor algebra
//! * [`maxwell`]: stresses, free energy and flow rule of one Maxwell element
//! * [`integrators`]: one-step updates of the inelastic right Cauchy–Green
//!   tensor, including the closed-form Euler-backward update with
//!   unimodular correction (EBMSC)
//! * [`tangent`]: the algorithmic tangent of the EBMSC stress and a
//!   finite-difference verifier
//! * [`genvisc`]: Yeoh equilibrium spring in parallel with N Maxwell branches
//! * [`driver`]: loading programs, time marching and accuracy studies
//! * [`csv`]: the plain-text time-series format

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0.0)` also rejects NaN

pub mod csv;
pub mod driver;
pub mod error;
pub mod genvisc;
pub mod integrators;
pub mod maxwell;
pub mod tangent;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{Tensor2, Tensor4};
