//! Fixed-size 3×3 tensor algebra.

mod spectral;
mod tensor2;
mod tensor4;

pub use spectral::{expm, sqrt_spd, sym_eigen, sym_function};
pub use tensor2::{rel_diff, Tensor2, ABS_FLOOR, VOIGT_PAIRS};
pub use tensor4::Tensor4;

/// Deviatoric part `A - tr(A)/3 · 1`.
pub fn dev(a: &Tensor2) -> Tensor2 {
    a.dev()
}

/// Unimodular part `(det A)^(-1/3) · A`.
pub fn unimodular(a: &Tensor2) -> crate::Result<Tensor2> {
    a.unimodular()
}
