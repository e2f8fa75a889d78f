//! Spectral helpers for 3×3 tensors: symmetric eigendecomposition, the
//! SPD square root, and the tensor exponential.

use super::tensor2::Tensor2;
use crate::error::{Error, Result};

const JACOBI_MAX_SWEEPS: usize = 50;

/// Eigendecomposition of a symmetric tensor by cyclic Jacobi rotations.
///
/// Returns the eigenvalues and an orthogonal tensor whose columns are the
/// matching eigenvectors, so that `A = Q · diag(λ) · Qᵀ`. Only the
/// symmetric part of the input is used.
pub fn sym_eigen(a: &Tensor2) -> ([f64; 3], Tensor2) {
    let mut m = a.sym();
    let mut q = Tensor2::IDENTITY;
    let scale = m.norm();
    if scale == 0.0 {
        return ([0.0; 3], q);
    }
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off = m[(0, 1)].powi(2) + m[(0, 2)].powi(2) + m[(1, 2)].powi(2);
        if off.sqrt() <= f64::EPSILON * 1e-3 * scale {
            break;
        }
        for &(p, r) in &[(0usize, 1usize), (0, 2), (1, 2)] {
            let apq = m[(p, r)];
            if apq == 0.0 {
                continue;
            }
            let theta = (m[(r, r)] - m[(p, p)]) / (2.0 * apq);
            let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
            let t = if theta == 0.0 { 1.0 } else { t };
            let c = 1.0 / (t * t + 1.0).sqrt();
            let s = t * c;
            // m <- Jᵀ m J, q <- q J
            let mut rot = Tensor2::IDENTITY;
            rot[(p, p)] = c;
            rot[(r, r)] = c;
            rot[(p, r)] = s;
            rot[(r, p)] = -s;
            m = rot.transpose() * m * rot;
            m[(p, r)] = 0.0;
            m[(r, p)] = 0.0;
            q = q * rot;
        }
    }
    ([m[(0, 0)], m[(1, 1)], m[(2, 2)]], q)
}

/// Applies a scalar function to the spectrum of a symmetric tensor.
pub fn sym_function(a: &Tensor2, f: impl Fn(f64) -> f64) -> Tensor2 {
    let (lam, q) = sym_eigen(a);
    q * Tensor2::diag(f(lam[0]), f(lam[1]), f(lam[2])) * q.transpose()
}

/// Square root of a symmetric positive definite tensor.
///
/// Fails with [`Error::NotSpd`] when a leading principal minor of the
/// symmetric part is not positive.
pub fn sqrt_spd(a: &Tensor2) -> Result<Tensor2> {
    let s = a.sym();
    if let Some(&bad) = s.leading_minors().iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::NotSpd(bad));
    }
    let root = sym_function(&s, |l| l.max(0.0).sqrt());
    Ok(root.sym())
}

// Diagonal Padé(6,6) coefficients.
const PADE6: [f64; 7] = [
    1.0,
    0.5,
    5.0 / 44.0,
    1.0 / 66.0,
    1.0 / 792.0,
    1.0 / 15840.0,
    1.0 / 665280.0,
];

/// Tensor exponential by scaling and squaring with a diagonal Padé(6,6)
/// approximant. The argument need not be symmetric.
pub fn expm(a: &Tensor2) -> Tensor2 {
    let norm = a.norm();
    if norm == 0.0 {
        return Tensor2::IDENTITY;
    }
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let x = *a * 0.5_f64.powi(squarings);

    let mut num = Tensor2::IDENTITY;
    let mut den = Tensor2::IDENTITY;
    let mut power = Tensor2::IDENTITY;
    for (k, &c) in PADE6.iter().enumerate().skip(1) {
        power = power * x;
        num += power * c;
        den += power * if k % 2 == 0 { c } else { -c };
    }
    // den is a small perturbation of the identity, so it is invertible
    let mut e = den.inv().expect("Padé denominator is nonsingular") * num;
    for _ in 0..squarings {
        e = e * e;
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_reconstructs() {
        let a = Tensor2::from_voigt([4.0, 2.0, 3.0, 0.5, -1.0, 0.7]);
        let (lam, q) = sym_eigen(&a);
        let back = q * Tensor2::diag(lam[0], lam[1], lam[2]) * q.transpose();
        assert!((back - a).max_abs() < 1e-14);
        assert!((q.transpose() * q - Tensor2::IDENTITY).max_abs() < 1e-15);
    }

    #[test]
    fn eigen_handles_degenerate_spectrum() {
        let (lam, _) = sym_eigen(&Tensor2::IDENTITY);
        assert_eq!(lam, [1.0, 1.0, 1.0]);
        let (lam, _) = sym_eigen(&Tensor2::ZERO);
        assert_eq!(lam, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn sqrt_examples() {
        assert_eq!(sqrt_spd(&Tensor2::IDENTITY).unwrap(), Tensor2::IDENTITY);
        let r = sqrt_spd(&Tensor2::diag(4.0, 9.0, 16.0)).unwrap();
        assert!((r - Tensor2::diag(2.0, 3.0, 4.0)).max_abs() < 1e-15);
        assert!(matches!(
            sqrt_spd(&Tensor2::diag(1.0, -1.0, 1.0)),
            Err(Error::NotSpd(_))
        ));
    }

    #[test]
    fn expm_examples() {
        assert_eq!(expm(&Tensor2::ZERO), Tensor2::IDENTITY);
        let e = expm(&Tensor2::diag(1.0, -2.0, 0.5));
        let want = Tensor2::diag(1f64.exp(), (-2f64).exp(), 0.5f64.exp());
        assert!((e - want).max_abs() < 1e-14 * want.max_abs());
        // nilpotent argument: exp(N) = 1 + N
        let mut n = Tensor2::ZERO;
        n[(0, 1)] = 3.0;
        let e = expm(&n);
        assert!((e - (Tensor2::IDENTITY + n)).max_abs() < 1e-14);
    }
}
