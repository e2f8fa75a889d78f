use std::ops::{Add, Mul, Neg, Sub};

use super::tensor2::{Tensor2, VOIGT_PAIRS};

/// A fourth-order tensor acting linearly on second-order tensors through
/// `(𝕋 : X)_ij = 𝕋_ijkl X_kl`.
///
/// Product conventions:
/// * `(A ⊗ B) : X = A · tr(B X)`, i.e. `(A ⊗ B)_ijkl = A_ij B_lk`
/// * `(A ⊙ B) : X = A X B`, i.e. `(A ⊙ B)_ijkl = A_ik B_lj`
///
/// With these, `∂(C⁻¹)/∂C = -(C⁻¹ ⊙ C⁻¹)`.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct Tensor4 {
    c: [[[[f64; 3]; 3]; 3]; 3],
}

impl Default for Tensor4 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Tensor4 {
    pub fn zero() -> Self {
        Self {
            c: [[[[0.0; 3]; 3]; 3]; 3],
        }
    }

    pub fn from_fn(f: impl Fn(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        t.c[i][j][k][l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    /// 𝕀 with `𝕀 : X = X`.
    pub fn identity() -> Self {
        Self::from_fn(|i, j, k, l| delta(i, k) * delta(j, l))
    }

    /// Deviatoric projector ℙ with `ℙ : X = X^D`.
    pub fn deviatoric() -> Self {
        Self::from_fn(|i, j, k, l| delta(i, k) * delta(j, l) - delta(i, j) * delta(k, l) / 3.0)
    }

    pub fn dyad(a: &Tensor2, b: &Tensor2) -> Self {
        Self::from_fn(|i, j, k, l| a[(i, j)] * b[(l, k)])
    }

    pub fn square(a: &Tensor2, b: &Tensor2) -> Self {
        Self::from_fn(|i, j, k, l| a[(i, k)] * b[(l, j)])
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.c[i][j][k][l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.c[i][j][k][l] = v;
    }

    /// `𝕋 : X`.
    pub fn contract(&self, x: &Tensor2) -> Tensor2 {
        let mut out = Tensor2::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    for l in 0..3 {
                        s += self.c[i][j][k][l] * x[(k, l)];
                    }
                }
                out[(i, j)] = s;
            }
        }
        out
    }

    /// `X : 𝕋 : Y`.
    pub fn bilinear(&self, x: &Tensor2, y: &Tensor2) -> f64 {
        x.ddot(&self.contract(y))
    }

    /// Composition `(𝔸 : 𝔹) : X = 𝔸 : (𝔹 : X)`.
    pub fn compose(&self, rhs: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for m in 0..3 {
                    for n in 0..3 {
                        let a = self.c[i][j][m][n];
                        if a == 0.0 {
                            continue;
                        }
                        for k in 0..3 {
                            for l in 0..3 {
                                out.c[i][j][k][l] += a * rhs.c[m][n][k][l];
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `(A · 𝕋) : X = A · (𝕋 : X)`.
    pub fn left_dot(&self, a: &Tensor2) -> Self {
        Self::from_fn(|i, j, k, l| (0..3).map(|m| a[(i, m)] * self.c[m][j][k][l]).sum())
    }

    /// `(𝕋 · B) : X = (𝕋 : X) · B`.
    pub fn right_dot(&self, b: &Tensor2) -> Self {
        Self::from_fn(|i, j, k, l| (0..3).map(|m| self.c[i][m][k][l] * b[(m, j)]).sum())
    }

    /// Averages over the last index pair so the operator only sees the
    /// symmetric part of its argument.
    pub fn minor_symmetrize_right(&self) -> Self {
        Self::from_fn(|i, j, k, l| 0.5 * (self.c[i][j][k][l] + self.c[i][j][l][k]))
    }

    pub fn norm(&self) -> f64 {
        self.c
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.c
            .iter()
            .flatten()
            .flatten()
            .flatten()
            .fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    /// Largest major-symmetry defect `|X:𝕋:Y - Y:𝕋:X|` over pairs drawn
    /// from the symmetric basis, relative to `‖𝕋‖`. The basis is complete
    /// for symmetric arguments, so this bounds the defect for all of them.
    pub fn major_symmetry_defect(&self) -> f64 {
        let basis: Vec<Tensor2> = VOIGT_PAIRS
            .iter()
            .map(|&(k, l)| {
                let mut e = Tensor2::ZERO;
                e[(k, l)] = 1.0;
                e[(l, k)] = 1.0;
                e
            })
            .collect();
        let mut worst = 0.0_f64;
        for (a, x) in basis.iter().enumerate() {
            for y in &basis[a + 1..] {
                worst = worst.max((self.bilinear(x, y) - self.bilinear(y, x)).abs());
            }
        }
        worst / self.norm().max(super::ABS_FLOOR)
    }
}

fn delta(i: usize, j: usize) -> f64 {
    if i == j {
        1.0
    } else {
        0.0
    }
}

impl Add for Tensor4 {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        Self::from_fn(|i, j, k, l| self.c[i][j][k][l] + rhs.c[i][j][k][l])
    }
}

impl Sub for Tensor4 {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        Self::from_fn(|i, j, k, l| self.c[i][j][k][l] - rhs.c[i][j][k][l])
    }
}

impl Neg for Tensor4 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for Tensor4 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::from_fn(|i, j, k, l| self.c[i][j][k][l] * s)
    }
}
