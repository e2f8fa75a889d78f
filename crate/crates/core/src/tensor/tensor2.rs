use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use crate::error::{Error, Result};

/// Absolute floor used by relative tolerances throughout the crate.
pub const ABS_FLOOR: f64 = 1e-14;

/// A second-order tensor in R³ stored as a dense 3×3 row-major array.
///
/// Symmetric quantities (C, Cᵢ, stresses) use the same type; the
/// six-component view is available through [`Tensor2::to_voigt`] and
/// [`Tensor2::from_voigt`].
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Tensor2 {
    m: [[f64; 3]; 3],
}

/// Voigt ordering used by the symmetric view: 11, 22, 33, 23, 13, 12.
pub const VOIGT_PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];

impl Tensor2 {
    pub const ZERO: Self = Self { m: [[0.0; 3]; 3] };
    pub const IDENTITY: Self = Self {
        m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
    };

    pub const fn from_rows(m: [[f64; 3]; 3]) -> Self {
        Self { m }
    }

    pub const fn diag(a: f64, b: f64, c: f64) -> Self {
        Self {
            m: [[a, 0.0, 0.0], [0.0, b, 0.0], [0.0, 0.0, c]],
        }
    }

    pub fn identity() -> Self {
        Self::IDENTITY
    }

    pub fn zero() -> Self {
        Self::ZERO
    }

    /// Builds a symmetric tensor from its six independent components in
    /// the order 11, 22, 33, 23, 13, 12.
    pub fn from_voigt(v: [f64; 6]) -> Self {
        let mut t = Self::ZERO;
        for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            t.m[i][j] = v[a];
            t.m[j][i] = v[a];
        }
        t
    }

    /// Six-component view; off-diagonals are averaged so the result is
    /// exact for symmetric input.
    pub fn to_voigt(&self) -> [f64; 6] {
        let mut v = [0.0; 6];
        for (a, &(i, j)) in VOIGT_PAIRS.iter().enumerate() {
            v[a] = 0.5 * (self.m[i][j] + self.m[j][i]);
        }
        v
    }

    pub fn rows(&self) -> &[[f64; 3]; 3] {
        &self.m
    }

    /// Row-major components 11, 12, 13, 21, ..., 33.
    pub fn components(&self) -> [f64; 9] {
        let mut out = [0.0; 9];
        for i in 0..3 {
            for j in 0..3 {
                out[3 * i + j] = self.m[i][j];
            }
        }
        out
    }

    pub fn from_components(c: [f64; 9]) -> Self {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = c[3 * i + j];
            }
        }
        t
    }

    pub fn transpose(&self) -> Self {
        let m = &self.m;
        Self::from_rows([
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ])
    }

    pub fn trace(&self) -> f64 {
        self.m[0][0] + self.m[1][1] + self.m[2][2]
    }

    pub fn det(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Inverse via the adjugate. Fails with [`Error::SingularTensor`] when
    /// the determinant vanishes or is not finite.
    pub fn inv(&self) -> Result<Self> {
        let m = &self.m;
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return Err(Error::SingularTensor);
        }
        let r = 1.0 / det;
        Ok(Self::from_rows([
            [
                (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * r,
                (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * r,
                (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * r,
            ],
            [
                (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * r,
                (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * r,
                (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * r,
            ],
            [
                (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * r,
                (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * r,
                (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * r,
            ],
        ]))
    }

    /// Deviatoric part `A - tr(A)/3 · 1`.
    pub fn dev(&self) -> Self {
        let p = self.trace() / 3.0;
        let mut out = *self;
        for i in 0..3 {
            out.m[i][i] -= p;
        }
        out
    }

    /// Unimodular part `(det A)^(-1/3) · A`.
    pub fn unimodular(&self) -> Result<Self> {
        let det = self.det();
        if !(det > 0.0) {
            return Err(Error::NonPositiveDeterminant(det));
        }
        Ok(*self * det.cbrt().recip())
    }

    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    /// Double contraction `A : B = A_ij B_ij`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.m[i][j] * other.m[i][j];
            }
        }
        s
    }

    pub fn sym(&self) -> Self {
        (*self + self.transpose()) * 0.5
    }

    pub fn skew(&self) -> Self {
        (*self - self.transpose()) * 0.5
    }

    /// Largest absolute asymmetry `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.m;
        (m[0][1] - m[1][0])
            .abs()
            .max((m[0][2] - m[2][0]).abs())
            .max((m[1][2] - m[2][1]).abs())
    }

    /// Leading principal minors, used as the SPD test for symmetric tensors.
    pub fn leading_minors(&self) -> [f64; 3] {
        let m = &self.m;
        [m[0][0], m[0][0] * m[1][1] - m[0][1] * m[1][0], self.det()]
    }

    /// Sylvester's criterion on the symmetric part.
    pub fn is_spd(&self) -> bool {
        self.sym().leading_minors().iter().all(|&d| d > 0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|v| v.is_finite())
    }

    /// Outer product of two vectors `a ⊗ b`.
    pub fn outer(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut t = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                t.m[i][j] = a[i] * b[j];
            }
        }
        t
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        let mut t = *self;
        t.m.iter_mut().flatten().for_each(|v| *v = f(*v));
        t
    }
}

/// `‖a - b‖ / max(‖b‖, floor)`.
pub fn rel_diff(a: &Tensor2, b: &Tensor2) -> f64 {
    (*a - *b).norm() / b.norm().max(ABS_FLOOR)
}

impl Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.m[i][j]
    }
}

impl IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.m[i][j]
    }
}

impl Add for Tensor2 {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] += rhs.m[i][j];
            }
        }
    }
}

impl Sub for Tensor2 {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        self -= rhs;
        self
    }
}

impl SubAssign for Tensor2 {
    fn sub_assign(&mut self, rhs: Self) {
        for i in 0..3 {
            for j in 0..3 {
                self.m[i][j] -= rhs.m[i][j];
            }
        }
    }
}

impl<'a> Sub<&'a Tensor2> for &'a Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: &'a Tensor2) -> Tensor2 {
        *self - *rhs
    }
}

impl<'a> Add<&'a Tensor2> for &'a Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: &'a Tensor2) -> Tensor2 {
        *self + *rhs
    }
}

impl Neg for Tensor2 {
    type Output = Self;
    fn neg(self) -> Self {
        self * -1.0
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.map(|v| v * s)
    }
}

impl Mul<Tensor2> for f64 {
    type Output = Tensor2;
    fn mul(self, t: Tensor2) -> Tensor2 {
        t * self
    }
}

/// Single contraction (matrix product) `A · B`.
impl Mul for Tensor2 {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self::ZERO;
        for i in 0..3 {
            for j in 0..3 {
                out.m[i][j] = self.m[i][0] * rhs.m[0][j]
                    + self.m[i][1] * rhs.m[1][j]
                    + self.m[i][2] * rhs.m[2][j];
            }
        }
        out
    }
}

impl fmt::Debug for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tensor2{:?}", self.m)
    }
}

impl fmt::Display for Tensor2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.m {
            writeln!(f, "[{:>14.6e} {:>14.6e} {:>14.6e}]", row[0], row[1], row[2])?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &Tensor2, b: &Tensor2, tol: f64) -> bool {
        (*a - *b).max_abs() <= tol
    }

    #[test]
    fn dev_examples() {
        assert_eq!(
            Tensor2::diag(1.0, 2.0, 3.0).dev(),
            Tensor2::diag(-1.0, 0.0, 1.0)
        );
        assert_eq!(Tensor2::IDENTITY.dev(), Tensor2::ZERO);
        let a = Tensor2::from_rows([[1.0, 2.0, 0.5], [0.3, -4.0, 1.0], [7.0, 1.0, 3.0]]);
        assert!(a.trace().abs() < 1e-15);
        assert_eq!(a.dev(), a);
    }

    #[test]
    fn unimodular_examples() {
        let u = Tensor2::diag(8.0, 1.0, 1.0).unimodular().unwrap();
        assert!(close(&u, &Tensor2::diag(4.0, 0.5, 0.5), 1e-15));
        let u = (Tensor2::IDENTITY * 2.0).unimodular().unwrap();
        assert!(close(&u, &Tensor2::IDENTITY, 1e-15));
        let a = Tensor2::diag(2.0, 0.25, 2.0);
        assert!(close(&a.unimodular().unwrap(), &a, 1e-15));
    }

    #[test]
    fn unimodular_rejects_nonpositive_det() {
        assert!(matches!(
            Tensor2::diag(-1.0, 1.0, 1.0).unimodular(),
            Err(Error::NonPositiveDeterminant(_))
        ));
        assert!(matches!(
            Tensor2::ZERO.unimodular(),
            Err(Error::NonPositiveDeterminant(_))
        ));
    }

    #[test]
    fn det_inv_basics() {
        assert_eq!(Tensor2::diag(2.0, 3.0, 4.0).det(), 24.0);
        assert_eq!(Tensor2::IDENTITY.inv().unwrap(), Tensor2::IDENTITY);
        assert_eq!(Tensor2::ZERO.inv(), Err(Error::SingularTensor));
        let a = Tensor2::from_rows([[2.0, 1.0, 0.0], [1.0, 3.0, 1.0], [0.0, 1.0, 4.0]]);
        let p = a.inv().unwrap() * a;
        assert!(close(&p, &Tensor2::IDENTITY, 1e-15));
    }

    #[test]
    fn voigt_view_roundtrips_symmetric() {
        let v = [1.0, 2.0, 3.0, 0.4, 0.5, 0.6];
        let t = Tensor2::from_voigt(v);
        assert_eq!(t.asymmetry(), 0.0);
        assert_eq!(t[(0, 1)], 0.6);
        assert_eq!(t.to_voigt(), v);
    }

    #[test]
    fn spd_detection() {
        assert!(Tensor2::diag(1.0, 2.0, 3.0).is_spd());
        assert!(!Tensor2::diag(1.0, -2.0, 3.0).is_spd());
        let indefinite = Tensor2::from_rows([[1.0, 2.0, 0.0], [2.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(!indefinite.is_spd());
    }
}
