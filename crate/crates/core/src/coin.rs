//! 2x2 coin rotations `R(theta) = exp(-i theta sigma_y / 2)` and their derivatives.

use core::ops::Mul;

use num_complex::Complex64;
#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::error::{invalid, Result};

/// General 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([
        [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
        [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
    ]);

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Mat2([
            [Complex64::new(m[0][0], 0.0), Complex64::new(m[0][1], 0.0)],
            [Complex64::new(m[1][0], 0.0), Complex64::new(m[1][1], 0.0)],
        ])
    }

    #[inline]
    pub fn apply(&self, up: Complex64, down: Complex64) -> (Complex64, Complex64) {
        let m = &self.0;
        (m[0][0] * up + m[0][1] * down, m[1][0] * up + m[1][1] * down)
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        let mut worst = 0.0_f64;
        for r in 0..2 {
            for c in 0..2 {
                worst = worst.max((self.0[r][c] - other.0[r][c]).norm());
            }
        }
        worst
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, cell) in row.iter_mut().enumerate() {
                *cell = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Mat2(out)
    }
}

/// A unitary 2x2 coin operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoinMatrix(Mat2);

impl CoinMatrix {
    pub fn entries(&self) -> &[[Complex64; 2]; 2] {
        &self.0 .0
    }

    pub fn as_mat2(&self) -> &Mat2 {
        &self.0
    }

    /// Deviation of `M^dagger M` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        (self.0.adjoint() * self.0).max_abs_diff(&Mat2::IDENTITY)
    }
}

/// `(cos(theta/2), sin(theta/2))`, the only trigonometric data a coin needs.
#[inline]
pub(crate) fn half_angle(theta: f64) -> (f64, f64) {
    let (s, c) = (0.5 * theta).sin_cos();
    (c, s)
}

fn check_finite(theta: f64) -> Result<()> {
    if theta.is_finite() {
        Ok(())
    } else {
        Err(invalid!("coin angle must be finite, got {theta}"))
    }
}

/// `R(theta) = [[cos(theta/2), -sin(theta/2)], [sin(theta/2), cos(theta/2)]]`.
pub fn coin_matrix(theta: f64) -> Result<CoinMatrix> {
    check_finite(theta)?;
    let (c, s) = half_angle(theta);
    Ok(CoinMatrix(Mat2::from_real([[c, -s], [s, c]])))
}

/// `dR/dtheta = (-i sigma_y / 2) R(theta)`.
pub fn coin_matrix_derivative(theta: f64) -> Result<Mat2> {
    check_finite(theta)?;
    let (c, s) = half_angle(theta);
    Ok(Mat2::from_real([[-0.5 * s, -0.5 * c], [0.5 * c, -0.5 * s]]))
}
