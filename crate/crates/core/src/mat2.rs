//! Dense 2×2 complex matrices, the only linear algebra the mode problem needs.

use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Mat2<T> {
    pub m: [[Complex<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: Complex<T>, b: Complex<T>, c: Complex<T>, d: Complex<T>) -> Self {
        Self { m: [[a, b], [c, d]] }
    }

    pub fn from_real(r: [[T; 2]; 2]) -> Self {
        let c = |x: T| Complex::new(x, T::zero());
        Self::new(c(r[0][0]), c(r[0][1]), c(r[1][0]), c(r[1][1]))
    }

    pub fn identity() -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self::new(o, z, z, o)
    }

    pub fn zero() -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(z, z, z, z)
    }

    pub fn diag(a: Complex<T>, d: Complex<T>) -> Self {
        let z = Complex::new(T::zero(), T::zero());
        Self::new(a, z, z, d)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.m[i][j]
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    pub fn det(&self) -> Complex<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn trace(&self) -> Complex<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        let m = &self.m;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_real(&self, s: T) -> Self {
        self.scale(Complex::new(s, T::zero()))
    }

    pub fn apply(&self, v: [Complex<T>; 2]) -> [Complex<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Operator ∞-norm (maximum absolute row sum).
    pub fn norm_inf(&self) -> T {
        let row = |r: &[Complex<T>; 2]| r[0].norm() + r[1].norm();
        row(&self.m[0]).max(row(&self.m[1]))
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> T {
        self.m
            .iter()
            .flatten()
            .fold(T::zero(), |acc, z| acc.max(z.norm()))
    }

    /// ‖A†A − I‖∞.
    pub fn unitarity_defect(&self) -> T {
        (self.adjoint() * *self - Self::identity()).norm_inf()
    }

    /// |det A − 1|.
    pub fn determinant_defect(&self) -> T {
        (self.det() - Complex::new(T::one(), T::zero())).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.m.iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Exponential of a traceless anti-Hermitian matrix `A = [[ia, b], [-b̄, -ia]]`.
    ///
    /// Such a matrix squares to `-θ² I` with `θ² = det A`, so
    /// `exp A = cos θ · I + (sin θ / θ) · A`.
    pub fn exp_su2(&self) -> Self {
        let theta = self.det().re.max(T::zero()).sqrt();
        let sinc = if theta < T::lit(1e-4) {
            let t2 = theta * theta;
            T::one() - t2 / T::lit(6.0) + t2 * t2 / T::lit(120.0)
        } else {
            theta.sin() / theta
        };
        Self::identity().scale_real(theta.cos()) + self.scale_real(sinc)
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        let (a, b) = (&self.m, &rhs.m);
        Self::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        self + rhs.scale_real(-T::one())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn exp_of_diagonal_generator_is_phase() {
        let a = Mat2::diag(c(0.0, 0.7), c(0.0, -0.7));
        let e = a.exp_su2();
        assert!((e.get(0, 0) - c(0.7f64.cos(), 0.7f64.sin())).norm() < 1e-15);
        assert!((e.get(1, 1) - c(0.7f64.cos(), -0.7f64.sin())).norm() < 1e-15);
        assert!(e.get(0, 1).norm() < 1e-16);
    }

    #[test]
    fn exp_matches_taylor_series() {
        let a = Mat2::new(c(0.0, 0.3), c(0.2, -0.5), c(-0.2, -0.5), c(0.0, -0.3));
        let mut term = Mat2::<f64>::identity();
        let mut sum = term;
        for k in 1..30 {
            term = (term * a).scale_real(1.0 / k as f64);
            sum = sum + term;
        }
        assert!((sum - a.exp_su2()).max_abs() < 1e-15);
        assert!(a.exp_su2().unitarity_defect() < 1e-15);
        assert!(a.exp_su2().determinant_defect() < 1e-15);
    }

    #[test]
    fn small_angle_branch_is_continuous() {
        let a = Mat2::new(c(0.0, 5e-5), c(1e-5, 0.0), c(-1e-5, 0.0), c(0.0, -5e-5));
        let e = a.exp_su2();
        assert!(e.unitarity_defect() < 1e-15);
    }
}
