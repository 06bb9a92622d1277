//! Closed-form per-mode spectral quantities on the unit three-sphere.

use num_complex::Complex;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::num::Real;

/// Dirac eigenspace label n ∈ ℕ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeIndex(pub u64);

impl ModeIndex {
    pub fn get(self) -> u64 {
        self.0
    }

    /// ωₙ = n + 3/2.
    pub fn omega<T: Real>(self) -> T {
        omega(self)
    }

    pub fn degeneracy(self) -> u64 {
        degeneracy(self)
    }
}

impl From<u64> for ModeIndex {
    fn from(n: u64) -> Self {
        ModeIndex(n)
    }
}

/// ωₙ = n + 3/2.
pub fn omega<T: Real>(n: ModeIndex) -> T {
    T::from_u64_lossy(n.0) + T::lit(1.5)
}

/// ωₙ as an exact rational, (2n + 3)/2.
pub fn omega_exact(n: ModeIndex) -> Ratio<u64> {
    Ratio::new(2 * n.0 + 3, 2)
}

/// gₙ = (n + 1)(n + 2), the dimension of each Dirac eigenspace.
pub fn degeneracy(n: ModeIndex) -> u64 {
    (n.0 + 1) * (n.0 + 2)
}

/// Everything the reference structure and the large-n analysis need for one mode at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SpectralCoefficients<T> {
    pub omega: T,
    pub degeneracy: u64,
    /// ξₙ = sqrt(1 + (m e^α / ωₙ)²).
    pub xi: T,
    pub f1: T,
    pub f2: T,
    pub gamma_modulus: T,
    /// Principal-value phase of Γₙ.
    pub gamma_phase: T,
}

impl<T: Real> SpectralCoefficients<T> {
    pub fn gamma(&self) -> Complex<T> {
        Complex::from_polar(self.gamma_modulus, self.gamma_phase)
    }
}

/// (f₁, f₂) for a given coupling μ = m e^α.
///
/// f₁² = ½ − 1/(2ξ) is evaluated as x²/(2ξ(ξ+1)) with x = μ/ω to avoid the
/// cancellation for small μ/ω, and f₂ = sqrt(1 − f₁²).
pub(crate) fn pairing_coefficients<T: Real>(omega: T, mu: T) -> (T, T, T) {
    let x = mu / omega;
    let xi = (T::one() + x * x).sqrt();
    let f1_sq = x * x / (T::lit(2.0) * xi * (xi + T::one()));
    let f1 = f1_sq.sqrt();
    let f2 = (T::one() - f1_sq).sqrt();
    (xi, f1, f2)
}

/// Spectral coefficients of mode `n` for mass `m`, log scale factor `alpha`
/// and its derivative `alpha_prime` (all evaluated at the same time).
pub fn spectral_coefficients<T: Real>(n: ModeIndex, m: T, alpha: T, alpha_prime: T) -> SpectralCoefficients<T> {
    let w: T = omega(n);
    let mu = m * alpha.exp();
    let (xi, f1, f2) = pairing_coefficients(w, mu);
    let gamma = Complex::new(mu, T::zero()) / Complex::new(T::lit(2.0) * w, alpha_prime);
    let gamma_phase = if mu == T::zero() { T::zero() } else { gamma.arg() };
    SpectralCoefficients {
        omega: w,
        degeneracy: degeneracy(n),
        xi,
        f1,
        f2,
        gamma_modulus: gamma.norm(),
        gamma_phase,
    }
}

/// Square integer matrix, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntMatrix {
    size: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(size: usize) -> Self {
        Self { size, data: vec![0; size * size] }
    }

    pub fn identity(size: usize) -> Self {
        let mut m = Self::zeros(size);
        for i in 0..size {
            m.set(i, i, 1);
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, i: usize, j: usize) -> i64 {
        self.data[i * self.size + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: i64) {
        self.data[i * self.size + j] = v;
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.size).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.size, rhs.size);
        let n = self.size;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..n {
                    out.data[i * n + j] += a * rhs.get(k, j);
                }
            }
        }
        out
    }

    pub fn scaled(&self, s: i64) -> Self {
        Self { size: self.size, data: self.data.iter().map(|v| v * s).collect() }
    }
}

fn block_diagonal(size: usize, block: [[i64; 2]; 2]) -> IntMatrix {
    let mut m = IntMatrix::zeros(size);
    for b in 0..size / 2 {
        for i in 0..2 {
            for j in 0..2 {
                m.set(2 * b + i, 2 * b + j, block[i][j]);
            }
        }
    }
    m
}

/// The constant gₙ × gₙ coupling matrices (ᾰₙ, β̆ₙ), block diagonal with
/// consecutive p-labels paired into 2×2 blocks.
pub fn coupling_matrices(n: ModeIndex) -> (IntMatrix, IntMatrix) {
    let g = degeneracy(n) as usize;
    // (n+1)(n+2) is a product of consecutive integers.
    assert!(g % 2 == 0, "degeneracy {g} must be even");
    (block_diagonal(g, [[1, 1], [1, -1]]), block_diagonal(g, [[1, -1], [-1, -1]]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn omega_values() {
        assert_eq!(omega::<f64>(ModeIndex(0)), 1.5);
        assert_eq!(omega::<f64>(ModeIndex(1)), 2.5);
        assert_eq!(omega::<f64>(ModeIndex(10)), 11.5);
    }

    #[test]
    fn degeneracy_values() {
        assert_eq!(degeneracy(ModeIndex(0)), 2);
        assert_eq!(degeneracy(ModeIndex(1)), 6);
        assert_eq!(2.25_f64 - 0.25, 2.0);
    }

    #[test]
    fn degeneracy_equals_omega_squared_minus_quarter_exactly() {
        for n in 0..=10_000u64 {
            let w = omega_exact(ModeIndex(n));
            let lhs = Ratio::from_integer(degeneracy(ModeIndex(n)));
            assert_eq!(lhs, w * w - Ratio::new(1, 4), "n = {n}");
        }
    }

    #[test]
    fn massless_coefficients() {
        for n in [0, 3, 100] {
            let s = spectral_coefficients(ModeIndex(n), 0.0, 0.4, 0.2);
            assert_eq!((s.xi, s.f1, s.f2, s.gamma_modulus), (1.0, 0.0, 1.0, 0.0));
        }
    }

    #[test]
    fn three_quarters_ratio_is_exact() {
        // choose m so that m e^α / ω₀ = 3/4
        let s = spectral_coefficients::<f64>(ModeIndex(0), 0.75 * 1.5, 0.0, 0.0);
        assert!((s.xi - 1.25).abs() < 1e-15);
        assert!((s.f1 - 0.1f64.sqrt()).abs() < 1e-15);
        assert!((s.f2 - 0.9f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn f1_leading_asymptote_at_large_n() {
        let s = spectral_coefficients::<f64>(ModeIndex(100), 1.0, 0.0, 0.0);
        let leading = 1.0 / (2.0 * 101.5);
        assert!(((s.f1 - leading) / leading).abs() <= 1e-3);
        assert!(((s.gamma_modulus - leading) / leading).abs() <= 1e-3);
    }

    #[test]
    fn gamma_phase_follows_alpha_prime() {
        let s = spectral_coefficients(ModeIndex(2), 1.0, 0.0, 1.0);
        let expected = -(1.0f64 / (2.0 * 3.5)).atan();
        assert!((s.gamma_phase - expected).abs() < 1e-15);
        assert!((s.gamma_modulus - 1.0 / (49.0f64 + 1.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn coupling_blocks_n0() {
        let (a, b) = coupling_matrices(ModeIndex(0));
        assert_eq!(a.size(), 2);
        assert_eq!([a.get(0, 0), a.get(0, 1), a.get(1, 0), a.get(1, 1)], [1, 1, 1, -1]);
        assert_eq!([b.get(0, 0), b.get(0, 1), b.get(1, 0), b.get(1, 1)], [1, -1, -1, -1]);
    }

    #[test]
    fn coupling_n1_squares_to_twice_identity() {
        let (a, _) = coupling_matrices(ModeIndex(1));
        assert_eq!(a.size(), 6);
        assert_eq!(a.matmul(&a), IntMatrix::identity(6).scaled(2));
        for blk in 0..3 {
            assert_eq!(a.get(2 * blk, 2 * blk + 1), 1);
        }
    }

    #[test]
    fn coupling_structure_up_to_n20() {
        for n in 0..=20 {
            let (a, b) = coupling_matrices(ModeIndex(n));
            let two_i = IntMatrix::identity(a.size()).scaled(2);
            assert!(a.is_symmetric() && b.is_symmetric());
            assert_eq!(a.matmul(&a), two_i);
            assert_eq!(b.matmul(&b), two_i);
        }
    }

    #[test]
    fn omega_f1_increases_toward_half_coupling() {
        for &(m, alpha) in &[(0.5, 0.0), (1.0, 0.3), (3.0, -0.2), (2.0, 1.0)] {
            let target = m * f64::exp(alpha) / 2.0;
            let mut prev = 0.0;
            for n in 0..400u64 {
                let s = spectral_coefficients(ModeIndex(n), m, alpha, 0.0);
                let v = s.omega * s.f1;
                assert!(v < target && v > prev, "m={m}, alpha={alpha}, n={n}");
                prev = v;
            }
            assert!((target - prev) / target < 1e-3);
        }
    }

    proptest! {
        #[test]
        fn f1_f2_normalised(n in 0u64..5000, m in 0.0f64..50.0, alpha in -3.0f64..3.0, da in -5.0f64..5.0) {
            let s = spectral_coefficients(ModeIndex(n), m, alpha, da);
            prop_assert!((s.f1 * s.f1 + s.f2 * s.f2 - 1.0).abs() <= 4.0 * f64::EPSILON);
            prop_assert!(s.f1 >= 0.0 && s.f1 < s.f2);
            prop_assert!(s.f1 < std::f64::consts::FRAC_1_SQRT_2 && s.f2 > std::f64::consts::FRAC_1_SQRT_2);
            prop_assert!(s.xi >= 1.0);
            prop_assert!(s.gamma_phase > -std::f64::consts::PI && s.gamma_phase <= std::f64::consts::PI);
        }
    }
}
