//! Dynamical Bogoliubov matrices B_n(η, η₀) = C_n(η) Φ_n(η, η₀) C_n(η₀)⁻¹
//! acting on (a, b†), and the transformed dynamics K_n B_n K_n⁻¹.
//!
//! Since Φ ∈ SU(2) and det C = −1, B_n is in SU(2) as well, so
//! αᵍ = conj(αᶠ) and βᵍ = −conj(βᶠ).

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::complex_structure::{reference_map, MixingMatrix};
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::mode_dynamics::{propagate_with, ModePropagator, PropagatorOptions};
use crate::num::Real;
use crate::spectrum::{omega, ModeIndex};

/// B_n with entries laid out as [[αᶠ, βᶠ], [βᵍ, αᵍ]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BogoliubovMatrix<T> {
    pub matrix: Mat2<T>,
    pub mode: ModeIndex,
    pub eta0: T,
    pub eta: T,
    pub tolerance: T,
}

impl<T: Real> BogoliubovMatrix<T> {
    pub fn alpha_f(&self) -> Complex<T> {
        self.matrix.get(0, 0)
    }

    pub fn beta_f(&self) -> Complex<T> {
        self.matrix.get(0, 1)
    }

    pub fn beta_g(&self) -> Complex<T> {
        self.matrix.get(1, 0)
    }

    pub fn alpha_g(&self) -> Complex<T> {
        self.matrix.get(1, 1)
    }

    pub fn unitarity_defect(&self) -> T {
        self.matrix.unitarity_defect()
    }

    pub fn delta_eta(&self) -> T {
        self.eta - self.eta0
    }
}

/// B_n from an already computed propagator.
pub fn assemble<T: Real>(
    background: &BackgroundModel<T>,
    propagator: &ModePropagator<T>,
) -> Result<BogoliubovMatrix<T>> {
    let n = propagator.mode;
    let c_eta = reference_map(n, background, propagator.to_time)?.as_mat2();
    // C is an involution, so C⁻¹ = C.
    let c_eta0 = reference_map(n, background, propagator.from_time)?.as_mat2();
    Ok(BogoliubovMatrix {
        matrix: c_eta * propagator.matrix * c_eta0,
        mode: n,
        eta0: propagator.from_time,
        eta: propagator.to_time,
        tolerance: propagator.tolerance,
    })
}

/// B_n(η, η₀) with the default integrator.
pub fn bogoliubov_matrix<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    tolerance: T,
) -> Result<BogoliubovMatrix<T>> {
    bogoliubov_matrix_with(background, n, eta0, eta, &PropagatorOptions::new(tolerance))
}

pub fn bogoliubov_matrix_with<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    options: &PropagatorOptions<T>,
) -> Result<BogoliubovMatrix<T>> {
    let phi = propagate_with(background, n, eta0, eta, options)?;
    assemble(background, &phi)
}

/// αᵍ − αᶠ.
pub fn alpha_difference<T: Real>(b: &BogoliubovMatrix<T>) -> Complex<T> {
    b.alpha_g() - b.alpha_f()
}

/// The massless value 2i sin(ωₙΔη) of αᵍ − αᶠ.
pub fn leading_asymptote<T: Real>(n: ModeIndex, delta_eta: T) -> Complex<T> {
    let w: T = omega(n);
    Complex::new(T::zero(), T::lit(2.0) * (w * delta_eta).sin())
}

/// |(αᵍ − αᶠ) − 2i sin(ωₙΔη)| for a computed matrix.
pub fn asymptote_residual<T: Real>(b: &BogoliubovMatrix<T>) -> T {
    (alpha_difference(b) - leading_asymptote(b.mode, b.delta_eta())).norm()
}

/// Integrates B_n and returns [`asymptote_residual`]; O(ωₙ⁻¹) for smooth backgrounds.
pub fn leading_asymptote_residual<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    tolerance: T,
) -> Result<T> {
    Ok(asymptote_residual(&bogoliubov_matrix(background, n, eta0, eta, tolerance)?))
}

/// K B K†, the evolution seen from the alternative structure K.
pub fn transformed_dynamics<T: Real>(k: &MixingMatrix<T>, b: &BogoliubovMatrix<T>) -> Result<Mat2<T>> {
    if k.mode != b.mode {
        return Err(Error::ModeMismatch { left: k.mode.0, right: b.mode.0 });
    }
    let km = k.as_mat2();
    Ok(km * b.matrix * km.adjoint())
}

/// The two off-diagonal combinations that must be square summable (after the
/// √gₙ weight) for K to admit unitary dynamics:
///
/// (κᶠ)²βᶠ − (λᶠ)²βᵍ + κᶠλᶠ(αᵍ − αᶠ) and (κᵍ)²βᵍ − (λᵍ)²βᶠ + κᵍλᵍ(αᶠ − αᵍ).
///
/// They equal (K B K†)₀₁·κᶠ/κ̄ᵍ and (K B K†)₁₀·κᵍ/κ̄ᶠ respectively.
pub fn off_diagonal_sequences<T: Real>(k: &MixingMatrix<T>, b: &BogoliubovMatrix<T>) -> (Complex<T>, Complex<T>) {
    let (af, bf, bg, ag) = (b.alpha_f(), b.beta_f(), b.beta_g(), b.alpha_g());
    let first = k.kappa_f * k.kappa_f * bf - k.lambda_f * k.lambda_f * bg + k.kappa_f * k.lambda_f * (ag - af);
    let second = k.kappa_g * k.kappa_g * bg - k.lambda_g * k.lambda_g * bf + k.kappa_g * k.lambda_g * (af - ag);
    (first, second)
}

/// B_n for n = 0..=n_max at one time pair, computed in parallel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BogoliubovSweep<T> {
    pub eta0: T,
    pub eta: T,
    pub tolerance: T,
    pub matrices: Vec<BogoliubovMatrix<T>>,
}

impl<T: Real> BogoliubovSweep<T> {
    pub fn compute(
        background: &BackgroundModel<T>,
        eta0: T,
        eta: T,
        n_max: u64,
        options: &PropagatorOptions<T>,
    ) -> Result<Self> {
        Self::compute_range(background, eta0, eta, 0, n_max, options)
    }

    pub fn compute_range(
        background: &BackgroundModel<T>,
        eta0: T,
        eta: T,
        n_min: u64,
        n_max: u64,
        options: &PropagatorOptions<T>,
    ) -> Result<Self> {
        let matrices = (n_min..=n_max)
            .into_par_iter()
            .map(|n| bogoliubov_matrix_with(background, ModeIndex(n), eta0, eta, options))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { eta0, eta, tolerance: options.tolerance, matrices })
    }

    pub fn delta_eta(&self) -> T {
        self.eta - self.eta0
    }

    /// Largest unitarity defect over the sweep.
    pub fn max_unitarity_defect(&self) -> T {
        self.matrices.iter().fold(T::zero(), |acc, b| acc.max(b.unitarity_defect()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_structure::{family_library, FamilyKind, StructureFamily};
    use crate::mode_dynamics::closed_form_constant;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    /// Independent constant-background route: closed-form Φ between closed-form C's.
    fn closed_form_b(n: u64, mu: f64, dt: f64) -> Mat2<f64> {
        let cm = crate::complex_structure::ReferenceMap::from_coupling(ModeIndex(n), mu, 0.0).as_mat2();
        cm * closed_form_constant(ModeIndex(n), mu, dt) * cm
    }

    #[test]
    fn massless_matrix_is_diagonal_phase() {
        let bg = BackgroundModel::massless((0.0, 2.0)).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(6), 0.3, 1.9, 1e-11).unwrap();
        let ph = 7.5 * 1.6;
        assert!((b.alpha_f() - Complex::from_polar(1.0, -ph)).norm() < 1e-13);
        assert!((b.alpha_g() - Complex::from_polar(1.0, ph)).norm() < 1e-13);
        assert_eq!(b.beta_f(), c(0.0, 0.0));
        assert_eq!(b.beta_g(), c(0.0, 0.0));
        let diff = alpha_difference(&b);
        assert!((diff - c(0.0, 2.0 * ph.sin())).norm() < 1e-13);
        assert!(asymptote_residual(&b) < 1e-13);
    }

    #[test]
    fn equal_times_give_identity() {
        let bg = BackgroundModel::tabulate_fn(|e| 0.1 * e * e, (0.0, 2.0), 201, 1.0).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(4), 0.8, 0.8, 1e-11).unwrap();
        assert!((b.matrix - Mat2::identity()).max_abs() < 1e-15);
        assert_eq!(alpha_difference(&b).norm(), 0.0);
        assert!(leading_asymptote_residual(&bg, ModeIndex(4), 0.8, 0.8, 1e-11).unwrap() < 1e-15);
    }

    #[test]
    fn constant_background_matches_closed_form_route() {
        let bg = BackgroundModel::constant(0.0, (0.0, 2.0), 1.0).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(0), 0.0, 1.0, 1e-11).unwrap();
        assert!((b.matrix - closed_form_b(0, 1.0, 1.0)).max_abs() <= 1e-9);

        let b = bogoliubov_matrix(&bg, ModeIndex(50), 0.2, 0.5, 1e-11).unwrap();
        let exact = closed_form_b(50, 1.0, 0.3);
        let d_exact = exact.get(1, 1) - exact.get(0, 0);
        assert!((alpha_difference(&b) - d_exact).norm() <= 1e-9);
    }

    #[test]
    fn matrices_are_special_unitary() {
        let bg = BackgroundModel::tabulate_fn(|e| 0.1 * e * e, (0.0, 2.0), 201, 1.5).unwrap();
        let tol: f64 = 1e-11;
        for n in [0u64, 3, 40] {
            let b = bogoliubov_matrix(&bg, ModeIndex(n), 0.2, 1.7, tol).unwrap();
            assert!(b.unitarity_defect() <= 30.0 * tol);
            assert!((b.alpha_g() - b.alpha_f().conj()).norm() <= 30.0 * tol);
            assert!((b.beta_g() + b.beta_f().conj()).norm() <= 30.0 * tol);
            assert!((b.alpha_f().norm_sqr() + b.beta_f().norm_sqr() - 1.0).abs() <= 30.0 * tol);
            assert!(b.beta_f().norm() > 1e-6, "time-dependent background must produce particles");
        }
    }

    #[test]
    fn group_property() {
        let bg = BackgroundModel::tabulate_fn(|e| 0.1 * e * e, (0.0, 2.0), 201, 1.0).unwrap();
        let tol = 1e-11;
        let n = ModeIndex(9);
        let b20 = bogoliubov_matrix(&bg, n, 0.1, 1.9, tol).unwrap();
        let b21 = bogoliubov_matrix(&bg, n, 1.2, 1.9, tol).unwrap();
        let b10 = bogoliubov_matrix(&bg, n, 0.1, 1.2, tol).unwrap();
        assert!((b21.matrix * b10.matrix - b20.matrix).max_abs() <= 50.0 * tol);
    }

    #[test]
    fn identity_structure_leaves_dynamics_unchanged() {
        let bg = BackgroundModel::constant(0.0, (0.0, 2.0), 1.0).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(2), 0.0, 1.3, 1e-11).unwrap();
        let k = MixingMatrix::identity(ModeIndex(2));
        assert!((transformed_dynamics(&k, &b).unwrap() - b.matrix).max_abs() < 1e-15);
    }

    #[test]
    fn swap_structure_exchanges_diagonal() {
        let bg = BackgroundModel::massless((0.0, 2.0)).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(2), 0.0, 1.3, 1e-11).unwrap();
        let k = StructureFamily::new("swap", FamilyKind::Swap).generate(ModeIndex(2)).unwrap();
        let kb = transformed_dynamics(&k, &b).unwrap();
        let ph = 3.5 * 1.3;
        assert!((kb.get(0, 0) - Complex::from_polar(1.0, ph)).norm() < 1e-13);
        assert!((kb.get(1, 1) - Complex::from_polar(1.0, -ph)).norm() < 1e-13);
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let bg = BackgroundModel::massless((0.0, 2.0)).unwrap();
        let b = bogoliubov_matrix(&bg, ModeIndex(2), 0.0, 1.0, 1e-11).unwrap();
        assert!(transformed_dynamics(&MixingMatrix::identity(ModeIndex(3)), &b).is_err());
    }

    #[test]
    fn off_diagonal_entries_match_explicit_sequences() {
        let bg = BackgroundModel::constant(0.1, (0.0, 2.0), 2.0).unwrap();
        let tb = BackgroundModel::tabulate_fn(|e| 0.1 * e * e, (0.0, 2.0), 201, 2.0).unwrap();
        for seed in 0..20u64 {
            for fam in family_library::<f64>(seed).iter().filter(|f| f.name != "swap") {
                for (bgm, n) in [(&bg, seed), (&tb, 3 * seed + 1)] {
                    let b = bogoliubov_matrix(bgm, ModeIndex(n), 0.1, 1.4, 1e-11).unwrap();
                    let k = fam.generate(ModeIndex(n)).unwrap();
                    let kb = transformed_dynamics(&k, &b).unwrap();
                    let (s1, s2) = off_diagonal_sequences(&k, &b);
                    let lhs1 = kb.get(0, 1) * k.kappa_f / k.kappa_g.conj();
                    let lhs2 = kb.get(1, 0) * k.kappa_g / k.kappa_f.conj();
                    assert!((lhs1 - s1).norm() <= 1e-10, "{} seed {seed}", fam.name);
                    assert!((lhs2 - s2).norm() <= 1e-10, "{} seed {seed}", fam.name);
                    assert!(kb.unitarity_defect() <= 1e-9);
                }
            }
        }
    }

    #[test]
    fn sweep_is_ordered_and_unitary() {
        let bg = BackgroundModel::tabulate_fn(|e| 0.1 * e * e, (0.0, 2.0), 201, 1.0).unwrap();
        let sweep = BogoliubovSweep::compute(&bg, 0.0, 1.0, 30, &PropagatorOptions::new(1e-11)).unwrap();
        assert_eq!(sweep.matrices.len(), 31);
        assert!(sweep.matrices.iter().enumerate().all(|(i, b)| b.mode.0 == i as u64));
        assert!(sweep.max_unitarity_defect() <= 30.0 * 1e-11);
    }
}
