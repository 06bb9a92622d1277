//! Reference annihilation/creation variables and families of invariant
//! alternative structures.
//!
//! The reference map takes (x, ȳ) to (a, b†):
//! a = f₁ x + f₂ ȳ, b† = f₂ x − f₁ ȳ. An invariant alternative structure is
//! a constant unitary K_n acting on (a, b†).

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::mode_dynamics::ModeState;
use crate::num::Real;
use crate::spectrum::{degeneracy, omega, pairing_coefficients, ModeIndex};

/// C_n(η) = [[f₁, f₂], [f₂, −f₁]]: real, symmetric, orthogonal, C² = I, det C = −1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ReferenceMap<T> {
    pub matrix: [[T; 2]; 2],
    pub mode: ModeIndex,
    pub time: T,
}

impl<T: Real> ReferenceMap<T> {
    /// Reference map for coupling μ = m e^α.
    pub fn from_coupling(n: ModeIndex, mu: T, time: T) -> Self {
        let (_, f1, f2) = pairing_coefficients(omega(n), mu);
        Self { matrix: [[f1, f2], [f2, -f1]], mode: n, time }
    }

    pub fn f1(&self) -> T {
        self.matrix[0][0]
    }

    pub fn f2(&self) -> T {
        self.matrix[0][1]
    }

    pub fn as_mat2(&self) -> Mat2<T> {
        Mat2::from_real(self.matrix)
    }

    /// (a, b†) of a mode state.
    pub fn apply(&self, state: &ModeState<T>) -> [Complex<T>; 2] {
        self.as_mat2().apply([state.x, state.ybar])
    }
}

/// C_n(η) for the given background.
pub fn reference_map<T: Real>(n: ModeIndex, background: &BackgroundModel<T>, eta: T) -> Result<ReferenceMap<T>> {
    Ok(ReferenceMap::from_coupling(n, background.effective_mass(eta)?, eta))
}

/// K_n = [[κᶠ, λᶠ], [λᵍ, κᵍ]].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MixingMatrix<T> {
    pub kappa_f: Complex<T>,
    pub lambda_f: Complex<T>,
    pub lambda_g: Complex<T>,
    pub kappa_g: Complex<T>,
    pub mode: ModeIndex,
}

impl<T: Real> MixingMatrix<T> {
    pub fn identity(mode: ModeIndex) -> Self {
        let (o, z) = (Complex::new(T::one(), T::zero()), Complex::new(T::zero(), T::zero()));
        Self { kappa_f: o, lambda_f: z, lambda_g: z, kappa_g: o, mode }
    }

    pub fn as_mat2(&self) -> Mat2<T> {
        Mat2::new(self.kappa_f, self.lambda_f, self.lambda_g, self.kappa_g)
    }

    /// Largest violation among |κᶠ|²+|λᶠ|² = 1, |κᵍ|²+|λᵍ|² = 1, κᶠλ̄ᵍ + λᶠκ̄ᵍ = 0.
    pub fn unitarity_relations_defect(&self) -> T {
        let r1 = (self.kappa_f.norm_sqr() + self.lambda_f.norm_sqr() - T::one()).abs();
        let r2 = (self.kappa_g.norm_sqr() + self.lambda_g.norm_sqr() - T::one()).abs();
        let r3 = (self.kappa_f * self.lambda_g.conj() + self.lambda_f * self.kappa_g.conj()).norm();
        r1.max(r2).max(r3)
    }

    pub fn min_kappa(&self) -> T {
        self.kappa_f.norm().min(self.kappa_g.norm())
    }
}

/// Explicit per-mode entries for the `Listed` family kind.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ListedEntry<T> {
    pub kappa_f: Complex<T>,
    pub lambda_f: Complex<T>,
    pub lambda_g: Complex<T>,
    pub kappa_g: Complex<T>,
}

/// Closed-form rules in n generating K_n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub enum FamilyKind<T> {
    Identity,
    /// K_n = diag(e^{i(rate_f·n + offset_f)}, e^{i(rate_g·n + offset_g)}).
    DiagonalPhase { rate_f: T, offset_f: T, rate_g: T, offset_g: T },
    /// K_n = [[cos θ, sin θ], [−sin θ, cos θ]] for every n.
    ConstantMixing { angle: T },
    /// λᶠ = λᵍ = c(n+1)^{−p}, κᶠ = sqrt(1 − λ²), κᵍ = −κᶠ.
    PowerDecay { amplitude: T, exponent: T },
    /// Particle/antiparticle interchange on every mode.
    Swap,
    /// |λ| fixed, seeded random phases per mode.
    RandomizedPhase { modulus: T, seed: u64 },
    /// Literal per-mode entries starting at mode 0.
    Listed(Vec<ListedEntry<T>>),
}

/// A rule for K_n, n ∈ ℕ, together with its declared particle–antiparticle
/// convention: min(|κᶠₙ|, |κᵍₙ|) ≥ `convention_floor` for every n ≥ `n_cut`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct StructureFamily<T> {
    pub name: String,
    pub kind: FamilyKind<T>,
    pub convention_floor: T,
    pub n_cut: u64,
}

/// Default floor declared by the shipped families.
pub const DEFAULT_CONVENTION_FLOOR: f64 = 0.5;

impl<T: Real> StructureFamily<T> {
    pub fn new(name: impl Into<String>, kind: FamilyKind<T>) -> Self {
        Self { name: name.into(), kind, convention_floor: T::lit(DEFAULT_CONVENTION_FLOOR), n_cut: 0 }
    }

    pub fn with_convention(mut self, floor: T, n_cut: u64) -> Self {
        self.convention_floor = floor;
        self.n_cut = n_cut;
        self
    }

    fn invalid(&self, reason: impl Into<String>) -> Error {
        Error::InvalidFamily { family: self.name.clone(), reason: reason.into() }
    }

    /// Parameter validation against the smallest mode that will be generated.
    pub fn validate(&self, n_min: u64) -> Result<()> {
        if !(self.convention_floor > T::zero() && self.convention_floor <= T::one()) {
            return Err(self.invalid(format!("convention_floor must lie in (0, 1], got {}", self.convention_floor)));
        }
        match &self.kind {
            FamilyKind::PowerDecay { amplitude, exponent } => {
                if !(amplitude.is_finite() && exponent.is_finite()) || *amplitude < T::zero() {
                    return Err(self.invalid("power-decay amplitude must be finite and >= 0"));
                }
                let lead = *amplitude * (T::from_u64_lossy(n_min) + T::one()).powf(-*exponent);
                if lead > T::one() {
                    return Err(self.invalid(format!("c (n_min + 1)^-p = {lead} exceeds 1")));
                }
            }
            FamilyKind::RandomizedPhase { modulus, .. } => {
                if !(*modulus >= T::zero() && *modulus <= T::one()) {
                    return Err(self.invalid(format!("|lambda| must lie in [0, 1], got {modulus}")));
                }
            }
            FamilyKind::ConstantMixing { angle } | FamilyKind::DiagonalPhase { rate_f: angle, .. } => {
                if !angle.is_finite() {
                    return Err(self.invalid("parameters must be finite"));
                }
            }
            FamilyKind::Listed(entries) => {
                let tol = T::lit(1e-12);
                for (i, e) in entries.iter().enumerate() {
                    let k = MixingMatrix {
                        kappa_f: e.kappa_f,
                        lambda_f: e.lambda_f,
                        lambda_g: e.lambda_g,
                        kappa_g: e.kappa_g,
                        mode: ModeIndex(i as u64),
                    };
                    if !(k.unitarity_relations_defect() <= tol) {
                        return Err(self.invalid(format!("listed entry {i} is not unitary")));
                    }
                }
            }
            FamilyKind::Identity | FamilyKind::Swap => {}
        }
        Ok(())
    }

    /// K_n; deterministic (randomized kinds derive their stream from (seed, n)).
    pub fn generate(&self, n: ModeIndex) -> Result<MixingMatrix<T>> {
        let re = |x: T| Complex::new(x, T::zero());
        let zero = re(T::zero());
        let k = match &self.kind {
            FamilyKind::Identity => MixingMatrix::identity(n),
            FamilyKind::DiagonalPhase { rate_f, offset_f, rate_g, offset_g } => {
                let nn = T::from_u64_lossy(n.0);
                MixingMatrix {
                    kappa_f: Complex::from_polar(T::one(), *rate_f * nn + *offset_f),
                    lambda_f: zero,
                    lambda_g: zero,
                    kappa_g: Complex::from_polar(T::one(), *rate_g * nn + *offset_g),
                    mode: n,
                }
            }
            FamilyKind::ConstantMixing { angle } => {
                let (s, c) = angle.sin_cos();
                MixingMatrix { kappa_f: re(c), lambda_f: re(s), lambda_g: re(-s), kappa_g: re(c), mode: n }
            }
            FamilyKind::PowerDecay { amplitude, exponent } => {
                let lambda = *amplitude * (T::from_u64_lossy(n.0) + T::one()).powf(-*exponent);
                if lambda > T::one() {
                    return Err(self.invalid(format!("lambda = {lambda} exceeds 1 at n = {}", n.0)));
                }
                let kappa = (T::one() - lambda * lambda).sqrt();
                MixingMatrix { kappa_f: re(kappa), lambda_f: re(lambda), lambda_g: re(lambda), kappa_g: re(-kappa), mode: n }
            }
            FamilyKind::Swap => {
                MixingMatrix { kappa_f: zero, lambda_f: re(T::one()), lambda_g: re(T::one()), kappa_g: zero, mode: n }
            }
            FamilyKind::RandomizedPhase { modulus, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n.0.wrapping_mul(0x9E37_79B9_7F4A_7C15));
                let tau = T::lit(std::f64::consts::TAU);
                let mut phase = || T::lit(rng.gen::<f64>()) * tau;
                let (p_kappa, p_lambda, p_global) = (phase(), phase(), phase());
                let kappa_f = Complex::from_polar((T::one() - *modulus * *modulus).sqrt(), p_kappa);
                let lambda_f = Complex::from_polar(*modulus, p_lambda);
                let g = Complex::from_polar(T::one(), p_global);
                MixingMatrix { kappa_f, lambda_f, lambda_g: -lambda_f.conj() * g, kappa_g: kappa_f.conj() * g, mode: n }
            }
            FamilyKind::Listed(entries) => {
                let e = entries
                    .get(n.0 as usize)
                    .ok_or_else(|| self.invalid(format!("no listed entry for n = {}", n.0)))?;
                MixingMatrix { kappa_f: e.kappa_f, lambda_f: e.lambda_f, lambda_g: e.lambda_g, kappa_g: e.kappa_g, mode: n }
            }
        };
        Ok(k)
    }

    /// Empirical check of the declared convention on n ≤ n_max.
    pub fn check_convention(&self, n_max: u64) -> Result<ConventionReport<T>> {
        let mut minimum = T::infinity();
        let mut tail_minimum = T::infinity();
        let mut first_violation = None;
        for n in 0..=n_max {
            let k = self.generate(ModeIndex(n))?.min_kappa();
            minimum = minimum.min(k);
            if n >= self.n_cut {
                tail_minimum = tail_minimum.min(k);
                if k < self.convention_floor && first_violation.is_none() {
                    first_violation = Some(n);
                }
            }
        }
        Ok(ConventionReport {
            family: self.name.clone(),
            n_max,
            minimum,
            tail_minimum,
            floor: self.convention_floor,
            n_cut: self.n_cut,
            first_violation,
            compliant: first_violation.is_none(),
        })
    }
}

/// Outcome of [`StructureFamily::check_convention`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ConventionReport<T> {
    pub family: String,
    pub n_max: u64,
    /// min over 0 ≤ n ≤ n_max of min(|κᶠ|, |κᵍ|).
    pub minimum: T,
    /// Same minimum restricted to n_cut ≤ n ≤ n_max.
    pub tail_minimum: T,
    pub floor: T,
    pub n_cut: u64,
    pub first_violation: Option<u64>,
    pub compliant: bool,
}

/// Shipped family library used by the batch runner and the acceptance suite.
pub fn family_library<T: Real>(seed: u64) -> Vec<StructureFamily<T>> {
    vec![
        StructureFamily::new("identity", FamilyKind::Identity),
        StructureFamily::new(
            "diagonal-phase",
            FamilyKind::DiagonalPhase { rate_f: T::lit(0.37), offset_f: T::lit(0.1), rate_g: T::lit(-1.3), offset_g: T::zero() },
        ),
        StructureFamily::new("constant-mixing", FamilyKind::ConstantMixing { angle: T::lit(0.3) }),
        StructureFamily::new("power-decay-p1", FamilyKind::PowerDecay { amplitude: T::lit(0.5), exponent: T::one() }),
        StructureFamily::new("power-decay-p2", FamilyKind::PowerDecay { amplitude: T::lit(0.5), exponent: T::lit(2.0) }),
        StructureFamily::new("randomized-phase", FamilyKind::RandomizedPhase { modulus: T::lit(0.3), seed }),
        StructureFamily::new("swap", FamilyKind::Swap),
    ]
}

/// Weight gₙ as a scalar.
pub(crate) fn weight<T: Real>(n: ModeIndex) -> T {
    T::from_u64_lossy(degeneracy(n))
}
