//! Lower bounds for ∫ sin²(ωT + θ(T)) dT over a finite interval, with
//! θ(T) = ω⁻¹∫₀ᵀ C(s) ds, and the checks built on them.
//!
//! For 0 < D < 1 and ω_{n₀}² > max|C|/(2D),
//!
//! ```text
//! Λ_{n₀} = L/2 − 1/(2ω_{n₀}(1−D)) − ∫|C′| / (4ω_{n₀}³(1−D)²)
//! ```
//!
//! bounds the integral from below for every ω ≥ ω_{n₀}. Removing a set of
//! measure below δ costs at most δ, which gives
//! ∑_{n₀}^M gₙ|κᶠₙ|²|λᶠₙ|² ≤ I_δ / (Λ_{n₀} − δ).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::complex_structure::{weight, StructureFamily};
use crate::error::{Error, Result};
use crate::num::Real;
use crate::quadrature::{integrate, kronrod15, QuadratureOptions};
use crate::spectrum::{omega, ModeIndex};

/// Relative accuracy requested from every quadrature in this module.
pub const QUADRATURE_REL_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ProfileKind<T> {
    Zero,
    Constant { value: T },
    /// A sin(f T + φ).
    Sinusoid { amplitude: T, frequency: T, phase: T },
    /// ∑ cₖ Tᵏ.
    Polynomial { coefficients: Vec<T> },
}

/// C(T) on [start, start + length].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct PhaseProfile<T> {
    pub kind: ProfileKind<T>,
    pub start: T,
    pub length: T,
}

impl<T: Real> PhaseProfile<T> {
    pub fn new(kind: ProfileKind<T>, start: T, length: T) -> Result<Self> {
        let p = Self { kind, start, length };
        p.validate()?;
        Ok(p)
    }

    pub fn zero(length: T) -> Result<Self> {
        Self::new(ProfileKind::Zero, T::zero(), length)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.length.is_finite() && self.length > T::zero() && self.start.is_finite()) {
            return Err(Error::Precondition(format!(
                "profile interval [{}, {} + {}] must be finite with positive length",
                self.start, self.start, self.length
            )));
        }
        let finite = match &self.kind {
            ProfileKind::Zero => true,
            ProfileKind::Constant { value } => value.is_finite(),
            ProfileKind::Sinusoid { amplitude, frequency, phase } => {
                amplitude.is_finite() && frequency.is_finite() && phase.is_finite()
            }
            ProfileKind::Polynomial { coefficients } => coefficients.iter().all(|c| c.is_finite()),
        };
        if finite {
            Ok(())
        } else {
            Err(Error::Precondition("profile coefficients must be finite".into()))
        }
    }

    pub fn interval(&self) -> (T, T) {
        (self.start, self.start + self.length)
    }

    pub fn c(&self, t: T) -> T {
        match &self.kind {
            ProfileKind::Zero => T::zero(),
            ProfileKind::Constant { value } => *value,
            ProfileKind::Sinusoid { amplitude, frequency, phase } => *amplitude * (*frequency * t + *phase).sin(),
            ProfileKind::Polynomial { coefficients } => coefficients.iter().rev().fold(T::zero(), |acc, &c| acc * t + c),
        }
    }

    pub fn c_derivative(&self, t: T) -> T {
        match &self.kind {
            ProfileKind::Zero | ProfileKind::Constant { .. } => T::zero(),
            ProfileKind::Sinusoid { amplitude, frequency, phase } => {
                *amplitude * *frequency * (*frequency * t + *phase).cos()
            }
            ProfileKind::Polynomial { coefficients } => coefficients
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(T::zero(), |acc, (k, &c)| acc * t + c * T::from_usize(k).unwrap()),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, ProfileKind::Zero)
    }

    /// max |C| on a uniform grid of 10 001 points.
    pub fn max_abs_c(&self) -> T {
        let (a, _) = self.interval();
        let k = 10_000;
        (0..=k).map(|i| self.c(a + self.length * T::lit(i as f64 / k as f64)).abs()).fold(T::zero(), T::max)
    }

    /// ∫ |C′| over the interval.
    pub fn total_variation(&self) -> Result<T> {
        if matches!(self.kind, ProfileKind::Zero | ProfileKind::Constant { .. }) {
            return Ok(T::zero());
        }
        let (a, b) = self.interval();
        let opts = QuadratureOptions::default()
            .with_rel_tol(T::lit(QUADRATURE_REL_TOL))
            .with_max_panel_width(self.length / T::lit(64.0));
        Ok(integrate(|t| self.c_derivative(t).abs(), a, b, &opts)?.value)
    }
}

/// Finite union of disjoint closed intervals, sorted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct Excision<T> {
    intervals: Vec<(T, T)>,
}

impl<T: Real> Excision<T> {
    pub fn none() -> Self {
        Self { intervals: Vec::new() }
    }

    /// Sorts, drops empty pieces and merges overlaps.
    pub fn new(mut intervals: Vec<(T, T)>) -> Result<Self> {
        if intervals.iter().any(|(a, b)| !(a.is_finite() && b.is_finite()) || b < a) {
            return Err(Error::Precondition("excised intervals must be finite with lo ≤ hi".into()));
        }
        intervals.retain(|(a, b)| b > a);
        intervals.sort_by(|x, y| x.0.as_f64().total_cmp(&y.0.as_f64()));
        let mut merged: Vec<(T, T)> = Vec::with_capacity(intervals.len());
        for (a, b) in intervals {
            match merged.last_mut() {
                Some(last) if a <= last.1 => last.1 = last.1.max(b),
                _ => merged.push((a, b)),
            }
        }
        Ok(Self { intervals: merged })
    }

    pub fn intervals(&self) -> &[(T, T)] {
        &self.intervals
    }

    pub fn measure(&self) -> T {
        self.intervals.iter().map(|(a, b)| *b - *a).sum()
    }

    pub fn union(&self, other: &Self) -> Self {
        let mut all = self.intervals.clone();
        all.extend_from_slice(&other.intervals);
        Self::new(all).expect("union of valid excisions")
    }

    /// [a, b] minus the excised set.
    pub fn complement_in(&self, a: T, b: T) -> Result<Vec<(T, T)>> {
        if self.intervals.iter().any(|(lo, hi)| *lo < a || *hi > b) {
            return Err(Error::Precondition(format!("excised set exceeds the interval [{a}, {b}]")));
        }
        let mut kept = Vec::with_capacity(self.intervals.len() + 1);
        let mut cursor = a;
        for &(lo, hi) in &self.intervals {
            if lo > cursor {
                kept.push((cursor, lo));
            }
            cursor = hi;
        }
        if b > cursor {
            kept.push((cursor, b));
        }
        Ok(kept)
    }
}

/// ∫₀ᵗ C on a grid of panel boundaries, refined within a panel on demand.
struct PhaseAccumulator<'a, T> {
    profile: &'a PhaseProfile<T>,
    origin: T,
    width: T,
    cumulative: Vec<T>,
}

impl<'a, T: Real> PhaseAccumulator<'a, T> {
    fn new(profile: &'a PhaseProfile<T>, width: T) -> Result<Self> {
        let (a, b) = profile.interval();
        let panels = (profile.length / width).ceil().to_usize().unwrap_or(1).max(1);
        let width = profile.length / T::from_usize(panels).unwrap();
        let mut cumulative = Vec::with_capacity(panels + 1);
        if !profile.is_zero() {
            let opts = QuadratureOptions::default().with_rel_tol(T::lit(QUADRATURE_REL_TOL));
            let mut acc = integrate(|s| profile.c(s), T::zero(), a, &opts)?.value;
            cumulative.push(acc);
            let c = |s: T| profile.c(s);
            for k in 0..panels {
                let lo = a + width * T::from_usize(k).unwrap();
                let hi = if k + 1 == panels { b } else { lo + width };
                acc = acc + kronrod15(&c, lo, hi).0;
                cumulative.push(acc);
            }
        }
        Ok(Self { profile, origin: a, width, cumulative })
    }

    fn at(&self, t: T) -> T {
        if self.cumulative.is_empty() {
            return T::zero();
        }
        let last = self.cumulative.len() - 2;
        let k = ((t - self.origin) / self.width).floor().to_usize().unwrap_or(0).min(last);
        let left = self.origin + self.width * T::from_usize(k).unwrap();
        self.cumulative[k] + kronrod15(&|s| self.profile.c(s), left, t).0
    }
}

/// ∫ sin²(ωT + ω⁻¹∫₀ᵀ C) dT over the profile interval minus `excised`.
pub fn sin2_integral<T: Real>(omega: T, profile: &PhaseProfile<T>, excised: Option<&Excision<T>>) -> Result<T> {
    if !(omega > T::zero() && omega.is_finite()) {
        return Err(Error::Precondition(format!("omega = {omega} must be positive")));
    }
    let (a, b) = profile.interval();
    let kept = match excised {
        Some(e) => e.complement_in(a, b)?,
        None => vec![(a, b)],
    };
    let width = (T::PI() / (T::lit(4.0) * omega)).min(profile.length);
    let phase = PhaseAccumulator::new(profile, width)?;
    let opts = QuadratureOptions::default().with_rel_tol(T::lit(QUADRATURE_REL_TOL)).with_max_panel_width(width);
    let f = |t: T| {
        let s = (omega * t + phase.at(t) / omega).sin();
        s * s
    };
    let mut total = T::zero();
    for (lo, hi) in kept {
        total = total + integrate(f, lo, hi, &opts)?.value;
    }
    Ok(total)
}

fn check_d<T: Real>(d: T) -> Result<()> {
    if d > T::zero() && d < T::one() {
        Ok(())
    } else {
        Err(Error::Precondition(format!("D = {d} must lie in (0, 1)")))
    }
}

/// Λ_{n₀} for one profile.
pub fn lower_bound<T: Real>(profile: &PhaseProfile<T>, d: T, n0: u64) -> Result<T> {
    check_d(d)?;
    profile.validate()?;
    let w: T = omega(ModeIndex(n0));
    let limit = profile.max_abs_c() / (T::lit(2.0) * d);
    if w * w <= limit {
        return Err(Error::Precondition(format!("omega_n0^2 = {} <= max|C|/(2D) = {}", w * w, limit)));
    }
    let one_minus = T::one() - d;
    let two = T::lit(2.0);
    let lambda = profile.length / two
        - T::one() / (two * w * one_minus)
        - profile.total_variation()? / (T::lit(4.0) * w * w * w * one_minus * one_minus);
    if lambda <= T::zero() {
        return Err(Error::Precondition(format!("Lambda_n0 = {lambda} is not positive for n0 = {n0}")));
    }
    Ok(lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BoundParameters<T> {
    pub d: T,
    pub n0: u64,
    pub lambda_n0: T,
    pub delta: T,
}

impl<T: Real> BoundParameters<T> {
    pub fn new(profile: &PhaseProfile<T>, d: T, n0: u64, delta: T) -> Result<Self> {
        let lambda_n0 = lower_bound(profile, d, n0)?;
        if !(delta > T::zero() && delta < lambda_n0) {
            return Err(Error::Precondition(format!("delta = {delta} must lie in (0, Lambda_n0 = {lambda_n0})")));
        }
        Ok(Self { d, n0, lambda_n0, delta })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct AdversarialExcision<T> {
    pub kind: String,
    pub set: Excision<T>,
}

fn comb<T: Real>(centres: impl Iterator<Item = T>, half: T, a: T, b: T) -> Excision<T> {
    Excision::new(centres.map(|c| ((c - half).max(a), (c + half).min(b))).filter(|(lo, hi)| hi > lo).collect())
        .expect("comb pieces are ordered")
}

/// Centres ωT = offset + kπ inside [a, b].
fn aligned<T: Real>(omega: T, offset: T, a: T, b: T) -> Vec<T> {
    let first = ((omega * a - offset) / T::PI()).ceil();
    let mut out = Vec::new();
    let mut k = first;
    loop {
        let t = (offset + k * T::PI()) / omega;
        if t > b {
            break;
        }
        out.push(t);
        k = k + T::one();
    }
    out
}

/// `count` sets of measure below δ for one ω: endpoint blocks, a centred
/// block, combs on the peaks and on the zeros of sin²(ωT), then random unions.
pub fn adversarial_excisions<T: Real>(
    profile: &PhaseProfile<T>,
    omega: T,
    delta: T,
    count: usize,
    seed: u64,
) -> Vec<AdversarialExcision<T>> {
    let (a, b) = profile.interval();
    let m = delta.min(profile.length) * T::lit(0.999);
    let half = T::lit(0.5);
    let mid = a + profile.length * half;
    let block = |lo: T, hi: T| Excision::new(vec![(lo.max(a), hi.min(b))]).expect("block");
    let mut out = vec![
        AdversarialExcision { kind: "left-endpoint".into(), set: block(a, a + m) },
        AdversarialExcision { kind: "right-endpoint".into(), set: block(b - m, b) },
        AdversarialExcision {
            kind: "both-endpoints".into(),
            set: block(a, a + m * half).union(&block(b - m * half, b)),
        },
        AdversarialExcision { kind: "centre".into(), set: block(mid - m * half, mid + m * half) },
    ];
    for (kind, offset) in [("peak-comb", T::FRAC_PI_2()), ("zero-comb", T::zero())] {
        let centres = aligned(omega, offset, a, b);
        if !centres.is_empty() {
            let piece = m / T::from_usize(centres.len()).unwrap();
            out.push(AdversarialExcision { kind: kind.into(), set: comb(centres.into_iter(), piece * half, a, b) });
        }
    }
    out.truncate(count);

    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ omega.as_f64().to_bits());
    while out.len() < count {
        let pieces = rng.gen_range(1..=12usize);
        let total = m * T::lit(rng.gen_range(0.2..1.0));
        let widths: Vec<f64> = (0..pieces).map(|_| rng.gen_range(0.05..1.0)).collect();
        let gaps: Vec<f64> = (0..=pieces).map(|_| rng.gen_range(0.0..1.0)).collect();
        let (ws, gs) = (widths.iter().sum::<f64>(), gaps.iter().sum::<f64>());
        let free = profile.length - total;
        let mut cursor = a;
        let mut set = Vec::with_capacity(pieces);
        for i in 0..pieces {
            cursor = cursor + free * T::lit(gaps[i] / gs);
            let w = total * T::lit(widths[i] / ws);
            set.push((cursor, (cursor + w).min(b)));
            cursor = cursor + w;
        }
        out.push(AdversarialExcision { kind: "random-union".into(), set: Excision::new(set).expect("ordered pieces") });
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct OmegaCheck<T> {
    pub omega: T,
    pub full_integral: T,
    pub min_excised_integral: T,
    /// min over excisions of (excised integral − (Λ_{n₀} − δ)).
    pub min_margin: T,
    pub worst_kind: String,
    pub excisions: usize,
    /// Whether every excised integral stayed at or below the full one.
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct BoundVerification<T> {
    pub parameters: BoundParameters<T>,
    pub checks: Vec<OmegaCheck<T>>,
    /// min over ω of (full integral − Λ_{n₀}).
    pub worst_full_margin: T,
    /// min over ω and excisions of (excised integral − (Λ_{n₀} − δ)).
    pub worst_margin: T,
    pub passed: bool,
}

/// Checks ∫ sin² ≥ Λ_{n₀} and ∫_{excised} sin² ≥ Λ_{n₀} − δ on the adversarial library.
pub fn verify_bound_chain<T: Real>(
    profile: &PhaseProfile<T>,
    d: T,
    n0: u64,
    delta: T,
    omegas: &[T],
    excisions_per_omega: usize,
    seed: u64,
) -> Result<BoundVerification<T>> {
    let parameters = BoundParameters::new(profile, d, n0, delta)?;
    let w0: T = omega(ModeIndex(n0));
    if let Some(w) = omegas.iter().find(|w| **w < w0) {
        return Err(Error::Precondition(format!("omega = {w} is below omega_n0 = {w0}")));
    }
    let floor = parameters.lambda_n0 - delta;
    let slack = T::lit(1e-9);
    let checks = omegas
        .par_iter()
        .map(|&w| {
            let full = sin2_integral(w, profile, None)?;
            let mut check = OmegaCheck {
                omega: w,
                full_integral: full,
                min_excised_integral: full,
                min_margin: T::infinity(),
                worst_kind: String::new(),
                excisions: 0,
                monotone: true,
            };
            for ex in adversarial_excisions(profile, w, delta, excisions_per_omega, seed) {
                debug_assert!(ex.set.measure() < delta);
                let v = sin2_integral(w, profile, Some(&ex.set))?;
                check.excisions += 1;
                check.monotone &= v <= full + slack;
                check.min_excised_integral = check.min_excised_integral.min(v);
                if v - floor < check.min_margin {
                    check.min_margin = v - floor;
                    check.worst_kind = ex.kind;
                }
            }
            Ok(check)
        })
        .collect::<Result<Vec<_>>>()?;
    let worst_full_margin = checks.iter().map(|c| c.full_integral - parameters.lambda_n0).fold(T::infinity(), T::min);
    let worst_margin = checks.iter().map(|c| c.min_margin).fold(T::infinity(), T::min);
    let passed = worst_full_margin >= T::zero() && worst_margin >= T::zero() && checks.iter().all(|c| c.monotone);
    Ok(BoundVerification { parameters, checks, worst_full_margin, worst_margin, passed })
}

/// I_δ / (Λ_{n₀} − δ), failing with the first M whose partial sum exceeds it.
pub fn bounded_sum_conclusion<T: Real>(partial_sums: &[(u64, T)], i_delta: T, lambda_n0: T, delta: T) -> Result<T> {
    if !(lambda_n0 > delta) {
        return Err(Error::Precondition(format!("Lambda_n0 = {lambda_n0} must exceed delta = {delta}")));
    }
    let bound = i_delta / (lambda_n0 - delta);
    if let Some(&(m, s)) = partial_sums.iter().find(|(_, s)| *s > bound) {
        return Err(Error::BoundViolation { m, partial: s.as_f64(), bound: bound.as_f64() });
    }
    Ok(bound)
}

/// ∑_{n₀}^M gₙ|κᶠₙ|²|λᶠₙ|² for M = n₀..=m_max.
pub fn family_partial_sums<T: Real>(family: &StructureFamily<T>, n0: u64, m_max: u64) -> Result<Vec<(u64, T)>> {
    let mut acc = T::zero();
    (n0..=m_max)
        .map(|n| {
            let k = family.generate(ModeIndex(n))?;
            acc = acc + weight::<T>(ModeIndex(n)) * (k.kappa_f * k.lambda_f).norm_sqr();
            Ok((n, acc))
        })
        .collect()
}

/// I_δ = ∑_{n₀}^{m_max} gₙ|κᶠₙλᶠₙ|² ∫_{interval \ excised} sin²(ωₙT + θₙ(T)) dT.
pub fn family_i_delta<T: Real>(
    family: &StructureFamily<T>,
    profile: &PhaseProfile<T>,
    n0: u64,
    m_max: u64,
    excised: &Excision<T>,
) -> Result<T> {
    let terms = (n0..=m_max)
        .into_par_iter()
        .map(|n| {
            let k = family.generate(ModeIndex(n))?;
            let w = weight::<T>(ModeIndex(n)) * (k.kappa_f * k.lambda_f).norm_sqr();
            if w == T::zero() {
                return Ok(T::zero());
            }
            Ok(w * sin2_integral(omega(ModeIndex(n)), profile, Some(excised))?)
        })
        .collect::<Result<Vec<T>>>()?;
    Ok(terms.into_iter().sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex_structure::{family_library, FamilyKind};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn zero() -> PhaseProfile<f64> {
        PhaseProfile::zero(1.0).unwrap()
    }

    fn sine_profile() -> PhaseProfile<f64> {
        PhaseProfile::new(ProfileKind::Sinusoid { amplitude: 1.0, frequency: 1.0, phase: 0.0 }, 0.0, 2.0).unwrap()
    }

    #[test]
    fn zero_profile_bound_value() {
        let l = lower_bound(&zero(), 0.5, 10).unwrap();
        assert!((l - (0.5 - 1.0 / 11.5)).abs() < 1e-15);
        assert!((l - 0.413_043_478_260_869_6).abs() < 1e-12);
    }

    #[test]
    fn bound_increases_towards_half_length() {
        let p = sine_profile();
        let values: Vec<f64> = [10u64, 20, 40, 80, 160, 100_000].iter().map(|&n| lower_bound(&p, 0.5, n).unwrap()).collect();
        assert!(values.windows(2).all(|w| w[1] > w[0]));
        assert!((values[5] - 1.0).abs() < 1e-4);
        assert!((lower_bound(&zero(), 0.5, 1_000_000).unwrap() - 0.5).abs() < 1e-5);
    }

    #[test]
    fn sinusoid_bound_against_exact_variation() {
        let p = sine_profile();
        let tv = 2.0 - 2f64.sin();
        assert!((p.total_variation().unwrap() - tv).abs() <= 1e-8 * tv);
        let w = 21.5;
        let expected = 1.0 - 1.0 / (2.0 * w * 0.5) - tv / (4.0 * w * w * w * 0.25);
        assert!((lower_bound(&p, 0.5, 20).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn precondition_messages_name_the_quantity() {
        let big = PhaseProfile::new(ProfileKind::Constant { value: 1000.0 }, 0.0, 1.0).unwrap();
        let msg = lower_bound(&big, 0.5, 1).unwrap_err().to_string();
        assert!(msg.contains("omega_n0^2") && msg.contains("max|C|/(2D)"), "{msg}");
        assert!(lower_bound(&zero(), 1.0, 10).unwrap_err().to_string().contains("D = 1"));
        assert!(lower_bound(&zero(), 0.5, 0).is_err()); // Λ = 0.5 − 1/1.5 < 0
        assert!(sin2_integral(0.0, &zero(), None).is_err());
    }

    #[test]
    fn sin2_examples() {
        assert!((sin2_integral(2.0 * PI, &zero(), None).unwrap() - 0.5).abs() < 1e-14);
        assert!((sin2_integral(PI, &zero(), None).unwrap() - 0.5).abs() < 1e-14);
        let full = sin2_integral(2.0 * PI, &zero(), None).unwrap();
        let ex = Excision::new(vec![(0.4, 0.45)]).unwrap();
        let cut = sin2_integral(2.0 * PI, &zero(), Some(&ex)).unwrap();
        assert!((0.45..=0.5).contains(&cut) && cut >= full - 0.05);
        let exact_removed = 0.025 - ((4.0 * PI * 0.45).sin() - (4.0 * PI * 0.4).sin()) / (8.0 * PI);
        assert!((full - cut - exact_removed).abs() < 1e-12);
        let outside = Excision::new(vec![(0.9, 1.2)]).unwrap();
        assert!(sin2_integral(2.0 * PI, &zero(), Some(&outside)).is_err());
    }

    #[test]
    fn unexcised_zero_profile_matches_antiderivative() {
        for w in [11.5f64, 33.5, 101.5, 500.5] {
            let v = sin2_integral(w, &zero(), None).unwrap();
            let exact = 0.5 - (2.0 * w).sin() / (4.0 * w);
            assert!((v - exact).abs() < 1e-12);
            assert!((v - 0.5).abs() <= 1.0 / (2.0 * w));
        }
    }

    #[test]
    fn nonzero_profile_phase_matches_closed_form() {
        // C = c constant: phase ωT + cT/ω, integral known in closed form.
        let c = 3.0;
        let p = PhaseProfile::new(ProfileKind::Constant { value: c }, 0.5, 1.5).unwrap();
        let w = 12.5;
        let k = w + c / w;
        let anti = |t: f64| t / 2.0 - (2.0 * k * t).sin() / (4.0 * k);
        assert!((sin2_integral(w, &p, None).unwrap() - (anti(2.0) - anti(0.5))).abs() < 1e-11);
        let poly = PhaseProfile::new(ProfileKind::Polynomial { coefficients: vec![0.0, 0.0, 3.0] }, 0.0, 1.0).unwrap();
        // θ = T³/ω
        let brute = integrate(
            |t: f64| (w * t + t.powi(3) / w).sin().powi(2),
            0.0,
            1.0,
            &QuadratureOptions::default().with_rel_tol(1e-13).with_max_panel_width(0.01),
        )
        .unwrap()
        .value;
        assert!((sin2_integral(w, &poly, None).unwrap() - brute).abs() < 1e-11);
        assert!((poly.c_derivative(2.0) - 12.0).abs() < 1e-15);
    }

    #[test]
    fn bound_chain_passes_for_zero_profile() {
        let omegas: Vec<f64> = (10..=20).map(|n| n as f64 + 1.5).collect();
        let v = verify_bound_chain(&zero(), 0.5, 10, 0.2, &omegas, 40, 3).unwrap();
        assert!(v.passed);
        assert!(v.worst_margin >= 0.0);
        assert!(v.checks.iter().all(|c| c.excisions == 40 && c.monotone));
        assert!(verify_bound_chain(&zero(), 0.5, 10, 0.45, &omegas, 10, 3).is_err());
        assert!(verify_bound_chain(&zero(), 0.5, 10, 0.2, &[5.0], 10, 3).is_err());
    }

    #[test]
    fn whole_periods_reach_half_length() {
        let p = PhaseProfile::zero(2.0 * PI / 11.5 * 6.0).unwrap();
        let v = sin2_integral(11.5, &p, None).unwrap();
        assert!((v - p.length / 2.0).abs() < 1e-13);
    }

    #[test]
    fn excisions_respect_budget() {
        for w in [11.5, 27.5, 51.5] {
            let sets = adversarial_excisions(&zero(), w, 0.2, 100, 9);
            assert_eq!(sets.len(), 100);
            for s in &sets {
                let m = s.set.measure();
                assert!(m > 0.0 && m < 0.2, "{} {m}", s.kind);
                assert!(s.set.complement_in(0.0, 1.0).is_ok());
            }
            assert!(sets.iter().any(|s| s.kind == "peak-comb") && sets.iter().any(|s| s.kind == "zero-comb"));
        }
    }

    #[test]
    fn bounded_sum_for_p2_family() {
        let fam = family_library::<f64>(1).into_iter().find(|f| f.name == "power-decay-p2").unwrap();
        let (n0, delta) = (10u64, 0.1);
        let profile = zero();
        let lambda = lower_bound(&profile, 0.5, n0).unwrap();
        let ex = adversarial_excisions(&profile, 11.5, delta, 6, 0).into_iter().find(|e| e.kind == "peak-comb").unwrap();
        let i_delta = family_i_delta(&fam, &profile, n0, 500, &ex.set).unwrap();
        let sums = family_partial_sums(&fam, n0, 500).unwrap();
        let bound = bounded_sum_conclusion(&sums, i_delta, lambda, delta).unwrap();
        assert!(sums.last().unwrap().1 <= bound);
    }

    #[test]
    fn zero_family_bound_is_trivial() {
        let fam = StructureFamily::<f64>::new("identity", FamilyKind::Identity);
        let i = family_i_delta(&fam, &zero(), 10, 100, &Excision::none()).unwrap();
        let sums = family_partial_sums(&fam, 10, 100).unwrap();
        assert_eq!(bounded_sum_conclusion(&sums, i, 0.41, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn synthetic_violation_fires_early() {
        // λ = 1 on every mode with a made-up finite I_δ.
        let mut acc = 0.0;
        let sums: Vec<(u64, f64)> = (10..=500u64)
            .map(|n| {
                acc += weight::<f64>(ModeIndex(n));
                (n, acc)
            })
            .collect();
        match bounded_sum_conclusion(&sums, 1.0, 0.413, 0.1) {
            Err(Error::BoundViolation { m, .. }) => assert_eq!(m, 10),
            other => panic!("expected violation, got {other:?}"),
        }
        assert!(bounded_sum_conclusion(&sums, 1.0, 0.1, 0.1).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn enlarging_excision_never_increases_integral(
            w in 11.5f64..80.0, lo in 0.0f64..0.8, len in 0.0f64..0.1, lo2 in 0.0f64..0.9, len2 in 0.0f64..0.1,
        ) {
            let small = Excision::new(vec![(lo, lo + len)]).unwrap();
            let large = small.union(&Excision::new(vec![(lo2, lo2 + len2)]).unwrap());
            let p = sine_profile();
            let a = sin2_integral(w, &p, Some(&small)).unwrap();
            let b = sin2_integral(w, &p, Some(&large)).unwrap();
            prop_assert!(b <= a + 1e-12);
        }

        #[test]
        fn excised_integral_stays_above_bound_minus_delta(n in 10u64..60, seed in 0u64..1000) {
            let w = n as f64 + 1.5;
            let p = sine_profile();
            let lambda = lower_bound(&p, 0.5, 10).unwrap();
            for ex in adversarial_excisions(&p, w, 0.2, 10, seed) {
                let v = sin2_integral(w, &p, Some(&ex.set)).unwrap();
                prop_assert!(v >= lambda - 0.2 - 1e-7, "{} {}", ex.kind, v);
            }
        }
    }
}
