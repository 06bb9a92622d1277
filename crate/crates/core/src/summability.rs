//! Finite-range surrogates for the square-summability conditions.
//!
//! Every condition is a series ∑ₙ sₙ with sₙ ≥ 0 already carrying the
//! degeneracy weight gₙ. [`analyze`] turns the first n_max terms into a
//! convergent / divergent / inconclusive verdict using:
//!
//! * the Cauchy metric max over checkpoint pairs (N, 2N) of (S(2N) − S(N)) / S(n_max);
//! * the tail exponent s, fitted as the slope of log sₙ against log n over
//!   the top decade of n on a block-maximum envelope (sums of oscillating
//!   terms are governed by their envelope);
//! * the doubling ratio d₃/d₁ of the last to the first checkpoint increment.
//!
//! Verdict: convergent if s < −1 − margin and the Cauchy metric is below
//! ε; otherwise divergent if s > −1 + margin or d₃/d₁ ≥ divergence_ratio;
//! otherwise inconclusive. A vanishing tail counts as s = −∞.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::bogoliubov::{alpha_difference, off_diagonal_sequences, BogoliubovMatrix, BogoliubovSweep};
use crate::complex_structure::{weight, ConventionReport, MixingMatrix, StructureFamily};
use crate::error::{Error, Result};
use crate::mode_dynamics::PropagatorOptions;
use crate::num::Real;
use crate::spectrum::ModeIndex;

pub const LABEL_DYNAMICS: &str = "dynamics-unitarity";
pub const LABEL_EQUIVALENCE: &str = "equivalence";
pub const LABEL_MIXED_F: &str = "mixed-f";
pub const LABEL_MIXED_G: &str = "mixed-g";
pub const LABEL_PRECURSOR_F: &str = "precursor-f";
pub const LABEL_PRECURSOR_G: &str = "precursor-g";
pub const LABEL_REMAINDER_F: &str = "remainder-f";
pub const LABEL_REMAINDER_G: &str = "remainder-g";
pub const LABEL_SINE_F: &str = "sine-weighted-f";
pub const LABEL_SINE_G: &str = "sine-weighted-g";

/// Multiples of the integration tolerance treated as numerical zero in |β|.
pub const BETA_NOISE_FACTOR: f64 = 30.0;

/// Ordered summands (n, sₙ) of one series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct WeightedSequence<T> {
    label: String,
    terms: Vec<(u64, T)>,
}

impl<T: Real> WeightedSequence<T> {
    pub fn new(label: impl Into<String>, terms: Vec<(u64, T)>) -> Result<Self> {
        let label = label.into();
        for (i, &(n, v)) in terms.iter().enumerate() {
            if !(v.is_finite() && v >= T::zero()) {
                return Err(Error::InvalidSequence { label, reason: format!("term at n = {n} is {v}") });
            }
            if i > 0 && terms[i - 1].0 >= n {
                return Err(Error::InvalidSequence { label, reason: format!("n not strictly increasing at n = {n}") });
            }
        }
        Ok(Self { label, terms })
    }

    pub fn from_fn(label: impl Into<String>, range: std::ops::RangeInclusive<u64>, f: impl Fn(u64) -> T) -> Result<Self> {
        Self::new(label, range.map(|n| (n, f(n))).collect())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn terms(&self) -> &[(u64, T)] {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// S(N) = ∑_{n ≤ N} sₙ.
    pub fn partial_sum(&self, upto: u64) -> T {
        self.terms.iter().take_while(|(n, _)| *n <= upto).map(|&(_, v)| v).sum()
    }

    /// Running partial sums, one per term.
    pub fn partial_sums(&self) -> Vec<(u64, T)> {
        let mut acc = T::zero();
        self.terms
            .iter()
            .map(|&(n, v)| {
                acc = acc + v;
                (n, acc)
            })
            .collect()
    }

    /// Pointwise sum over identical mode lists.
    pub fn pointwise_sum(&self, other: &Self, label: impl Into<String>) -> Result<Self> {
        let label = label.into();
        if self.terms.len() != other.terms.len() || self.terms.iter().zip(&other.terms).any(|(a, b)| a.0 != b.0) {
            return Err(Error::InvalidSequence { label, reason: "mode lists differ".into() });
        }
        Self::new(label, self.terms.iter().zip(&other.terms).map(|(a, b)| (a.0, a.1 + b.1)).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"), default)]
pub struct Thresholds<T> {
    pub margin: T,
    pub cauchy_epsilon: T,
    pub divergence_ratio: T,
    /// RMS residual of the raw log-log fit above which the tail is flagged oscillating.
    pub oscillation_residual: T,
    pub fit_bins: usize,
}

impl<T: Real> Default for Thresholds<T> {
    fn default() -> Self {
        Self {
            margin: T::lit(0.15),
            cauchy_epsilon: T::lit(0.05),
            divergence_ratio: T::lit(0.9),
            oscillation_residual: T::lit(0.1),
            fit_bins: 8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Convergent,
    Divergent,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Convergent => "convergent",
            Verdict::Divergent => "divergent",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SummabilityReport<T> {
    pub label: String,
    pub n_min: u64,
    pub n_max: u64,
    pub terms: usize,
    pub checkpoints: Vec<u64>,
    pub partial_sums: Vec<T>,
    pub total: T,
    pub cauchy_metric: T,
    /// d₃/d₁; `None` when the first increment vanishes.
    pub doubling_ratio: Option<T>,
    /// `None` when the tail vanishes (fewer than three nonzero envelope bins).
    pub tail_exponent: Option<T>,
    pub fit_residual: Option<T>,
    pub raw_fit_residual: Option<T>,
    pub oscillating: bool,
    pub verdict: Verdict,
    pub thresholds: Thresholds<T>,
}

impl<T: Real> SummabilityReport<T> {
    /// Tail exponent with a vanishing tail read as −∞.
    pub fn effective_exponent(&self) -> T {
        self.tail_exponent.unwrap_or(T::neg_infinity())
    }
}

/// Least-squares slope and RMS residual.
fn linear_fit<T: Real>(points: &[(T, T)]) -> (T, T) {
    let k = T::from_usize(points.len()).unwrap();
    let mx = points.iter().map(|p| p.0).sum::<T>() / k;
    let my = points.iter().map(|p| p.1).sum::<T>() / k;
    let sxx = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum::<T>();
    let sxy = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<T>();
    let slope = sxy / sxx;
    let rss = points
        .iter()
        .map(|p| {
            let r = p.1 - my - slope * (p.0 - mx);
            r * r
        })
        .sum::<T>();
    (slope, (rss / k).sqrt())
}

/// Slope of log(max) against log(argmax) over `bins` log-spaced bins
/// spanning the n range of `terms` (empty or all-zero bins are skipped), with the RMS residual of that fit.
pub fn envelope_slope<T: Real>(terms: &[(u64, T)], bins: usize) -> Option<(T, T)> {
    let first = terms.iter().find(|(n, _)| *n > 0)?.0;
    let last = terms.last()?.0;
    let positive: Vec<_> = terms.iter().filter(|(n, v)| *n > 0 && *v > T::zero()).collect();
    if last <= first {
        return None;
    }
    let (l0, l1) = ((first as f64).ln(), (last as f64).ln());
    let bins = bins.max(3);
    let mut best: Vec<Option<(u64, T)>> = vec![None; bins];
    for &&(n, v) in &positive {
        let b = (((n as f64).ln() - l0) / (l1 - l0) * bins as f64).floor() as usize;
        let slot = &mut best[b.min(bins - 1)];
        if slot.map_or(true, |(_, m)| v > m) {
            *slot = Some((n, v));
        }
    }
    let points: Vec<(T, T)> = best.iter().flatten().map(|&(n, v)| (T::lit((n as f64).ln()), v.ln())).collect();
    (points.len() >= 3).then(|| linear_fit(&points))
}

fn raw_fit<T: Real>(terms: &[(u64, T)]) -> Option<(T, T)> {
    let points: Vec<(T, T)> =
        terms.iter().filter(|(n, v)| *n > 0 && *v > T::zero()).map(|&(n, v)| (T::lit((n as f64).ln()), v.ln())).collect();
    (points.len() >= 3).then(|| linear_fit(&points))
}

/// Summability verdict for one sequence. Needs ≥ 200 terms or ≥ 3 decades of n.
pub fn analyze<T: Real>(seq: &WeightedSequence<T>, thresholds: &Thresholds<T>) -> Result<SummabilityReport<T>> {
    let terms = seq.terms();
    let (n_min, n_max) = match (terms.first(), terms.last()) {
        (Some(a), Some(b)) => (a.0, b.0),
        _ => return Err(Error::TooFewTerms { label: seq.label().into(), terms: 0, decades: 0.0 }),
    };
    let decades = (n_max as f64 / n_min.max(1) as f64).log10();
    if terms.len() < 200 && decades < 3.0 {
        return Err(Error::TooFewTerms { label: seq.label().into(), terms: terms.len(), decades });
    }

    let checkpoints: Vec<u64> = [8, 4, 2, 1].iter().map(|d| n_max / d).collect();
    let partial_sums: Vec<T> = checkpoints.iter().map(|&c| seq.partial_sum(c)).collect();
    let total = partial_sums[3];
    let increments: Vec<T> = partial_sums.windows(2).map(|w| w[1] - w[0]).collect();
    let cauchy_metric = if total > T::zero() {
        increments.iter().fold(T::zero(), |acc, &d| acc.max(d)) / total
    } else {
        T::zero()
    };
    let doubling_ratio = (increments[0] > T::zero()).then(|| increments[2] / increments[0]);

    let tail: Vec<(u64, T)> = terms.iter().copied().filter(|(n, _)| *n >= n_max / 10).collect();
    let envelope = envelope_slope(&tail, thresholds.fit_bins);
    let raw = raw_fit(&tail);
    let tail_exponent = envelope.map(|e| e.0);
    let oscillating = raw.map_or(false, |r| r.1 > thresholds.oscillation_residual);

    let s = tail_exponent.unwrap_or(T::neg_infinity());
    let one = T::one();
    let verdict = if s < -one - thresholds.margin && cauchy_metric < thresholds.cauchy_epsilon {
        Verdict::Convergent
    } else if s > -one + thresholds.margin || doubling_ratio.map_or(false, |r| r >= thresholds.divergence_ratio) {
        Verdict::Divergent
    } else {
        Verdict::Inconclusive
    };

    Ok(SummabilityReport {
        label: seq.label().into(),
        n_min,
        n_max,
        terms: terms.len(),
        checkpoints,
        partial_sums,
        total,
        cauchy_metric,
        doubling_ratio,
        tail_exponent,
        fit_residual: envelope.map(|e| e.1),
        raw_fit_residual: raw.map(|r| r.1),
        oscillating,
        verdict,
        thresholds: *thresholds,
    })
}

fn weighted<T: Real>(n: ModeIndex, v: T) -> T {
    weight::<T>(n) * v
}

fn denoised<T: Real>(z: Complex<T>, floor: T) -> T {
    (z.norm() - floor).max(T::zero())
}

/// gₙ(|βᶠ|² + |βᵍ|²) from a sweep, with |β| reduced by the noise floor.
pub fn dynamics_sequence<T: Real>(sweep: &BogoliubovSweep<T>) -> Result<WeightedSequence<T>> {
    let floor = T::lit(BETA_NOISE_FACTOR) * sweep.tolerance;
    let terms = sweep
        .matrices
        .iter()
        .map(|b| {
            let (bf, bg) = (denoised(b.beta_f(), floor), denoised(b.beta_g(), floor));
            (b.mode.0, weighted(b.mode, bf * bf + bg * bg))
        })
        .collect();
    WeightedSequence::new(LABEL_DYNAMICS, terms)
}

pub fn dynamics_unitarity_from<T: Real>(sweep: &BogoliubovSweep<T>, thresholds: &Thresholds<T>) -> Result<SummabilityReport<T>> {
    analyze(&dynamics_sequence(sweep)?, thresholds)
}

/// Report for ∑ gₙ(|βᶠₙ|² + |βᵍₙ|²) over n ≤ n_max.
pub fn dynamics_unitarity<T: Real>(
    background: &BackgroundModel<T>,
    eta0: T,
    eta: T,
    n_max: u64,
    tolerance: T,
    thresholds: &Thresholds<T>,
) -> Result<SummabilityReport<T>> {
    let sweep = BogoliubovSweep::compute(background, eta0, eta, n_max, &PropagatorOptions::new(tolerance))?;
    dynamics_unitarity_from(&sweep, thresholds)
}

fn generate_all<T: Real>(family: &StructureFamily<T>, modes: impl Iterator<Item = u64>) -> Result<Vec<MixingMatrix<T>>> {
    modes.map(|n| family.generate(ModeIndex(n))).collect()
}

pub fn equivalence_sequence<T: Real>(family: &StructureFamily<T>, n_max: u64) -> Result<WeightedSequence<T>> {
    let terms = generate_all(family, 0..=n_max)?
        .par_iter()
        .map(|k| (k.mode.0, weighted(k.mode, k.lambda_f.norm_sqr() + k.lambda_g.norm_sqr())))
        .collect();
    WeightedSequence::new(LABEL_EQUIVALENCE, terms)
}

/// Report for ∑ gₙ(|λᶠₙ|² + |λᵍₙ|²) over n ≤ n_max.
pub fn equivalence<T: Real>(family: &StructureFamily<T>, n_max: u64, thresholds: &Thresholds<T>) -> Result<SummabilityReport<T>> {
    analyze(&equivalence_sequence(family, n_max)?, thresholds)
}

/// The two mixed conditions, their off-diagonal precursors, and the
/// remainders precursor − mixed built only from β.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct MixedConditions<T> {
    pub family: String,
    pub eta0: T,
    pub eta: T,
    pub mixed_f: SummabilityReport<T>,
    pub mixed_g: SummabilityReport<T>,
    pub precursor_f: SummabilityReport<T>,
    pub precursor_g: SummabilityReport<T>,
    pub remainder_f: SummabilityReport<T>,
    pub remainder_g: SummabilityReport<T>,
}

impl<T: Real> MixedConditions<T> {
    pub fn reports(&self) -> [&SummabilityReport<T>; 6] {
        [&self.mixed_f, &self.mixed_g, &self.precursor_f, &self.precursor_g, &self.remainder_f, &self.remainder_g]
    }
}

fn paired<'a, T: Real>(
    family: &StructureFamily<T>,
    sweep: &'a BogoliubovSweep<T>,
) -> Result<Vec<(MixingMatrix<T>, &'a BogoliubovMatrix<T>)>> {
    sweep.matrices.iter().map(|b| Ok((family.generate(b.mode)?, b))).collect()
}


/// Keeps the direction of z and lowers its modulus by `floor`.
fn shrink<T: Real>(z: Complex<T>, floor: T) -> Complex<T> {
    let r = z.norm();
    if r > floor {
        z * ((r - floor) / r)
    } else {
        Complex::new(T::zero(), T::zero())
    }
}

/// Sequences in the order of [`MixedConditions::reports`]. The β part of the
/// precursors is reduced by the noise floor before squaring.
pub fn mixed_sequences<T: Real>(family: &StructureFamily<T>, sweep: &BogoliubovSweep<T>) -> Result<[WeightedSequence<T>; 6]> {
    let floor = T::lit(BETA_NOISE_FACTOR) * sweep.tolerance;
    let rows: Vec<(u64, [T; 6])> = paired(family, sweep)?
        .par_iter()
        .map(|(k, b)| {
            let n = b.mode;
            let d = alpha_difference(b);
            let mixed_f = k.kappa_f * k.lambda_f * d;
            let mixed_g = -(k.kappa_g * k.lambda_g * d);
            let (pre_f, pre_g) = off_diagonal_sequences(k, b);
            let (rem_f, rem_g) = (shrink(pre_f - mixed_f, floor), shrink(pre_g - mixed_g, floor));
            let g = |z: Complex<T>| weighted(n, z.norm_sqr());
            (n.0, [g(mixed_f), g(mixed_g), g(mixed_f + rem_f), g(mixed_g + rem_g), g(rem_f), g(rem_g)])
        })
        .collect();
    let labels = [LABEL_MIXED_F, LABEL_MIXED_G, LABEL_PRECURSOR_F, LABEL_PRECURSOR_G, LABEL_REMAINDER_F, LABEL_REMAINDER_G];
    let build = |i: usize| WeightedSequence::new(labels[i], rows.iter().map(|r| (r.0, r.1[i])).collect());
    Ok([build(0)?, build(1)?, build(2)?, build(3)?, build(4)?, build(5)?])
}

pub fn mixed_conditions_from<T: Real>(
    family: &StructureFamily<T>,
    sweep: &BogoliubovSweep<T>,
    thresholds: &Thresholds<T>,
) -> Result<MixedConditions<T>> {
    let [a, b, c, d, e, f] = mixed_sequences(family, sweep)?;
    Ok(MixedConditions {
        family: family.name.clone(),
        eta0: sweep.eta0,
        eta: sweep.eta,
        mixed_f: analyze(&a, thresholds)?,
        mixed_g: analyze(&b, thresholds)?,
        precursor_f: analyze(&c, thresholds)?,
        precursor_g: analyze(&d, thresholds)?,
        remainder_f: analyze(&e, thresholds)?,
        remainder_g: analyze(&f, thresholds)?,
    })
}

/// Reports for ∑ gₙ|κᶠλᶠ(αᵍ − αᶠ)|² and ∑ gₙ|κᵍλᵍ(αᶠ − αᵍ)|², with precursors.
pub fn mixed_conditions<T: Real>(
    family: &StructureFamily<T>,
    background: &BackgroundModel<T>,
    eta0: T,
    eta: T,
    n_max: u64,
    tolerance: T,
    thresholds: &Thresholds<T>,
) -> Result<MixedConditions<T>> {
    let sweep = BogoliubovSweep::compute(background, eta0, eta, n_max, &PropagatorOptions::new(tolerance))?;
    mixed_conditions_from(family, &sweep, thresholds)
}

/// Phase θₙ of the sine weight: −arg αᶠ, which is ωₙΔη plus the computed
/// correction (αᶠ is e^{−iωₙΔη} for m = 0).
pub fn sine_phase<T: Real>(b: &BogoliubovMatrix<T>) -> T {
    -b.alpha_f().arg()
}

/// gₙ|κᶠλᶠ|² sin²θₙ and gₙ|κᵍλᵍ|² sin²θₙ.
pub fn sine_weighted_sequences<T: Real>(
    family: &StructureFamily<T>,
    sweep: &BogoliubovSweep<T>,
) -> Result<(WeightedSequence<T>, WeightedSequence<T>)> {
    let rows: Vec<(u64, T, T)> = paired(family, sweep)?
        .par_iter()
        .map(|(k, b)| {
            let s = sine_phase(b).sin();
            let s2 = s * s;
            let f = weighted(b.mode, (k.kappa_f * k.lambda_f).norm_sqr() * s2);
            let g = weighted(b.mode, (k.kappa_g * k.lambda_g).norm_sqr() * s2);
            (b.mode.0, f, g)
        })
        .collect();
    Ok((
        WeightedSequence::new(LABEL_SINE_F, rows.iter().map(|r| (r.0, r.1)).collect())?,
        WeightedSequence::new(LABEL_SINE_G, rows.iter().map(|r| (r.0, r.2)).collect())?,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct SineWeightedReports<T> {
    pub family: String,
    pub eta0: T,
    pub eta: T,
    pub f: SummabilityReport<T>,
    pub g: SummabilityReport<T>,
}

impl<T: Real> SineWeightedReports<T> {
    pub fn delta_eta(&self) -> T {
        self.eta - self.eta0
    }
}

pub fn sine_weighted_conditions_from<T: Real>(
    family: &StructureFamily<T>,
    sweep: &BogoliubovSweep<T>,
    thresholds: &Thresholds<T>,
) -> Result<SineWeightedReports<T>> {
    let (f, g) = sine_weighted_sequences(family, sweep)?;
    Ok(SineWeightedReports {
        family: family.name.clone(),
        eta0: sweep.eta0,
        eta: sweep.eta,
        f: analyze(&f, thresholds)?,
        g: analyze(&g, thresholds)?,
    })
}

pub fn sine_weighted_conditions<T: Real>(
    family: &StructureFamily<T>,
    background: &BackgroundModel<T>,
    eta0: T,
    eta: T,
    n_max: u64,
    tolerance: T,
    thresholds: &Thresholds<T>,
) -> Result<SineWeightedReports<T>> {
    let sweep = BogoliubovSweep::compute(background, eta0, eta, n_max, &PropagatorOptions::new(tolerance))?;
    sine_weighted_conditions_from(family, &sweep, thresholds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TheoremVerdict {
    ConsistentWithTheorem,
    CounterexampleCandidate,
    Inconclusive,
}

impl std::fmt::Display for TheoremVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            TheoremVerdict::ConsistentWithTheorem => "consistent-with-theorem",
            TheoremVerdict::CounterexampleCandidate => "counterexample-candidate",
            TheoremVerdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct VerdictRecord<T> {
    pub family: String,
    pub n_max: u64,
    pub convention: ConventionReport<T>,
    pub equivalence: SummabilityReport<T>,
    pub sine_weighted: Vec<SineWeightedReports<T>>,
    pub verdict: TheoremVerdict,
    pub reason: String,
    /// Every intermediate report, filled only for counterexample candidates.
    pub dump: Option<Vec<MixedConditions<T>>>,
}

/// Combines the convention check, the sine-weighted verdicts and the
/// equivalence verdict. The two sides must agree whenever the convention holds.
pub fn combine_verdicts<T: Real>(
    convention: &ConventionReport<T>,
    sine_weighted: &[SineWeightedReports<T>],
    equivalence: &SummabilityReport<T>,
) -> (TheoremVerdict, String) {
    use TheoremVerdict::*;
    if !convention.compliant {
        return (ConsistentWithTheorem, "convention-violated".into());
    }
    let verdicts: Vec<Verdict> = sine_weighted.iter().flat_map(|r| [r.f.verdict, r.g.verdict]).collect();
    let all_convergent = verdicts.iter().all(|v| *v == Verdict::Convergent);
    let any_divergent = verdicts.iter().any(|v| *v == Verdict::Divergent);
    match (all_convergent, any_divergent, equivalence.verdict) {
        (true, _, Verdict::Convergent) => (ConsistentWithTheorem, "both-convergent".into()),
        (true, _, Verdict::Divergent) => {
            (CounterexampleCandidate, "sine-weighted convergent for all time pairs but equivalence divergent".into())
        }
        (_, true, Verdict::Divergent) => (ConsistentWithTheorem, "both-divergent".into()),
        (_, true, Verdict::Convergent) => {
            (CounterexampleCandidate, "equivalence convergent but a sine-weighted condition diverges".into())
        }
        (_, _, Verdict::Inconclusive) => (Inconclusive, "equivalence inconclusive".into()),
        _ => (Inconclusive, "sine-weighted inconclusive".into()),
    }
}

/// Verdict from precomputed sweeps; needs at least three distinct Δη.
pub fn uniqueness_verdict_from<T: Real>(
    family: &StructureFamily<T>,
    sweeps: &[BogoliubovSweep<T>],
    thresholds: &Thresholds<T>,
) -> Result<VerdictRecord<T>> {
    let mut deltas: Vec<f64> = sweeps.iter().map(|s| s.delta_eta().as_f64()).collect();
    deltas.sort_by(|a, b| a.total_cmp(b));
    deltas.dedup();
    if deltas.len() < 3 {
        return Err(Error::TooFewTimePairs(deltas.len()));
    }
    let n_max = sweeps[0].matrices.last().map_or(0, |b| b.mode.0);
    if sweeps.iter().any(|s| s.matrices.last().map_or(0, |b| b.mode.0) != n_max) {
        return Err(Error::Precondition("sweeps cover different mode ranges".into()));
    }
    let convention = family.check_convention(n_max)?;
    let equivalence = equivalence(family, n_max, thresholds)?;
    let sine_weighted =
        sweeps.iter().map(|s| sine_weighted_conditions_from(family, s, thresholds)).collect::<Result<Vec<_>>>()?;
    let (verdict, reason) = combine_verdicts(&convention, &sine_weighted, &equivalence);
    let dump = if verdict == TheoremVerdict::CounterexampleCandidate {
        Some(sweeps.iter().map(|s| mixed_conditions_from(family, s, thresholds)).collect::<Result<Vec<_>>>()?)
    } else {
        None
    };
    Ok(VerdictRecord { family: family.name.clone(), n_max, convention, equivalence, sine_weighted, verdict, reason, dump })
}

pub fn uniqueness_verdict<T: Real>(
    family: &StructureFamily<T>,
    background: &BackgroundModel<T>,
    time_pairs: &[(T, T)],
    n_max: u64,
    tolerance: T,
    thresholds: &Thresholds<T>,
) -> Result<VerdictRecord<T>> {
    let options = PropagatorOptions::new(tolerance);
    let sweeps = time_pairs
        .iter()
        .map(|&(a, b)| BogoliubovSweep::compute(background, a, b, n_max, &options))
        .collect::<Result<Vec<_>>>()?;
    uniqueness_verdict_from(family, &sweeps, thresholds)
}

/// A convergent dynamics report implies that for bounded λ the precursor and mixed
/// verdicts agree; returns whether that holds for one set of reports.
pub fn precursor_consistent<T: Real>(dynamics: &SummabilityReport<T>, mixed: &MixedConditions<T>) -> bool {
    dynamics.verdict != Verdict::Convergent
        || (mixed.precursor_f.verdict == mixed.mixed_f.verdict && mixed.precursor_g.verdict == mixed.mixed_g.verdict)
}
