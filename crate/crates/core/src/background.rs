//! Closed FRW background: the log scale factor α(η), its conformal-time
//! derivative α′(η), and the fermion mass, on a closed conformal-time interval.
//!
//! The three-sphere radius is fixed to 1, so the mass is dimensionless.

use crate::error::{Error, Result};
use crate::num::Real;

/// How α(η) is represented.
#[derive(Debug, Clone, PartialEq)]
pub enum BackgroundKind<T> {
    /// α(η) = alpha for all η.
    Constant { alpha: T },
    /// α(η) = offset + exponent · ln η, i.e. a scale factor e^α ∝ η^exponent. Requires η > 0.
    PowerLaw { exponent: T, offset: T },
    /// Natural cubic spline through the samples.
    Tabulated(CubicSpline<T>),
}

/// Immutable background model; safe to share across worker threads.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel<T> {
    kind: BackgroundKind<T>,
    eta_min: T,
    eta_max: T,
    mass: T,
}

/// Default round-trip tolerance for tabulated backgrounds.
pub const DEFAULT_ROUNDTRIP_TOLERANCE: f64 = 1e-6;

impl<T: Real> BackgroundModel<T> {
    pub fn constant(alpha: T, domain: (T, T), mass: T) -> Result<Self> {
        let model = Self {
            kind: BackgroundKind::Constant { alpha },
            eta_min: domain.0,
            eta_max: domain.1,
            mass,
        };
        model.validate()?;
        Ok(model)
    }

    /// Massless background with α ≡ 0.
    pub fn massless(domain: (T, T)) -> Result<Self> {
        Self::constant(T::zero(), domain, T::zero())
    }

    pub fn power_law(exponent: T, offset: T, domain: (T, T), mass: T) -> Result<Self> {
        if !(domain.0 > T::zero()) {
            return Err(Error::InvalidBackground(format!(
                "power-law background needs eta_min > 0, got {}",
                domain.0
            )));
        }
        let model = Self {
            kind: BackgroundKind::PowerLaw { exponent, offset },
            eta_min: domain.0,
            eta_max: domain.1,
            mass,
        };
        model.validate()?;
        Ok(model)
    }

    /// Tabulated background; the domain is the span of the samples.
    pub fn tabulated(etas: Vec<T>, alphas: Vec<T>, mass: T) -> Result<Self> {
        Self::tabulated_with_tolerance(etas, alphas, mass, T::lit(DEFAULT_ROUNDTRIP_TOLERANCE))
    }

    pub fn tabulated_with_tolerance(etas: Vec<T>, alphas: Vec<T>, mass: T, roundtrip_tolerance: T) -> Result<Self> {
        let spline = CubicSpline::natural(etas, alphas)?;
        let worst = spline.roundtrip_defect();
        if !(worst <= roundtrip_tolerance) {
            return Err(Error::InvalidBackground(format!(
                "spline reconstruction defect {worst} exceeds round-trip tolerance {roundtrip_tolerance}"
            )));
        }
        let (eta_min, eta_max) = spline.span();
        let model = Self {
            kind: BackgroundKind::Tabulated(spline),
            eta_min,
            eta_max,
            mass,
        };
        model.validate()?;
        Ok(model)
    }

    /// Samples `f` at `points` equally spaced nodes and builds a tabulated model.
    pub fn tabulate_fn(f: impl Fn(T) -> T, domain: (T, T), points: usize, mass: T) -> Result<Self> {
        if points < 4 {
            return Err(Error::InvalidBackground("tabulation needs at least 4 points".into()));
        }
        let step = (domain.1 - domain.0) / T::from_usize(points - 1).unwrap();
        let etas: Vec<T> = (0..points)
            .map(|i| {
                if i + 1 == points {
                    domain.1
                } else {
                    domain.0 + step * T::from_usize(i).unwrap()
                }
            })
            .collect();
        let alphas = etas.iter().map(|&e| f(e)).collect();
        Self::tabulated(etas, alphas, mass)
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta_min.is_finite() && self.eta_max.is_finite() && self.eta_min < self.eta_max) {
            return Err(Error::InvalidBackground(format!(
                "domain [{}, {}] must be finite with eta_min < eta_max",
                self.eta_min, self.eta_max
            )));
        }
        if !(self.mass >= T::zero() && self.mass.is_finite()) {
            return Err(Error::InvalidBackground(format!("mass must be finite and >= 0, got {}", self.mass)));
        }
        let probes = 33;
        for i in 0..probes {
            let t = T::from_usize(i).unwrap() / T::from_usize(probes - 1).unwrap();
            let eta = self.eta_min + (self.eta_max - self.eta_min) * t;
            let (a, da) = (self.alpha_unchecked(eta), self.alpha_prime_unchecked(eta));
            if !(a.is_finite() && da.is_finite()) {
                return Err(Error::InvalidBackground(format!("alpha or alpha' not finite at eta = {eta}")));
            }
        }
        Ok(())
    }

    pub fn kind(&self) -> &BackgroundKind<T> {
        &self.kind
    }

    pub fn domain(&self) -> (T, T) {
        (self.eta_min, self.eta_max)
    }

    pub fn mass(&self) -> T {
        self.mass
    }

    pub fn contains(&self, eta: T) -> bool {
        eta >= self.eta_min && eta <= self.eta_max
    }

    pub fn check_domain(&self, eta: T) -> Result<()> {
        if self.contains(eta) {
            Ok(())
        } else {
            Err(Error::OutOfDomain {
                eta: eta.as_f64(),
                min: self.eta_min.as_f64(),
                max: self.eta_max.as_f64(),
            })
        }
    }

    /// α(η).
    pub fn log_scale_factor(&self, eta: T) -> Result<T> {
        self.check_domain(eta)?;
        Ok(self.alpha_unchecked(eta))
    }

    /// α′(η).
    pub fn log_scale_factor_derivative(&self, eta: T) -> Result<T> {
        self.check_domain(eta)?;
        Ok(self.alpha_prime_unchecked(eta))
    }

    /// m·e^{α(η)}, the time-dependent coupling of the mode equations.
    pub fn effective_mass(&self, eta: T) -> Result<T> {
        Ok(self.mass * self.log_scale_factor(eta)?.exp())
    }

    /// α(η) with η clamped into the domain. Used inside integrators whose stage
    /// times may overshoot an endpoint by rounding.
    pub(crate) fn alpha_clamped(&self, eta: T) -> T {
        self.alpha_unchecked(eta.max(self.eta_min).min(self.eta_max))
    }

    pub(crate) fn alpha_prime_clamped(&self, eta: T) -> T {
        self.alpha_prime_unchecked(eta.max(self.eta_min).min(self.eta_max))
    }

    fn alpha_unchecked(&self, eta: T) -> T {
        match &self.kind {
            BackgroundKind::Constant { alpha } => *alpha,
            BackgroundKind::PowerLaw { exponent, offset } => *offset + *exponent * eta.ln(),
            BackgroundKind::Tabulated(s) => s.value(eta),
        }
    }

    fn alpha_prime_unchecked(&self, eta: T) -> T {
        match &self.kind {
            BackgroundKind::Constant { .. } => T::zero(),
            BackgroundKind::PowerLaw { exponent, .. } => *exponent / eta,
            BackgroundKind::Tabulated(s) => s.derivative(eta),
        }
    }
}

/// Natural cubic spline (zero second derivative at both ends).
#[derive(Debug, Clone, PartialEq)]
pub struct CubicSpline<T> {
    x: Vec<T>,
    y: Vec<T>,
    /// Second derivatives at the knots.
    m: Vec<T>,
}

impl<T: Real> CubicSpline<T> {
    pub fn natural(x: Vec<T>, y: Vec<T>) -> Result<Self> {
        let n = x.len();
        if n != y.len() {
            return Err(Error::InvalidBackground(format!("{} eta samples but {} alpha samples", n, y.len())));
        }
        if n < 3 {
            return Err(Error::InvalidBackground("tabulated background needs at least 3 samples".into()));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidBackground("samples must be finite".into()));
        }
        if let Some(i) = x.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidBackground(format!(
                "eta samples must be strictly increasing (violated at index {})",
                i + 1
            )));
        }

        // Thomas algorithm on the interior knots.
        let two = T::lit(2.0);
        let six = T::lit(6.0);
        let mut m = vec![T::zero(); n];
        let mut c_prime = vec![T::zero(); n];
        let mut d_prime = vec![T::zero(); n];
        for i in 1..n - 1 {
            let h0 = x[i] - x[i - 1];
            let h1 = x[i + 1] - x[i];
            let a = h0;
            let b = two * (h0 + h1);
            let c = h1;
            let d = six * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            let denom = b - a * c_prime[i - 1];
            c_prime[i] = c / denom;
            d_prime[i] = (d - a * d_prime[i - 1]) / denom;
        }
        for i in (1..n - 1).rev() {
            m[i] = d_prime[i] - c_prime[i] * m[i + 1];
        }
        Ok(Self { x, y, m })
    }

    pub fn span(&self) -> (T, T) {
        (self.x[0], *self.x.last().unwrap())
    }

    pub fn knots(&self) -> (&[T], &[T]) {
        (&self.x, &self.y)
    }

    fn segment(&self, t: T) -> usize {
        let k = self.x.partition_point(|&xi| xi <= t);
        k.clamp(1, self.x.len() - 1) - 1
    }

    pub fn value(&self, t: T) -> T {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let six = T::lit(6.0);
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / six
    }

    pub fn derivative(&self, t: T) -> T {
        let i = self.segment(t);
        let h = self.x[i + 1] - self.x[i];
        let a = (self.x[i + 1] - t) / h;
        let b = (t - self.x[i]) / h;
        let (three, six) = (T::lit(3.0), T::lit(6.0));
        (self.y[i + 1] - self.y[i]) / h
            - (three * a * a - T::one()) * h * self.m[i] / six
            + (three * b * b - T::one()) * h * self.m[i + 1] / six
    }

    /// Largest |spline(xᵢ) − yᵢ| over the knots.
    pub fn roundtrip_defect(&self) -> T {
        self.x
            .iter()
            .zip(&self.y)
            .fold(T::zero(), |acc, (&xi, &yi)| acc.max((self.value(xi) - yi).abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quadratic_table() -> BackgroundModel<f64> {
        BackgroundModel::tabulate_fn(|e| e * e, (0.0, 1.0), 101, 1.0).unwrap()
    }

    #[test]
    fn constant_model() {
        let bg = BackgroundModel::constant(0.0, (0.0, 1.0), 1.0).unwrap();
        assert_eq!(bg.log_scale_factor(0.7).unwrap(), 0.0);
        assert_eq!(bg.log_scale_factor_derivative(0.3).unwrap(), 0.0);
    }

    #[test]
    fn power_law_model() {
        let bg = BackgroundModel::<f64>::power_law(2.0, 0.0, (1.0, 2.0), 1.0).unwrap();
        assert_eq!(bg.log_scale_factor(1.0).unwrap(), 0.0);
        assert!((bg.log_scale_factor_derivative(2.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn power_law_rejects_nonpositive_domain() {
        assert!(BackgroundModel::power_law(2.0, 0.0, (0.0, 2.0), 1.0).is_err());
    }

    #[test]
    fn tabulated_matches_closed_form() {
        let bg = quadratic_table();
        assert!((bg.log_scale_factor(0.5).unwrap() - 0.25).abs() < 1e-6);
    }

    #[test]
    fn tabulated_derivative_matches_raw_table_difference() {
        let bg = quadratic_table();
        let BackgroundKind::Tabulated(s) = bg.kind() else { panic!() };
        let (x, y) = s.knots();
        // centered difference on the raw samples bracketing η = 0.5
        let oracle = (y[51] - y[49]) / (x[51] - x[49]);
        let got = bg.log_scale_factor_derivative(0.5).unwrap();
        assert!((got - oracle).abs() < 1e-4);
        assert!((got - 1.0).abs() < 1e-4);
    }

    #[test]
    fn out_of_range_names_eta_and_interval() {
        let bg = BackgroundModel::constant(0.0, (0.0, 1.0), 0.0).unwrap();
        let err = bg.log_scale_factor(1.5).unwrap_err();
        assert_eq!(err, Error::OutOfDomain { eta: 1.5, min: 0.0, max: 1.0 });
        let msg = err.to_string();
        assert!(msg.contains("1.5") && msg.contains("[0, 1]"));
    }

    #[test]
    fn non_increasing_samples_rejected() {
        let err = BackgroundModel::tabulated(vec![0.0, 0.5, 0.5, 1.0], vec![0.0; 4], 1.0).unwrap_err();
        assert!(matches!(err, Error::InvalidBackground(_)));
    }

    #[test]
    fn negative_mass_rejected() {
        assert!(BackgroundModel::constant(0.0, (0.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn central_differences_converge_at_second_order() {
        let models = [
            BackgroundModel::power_law(2.0, 0.3, (1.0, 2.0), 1.0).unwrap(),
            BackgroundModel::constant(0.4, (1.0, 2.0), 1.0).unwrap(),
        ];
        for bg in &models {
            for &eta in &[1.2, 1.5, 1.8] {
                let exact = bg.log_scale_factor_derivative(eta).unwrap();
                let fd = |h: f64| {
                    (bg.log_scale_factor(eta + h).unwrap() - bg.log_scale_factor(eta - h).unwrap()) / (2.0 * h)
                };
                let (e1, e2) = ((fd(1e-3) - exact).abs(), (fd(1e-4) - exact).abs());
                if e1 > 1e-12 {
                    // error ratio ~ (1e-3/1e-4)^2 = 100 for a second-order scheme
                    assert!(e1 / e2 > 50.0, "ratio {} at eta {}", e1 / e2, eta);
                } else {
                    assert!(e2 < 1e-10);
                }
            }
        }
    }

    #[test]
    fn evaluation_is_bit_reproducible() {
        let bg = quadratic_table();
        let a = bg.log_scale_factor(0.37).unwrap();
        let b = bg.log_scale_factor(0.37).unwrap();
        assert_eq!(a.to_bits(), b.to_bits());
    }

    #[test]
    fn spline_reproduces_knots() {
        let s = CubicSpline::natural(vec![0.0, 0.3, 0.7, 1.0], vec![1.0, -2.0, 0.5, 3.0]).unwrap();
        assert!(s.roundtrip_defect() < 1e-14);
    }
}
