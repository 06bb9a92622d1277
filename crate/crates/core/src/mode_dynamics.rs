//! Fundamental solution of the decoupled mode system
//!
//! ```text
//! x′ = iωₙ x − i m e^α ȳ,      ȳ′ = −iωₙ ȳ − i m e^α x,
//! ```
//!
//! i.e. (x, ȳ)′ = M(η)(x, ȳ) with the traceless anti-Hermitian generator
//! M = [[iωₙ, −iμ], [−iμ, −iωₙ]], μ = m e^{α(η)}. The propagator Φₙ(η, η₀)
//! is therefore in SU(2).

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::background::BackgroundModel;
use crate::error::{Error, Result};
use crate::mat2::Mat2;
use crate::num::Real;
use crate::spectrum::{omega, pairing_coefficients, ModeIndex};

pub const MIN_TOLERANCE: f64 = 1e-13;
pub const MAX_TOLERANCE: f64 = 1e-6;

/// One (x, ȳ) pair at conformal time `time`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ModeState<T> {
    pub x: Complex<T>,
    pub ybar: Complex<T>,
    pub time: T,
}

impl<T: Real> ModeState<T> {
    pub fn new(x: Complex<T>, ybar: Complex<T>, time: T) -> Self {
        Self { x, ybar, time }
    }

    /// |x|² + |ȳ|², conserved by the evolution.
    pub fn norm_sqr(&self) -> T {
        self.x.norm_sqr() + self.ybar.norm_sqr()
    }
}

/// Φₙ(to_time, from_time).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Real", deserialize = "T: Real"))]
pub struct ModePropagator<T> {
    pub matrix: Mat2<T>,
    pub from_time: T,
    pub to_time: T,
    pub mode: ModeIndex,
    pub tolerance: T,
    /// Accepted steps taken by the integrator (0 for closed forms).
    pub steps: usize,
}

impl<T: Real> ModePropagator<T> {
    pub fn unitarity_defect(&self) -> T {
        self.matrix.unitarity_defect()
    }

    pub fn determinant_defect(&self) -> T {
        self.matrix.determinant_defect()
    }
}

/// Integration scheme for [`propagate_with`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Dormand–Prince 5(4) in the instantaneous eigenbasis of M(η). With
    /// C(η) the real involution diagonalising M, B = C(η)ΦC(η₀) obeys
    /// B′ = (diag(−iΩ, iΩ) + θ′J)B, θ = ½ atan(μ/ωₙ), J = [[0, 1], [−1, 0]];
    /// the free rotation diag(e^{−iωΔη}, e^{iωΔη}) is factored out and the
    /// remainder integrated. Exact for m = 0 and nearly free for constant α.
    #[default]
    Adiabatic,
    /// Dormand–Prince 5(4) on the interaction-picture remainder U = P(η)⁻¹Φ,
    /// P = diag(e^{iωΔη}, e^{−iωΔη}). Exact for m = 0.
    Interaction,
    /// Dormand–Prince 5(4) directly on Φ′ = MΦ.
    Direct,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagatorOptions<T> {
    pub tolerance: T,
    pub scheme: Scheme,
    pub max_steps: usize,
}

impl<T: Real> PropagatorOptions<T> {
    pub fn new(tolerance: T) -> Self {
        Self { tolerance, scheme: Scheme::default(), max_steps: 5_000_000 }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }
}

fn i_times<T: Real>(x: T) -> Complex<T> {
    Complex::new(T::zero(), x)
}

/// M(η) = [[iωₙ, −iμ], [−iμ, −iωₙ]] with μ = m e^α.
pub fn generator<T: Real>(n: ModeIndex, m: T, alpha: T) -> Mat2<T> {
    let w: T = omega(n);
    let mu = m * alpha.exp();
    Mat2::new(i_times(w), i_times(-mu), i_times(-mu), i_times(-w))
}

/// Closed-form propagator for a constant coupling μ:
/// Φ = cos(ΩΔη) I + sin(ΩΔη)/Ω · M, Ω = sqrt(ωₙ² + μ²), since M² = −Ω² I.
pub fn closed_form_constant<T: Real>(n: ModeIndex, mu: T, delta_eta: T) -> Mat2<T> {
    let w: T = omega(n);
    let big = (w * w + mu * mu).sqrt();
    let gen = Mat2::new(i_times(w), i_times(-mu), i_times(-mu), i_times(-w));
    let phase = big * delta_eta;
    Mat2::identity().scale_real(phase.cos()) + gen.scale_real(phase.sin() / big)
}

pub fn check_tolerance<T: Real>(tolerance: T) -> Result<()> {
    let t = tolerance.as_f64();
    if (MIN_TOLERANCE..=MAX_TOLERANCE).contains(&t) {
        Ok(())
    } else {
        Err(Error::InvalidTolerance(t))
    }
}

/// Φₙ(η, η₀) with the default scheme.
pub fn propagate<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    tolerance: T,
) -> Result<ModePropagator<T>> {
    propagate_with(background, n, eta0, eta, &PropagatorOptions::new(tolerance))
}

pub fn propagate_with<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    options: &PropagatorOptions<T>,
) -> Result<ModePropagator<T>> {
    check_tolerance(options.tolerance)?;
    background.check_domain(eta0)?;
    background.check_domain(eta)?;
    let m = background.mass();
    let w: T = omega(n);

    let (matrix, steps) = if eta == eta0 {
        (Mat2::identity(), 0)
    } else {
        match options.scheme {
            Scheme::Direct => {
                let gen = |t: T| generator(n, m, background.alpha_clamped(t));
                dormand_prince(gen, eta0, eta, options.tolerance, options.max_steps)?
            }
            Scheme::Adiabatic => {
                if m == T::zero() {
                    (free_phase(w, eta - eta0), 0)
                } else {
                    let (u, steps) = dormand_prince(
                        |t: T| adiabatic_generator(background, w, m, t - eta0, t),
                        eta0,
                        eta,
                        options.tolerance,
                        options.max_steps,
                    )?;
                    let rot = free_phase(w, eta - eta0);
                    let b = Mat2::diag(rot.get(1, 1), rot.get(0, 0)) * u;
                    let c_eta = eigenbasis(w, m * background.alpha_clamped(eta).exp());
                    let c_eta0 = eigenbasis(w, m * background.alpha_clamped(eta0).exp());
                    (c_eta * b * c_eta0, steps)
                }
            }
            Scheme::Interaction => {
                if m == T::zero() {
                    (free_phase(w, eta - eta0), 0)
                } else {
                    // U′ = P⁻¹ V P U with V = [[0, −iμ], [−iμ, 0]].
                    let two = T::lit(2.0);
                    let gen = |t: T| {
                        let mu = m * background.alpha_clamped(t).exp();
                        let rot = Complex::from_polar(T::one(), two * w * (t - eta0));
                        let upper = i_times(-mu) * rot.conj();
                        let lower = i_times(-mu) * rot;
                        Mat2::new(Complex::new(T::zero(), T::zero()), upper, lower, Complex::new(T::zero(), T::zero()))
                    };
                    let (u, steps) = dormand_prince(gen, eta0, eta, options.tolerance, options.max_steps)?;
                    (free_phase(w, eta - eta0) * u, steps)
                }
            }
        }
    };

    Ok(ModePropagator { matrix, from_time: eta0, to_time: eta, mode: n, tolerance: options.tolerance, steps })
}

/// C = [[f₁, f₂], [f₂, −f₁]] for coupling μ; C M C = diag(−iΩ, iΩ).
fn eigenbasis<T: Real>(w: T, mu: T) -> Mat2<T> {
    let (_, f1, f2) = pairing_coefficients(w, mu);
    Mat2::from_real([[f1, f2], [f2, -f1]])
}

/// Remainder generator of [`Scheme::Adiabatic`] at time t, s = t − η₀:
/// [[−iδ, θ′e^{2iωs}], [−θ′e^{−2iωs}, iδ]] with δ = Ω − ω.
fn adiabatic_generator<T: Real>(background: &BackgroundModel<T>, w: T, m: T, s: T, t: T) -> Mat2<T> {
    let mu = m * background.alpha_clamped(t).exp();
    let x = mu / w;
    let theta_prime = x * background.alpha_prime_clamped(t) / (T::lit(2.0) * (T::one() + x * x));
    let detune = mu * mu / ((w * w + mu * mu).sqrt() + w);
    let rot = Complex::from_polar(T::one(), T::lit(2.0) * w * s);
    Mat2::new(i_times(-detune), rot.scale(theta_prime), -rot.conj().scale(theta_prime), i_times(detune))
}

fn free_phase<T: Real>(w: T, dt: T) -> Mat2<T> {
    let p = Complex::from_polar(T::one(), w * dt);
    Mat2::diag(p, p.conj())
}

/// Fourth-order commutator-free Magnus propagator with a fixed number of steps.
///
/// Each step applies exp(h(β A₁ + α A₂)) · exp(h(α A₁ + β A₂)) with Aᵢ the
/// generator at the two Gauss–Legendre nodes, α = 1/4 + √3/6, β = 1/4 − √3/6;
/// the right factor acts first. Exact for constant backgrounds.
pub fn magnus_propagate<T: Real>(
    background: &BackgroundModel<T>,
    n: ModeIndex,
    eta0: T,
    eta: T,
    steps: usize,
) -> Result<ModePropagator<T>> {
    background.check_domain(eta0)?;
    background.check_domain(eta)?;
    let steps = steps.max(1);
    let m = background.mass();
    let h = (eta - eta0) / T::from_usize(steps).unwrap();
    let s3 = T::lit(3.0).sqrt();
    let half = T::lit(0.5);
    let (c1, c2) = (half - s3 / T::lit(6.0), half + s3 / T::lit(6.0));
    let a = T::lit(0.25) + s3 / T::lit(6.0);
    let b = T::lit(0.25) - s3 / T::lit(6.0);

    let mut phi = Mat2::identity();
    for k in 0..steps {
        let t = eta0 + h * T::from_usize(k).unwrap();
        let g1 = generator(n, m, background.alpha_clamped(t + c1 * h));
        let g2 = generator(n, m, background.alpha_clamped(t + c2 * h));
        let first = (g1.scale_real(a * h) + g2.scale_real(b * h)).exp_su2();
        let second = (g1.scale_real(b * h) + g2.scale_real(a * h)).exp_su2();
        phi = second * first * phi;
    }
    Ok(ModePropagator { matrix: phi, from_time: eta0, to_time: eta, mode: n, tolerance: T::zero(), steps })
}

/// Applies a propagator to a state whose time matches its start time.
pub fn evolve_state<T: Real>(state: &ModeState<T>, propagator: &ModePropagator<T>) -> Result<ModeState<T>> {
    if state.time != propagator.from_time {
        return Err(Error::TimeMismatch { state: state.time.as_f64(), propagator: propagator.from_time.as_f64() });
    }
    let [x, ybar] = propagator.matrix.apply([state.x, state.ybar]);
    Ok(ModeState { x, ybar, time: propagator.to_time })
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order solution minus embedded fourth-order solution.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// Integrates Y′ = G(t) Y, Y(t0) = I, to t1 with error-per-unit-step control:
/// each accepted step satisfies ‖local error estimate‖ ≤ tol·|h|. Step sizes
/// follow a PI controller. Returns Y(t1) and the number of accepted steps.
pub(crate) fn dormand_prince<T: Real, G>(gen: G, t0: T, t1: T, tol: T, max_steps: usize) -> Result<(Mat2<T>, usize)>
where
    G: Fn(T) -> Mat2<T>,
{
    let span = t1 - t0;
    let dir = span.signum();
    let c: [T; 7] = C.map(T::lit);
    let a: [[T; 6]; 7] = A.map(|row| row.map(T::lit));
    let e: [T; 7] = E.map(T::lit);

    let safety = T::lit(0.9);
    let (fac_min, fac_max) = (T::lit(0.2), T::lit(5.0));
    // The normalised error scales like h⁴ under error-per-unit-step control.
    let (beta1, beta2) = (T::lit(0.7 / 4.0), T::lit(0.4 / 4.0));

    let mut t = t0;
    let mut y = Mat2::identity();
    let mut k1 = gen(t) * y;
    let scale = gen(t).norm_inf().max(T::one());
    let mut h = (tol.powf(T::lit(0.2)) / scale).min(span.abs()) * dir;
    let mut err_prev = T::one();
    let mut accepted = 0usize;
    let mut attempts = 0usize;

    while (t1 - t) * dir > T::zero() {
        if attempts >= max_steps {
            return Err(Error::TooManySteps { steps: max_steps, eta: t.as_f64() });
        }
        attempts += 1;
        let remaining = t1 - t;
        let last = h.abs() >= remaining.abs();
        if last {
            h = remaining;
        }
        if h.abs() <= T::lit(8.0) * T::epsilon() * t.abs().max(T::one()) && !last {
            return Err(Error::StepUnderflow { eta: t.as_f64() });
        }

        let mut k = [Mat2::zero(); 7];
        k[0] = k1;
        for s in 1..7 {
            let mut acc = y;
            for (j, kj) in k.iter().enumerate().take(s) {
                if a[s][j] != T::zero() {
                    acc = acc + kj.scale_real(a[s][j] * h);
                }
            }
            k[s] = gen(t + c[s] * h) * acc;
        }
        // Row 7 of the tableau is the fifth-order weight vector; k[6] is FSAL.
        let mut y_new = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            if a[6][j] != T::zero() {
                y_new = y_new + kj.scale_real(a[6][j] * h);
            }
        }
        let k_last = gen(t + h) * y_new;
        k[6] = k_last;
        let mut err_m = Mat2::zero();
        for (j, kj) in k.iter().enumerate() {
            if e[j] != T::zero() {
                err_m = err_m + kj.scale_real(e[j] * h);
            }
        }
        let err = err_m.max_abs() / (tol * h.abs());

        if !err.is_finite() {
            h = h * fac_min;
            continue;
        }
        if err <= T::one() {
            t = if last { t1 } else { t + h };
            y = y_new;
            k1 = k_last;
            accepted += 1;
            let err_c = err.max(T::lit(1e-10));
            let fac = safety * err_c.powf(-beta1) * err_prev.powf(beta2);
            h = h * fac.max(fac_min).min(fac_max);
            err_prev = err_c.max(T::lit(1e-4));
        } else {
            let fac = safety * err.powf(-T::lit(0.25));
            h = h * fac.max(fac_min).min(T::one());
        }
    }
    Ok((y, accepted))
}
