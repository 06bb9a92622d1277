//! Globally adaptive Gauss–Kronrod (7, 15) quadrature.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::num::Real;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];
/// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Single-panel Kronrod estimate and |K15 − G7|.
pub fn kronrod15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> (T, T) {
    let half = (b - a) * T::lit(0.5);
    let mid = (a + b) * T::lit(0.5);
    let fc = f(mid);
    let mut k = fc * T::lit(WGK[7]);
    let mut g = fc * T::lit(WG[3]);
    for j in 0..7 {
        let dx = half * T::lit(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        k = k + s * T::lit(WGK[j]);
        if j % 2 == 1 {
            g = g + s * T::lit(WG[j / 2]);
        }
    }
    (k * half, ((k - g) * half).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureOptions<T> {
    pub rel_tol: T,
    pub abs_tol: T,
    /// Initial panels are never wider than this.
    pub max_panel_width: Option<T>,
    pub max_panels: usize,
}

impl<T: Real> Default for QuadratureOptions<T> {
    fn default() -> Self {
        Self { rel_tol: T::lit(1e-10), abs_tol: T::lit(1e-14), max_panel_width: None, max_panels: 200_000 }
    }
}

impl<T: Real> QuadratureOptions<T> {
    pub fn with_rel_tol(mut self, rel_tol: T) -> Self {
        self.rel_tol = rel_tol;
        self
    }

    pub fn with_max_panel_width(mut self, width: T) -> Self {
        self.max_panel_width = Some(width);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate<T> {
    pub value: T,
    pub error: T,
    pub panels: usize,
}

struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

impl<T: Real> PartialEq for Panel<T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<T: Real> Eq for Panel<T> {}

impl<T: Real> PartialOrd for Panel<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: Real> Ord for Panel<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.as_f64().total_cmp(&other.error.as_f64())
    }
}

/// ∫ₐᵇ f, bisecting the panel with the largest error estimate until the
/// total estimate meets max(abs_tol, rel_tol·|value|).
pub fn integrate<T: Real>(f: impl Fn(T) -> T, a: T, b: T, options: &QuadratureOptions<T>) -> Result<Estimate<T>> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature { a: a.as_f64(), b: b.as_f64() });
    }
    if a == b {
        return Ok(Estimate { value: T::zero(), error: T::zero(), panels: 0 });
    }
    let count = match options.max_panel_width {
        Some(w) if w > T::zero() => ((b - a).abs() / w).ceil().to_usize().unwrap_or(1).max(1),
        _ => 1,
    };
    let width = (b - a) / T::from_usize(count).unwrap();
    let mut heap = BinaryHeap::with_capacity(count * 2);
    for i in 0..count {
        let lo = a + width * T::from_usize(i).unwrap();
        let hi = if i + 1 == count { b } else { lo + width };
        let (value, error) = kronrod15(&f, lo, hi);
        heap.push(Panel { a: lo, b: hi, value, error });
    }
    let total = |heap: &BinaryHeap<Panel<T>>| {
        heap.iter().fold((T::zero(), T::zero()), |(v, e), p| (v + p.value, e + p.error))
    };
    let (mut value, mut error) = total(&heap);
    while error > options.abs_tol.max(options.rel_tol * value.abs()) {
        if heap.len() >= options.max_panels {
            return Err(Error::Quadrature { a: a.as_f64(), b: b.as_f64() });
        }
        let worst = heap.pop().unwrap();
        let mid = (worst.a + worst.b) * T::lit(0.5);
        if !(mid > worst.a.min(worst.b) && mid < worst.a.max(worst.b)) {
            // Panel can no longer be split in this precision.
            heap.push(worst);
            break;
        }
        let (v1, e1) = kronrod15(&f, worst.a, mid);
        let (v2, e2) = kronrod15(&f, mid, worst.b);
        heap.push(Panel { a: worst.a, b: mid, value: v1, error: e1 });
        heap.push(Panel { a: mid, b: worst.b, value: v2, error: e2 });
        value = value - worst.value + v1 + v2;
        error = error - worst.error + e1 + e2;
        if heap.len() % 256 == 0 {
            // Resum to keep the running totals from drifting.
            (value, error) = total(&heap);
        }
    }
    let (value, error) = total(&heap);
    Ok(Estimate { value, error, panels: heap.len() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomials_of_degree_up_to_22_are_exact_on_one_panel() {
        let (v, _) = kronrod15(&|x: f64| x.powi(22), 0.0, 1.0);
        assert!((v - 1.0 / 23.0).abs() < 1e-15);
    }

    #[test]
    fn smooth_and_kinked_integrands() {
        let opts = QuadratureOptions::default().with_rel_tol(1e-12);
        let e = integrate(f64::exp, 0.0, 1.0, &opts).unwrap();
        assert!((e.value - (1f64.exp() - 1.0)).abs() < 1e-13);
        let e = integrate(|t: f64| t.cos().abs(), 0.0, 2.0, &opts).unwrap();
        assert!((e.value - (2.0 - 2f64.sin())).abs() < 1e-11);
        let e = integrate(|t: f64| t.sqrt(), 0.0, 1.0, &opts).unwrap();
        assert!((e.value - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn oscillatory_integrand_with_panel_cap() {
        let w = 400.0;
        let opts = QuadratureOptions::default().with_rel_tol(1e-12).with_max_panel_width(std::f64::consts::PI / (4.0 * w));
        let e = integrate(|t: f64| (w * t).sin().powi(2), 0.0, 1.0, &opts).unwrap();
        let exact = 0.5 - (2.0 * w).sin() / (4.0 * w);
        assert!((e.value - exact).abs() < 1e-12);
    }

    #[test]
    fn reversed_and_empty_intervals() {
        let opts = QuadratureOptions::default();
        assert_eq!(integrate(|t: f64| t, 1.0, 1.0, &opts).unwrap().value, 0.0);
        let e = integrate(|t: f64| t, 1.0, 0.0, &opts).unwrap();
        assert!((e.value + 0.5).abs() < 1e-15);
        assert!(integrate(|t: f64| t, 0.0, f64::INFINITY, &opts).is_err());
    }
}
