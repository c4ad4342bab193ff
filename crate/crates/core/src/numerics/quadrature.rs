//! Adaptive Gauss-Kronrod (7/15) quadrature on finite and infinite intervals.
//!
//! Finite intervals are bisected globally, always splitting the subinterval
//! with the largest error estimate. An infinite interval is split into a
//! finite core around a user-supplied centre and one or two tails. Each tail
//! is mapped by `x = x0 + w (e^u - 1)` and integrated window by window in
//! `u`. A power-law tail `|x|^{-p}` becomes a geometric sequence of window
//! contributions with ratio `e^{-(p-1)}`, so the remaining mass beyond the
//! last window is extrapolated from that ratio and the error estimate is the
//! disagreement between successive extrapolations. Window contributions that
//! stop shrinking flag the integral as divergent.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

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

/// Gauss weights for the nodes `XGK[1], XGK[3], XGK[5]` and the centre.
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// Outcome of a numerical integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    #[serde(with = "crate::serde_f64")]
    pub value: f64,
    #[serde(with = "crate::serde_f64")]
    pub error_estimate: f64,
    pub evaluations: usize,
    /// `true` only when `error_estimate <= tol` and nothing diverged.
    pub converged: bool,
}

impl QuadratureResult {
    /// Scale value and error by a constant factor.
    pub fn scaled(self, factor: f64) -> Self {
        QuadratureResult {
            value: self.value * factor,
            error_estimate: self.error_estimate * factor.abs(),
            ..self
        }
    }
}

/// Configuration for the adaptive integrator.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    /// Absolute tolerance on the total error estimate.
    pub tol: f64,
    /// Maximum number of subintervals for each finite piece.
    pub max_subdivisions: usize,
    /// Location of the integrand's bulk; infinite intervals are split around it.
    pub center: f64,
    /// Width of the integrand's bulk.
    pub scale: f64,
    /// Maximum number of unit windows (in the log-mapped variable) per tail.
    pub max_tail_windows: usize,
}

impl Quadrature {
    /// Half-width of the finite core, in units of `scale`.
    const CORE_HALF_WIDTH: f64 = 4.0;

    pub fn new(tol: f64) -> Self {
        Quadrature {
            tol,
            max_subdivisions: 2000,
            center: 0.0,
            scale: 1.0,
            max_tail_windows: 120,
        }
    }

    pub fn centered(mut self, center: f64, scale: f64) -> Self {
        self.center = center;
        self.scale = scale;
        self
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F, a: f64, b: f64) -> QuadratureResult {
        if a == b {
            return QuadratureResult {
                value: 0.0,
                error_estimate: 0.0,
                evaluations: 0,
                converged: true,
            };
        }
        if a > b {
            let r = self.integrate(f, b, a);
            return QuadratureResult { value: -r.value, ..r };
        }
        let width = Self::CORE_HALF_WIDTH * self.scale;
        match (a.is_finite(), b.is_finite()) {
            (true, true) => adaptive(&f, a, b, self.tol, self.max_subdivisions),
            (false, false) => {
                let (lo, hi) = (self.center - width, self.center + width);
                let core = adaptive(&f, lo, hi, 0.5 * self.tol, self.max_subdivisions);
                let right = self.tail(&f, hi, 1.0, width, 0.25 * self.tol);
                let left = self.tail(&f, lo, -1.0, width, 0.25 * self.tol);
                combine(self.tol, &[core, left, right])
            }
            (true, false) => {
                let hi = a.max(self.center) + width;
                let core = adaptive(&f, a, hi, 0.5 * self.tol, self.max_subdivisions);
                let right = self.tail(&f, hi, 1.0, width, 0.5 * self.tol);
                combine(self.tol, &[core, right])
            }
            (false, true) => {
                let lo = b.min(self.center) - width;
                let core = adaptive(&f, lo, b, 0.5 * self.tol, self.max_subdivisions);
                let left = self.tail(&f, lo, -1.0, width, 0.5 * self.tol);
                combine(self.tol, &[core, left])
            }
        }
    }

    /// Integral of `f` from `x0` to `dir * inf`, oriented so that the result
    /// is the mass on that side.
    fn tail<F: Fn(f64) -> f64>(&self, f: &F, x0: f64, dir: f64, w: f64, tol: f64) -> QuadratureResult {
        // Far from the bulk the natural length scale is the distance to it.
        let w = w.max((x0 - self.center).abs());
        let g = |u: f64| {
            let eu = u.exp();
            let v = f(x0 + dir * w * (eu - 1.0)) * w * eu;
            if v.is_finite() {
                v
            } else {
                f64::NAN
            }
        };
        let window_tol = tol / 64.0;
        let mut total = 0.0;
        let mut err = 0.0;
        let mut evals = 0;
        let mut prev: Option<f64> = None;
        let mut prev_remainder: Option<f64> = None;
        let mut growing = 0;
        for k in 0..self.max_tail_windows {
            let u0 = k as f64;
            let r = adaptive(&g, u0, u0 + 1.0, window_tol, 200);
            evals += r.evaluations;
            if !r.value.is_finite() {
                return diverged(total, evals);
            }
            total += r.value;
            err += r.error_estimate;

            let Some(p) = prev else {
                prev = Some(r.value);
                continue;
            };
            prev = Some(r.value);
            if r.value == 0.0 && p == 0.0 {
                return QuadratureResult {
                    value: total,
                    error_estimate: err,
                    evaluations: evals,
                    converged: err <= tol,
                };
            }
            let ratio = if p == 0.0 { f64::INFINITY } else { (r.value / p).abs() };
            if ratio >= 1.0 {
                growing += 1;
                prev_remainder = None;
                if k >= 8 && growing >= 3 {
                    return diverged(total, evals);
                }
                continue;
            }
            growing = 0;
            let remainder = r.value * ratio / (1.0 - ratio);
            if let Some(pr) = prev_remainder {
                let extrapolation_err = (pr - r.value - remainder).abs();
                if k >= 4 && extrapolation_err + err <= tol {
                    return QuadratureResult {
                        value: total + remainder,
                        error_estimate: err + extrapolation_err,
                        evaluations: evals,
                        converged: true,
                    };
                }
            }
            prev_remainder = Some(remainder);
        }
        QuadratureResult {
            value: total,
            error_estimate: f64::INFINITY,
            evaluations: evals,
            converged: false,
        }
    }
}

fn diverged(value: f64, evaluations: usize) -> QuadratureResult {
    QuadratureResult {
        value,
        error_estimate: f64::INFINITY,
        evaluations,
        converged: false,
    }
}

fn combine(tol: f64, parts: &[QuadratureResult]) -> QuadratureResult {
    let value = parts.iter().map(|p| p.value).sum();
    let error_estimate: f64 = parts.iter().map(|p| p.error_estimate).sum();
    QuadratureResult {
        value,
        error_estimate,
        evaluations: parts.iter().map(|p| p.evaluations).sum(),
        converged: parts.iter().all(|p| p.converged) && error_estimate <= tol,
    }
}

/// Integrate `f` over `[a, b]`; infinite endpoints allowed. The bulk of the
/// integrand is assumed to sit near the origin at unit scale; use
/// [`Quadrature::centered`] otherwise.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> QuadratureResult {
    Quadrature::new(tol).integrate(f, a, b)
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}

impl Eq for Segment {}

impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Segment {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut abs_sum = kronrod.abs();
    let mut fv = [(0.0, 0.0); 7];
    for (j, (&x, &w)) in XGK[..7].iter().zip(&WGK[..7]).enumerate() {
        let dx = half * x;
        let (f1, f2) = (f(center - dx), f(center + dx));
        kronrod += w * (f1 + f2);
        abs_sum += w * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
        fv[j] = (f1, f2);
    }
    let mean = 0.5 * kronrod;
    let asc = WGK[7] * (fc - mean).abs()
        + fv
            .iter()
            .zip(&WGK[..7])
            .map(|(&(f1, f2), w)| w * ((f1 - mean).abs() + (f2 - mean).abs()))
            .sum::<f64>();

    let value = kronrod * half;
    let res_abs = abs_sum * half.abs();
    let res_asc = asc * half.abs();
    let mut error = ((kronrod - gauss) * half).abs();
    if res_asc != 0.0 && error != 0.0 {
        error = res_asc * (200.0 * error / res_asc).powf(1.5).min(1.0);
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        error = error.max(50.0 * f64::EPSILON * res_abs);
    }
    if !value.is_finite() {
        error = f64::INFINITY;
    }
    Segment { a, b, value, error }
}

/// Globally adaptive bisection on a finite interval.
fn adaptive<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64, max_subdivisions: usize) -> QuadratureResult {
    let first = gk15(f, a, b);
    let mut evals = 15;
    let mut value = first.value;
    let mut error = first.error;
    let mut heap = BinaryHeap::new();
    heap.push(first);

    while error > tol && heap.len() < max_subdivisions {
        let Some(worst) = heap.pop() else { break };
        let mid = 0.5 * (worst.a + worst.b);
        if !(worst.a < mid && mid < worst.b) {
            heap.push(worst);
            break;
        }
        let left = gk15(f, worst.a, mid);
        let right = gk15(f, mid, worst.b);
        evals += 30;
        value += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        if !error.is_finite() {
            // Re-sum to recover from a previously infinite segment.
            value = heap.iter().map(|s| s.value).sum();
            error = heap.iter().map(|s| s.error).sum();
        }
    }
    // Re-sum to avoid drift from the running updates.
    let value_sum: f64 = heap.iter().map(|s| s.value).sum();
    let error_sum: f64 = heap.iter().map(|s| s.error).sum();
    if value_sum.is_finite() {
        value = value_sum;
    }
    error = error_sum;
    QuadratureResult {
        value,
        error_estimate: error,
        evaluations: evals,
        converged: error <= tol && value.is_finite(),
    }
}
