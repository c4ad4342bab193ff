//! Log-gamma, the Beta function and the q-Gaussian normalizer `C_q`.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln(2 pi) / 2`
const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8;

/// Band around `q = 1` where [`c_q`] returns `sqrt(pi)` directly; the Beta
/// arguments diverge there.
pub const CQ_CLASSICAL_BAND: f64 = 1e-6;

/// Natural log of the gamma function for `x > 0` (Lanczos, g = 7, n = 9).
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!("log-gamma needs finite x > 0, got {x}")));
    }
    if x == 1.0 || x == 2.0 {
        return Ok(0.0);
    }
    if x < 0.5 {
        // Reflection: Gamma(x) Gamma(1 - x) = pi / sin(pi x).
        return Ok((PI / (PI * x).sin()).ln() - lanczos_ln_gamma(1.0 - x));
    }
    Ok(lanczos_ln_gamma(x))
}

fn lanczos_ln_gamma(x: f64) -> f64 {
    let z = x - 1.0;
    let series = LANCZOS_COEF[1..]
        .iter()
        .enumerate()
        .fold(LANCZOS_COEF[0], |acc, (i, c)| acc + c / (z + i as f64 + 1.0));
    let t = z + LANCZOS_G + 0.5;
    HALF_LN_2PI + (z + 0.5) * t.ln() - t + series.ln()
}

/// `ln B(a, b)`.
pub fn log_beta(a: f64, b: f64) -> Result<f64> {
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::domain(format!(
            "Beta function needs positive arguments, got ({a}, {b})"
        )));
    }
    Ok(log_gamma(a)? + log_gamma(b)? - log_gamma(a + b)?)
}

/// Beta function `B(a, b)`, evaluated in log space.
pub fn beta_fn(a: f64, b: f64) -> Result<f64> {
    log_beta(a, b).map(f64::exp)
}

/// The normalizer `C_q = integral of e_q(-x^2) over the real line`, for `q < 3`.
pub fn c_q(q: f64) -> Result<f64> {
    if !(q < 3.0) {
        return Err(Error::domain(format!(
            "q must be < 3 (C_q diverges), got {q}"
        )));
    }
    if (q - 1.0).abs() < CQ_CLASSICAL_BAND {
        return Ok(PI.sqrt());
    }
    let lb = if q > 1.0 {
        log_beta((3.0 - q) / (2.0 * (q - 1.0)), 0.5)? - 0.5 * (q - 1.0).ln()
    } else {
        log_beta((2.0 - q) / (1.0 - q), 0.5)? - 0.5 * (1.0 - q).ln()
    };
    Ok(lb.exp())
}
