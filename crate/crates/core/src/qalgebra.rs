//! The q-deformed algebra: q-exponential, q-logarithm, q-sum, q-product,
//! their inverses and the n-fold compositions.
//!
//! Values that may diverge (the q-exponential and the q-product for `q > 1`)
//! are returned as plain `f64` where `f64::INFINITY` marks the pole. For
//! `q < 1` the `[.]_+` cutoff yields `0` instead.
//!
//! Every operation has an exact classical branch: whenever `|q - 1|` is below
//! [`CLASSICAL_BAND`], ordinary `exp`, `ln`, `+` and `*` are used.

use crate::error::{Error, Result};

/// Half-width of the band around `q = 1` routed to classical arithmetic.
pub const CLASSICAL_BAND: f64 = 1e-12;

#[inline]
pub fn is_classical(q: f64) -> bool {
    (q - 1.0).abs() < CLASSICAL_BAND
}

/// `[1 + d]_+^{1/(1-q)}` with the pole convention: a non-positive bracket
/// maps to `0` when `q < 1` and to `+inf` when `q > 1`.
///
/// Taking `d` rather than the bracket keeps full precision near `q = 1`.
#[inline]
fn cutoff_pow(q: f64, d: f64) -> f64 {
    if d > -1.0 {
        (d.ln_1p() / (1.0 - q)).exp()
    } else if q < 1.0 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `x^{1-q} - 1`
#[inline]
fn pow_m1(q: f64, x: f64) -> f64 {
    ((1.0 - q) * x.ln()).exp_m1()
}

/// q-exponential `e_q(x) = [1 + (1-q) x]_+^{1/(1-q)}`.
pub fn q_exp(q: f64, x: f64) -> f64 {
    if is_classical(q) {
        return x.exp();
    }
    cutoff_pow(q, (1.0 - q) * x)
}

/// q-logarithm `ln_q(x) = (x^{1-q} - 1) / (1 - q)` for `x > 0`.
pub fn q_log(q: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("q-logarithm needs x > 0, got {x}")));
    }
    if is_classical(q) {
        return Ok(x.ln());
    }
    Ok(pow_m1(q, x) / (1.0 - q))
}

/// q-sum `x (+)_q y = x + y + (1-q) x y`.
pub fn q_sum(q: f64, x: f64, y: f64) -> f64 {
    if is_classical(q) {
        return x + y;
    }
    x + y + (1.0 - q) * x * y
}

/// q-product `x (x)_q y = [x^{1-q} + y^{1-q} - 1]_+^{1/(1-q)}` for positive operands.
pub fn q_prod(q: f64, x: f64, y: f64) -> Result<f64> {
    if !(x > 0.0 && y > 0.0) {
        return Err(Error::domain(format!(
            "q-product needs positive operands, got {x} and {y}"
        )));
    }
    if is_classical(q) {
        return Ok(x * y);
    }
    Ok(cutoff_pow(q, pow_m1(q, x) + pow_m1(q, y)))
}

/// Additive inverse under the q-sum: `-x / (1 + (1-q) x)`.
pub fn q_neg(q: f64, x: f64) -> Result<f64> {
    if is_classical(q) {
        return Ok(-x);
    }
    let denom = 1.0 + (1.0 - q) * x;
    if denom == 0.0 {
        return Err(Error::Pole(format!(
            "q-negation of {x} at q = {q}: 1 + (1-q)x vanishes"
        )));
    }
    Ok(-x / denom)
}

/// Multiplicative inverse under the q-product: `[2 - x^{1-q}]_+^{1/(1-q)}`.
pub fn q_inv(q: f64, x: f64) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!("q-inverse needs x > 0, got {x}")));
    }
    if is_classical(q) {
        return Ok(1.0 / x);
    }
    Ok(cutoff_pow(q, -pow_m1(q, x)))
}

/// `t (+)_q t (+)_q ... (+)_q t` with `n` terms. `n = 0` gives the identity `0`.
pub fn q_sum_fold(q: f64, t: f64, n: u32) -> f64 {
    if is_classical(q) {
        return f64::from(n) * t;
    }
    let d = (1.0 - q) * t;
    if d > -1.0 {
        (f64::from(n) * d.ln_1p()).exp_m1() / (1.0 - q)
    } else {
        ((1.0 + d).powi(n as i32) - 1.0) / (1.0 - q)
    }
}

/// `t (x)_q t (x)_q ... (x)_q t` with `n` factors. `n = 0` gives the identity `1`.
pub fn q_prod_fold(q: f64, t: f64, n: u32) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::domain(format!("q-product power needs t > 0, got {t}")));
    }
    if is_classical(q) {
        return Ok(t.powi(n as i32));
    }
    Ok(cutoff_pow(q, f64::from(n) * pow_m1(q, t)))
}
