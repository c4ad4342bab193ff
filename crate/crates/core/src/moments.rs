//! Ordinary and escort (normalized) moments of q-Gaussians: closed forms
//! next to quadrature values, compared in [`MomentReport`]s.
//!
//! Central moments are taken about `m`. Every q-Gaussian is symmetric about
//! `m`, so odd central moments (escort or not) vanish and `m` is also the
//! escort mean.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::QuadratureResult;
use crate::qgaussian::QGaussianParams;

/// Default absolute tolerance for moment quadratures.
pub const MOMENT_TOL: f64 = 1e-11;

/// Upper end of the window where the mean exists.
pub const MEAN_Q_MAX: f64 = 2.0;
/// Upper end of the window where the variance is finite.
pub const VARIANCE_Q_MAX: f64 = 5.0 / 3.0;
/// Upper end of the window where the fourth moment is finite.
pub const FOURTH_MOMENT_Q_MAX: f64 = 7.0 / 5.0;
/// Window of `q` where the escort fourth moment (power `4q - 3`) exists.
/// Below `q = 3/4` the power is negative, but `integral of f^{4q-3}` stays
/// finite near the support edges as long as `q > 2/3`.
pub const NORMALIZED_KURTOSIS_WINDOW: (f64, f64) = (2.0 / 3.0, 3.0);

/// A closed-form value next to its quadrature counterpart.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub name: String,
    #[serde(with = "crate::serde_f64")]
    pub closed: f64,
    #[serde(with = "crate::serde_f64")]
    pub oracle: f64,
    #[serde(with = "crate::serde_f64")]
    pub oracle_error: f64,
    /// `None` when either value is not finite.
    pub abs_err: Option<f64>,
    pub rel_err: Option<f64>,
    pub oracle_converged: bool,
}

impl MomentReport {
    /// True when both values are finite, the oracle converged, and they agree
    /// to relative tolerance `rtol` (absolute `rtol` near zero).
    pub fn agrees(&self, rtol: f64) -> bool {
        self.oracle_converged
            && self
                .abs_err
                .is_some_and(|e| e <= rtol * self.closed.abs().max(1.0))
    }
}

pub fn moment_report(name: impl Into<String>, closed: f64, oracle: &QuadratureResult) -> MomentReport {
    let both_finite = closed.is_finite() && oracle.value.is_finite();
    let abs_err = both_finite.then(|| (closed - oracle.value).abs());
    let rel_err = abs_err.map(|e| {
        if closed == 0.0 {
            e
        } else {
            e / closed.abs()
        }
    });
    MomentReport {
        name: name.into(),
        closed,
        oracle: oracle.value,
        oracle_error: oracle.error_estimate,
        abs_err,
        rel_err,
        oracle_converged: oracle.converged,
    }
}

/// `integral of x^n pdf(x)`.
pub fn raw_moment_oracle(p: &QGaussianParams, n: u32, tol: f64) -> QuadratureResult {
    unnormalized_q_moment(p, n, 1.0, tol)
}

/// `integral of (x - m)^n pdf(x)`.
pub fn central_moment_oracle(p: &QGaussianParams, n: u32, tol: f64) -> QuadratureResult {
    unnormalized_central_q_moment(p, n, 1.0, tol)
}

/// `integral of x^n pdf(x)^power`.
pub fn unnormalized_q_moment(p: &QGaussianParams, n: u32, power: f64, tol: f64) -> QuadratureResult {
    let n = n as i32;
    p.integrate_power(|x| x.powi(n), power, tol)
}

/// `integral of (x - m)^n pdf(x)^power`.
pub fn unnormalized_central_q_moment(p: &QGaussianParams, n: u32, power: f64, tol: f64) -> QuadratureResult {
    let n = n as i32;
    p.integrate_power(|x| (x - p.m).powi(n), power, tol)
}

/// `integral of (x - m)^n pdf^power / nu_power`, both integrals by quadrature.
pub fn escort_central_moment_oracle(p: &QGaussianParams, n: u32, power: f64, tol: f64) -> Result<QuadratureResult> {
    let tol = tol * p.prefactor.powf(power);
    let nu = p.nu_p_oracle(power, tol)?;
    Ok(unnormalized_central_q_moment(p, n, power, tol).scaled(1.0 / nu))
}

pub fn mean_closed(p: &QGaussianParams) -> f64 {
    p.m
}

/// `(3-q)/(5-3q) sigma^2`, for `q < 5/3`.
pub fn variance_closed(p: &QGaussianParams) -> Result<f64> {
    if !(p.q < VARIANCE_Q_MAX) {
        return Err(Error::domain(format!(
            "the variance is infinite for q >= 5/3, got q = {}",
            p.q
        )));
    }
    Ok((3.0 - p.q) / (5.0 - 3.0 * p.q) * p.sigma2)
}

/// `E(Y^4) = 3(3-q)^2/((5-3q)(7-5q))` for `Y ~ N_q(0, 1)`, `q < 7/5`.
pub fn fourth_moment_closed(q: f64) -> Result<f64> {
    check_fourth_window(q)?;
    Ok(3.0 * (3.0 - q).powi(2) / ((5.0 - 3.0 * q) * (7.0 - 5.0 * q)))
}

/// `E(Y^4) / E(Y^2)^2 = 3(5-3q)/(7-5q)`, for `q < 7/5`.
pub fn kurtosis_closed(q: f64) -> Result<f64> {
    check_fourth_window(q)?;
    Ok(3.0 * (5.0 - 3.0 * q) / (7.0 - 5.0 * q))
}

/// `E(X^n)` for `X ~ N_q(m, sigma^2)` and `n <= 4`, built from the central
/// moments. Errors outside the window where the moment exists.
pub fn raw_moment_closed(p: &QGaussianParams, n: u32) -> Result<f64> {
    if n > 4 {
        return Err(Error::domain(format!("closed-form moments go up to order 4, got {n}")));
    }
    let mut central = [1.0, 0.0, 0.0, 0.0, 0.0];
    if n >= 1 && !(p.q < MEAN_Q_MAX) {
        return Err(Error::domain(format!("the mean is undefined for q >= 2, got q = {}", p.q)));
    }
    if n >= 2 {
        central[2] = variance_closed(p)?;
    }
    if n >= 4 {
        central[4] = fourth_moment_closed(p.q)? * p.sigma2 * p.sigma2;
    }
    let mut binom = 1.0;
    let mut total = 0.0;
    for k in 0..=n {
        total += binom * p.m.powi((n - k) as i32) * central[k as usize];
        binom = binom * f64::from(n - k) / f64::from(k + 1);
    }
    Ok(total)
}

fn check_fourth_window(q: f64) -> Result<()> {
    if q < FOURTH_MOMENT_Q_MAX {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "the fourth moment is infinite for q >= 7/5, got q = {q}"
        )))
    }
}

fn check_unnormalized_window(q: f64) -> Result<()> {
    if q > 0.0 && q < 3.0 {
        Ok(())
    } else {
        Err(Error::domain(format!("q-expectations need 0 < q < 3, got {q}")))
    }
}

/// Unnormalized q-expectation `E_q(X) = integral of x pdf^q`:
/// `m (3-q)^{(3-q)/2} / (2 (sigma C_q)^{q-1})`.
pub fn eq_x_closed(p: &QGaussianParams) -> Result<f64> {
    check_unnormalized_window(p.q)?;
    let q = p.q;
    let sc = p.sigma() * p.c_q;
    Ok(p.m * (3.0 - q).powf(0.5 * (3.0 - q)) / (2.0 * sc.powf(q - 1.0)))
}

/// `E_{2q-1}(X^2) = integral of x^2 pdf^{2q-1}`:
/// `((3-q) sigma^2 + (q+1) m^2) / (4 q (3-q)^{q-2} (sigma C_q)^{2q-2})`.
pub fn e2qm1_x2_closed(p: &QGaussianParams) -> Result<f64> {
    check_unnormalized_window(p.q)?;
    let q = p.q;
    let sc = p.sigma() * p.c_q;
    let num = (3.0 - q) * p.sigma2 + (q + 1.0) * p.m * p.m;
    Ok(num / (4.0 * q * (3.0 - q).powf(q - 2.0) * sc.powf(2.0 * q - 2.0)))
}

/// Escort mean `integral of x pdf^q / nu_q`, which is `m`.
pub fn normalized_mean(p: &QGaussianParams) -> Result<f64> {
    p.escort_map(p.q)?;
    Ok(p.m)
}

/// Escort q-variance `integral of (x-m)^2 pdf^{2q-1} / nu_{2q-1}`:
/// `(3-q)/(q+1) sigma^2`, for `q > 1/2`.
pub fn normalized_q_variance(p: &QGaussianParams) -> Result<f64> {
    p.escort_map(2.0 * p.q - 1.0)?;
    Ok((3.0 - p.q) / (p.q + 1.0) * p.sigma2)
}

/// Escort kurtosis `E_{4q-3}(Y^4) / E_{2q-1}(Y^2)^2 = 3(q+1)^2/((5q-3)(3q-1))`,
/// for `2/3 < q < 3`.
pub fn normalized_kurtosis(q: f64) -> Result<f64> {
    let (lo, hi) = NORMALIZED_KURTOSIS_WINDOW;
    if !(q > lo && q < hi) {
        return Err(Error::domain(format!(
            "the escort kurtosis is defined for 2/3 < q < 3, got q = {q}"
        )));
    }
    Ok(3.0 * (q + 1.0).powi(2) / ((5.0 * q - 3.0) * (3.0 * q - 1.0)))
}

/// Escort kurtosis of `N_q(0, 1)` from four quadratures.
pub fn normalized_kurtosis_oracle(q: f64, tol: f64) -> Result<QuadratureResult> {
    // The powers may be zero or negative here, so the escort normalizers are
    // integrated directly rather than through `nu_p_oracle`.
    let p = QGaussianParams::standard(q)?;
    let (p4, p2) = (4.0 * q - 3.0, 2.0 * q - 1.0);
    // `pdf^power` scales like `a^power`; tolerances follow so that they stay
    // relative to the size of each integral.
    let scaled = |power: f64| tol * p.prefactor.powf(power);
    let parts = [
        unnormalized_central_q_moment(&p, 4, p4, scaled(p4)),
        unnormalized_central_q_moment(&p, 0, p4, scaled(p4)),
        unnormalized_central_q_moment(&p, 2, p2, scaled(p2)),
        unnormalized_central_q_moment(&p, 0, p2, scaled(p2)),
    ];
    let [m4, n4, m2, n2] = parts.map(|r| r.value);
    let value = (m4 / n4) / (m2 / n2).powi(2);
    let rel: f64 = parts.iter().zip([1.0, 1.0, 2.0, 2.0]).map(|(r, w)| w * r.error_estimate / r.value.abs()).sum();
    Ok(QuadratureResult {
        value,
        error_estimate: value.abs() * rel,
        evaluations: parts.iter().map(|r| r.evaluations).sum(),
        converged: parts.iter().all(|r| r.converged) && value.is_finite(),
    })
}

/// Every closed form available at `p`, each against its oracle.
pub fn moment_reports(p: &QGaussianParams, tol: f64) -> Vec<MomentReport> {
    let mut out = Vec::new();
    if p.q < MEAN_Q_MAX {
        out.push(moment_report("mean", mean_closed(p), &raw_moment_oracle(p, 1, tol)));
    }
    if let Ok(v) = variance_closed(p) {
        out.push(moment_report("variance", v, &central_moment_oracle(p, 2, tol)));
    }
    if let Ok(k) = kurtosis_closed(p.q) {
        let v = variance_closed(p).expect("the variance window contains the kurtosis window");
        let m4 = central_moment_oracle(p, 4, tol);
        out.push(moment_report("fourth_central_moment", k * v * v, &m4));
    }
    if let Ok(e) = eq_x_closed(p) {
        out.push(moment_report("eq_x", e, &unnormalized_q_moment(p, 1, p.q, tol)));
    }
    if let Ok(e) = e2qm1_x2_closed(p) {
        out.push(moment_report("e2qm1_x2", e, &unnormalized_q_moment(p, 2, 2.0 * p.q - 1.0, tol)));
    }
    if let Ok(mean) = normalized_mean(p) {
        if let Ok(o) = p.nu_p_oracle(p.q, tol) {
            let r = unnormalized_q_moment(p, 1, p.q, tol).scaled(1.0 / o);
            out.push(moment_report("normalized_mean", mean, &r));
        }
    }
    if let Ok(v) = normalized_q_variance(p) {
        if let Ok(r) = escort_central_moment_oracle(p, 2, 2.0 * p.q - 1.0, tol) {
            out.push(moment_report("normalized_q_variance", v, &r));
        }
    }
    if let Ok(k) = normalized_kurtosis(p.q) {
        if let Ok(r) = normalized_kurtosis_oracle(p.q, tol) {
            out.push(moment_report("normalized_kurtosis", k, &r));
        }
    }
    out
}
