//! The q-Gaussian family `N_q(m, sigma^2)`.
//!
//! The density is `a * e_q(-beta (x - m)^2 / sigma^2)` with `beta = 1/(3-q)`
//! and prefactor `a = sqrt(beta) / (sigma C_q)`. It is the normal density at
//! `q = 1`, has compact support for `q < 1` and power-law tails for
//! `1 < q < 3`, where it coincides with a Student-t law with
//! `nu = (3-q)/(q-1)` degrees of freedom.

mod distribution;

pub use distribution::QGaussian;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{Quadrature, QuadratureResult};
use crate::qalgebra::{is_classical, q_exp};
use crate::special::c_q;

/// Validated `(q, m, sigma^2)` with the derived quantities of the density.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QGaussianParams {
    pub q: f64,
    pub m: f64,
    pub sigma2: f64,
    /// `1 / (3 - q)`
    pub beta: f64,
    pub c_q: f64,
    /// Density at the mode, `sqrt(beta) / (sigma C_q)`.
    pub prefactor: f64,
    pub support: Support,
}

/// Closed support interval; both ends are infinite for `q >= 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Support {
    #[serde(with = "crate::serde_f64")]
    pub lo: f64,
    #[serde(with = "crate::serde_f64")]
    pub hi: f64,
}

impl Support {
    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

/// Parameters of the q-Gaussian proportional to a power of another one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EscortMap {
    pub power: f64,
    pub q_prime: f64,
    pub sigma2_prime: f64,
}

/// Shorthand for [`QGaussianParams::new`].
pub fn make_params(q: f64, m: f64, sigma2: f64) -> Result<QGaussianParams> {
    QGaussianParams::new(q, m, sigma2)
}

impl QGaussianParams {
    pub fn new(q: f64, m: f64, sigma2: f64) -> Result<Self> {
        if !(q < 3.0) || !q.is_finite() {
            return Err(Error::domain(format!(
                "q must be < 3 (the density is not normalizable), got {q}"
            )));
        }
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::domain(format!("sigma2 must be > 0, got {sigma2}")));
        }
        if !m.is_finite() {
            return Err(Error::domain(format!("m must be finite, got {m}")));
        }
        let beta = 1.0 / (3.0 - q);
        let c_q = c_q(q)?;
        let sigma = sigma2.sqrt();
        let prefactor = beta.sqrt() / (sigma * c_q);
        let support = if q < 1.0 && !is_classical(q) {
            let half = sigma / ((1.0 - q) * beta).sqrt();
            Support { lo: m - half, hi: m + half }
        } else {
            Support { lo: f64::NEG_INFINITY, hi: f64::INFINITY }
        };
        Ok(QGaussianParams { q, m, sigma2, beta, c_q, prefactor, support })
    }

    /// The standard q-Gaussian `N_q(0, 1)`.
    pub fn standard(q: f64) -> Result<Self> {
        Self::new(q, 0.0, 1.0)
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = x - self.m;
        self.prefactor * q_exp(self.q, -self.beta * z * z / self.sigma2)
    }

    /// Parameters of `c + d X` for `X ~ N_q(m, sigma^2)`.
    pub fn affine(&self, c: f64, d: f64) -> Result<Self> {
        if d == 0.0 || !d.is_finite() {
            return Err(Error::domain("affine map needs a finite non-zero slope"));
        }
        Self::new(self.q, c + d * self.m, d * d * self.sigma2)
    }

    /// `pdf^power` is proportional to the density of `N_{q'}(m, sigma'^2)` with
    /// `q' = 1 - (1-q)/power` and `sigma'^2 = sigma^2 beta' / (power beta)`.
    pub fn escort_map(&self, power: f64) -> Result<EscortMap> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::domain(format!("escort power must be > 0, got {power}")));
        }
        let q_prime = if is_classical(self.q) {
            1.0
        } else {
            1.0 - (1.0 - self.q) / power
        };
        if !(q_prime < 3.0) {
            return Err(Error::domain(format!(
                "escort image q' = {q_prime} is not < 3 (power {power} at q = {})",
                self.q
            )));
        }
        let beta_prime = 1.0 / (3.0 - q_prime);
        Ok(EscortMap {
            power,
            q_prime,
            sigma2_prime: self.sigma2 * beta_prime / (power * self.beta),
        })
    }

    /// The normalized escort density `pdf^power / nu_power` as a q-Gaussian.
    pub fn escort_params(&self, power: f64) -> Result<Self> {
        let e = self.escort_map(power)?;
        Self::new(e.q_prime, self.m, e.sigma2_prime)
    }

    /// `nu_p = integral of pdf^power`, in closed form:
    /// `a^p sigma C_{q'} / sqrt(p beta)`.
    pub fn nu_p_closed(&self, power: f64) -> Result<f64> {
        let e = self.escort_map(power)?;
        let c = c_q(e.q_prime)?;
        Ok(self.prefactor.powf(power) * self.sigma() * c / (power * self.beta).sqrt())
    }

    /// `nu_p` by quadrature over the support.
    pub fn nu_p_oracle(&self, power: f64, tol: f64) -> Result<f64> {
        if !(power > 0.0) {
            return Err(Error::domain(format!("escort power must be > 0, got {power}")));
        }
        let r = self.integrate_power(|_| 1.0, power, tol);
        if r.converged {
            Ok(r.value)
        } else {
            Err(Error::NonConvergence(format!(
                "integral of pdf^{power} at q = {} (estimate {}, error {})",
                self.q, r.value, r.error_estimate
            )))
        }
    }

    /// Quadrature configured for this density's location and scale.
    pub fn quadrature(&self, tol: f64) -> Quadrature {
        Quadrature::new(tol).centered(self.m, self.sigma())
    }

    /// Integrate `g` over the support of this density.
    pub fn integrate<F: Fn(f64) -> f64>(&self, g: F, tol: f64) -> QuadratureResult {
        self.quadrature(tol).integrate(g, self.support.lo, self.support.hi)
    }

    /// `integral of g(x) pdf(x)^power` over the support.
    ///
    /// For compact supports each half is integrated in the variable `s` with
    /// `x = m +- h (1 - s^4)` (`h` the half-width). Near the edges
    /// `pdf^power ~ s^{4 power / (1-q)}`, so the substitution smooths the
    /// integrable edge singularities that negative powers produce.
    pub fn integrate_power<F: Fn(f64) -> f64>(&self, g: F, power: f64, tol: f64) -> QuadratureResult {
        if !self.support.is_bounded() {
            return self.integrate(
                |x| {
                    let f = self.pdf(x);
                    if f == 0.0 { 0.0 } else { g(x) * f.powf(power) }
                },
                tol,
            );
        }
        let h = self.support.hi - self.m;
        let a_p = self.prefactor.powf(power);
        let exponent = power / (1.0 - self.q);
        let g = &g;
        let half = |sign: f64| {
            move |s: f64| {
                let s4 = s.powi(4);
                let inner = s4 * (2.0 - s4);
                if inner <= 0.0 {
                    return 0.0;
                }
                let x = self.m + sign * h * (1.0 - s4);
                g(x) * a_p * inner.powf(exponent) * 4.0 * h * s.powi(3)
            }
        };
        let q = Quadrature::new(0.5 * tol);
        let right = q.integrate(half(1.0), 0.0, 1.0);
        let left = q.integrate(half(-1.0), 0.0, 1.0);
        QuadratureResult {
            value: right.value + left.value,
            error_estimate: right.error_estimate + left.error_estimate,
            evaluations: right.evaluations + left.evaluations,
            converged: right.converged && left.converged,
        }
    }

    /// Student-t degrees of freedom `(3-q)/(q-1)`, defined for `1 < q < 3`.
    pub fn student_t_dof(&self) -> Option<f64> {
        (self.q > 1.0 && !is_classical(self.q)).then(|| (3.0 - self.q) / (self.q - 1.0))
    }
}

/// `|e_q(-y^2) - e_{2-1/q}(-q y^2)^{1/q}|`.
///
/// Returns NaN for `q = 0` or where either side is not finite.
pub fn duality_residual(q: f64, y: f64) -> f64 {
    if q == 0.0 {
        return f64::NAN;
    }
    let lhs = q_exp(q, -y * y);
    let rhs = q_exp(2.0 - 1.0 / q, -q * y * y).powf(1.0 / q);
    if lhs.is_finite() && rhs.is_finite() {
        (lhs - rhs).abs()
    } else {
        f64::NAN
    }
}
