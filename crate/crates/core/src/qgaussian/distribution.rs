use rand::Rng;
use rand_distr::{Distribution, Normal, StudentT};

use super::QGaussianParams;
use crate::error::{Error, Result};
use crate::numerics::{find_root, QuadratureResult};
use crate::qalgebra::is_classical;
use crate::special::log_beta;

/// Grid spacing of the cumulative-mass table, in units of sigma.
const GRID_STEP: f64 = 0.25;
/// Extent of the table for unbounded supports, in units of sigma.
const GRID_EXTENT: f64 = 12.0;
const CDF_TOL: f64 = 1e-14;

/// A q-Gaussian with a precomputed cumulative-mass table for the CDF,
/// quantile function and sampler.
///
/// The table stores the mass between `m` and `m + k h sigma` for a fixed grid;
/// it is filled once at construction and never mutated.
#[derive(Debug, Clone)]
pub struct QGaussian {
    params: QGaussianParams,
    /// `cum[k]` = mass of `[m, m + k * step]` (standardized step `GRID_STEP`).
    cum: Vec<f64>,
    /// Largest standardized offset covered by the table.
    extent: f64,
}

impl QGaussian {
    pub fn new(params: QGaussianParams) -> Result<Self> {
        let sigma = params.sigma();
        let extent = if params.support.is_bounded() {
            (params.support.hi - params.m) / sigma
        } else {
            GRID_EXTENT
        };
        let cells = (extent / GRID_STEP).ceil() as usize;
        let mut cum = Vec::with_capacity(cells + 1);
        cum.push(0.0);
        let mut acc = 0.0;
        for k in 0..cells {
            let z0 = k as f64 * GRID_STEP;
            let z1 = ((k + 1) as f64 * GRID_STEP).min(extent);
            let r = params.quadrature(CDF_TOL).integrate(
                |x| params.pdf(x),
                params.m + z0 * sigma,
                params.m + z1 * sigma,
            );
            check(&r, "cumulative mass table")?;
            acc += r.value;
            cum.push(acc);
        }
        Ok(QGaussian { params, cum, extent })
    }

    pub fn params(&self) -> &QGaussianParams {
        &self.params
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.params.pdf(x)
    }

    /// Mass beyond the standardized offset `z >= 0`, i.e. `P(X > m + z sigma)`.
    fn upper_tail(&self, z: f64) -> Result<f64> {
        let p = &self.params;
        let sigma = p.sigma();
        if z >= self.extent {
            if p.support.is_bounded() {
                return Ok(0.0);
            }
            if let Some(t) = p.student_t_dof().and_then(|nu| student_t_tail(nu, z)) {
                return Ok(t);
            }
            let r = p.quadrature(CDF_TOL).integrate(|x| p.pdf(x), p.m + z * sigma, f64::INFINITY);
            check(&r, "upper tail")?;
            return Ok(r.value.max(0.0));
        }
        let k = ((z / GRID_STEP).floor() as usize).min(self.cum.len() - 1);
        let z0 = k as f64 * GRID_STEP;
        let r = p
            .quadrature(CDF_TOL)
            .integrate(|x| p.pdf(x), p.m + z0 * sigma, p.m + z * sigma);
        check(&r, "partial cell")?;
        Ok((0.5 - self.cum[k] - r.value).max(0.0))
    }

    /// `P(X <= x)`.
    pub fn cdf(&self, x: f64) -> Result<f64> {
        let p = &self.params;
        if x.is_nan() {
            return Err(Error::domain("cdf of NaN"));
        }
        let z = (x - p.m) / p.sigma();
        if z >= 0.0 {
            Ok(1.0 - self.upper_tail(z)?)
        } else {
            self.upper_tail(-z)
        }
    }

    /// Inverse CDF for `0 < u < 1`.
    pub fn quantile(&self, u: f64) -> Result<f64> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::domain(format!("quantile level must be in (0, 1), got {u}")));
        }
        let p = &self.params;
        if u == 0.5 {
            return Ok(p.m);
        }
        let tail = if u > 0.5 { 1.0 - u } else { u };
        let z = self.tail_offset(tail)?;
        let sign = if u > 0.5 { 1.0 } else { -1.0 };
        Ok(p.m + sign * z * p.sigma())
    }

    /// Standardized offset `z` with `P(X > m + z sigma) = tail`.
    fn tail_offset(&self, tail: f64) -> Result<f64> {
        // Bracket from the table first.
        let k = self.cum.partition_point(|&c| 0.5 - c > tail);
        let (lo, hi) = if k < self.cum.len() {
            let lo = k.saturating_sub(1) as f64 * GRID_STEP;
            (lo, (k as f64 * GRID_STEP).min(self.extent))
        } else if self.params.support.is_bounded() {
            ((self.cum.len() - 2) as f64 * GRID_STEP, self.extent)
        } else {
            let mut lo = self.extent;
            let mut hi = 2.0 * self.extent;
            while self.upper_tail(hi)? > tail {
                lo = hi;
                hi *= 2.0;
                if !hi.is_finite() {
                    return Err(Error::NonConvergence("quantile bracket overflow".into()));
                }
            }
            (lo, hi)
        };
        let g = |z: f64| match self.upper_tail(z) {
            Ok(t) => (t - tail) / tail,
            Err(_) => f64::NAN,
        };
        find_root(g, lo, hi, 1e-13 * hi.max(1.0))
    }

    /// `n` independent draws.
    ///
    /// `q = 1` uses a normal generator, `1 < q < 3` the Student-t
    /// representation `m + sigma T_nu`, and `q < 1` inverts the CDF.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        let p = &self.params;
        let sigma = p.sigma();
        if is_classical(p.q) {
            let normal = Normal::new(p.m, sigma).expect("sigma is positive and finite");
            return normal.sample_iter(rng).take(n).collect();
        }
        if let Some(nu) = p.student_t_dof() {
            let t = StudentT::new(nu).expect("degrees of freedom are positive");
            return (0..n).map(|_| p.m + sigma * t.sample(rng)).collect();
        }
        (0..n)
            .map(|_| {
                let u: f64 = rng.random();
                // u == 0 has probability 2^-53; map it to the left end.
                if u == 0.0 {
                    return p.support.lo;
                }
                self.quantile(u)
                    .expect("quantiles of a compact q-Gaussian are always bracketed")
            })
            .collect()
    }
}

/// `P(T > t)` for a Student-t with `nu` degrees of freedom, from the series
/// of the incomplete Beta function `I_x(nu/2, 1/2)` at `x = nu / (nu + t^2)`.
/// Returns `None` when `x` is too close to 1 for the series to be useful.
fn student_t_tail(nu: f64, t: f64) -> Option<f64> {
    let x = nu / (nu + t * t);
    if !(x < 0.5) {
        return None;
    }
    let a = 0.5 * nu;
    let mut coef = 1.0;
    let mut sum = 1.0;
    let mut xn = 1.0;
    for n in 1..2000 {
        let n = f64::from(n);
        coef *= (n - 0.5) / n;
        xn *= x;
        let term = coef * a / (a + n) * xn;
        sum += term;
        if term < 1e-17 * sum {
            break;
        }
    }
    let log_lead = a * x.ln() - a.ln() - log_beta(a, 0.5).ok()?;
    Some(0.5 * log_lead.exp() * sum)
}

fn check(r: &QuadratureResult, what: &str) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!(
            "{what}: estimate {} with error {}",
            r.value, r.error_estimate
        )))
    }
}
