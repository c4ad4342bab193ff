//! Sample statistics for q-Gaussian data: the bias-corrected variance
//! estimator, confidence intervals for `m`, and seeded Monte Carlo checks.
//!
//! All experiments draw ordinarily independent samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{variance_closed, VARIANCE_Q_MAX};
use crate::qgaussian::{QGaussian, QGaussianParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleStats {
    pub n: usize,
    pub q: f64,
    pub mean: f64,
    /// Empirical variance with the `1/n` convention.
    pub s2: f64,
    /// `(n/(n-1)) ((5-3q)/(3-q)) s2`, unbiased for `sigma^2`.
    pub sigma2_hat: f64,
}

/// `(5-3q)/(3-q)`, the ratio `sigma^2 / Var(X)`.
pub fn variance_correction(q: f64) -> Result<f64> {
    if !(q < VARIANCE_Q_MAX) {
        return Err(Error::domain(format!(
            "the variance is infinite for q >= 5/3, got q = {q}"
        )));
    }
    Ok((5.0 - 3.0 * q) / (3.0 - q))
}

pub fn summarize(data: &[f64], q: f64) -> Result<SampleStats> {
    let correction = variance_correction(q)?;
    let n = data.len();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mean = data.iter().sum::<f64>() / nf;
    let s2 = data.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / nf;
    Ok(SampleStats {
        n,
        q,
        mean,
        s2,
        sigma2_hat: nf / (nf - 1.0) * correction * s2,
    })
}

/// How the critical value of a confidence interval is chosen. Both kinds use
/// the exact standard deviation of the sample mean,
/// `sqrt((3-q)/(5-3q)) sigma / sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntervalKind {
    /// Standard normal critical value: the sample mean of ordinarily
    /// independent draws is asymptotically normal.
    #[default]
    Normal,
    /// Critical value from `N_q(0, 1)`. Conservative for `q > 1`.
    QGaussianQuantile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub lo: f64,
    pub hi: f64,
    pub level: f64,
    pub kind: IntervalKind,
    /// Critical value multiplying the standard error.
    pub critical_value: f64,
    pub std_error: f64,
}

impl ConfidenceInterval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Critical value `z` with `P(|Z| <= z) = level`.
pub fn critical_value(q: f64, level: f64, kind: IntervalKind) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level must be in (0, 1), got {level}")));
    }
    let q = match kind {
        IntervalKind::Normal => 1.0,
        IntervalKind::QGaussianQuantile => q,
    };
    QGaussian::new(QGaussianParams::standard(q)?)?.quantile(0.5 + 0.5 * level)
}

/// Interval for `m` with known `sigma^2`.
pub fn confidence_interval(stats: &SampleStats, sigma2_known: f64, level: f64, kind: IntervalKind) -> Result<ConfidenceInterval> {
    if !(sigma2_known > 0.0) {
        return Err(Error::domain(format!("sigma2 must be > 0, got {sigma2_known}")));
    }
    let var_factor = 1.0 / variance_correction(stats.q)?;
    let std_error = (var_factor * sigma2_known / stats.n as f64).sqrt();
    let z = critical_value(stats.q, level, kind)?;
    Ok(ConfidenceInterval {
        lo: stats.mean - z * std_error,
        hi: stats.mean + z * std_error,
        level,
        kind,
        critical_value: z,
        std_error,
    })
}

fn check_experiment(p: &QGaussianParams, n: usize, reps: usize) -> Result<()> {
    variance_correction(p.q)?;
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if reps < 2 {
        return Err(Error::InsufficientData { needed: 2, got: reps });
    }
    Ok(())
}

/// Mean and standard error of a list of replicate values.
fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0);
    (mean, (var / k).sqrt())
}

/// Monte Carlo check of `E(S^2) = ((n-1)/n) ((3-q)/(5-3q)) sigma^2` and of the
/// unbiasedness of `sigma2_hat`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasReport {
    pub q: f64,
    pub n: usize,
    pub reps: usize,
    pub seed: u64,
    pub mean_s2: f64,
    pub expected_s2: f64,
    pub se_s2: f64,
    pub mean_sigma2_hat: f64,
    pub sigma2: f64,
    pub se_sigma2_hat: f64,
    /// Both means within `gate` standard errors of their targets.
    pub pass: bool,
    pub gate: f64,
}

pub fn bias_experiment(p: &QGaussianParams, n: usize, reps: usize, seed: u64) -> Result<BiasReport> {
    check_experiment(p, n, reps)?;
    let dist = QGaussian::new(*p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut s2 = Vec::with_capacity(reps);
    let mut hat = Vec::with_capacity(reps);
    for _ in 0..reps {
        let st = summarize(&dist.sample(&mut rng, n), p.q)?;
        s2.push(st.s2);
        hat.push(st.sigma2_hat);
    }
    let nf = n as f64;
    let expected_s2 = (nf - 1.0) / nf * variance_closed(p)?;
    let (mean_s2, se_s2) = mean_and_se(&s2);
    let (mean_sigma2_hat, se_sigma2_hat) = mean_and_se(&hat);
    let gate = 4.0;
    let pass = (mean_s2 - expected_s2).abs() <= gate * se_s2
        && (mean_sigma2_hat - p.sigma2).abs() <= gate * se_sigma2_hat;
    Ok(BiasReport {
        q: p.q,
        n,
        reps,
        seed,
        mean_s2,
        expected_s2,
        se_s2,
        mean_sigma2_hat,
        sigma2: p.sigma2,
        se_sigma2_hat,
        pass,
        gate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LlnRow {
    pub n: usize,
    pub deviation: f64,
    /// `5 sqrt(Var(X) / n)`
    pub band: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LlnReport {
    pub q: f64,
    pub m: f64,
    pub seed: u64,
    pub rows: Vec<LlnRow>,
    /// The deviation at the largest `n` lies inside its band.
    pub pass: bool,
}

/// `|mean - m|` for one sample of each size in `schedule`.
pub fn lln_check(p: &QGaussianParams, schedule: &[usize], seed: u64) -> Result<LlnReport> {
    let var = variance_closed(p)?;
    if schedule.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let dist = QGaussian::new(*p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(schedule.len());
    for &n in schedule {
        if n == 0 {
            return Err(Error::InsufficientData { needed: 1, got: 0 });
        }
        let xs = dist.sample(&mut rng, n);
        let mean = xs.iter().sum::<f64>() / n as f64;
        rows.push(LlnRow {
            n,
            deviation: (mean - p.m).abs(),
            band: 5.0 * (var / n as f64).sqrt(),
        });
    }
    let last = rows.iter().max_by_key(|r| r.n).expect("schedule is non-empty");
    let pass = last.deviation < last.band;
    Ok(LlnReport { q: p.q, m: p.m, seed, rows, pass })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub q: f64,
    pub n: usize,
    pub reps: usize,
    pub level: f64,
    pub kind: IntervalKind,
    pub seed: u64,
    pub covered: usize,
    pub coverage: f64,
}

/// Fraction of `reps` intervals (known `sigma^2`) that contain `m`.
pub fn coverage_experiment(
    p: &QGaussianParams,
    n: usize,
    reps: usize,
    level: f64,
    kind: IntervalKind,
    seed: u64,
) -> Result<CoverageReport> {
    check_experiment(p, n, reps)?;
    let dist = QGaussian::new(*p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = critical_value(p.q, level, kind)?;
    let mut covered = 0;
    for _ in 0..reps {
        let st = summarize(&dist.sample(&mut rng, n), p.q)?;
        let se = (p.sigma2 / variance_correction(p.q)? / n as f64).sqrt();
        if (st.mean - p.m).abs() <= z * se {
            covered += 1;
        }
    }
    Ok(CoverageReport {
        q: p.q,
        n,
        reps,
        level,
        kind,
        seed,
        covered,
        coverage: covered as f64 / reps as f64,
    })
}
