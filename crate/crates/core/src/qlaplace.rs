//! The q-Laplace transform `L_q(X)(theta) = integral of e_q(theta x) (x)_q f(x)`,
//! evaluated through the equivalent standard-product integrand
//! `f(x) e_q(theta x f(x)^{q-1})`, together with its closed form on
//! q-Gaussians, the derivative ladder, and q-independence checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moments::{moment_report, unnormalized_q_moment, MomentReport};
use crate::numerics::{differentiate_n, Quadrature, QuadratureResult};
use crate::qalgebra::{is_classical, q_exp, q_prod};
use crate::qgaussian::{QGaussian, QGaussianParams};

/// Default absolute tolerance for transform quadratures.
pub const LAPLACE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaplaceMethod {
    Oracle,
    ClosedForm,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEval {
    pub theta: f64,
    #[serde(with = "crate::serde_f64")]
    pub value: f64,
    pub method: LaplaceMethod,
    /// Quadrature error estimate; zero for the closed form.
    #[serde(with = "crate::serde_f64")]
    pub error_estimate: f64,
    /// False when the integral diverges (or was not attempted because the
    /// integrand has a pole).
    pub converged: bool,
}

/// Sign in front of the `theta^2` term of the closed form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignVariant {
    Plus,
    Minus,
}

impl SignVariant {
    /// The variant that agrees with quadrature (see [`adjudicate_sign`]).
    pub const CERTIFIED: SignVariant = SignVariant::Plus;

    fn factor(self) -> f64 {
        match self {
            SignVariant::Plus => 1.0,
            SignVariant::Minus => -1.0,
        }
    }
}

fn check_q(q: f64) -> Result<()> {
    if (q >= 1.0 || is_classical(q)) && q < 3.0 {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "the q-Laplace transform is defined here for 1 <= q < 3, got q = {q}"
        )))
    }
}

/// `a^{q-1}` where `a` is the density at the mode.
fn a_pow(p: &QGaussianParams, k: f64) -> f64 {
    p.prefactor.powf(k * (p.q - 1.0))
}

/// Whether `1 + (1-q) theta x f(x)^{q-1}` stays positive on the whole line.
///
/// `f^{q-1} = a^{q-1} / (1 + c (x-m)^2)` with `c = (q-1) beta / sigma^2`, and
/// `x / (1 + c (x-m)^2)` peaks at `x = m +- sqrt(m^2 + 1/c)`.
fn integrand_is_finite(p: &QGaussianParams, theta: f64) -> bool {
    if is_classical(p.q) || theta == 0.0 {
        return true;
    }
    let c = (p.q - 1.0) * p.beta / p.sigma2;
    let r = (p.m * p.m + 1.0 / c).sqrt();
    let g = |x: f64| theta * x / (1.0 + c * (x - p.m).powi(2));
    let sup = g(p.m + r).max(g(p.m - r));
    (p.q - 1.0) * a_pow(p, 1.0) * sup < 1.0
}

/// `L_q(X)(theta)` by quadrature of `f(x) e_q(theta x f(x)^{q-1})`.
pub fn laplace_oracle(p: &QGaussianParams, theta: f64, tol: f64) -> Result<LaplaceEval> {
    check_q(p.q)?;
    if !integrand_is_finite(p, theta) {
        return Ok(LaplaceEval {
            theta,
            value: f64::INFINITY,
            method: LaplaceMethod::Oracle,
            error_estimate: f64::INFINITY,
            converged: false,
        });
    }
    let r = laplace_of_density(
        |x| p.pdf(x),
        p.q,
        theta,
        p.quadrature(tol),
        (p.support.lo, p.support.hi),
    );
    Ok(LaplaceEval {
        theta,
        value: r.value,
        method: LaplaceMethod::Oracle,
        error_estimate: r.error_estimate,
        converged: r.converged,
    })
}

/// `L_q` of an arbitrary density by quadrature over `support`.
pub fn laplace_of_density<F: Fn(f64) -> f64>(
    pdf: F,
    q: f64,
    theta: f64,
    quadrature: Quadrature,
    support: (f64, f64),
) -> QuadratureResult {
    let integrand = |x: f64| {
        let f = pdf(x);
        if f == 0.0 {
            return 0.0;
        }
        let weight = if is_classical(q) { 1.0 } else { f.powf(q - 1.0) };
        f * q_exp(q, theta * x * weight)
    };
    quadrature.integrate(integrand, support.0, support.1)
}

/// Exponent of the closed form,
/// `theta m a^{q-1} +- theta^2 a^{2q-2} sigma^2 / (4 beta)`.
fn closed_exponent(p: &QGaussianParams, theta: f64, variant: SignVariant) -> f64 {
    theta * p.m * a_pow(p, 1.0)
        + variant.factor() * theta * theta * a_pow(p, 2.0) * p.sigma2 / (4.0 * p.beta)
}

/// `e_q(y)^{(3-q)/2}` with `y` from [`closed_exponent`], using the certified sign.
pub fn laplace_closed(p: &QGaussianParams, theta: f64) -> Result<LaplaceEval> {
    laplace_closed_variant(p, theta, SignVariant::CERTIFIED)
}

pub fn laplace_closed_variant(p: &QGaussianParams, theta: f64, variant: SignVariant) -> Result<LaplaceEval> {
    check_q(p.q)?;
    let y = closed_exponent(p, theta, variant);
    if !is_classical(p.q) && 1.0 + (1.0 - p.q) * y <= 0.0 {
        return Err(Error::Pole(format!(
            "closed-form q-Laplace transform at theta = {theta} crosses the pole of e_q (q = {})",
            p.q
        )));
    }
    Ok(LaplaceEval {
        theta,
        value: q_exp(p.q, y).powf(0.5 * (3.0 - p.q)),
        method: LaplaceMethod::ClosedForm,
        error_estimate: 0.0,
        converged: true,
    })
}

/// Outcome of comparing both sign variants with quadrature on a theta grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignAdjudication {
    pub q: f64,
    pub thetas: Vec<f64>,
    /// Largest relative deviation from the oracle for each variant.
    #[serde(with = "crate::serde_f64")]
    pub plus_max_rel_err: f64,
    #[serde(with = "crate::serde_f64")]
    pub minus_max_rel_err: f64,
    /// `None` if neither variant matches to `rtol`.
    pub winner: Option<SignVariant>,
}

pub fn adjudicate_sign(p: &QGaussianParams, thetas: &[f64], rtol: f64, tol: f64) -> Result<SignAdjudication> {
    let mut plus = 0.0f64;
    let mut minus = 0.0f64;
    for &theta in thetas {
        let o = laplace_oracle(p, theta, tol)?;
        if !o.converged {
            return Err(Error::NonConvergence(format!(
                "q-Laplace oracle at theta = {theta}, q = {}",
                p.q
            )));
        }
        let rel = |v: SignVariant| -> f64 {
            laplace_closed_variant(p, theta, v).map_or(f64::INFINITY, |c| ((c.value - o.value) / o.value).abs())
        };
        plus = plus.max(rel(SignVariant::Plus));
        minus = minus.max(rel(SignVariant::Minus));
    }
    let winner = if plus <= rtol && plus <= minus {
        Some(SignVariant::Plus)
    } else if minus <= rtol {
        Some(SignVariant::Minus)
    } else {
        None
    };
    Ok(SignAdjudication {
        q: p.q,
        thetas: thetas.to_vec(),
        plus_max_rel_err: plus,
        minus_max_rel_err: minus,
        winner,
    })
}

/// `prod_{k<n} (1 + k (q-1))`.
pub fn ladder_coefficient(q: f64, n: u32) -> f64 {
    (0..n).map(|k| 1.0 + f64::from(k) * (q - 1.0)).product()
}

/// Compares the `n`-th derivative of the quadrature transform at 0 (by finite
/// differences with base step `h`) against
/// `prod_{k<n}(1 + k(q-1)) * integral of x^n f^{1 + n(q-1)}`.
///
/// In the report, `closed` is the moment side and `oracle` the derivative.
pub fn derivative_ladder_check(p: &QGaussianParams, n: u32, h: f64, tol: f64) -> Result<MomentReport> {
    check_q(p.q)?;
    if !(1..=4).contains(&n) {
        return Err(Error::domain(format!("ladder order must be 1..=4, got {n}")));
    }
    let moment = unnormalized_q_moment(p, n, 1.0 + f64::from(n) * (p.q - 1.0), tol);
    if !moment.converged {
        return Err(Error::NonConvergence(format!("q-moment of order {n} at q = {}", p.q)));
    }
    let closed = ladder_coefficient(p.q, n) * moment.value;

    let failed = std::cell::Cell::new(false);
    let evals = std::cell::Cell::new(0usize);
    let transform = |theta: f64| match laplace_oracle(p, theta, tol) {
        Ok(e) if e.converged => {
            evals.set(evals.get() + 1);
            e.value
        }
        _ => {
            failed.set(true);
            f64::NAN
        }
    };
    let derivative = differentiate_n(transform, 0.0, n, Some(h));
    let oracle = QuadratureResult {
        value: derivative,
        error_estimate: f64::NAN,
        evaluations: evals.get(),
        converged: !failed.get() && derivative.is_finite(),
    };
    Ok(moment_report(format!("ladder_n{n}"), closed, &oracle))
}

/// `N_q(m1 + m2, sigma1^2 + sigma2^2)`.
pub fn sum_params(p1: &QGaussianParams, p2: &QGaussianParams) -> Result<QGaussianParams> {
    if p1.q != p2.q {
        return Err(Error::MismatchedQ(p1.q, p2.q));
    }
    QGaussianParams::new(p1.q, p1.m + p2.m, p1.sigma2 + p2.sigma2)
}

/// `|L(sum) - L(X1) (x)_q L(X2)|` with all three transforms in closed form.
pub fn q_independence_residual(p1: &QGaussianParams, p2: &QGaussianParams, theta: f64) -> Result<f64> {
    let s = sum_params(p1, p2)?;
    let l1 = laplace_closed(p1, theta)?.value;
    let l2 = laplace_closed(p2, theta)?.value;
    let ls = laplace_closed(&s, theta)?.value;
    Ok((ls - q_prod(p1.q, l1, l2)?).abs())
}

/// Monte Carlo comparison of the sum of two ordinarily independent
/// q-Gaussian variables with `N_q(m1 + m2, sigma1^2 + sigma2^2)`.
///
/// The statistic is the clipped fourth central moment
/// `E[clip(S - m, -c, c)^4]`, which stays finite where the plain fourth moment
/// does not (`q >= 7/5`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumLawReport {
    pub q: f64,
    pub n: usize,
    pub clip: f64,
    #[serde(with = "crate::serde_f64")]
    pub empirical: f64,
    #[serde(with = "crate::serde_f64")]
    pub predicted: f64,
    #[serde(with = "crate::serde_f64")]
    pub std_error: f64,
    /// `(empirical - predicted) / std_error`.
    #[serde(with = "crate::serde_f64")]
    pub z_score: f64,
}

pub fn sum_law_experiment<R: Rng + ?Sized>(
    p1: &QGaussianParams,
    p2: &QGaussianParams,
    n: usize,
    rng: &mut R,
) -> Result<SumLawReport> {
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let s = sum_params(p1, p2)?;
    let clip = 2.0 * s.sigma();
    let stat = move |x: f64| (x - s.m).clamp(-clip, clip).powi(4);

    let predicted = s.integrate(|x| stat(x) * s.pdf(x), 1e-12);
    if !predicted.converged {
        return Err(Error::NonConvergence("predicted clipped fourth moment".into()));
    }
    let x1 = QGaussian::new(*p1)?.sample(rng, n);
    let x2 = QGaussian::new(*p2)?.sample(rng, n);
    let values: Vec<f64> = x1.iter().zip(&x2).map(|(a, b)| stat(a + b)).collect();
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    let std_error = (var / nf).sqrt();
    Ok(SumLawReport {
        q: s.q,
        n,
        clip,
        empirical: mean,
        predicted: predicted.value,
        std_error,
        z_score: (mean - predicted.value) / std_error,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MOMENT_TOL;
    use crate::qgaussian::make_params;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const THETAS: [f64; 6] = [-0.1, -0.05, -0.01, 0.01, 0.05, 0.1];

    #[test]
    fn oracle_examples() {
        for q in [1.0, 1.4, 2.5] {
            let p = make_params(q, 0.3, 1.1).unwrap();
            let e = laplace_oracle(&p, 0.0, LAPLACE_TOL).unwrap();
            assert!(e.converged);
            assert_relative_eq!(e.value, 1.0, max_relative = 1e-12);
        }
        let p = make_params(1.0, 0.0, 1.0).unwrap();
        assert_relative_eq!(laplace_oracle(&p, 1.0, LAPLACE_TOL).unwrap().value, 0.5f64.exp(), max_relative = 1e-12);
        let p = make_params(1.0, -0.7, 2.0).unwrap();
        for theta in [-0.8f64, 0.3, 1.5] {
            let want = (-0.7 * theta + theta * theta).exp();
            assert_relative_eq!(laplace_oracle(&p, theta, LAPLACE_TOL).unwrap().value, want, max_relative = 1e-11);
        }
        assert!(laplace_oracle(&make_params(0.5, 0.0, 1.0).unwrap(), 0.1, LAPLACE_TOL).is_err());
    }

    #[test]
    fn oracle_reports_poles() {
        let p = make_params(2.0, 0.0, 1.0).unwrap();
        let e = laplace_oracle(&p, 50.0, LAPLACE_TOL).unwrap();
        assert!(!e.converged);
    }

    #[test]
    fn closed_form_examples() {
        for q in [1.0, 1.5, 2.9] {
            let p = make_params(q, 1.0, 0.4).unwrap();
            assert_eq!(laplace_closed(&p, 0.0).unwrap().value, 1.0);
        }
        let p = make_params(1.0, 0.4, 1.5).unwrap();
        for theta in [-1.0f64, 0.2, 2.0] {
            let want = (0.4 * theta + 0.75 * theta * theta).exp();
            assert_relative_eq!(laplace_closed(&p, theta).unwrap().value, want, max_relative = 1e-14);
        }
        let p = make_params(1.2, 0.0, 1.0).unwrap();
        let c = laplace_closed(&p, 0.1).unwrap().value;
        let o = laplace_oracle(&p, 0.1, LAPLACE_TOL).unwrap().value;
        assert_relative_eq!(c, o, max_relative = 1e-7);
    }

    #[test]
    fn closed_form_matches_oracle_on_grid() {
        for q in [1.0, 1.1, 1.3, 1.5] {
            for (m, s2) in [(0.0, 1.0), (0.6, 0.5), (-1.2, 2.0)] {
                let p = make_params(q, m, s2).unwrap();
                for theta in THETAS {
                    let c = laplace_closed(&p, theta).unwrap().value;
                    let o = laplace_oracle(&p, theta, LAPLACE_TOL).unwrap();
                    assert!(o.converged);
                    assert_relative_eq!(c, o.value, max_relative = 1e-7);
                }
            }
        }
    }

    #[test]
    fn plus_sign_wins_adjudication() {
        for q in [1.1, 1.3, 1.5] {
            let p = make_params(q, 0.5, 1.3).unwrap();
            let a = adjudicate_sign(&p, &THETAS, 1e-7, LAPLACE_TOL).unwrap();
            assert_eq!(a.winner, Some(SignVariant::Plus), "{a:?}");
            assert!(a.minus_max_rel_err > 1e-4, "{a:?}");
        }
    }

    #[test]
    fn ladder_examples() {
        let p = make_params(1.0, 0.8, 1.3).unwrap();
        let r = derivative_ladder_check(&p, 1, 0.05, LAPLACE_TOL).unwrap();
        assert_relative_eq!(r.closed, 0.8, max_relative = 1e-10);
        assert_relative_eq!(r.oracle, 0.8, max_relative = 1e-6);

        let p = make_params(1.7, 0.0, 0.6).unwrap();
        let r = derivative_ladder_check(&p, 1, 0.05, LAPLACE_TOL).unwrap();
        assert!(r.closed.abs() < 1e-12 && r.oracle.abs() < 1e-9, "{r:?}");

        let p = make_params(1.2, 0.0, 1.0).unwrap();
        let r = derivative_ladder_check(&p, 2, 0.05, LAPLACE_TOL).unwrap();
        let direct = 1.2 * unnormalized_q_moment(&p, 2, 1.4, MOMENT_TOL).value;
        assert_relative_eq!(r.closed, direct, max_relative = 1e-12);
        assert!(r.rel_err.unwrap() < 1e-4, "{r:?}");
    }

    #[test]
    fn ladder_holds_to_fourth_order() {
        for q in [1.0, 1.1, 1.2] {
            let p = make_params(q, 0.4, 0.9).unwrap();
            for n in 1..=4 {
                let r = derivative_ladder_check(&p, n, 0.05, LAPLACE_TOL).unwrap();
                let rtol = if n <= 2 { 1e-4 } else { 1e-3 };
                assert!(r.oracle_converged && r.rel_err.unwrap() < rtol, "q={q} n={n}: {r:?}");
            }
        }
    }

    #[test]
    fn transform_is_nonlinear_for_q_above_one() {
        let f = make_params(1.5, -1.0, 1.0).unwrap();
        let g = make_params(1.5, 1.0, 0.5).unwrap();
        let mix = |x: f64| 0.5 * f.pdf(x) + 0.5 * g.pdf(x);
        let quad = Quadrature::new(LAPLACE_TOL);
        let whole = (f64::NEG_INFINITY, f64::INFINITY);
        let theta = 0.3;
        let l_mix = laplace_of_density(mix, 1.5, theta, quad, whole).value;
        let mixed = 0.5 * laplace_oracle(&f, theta, LAPLACE_TOL).unwrap().value
            + 0.5 * laplace_oracle(&g, theta, LAPLACE_TOL).unwrap().value;
        assert!((l_mix - mixed).abs() > 1e-3, "{l_mix} vs {mixed}");

        let f1 = make_params(1.0, -1.0, 1.0).unwrap();
        let g1 = make_params(1.0, 1.0, 0.5).unwrap();
        let l_mix = laplace_of_density(|x| 0.5 * f1.pdf(x) + 0.5 * g1.pdf(x), 1.0, theta, quad, whole).value;
        let mixed = 0.5 * laplace_oracle(&f1, theta, LAPLACE_TOL).unwrap().value
            + 0.5 * laplace_oracle(&g1, theta, LAPLACE_TOL).unwrap().value;
        assert_relative_eq!(l_mix, mixed, max_relative = 1e-11);
    }

    #[test]
    fn sum_params_examples() {
        let s = sum_params(&make_params(1.0, 0.0, 1.0).unwrap(), &make_params(1.0, 0.0, 1.0).unwrap()).unwrap();
        assert_eq!((s.q, s.m, s.sigma2), (1.0, 0.0, 2.0));
        let s = sum_params(&make_params(1.4, 1.0, 2.0).unwrap(), &make_params(1.4, -1.0, 3.0).unwrap()).unwrap();
        assert_eq!((s.m, s.sigma2), (0.0, 5.0));
        assert!(matches!(
            sum_params(&make_params(1.4, 0.0, 1.0).unwrap(), &make_params(1.2, 0.0, 1.0).unwrap()),
            Err(Error::MismatchedQ(..))
        ));
    }

    #[test]
    fn q_independence_trivial_cases() {
        let p = make_params(1.3, 0.0, 1.0).unwrap();
        assert_eq!(q_independence_residual(&p, &p, 0.0).unwrap(), 0.0);
        let p1 = make_params(1.0, 0.5, 1.0).unwrap();
        let p2 = make_params(1.0, -0.2, 2.5).unwrap();
        for theta in [-1.0, 0.3, 2.0] {
            let want = laplace_closed(&sum_params(&p1, &p2).unwrap(), theta).unwrap().value;
            assert!(q_independence_residual(&p1, &p2, theta).unwrap() <= 1e-13 * want);
        }
    }

    #[test]
    fn ordinary_independence_does_not_give_the_q_gaussian_sum() {
        let p = make_params(1.5, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let r = sum_law_experiment(&p, &p, 100_000, &mut rng).unwrap();
        assert!(r.z_score.abs() > 5.0, "{r:?}");
    }

    #[test]
    fn sum_law_holds_for_gaussians() {
        let p = make_params(1.0, 0.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let r = sum_law_experiment(&p, &p, 100_000, &mut rng).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
    }
}
