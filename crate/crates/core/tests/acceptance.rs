//! Acceptance criteria, each at its stated tolerance. Prints one PASS/FAIL
//! line per criterion and exits non-zero when an outcome differs from
//! `EXPECTED_FAILURES`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::process::ExitCode;
use std::time::{Duration, Instant};

use qstat_core::estimators::{bias_experiment, coverage_experiment, IntervalKind};
use qstat_core::moments::{
    central_moment_oracle, escort_central_moment_oracle, kurtosis_closed, mean_closed, normalized_q_variance,
    raw_moment_oracle, variance_closed, MOMENT_TOL,
};
use qstat_core::numerics::integrate;
use qstat_core::qalgebra::q_exp;
use qstat_core::qlaplace::{
    derivative_ladder_check, laplace_closed, laplace_oracle, q_independence_residual, sum_law_experiment, LAPLACE_TOL,
};
use qstat_core::special::c_q;
use qstat_core::verify::{algebra_identity_suite, run_verify, VerifyConfig, THETA_GRID};
use qstat_core::{QGaussianParams, Status};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Criteria that fail with the current mathematics. The q-independence
/// residual of the closed-form transform is O(theta^2), not zero: the closed
/// form scales like sigma^(4-2q), which is not additive in sigma^2 for q != 1.
const EXPECTED_FAILURES: &[u32] = &[6];

type Criterion = (u32, &'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn rel(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Running maximum with the location where it was attained.
struct Worst {
    value: f64,
    at: String,
    ok: bool,
}

impl Worst {
    fn new() -> Self {
        Worst { value: 0.0, at: String::new(), ok: true }
    }

    fn record(&mut self, err: f64, tol: f64, at: impl FnOnce() -> String) {
        if !(err <= tol) {
            self.ok = false;
        }
        if !(err <= self.value) {
            self.value = err;
            self.at = at();
        }
    }
}

fn normalization() -> Outcome {
    let start = Instant::now();
    let mut w = Worst::new();
    for q in [-1.0, 0.0, 0.5, 1.0, 1.3, 1.5, 2.0, 2.5] {
        let p = QGaussianParams::new(q, 0.3, 1.7).unwrap();
        let r = p.integrate(|x| p.pdf(x), 1e-11);
        w.record((r.value - 1.0).abs(), 1e-8, || format!("q={q}"));
    }
    let took = start.elapsed();
    outcome(
        w.ok && took < Duration::from_secs(5),
        format!("max |integral - 1| = {:.2e} at {}; {:.2} s", w.value, w.at, took.as_secs_f64()),
    )
}

fn normalizer() -> Outcome {
    let mut w = Worst::new();
    for q in [-1.0, -0.5, 0.0, 0.5, 0.9, 1.1, 1.5, 2.0, 2.5, 2.9] {
        let oracle = integrate(|x| q_exp(q, -x * x), f64::NEG_INFINITY, f64::INFINITY, 1e-12);
        let tol = if q >= 2.7 { 1e-6 } else { 1e-9 };
        w.record(rel(c_q(q).unwrap(), oracle.value), tol, || format!("q={q}"));
    }
    let mut r = Worst::new();
    for q in [1.0, 1.2, 1.4, 1.6] {
        let lhs = c_q(1.0 / (2.0 - q)).unwrap() / c_q(q).unwrap();
        let rhs = 2.0 * (2.0 - q).powf(1.5) / (5.0 - 3.0 * q);
        r.record(rel(lhs, rhs), 1e-10, || format!("q={q}"));
    }
    outcome(
        w.ok && r.ok,
        format!(
            "C_q vs quadrature max rel {:.2e} ({}); ratio identity max rel {:.2e} ({})",
            w.value, w.at, r.value, r.at
        ),
    )
}

fn moments() -> Outcome {
    let mut w = Worst::new();
    for q in [0.5, 1.0, 1.1, 1.3] {
        let p = QGaussianParams::new(q, 0.3, 1.7).unwrap();
        let mean = raw_moment_oracle(&p, 1, MOMENT_TOL);
        w.record(rel(mean_closed(&p), mean.value), 1e-6, || format!("mean q={q}"));
        let var = central_moment_oracle(&p, 2, MOMENT_TOL);
        w.record(rel(variance_closed(&p).unwrap(), var.value), 1e-6, || format!("variance q={q}"));
    }
    for q in [0.5, 1.0, 1.1, 1.2, 1.3] {
        let p = QGaussianParams::standard(q).unwrap();
        let m4 = raw_moment_oracle(&p, 4, MOMENT_TOL).value;
        let m2 = raw_moment_oracle(&p, 2, MOMENT_TOL).value;
        w.record(rel(kurtosis_closed(q).unwrap(), m4 / (m2 * m2)), 1e-6, || format!("kurtosis q={q}"));
    }
    let k12 = kurtosis_closed(1.2).unwrap();
    let k12_ok = (k12 - 4.2).abs() < 1e-12;

    let p = QGaussianParams::standard(1.8).unwrap();
    let var_flagged = variance_closed(&p).is_err() && !central_moment_oracle(&p, 2, MOMENT_TOL).converged;
    let p = QGaussianParams::standard(1.45).unwrap();
    let m4_flagged = kurtosis_closed(1.45).is_err() && !central_moment_oracle(&p, 4, MOMENT_TOL).converged;
    outcome(
        w.ok && k12_ok && var_flagged && m4_flagged,
        format!(
            "max rel {:.2e} ({}); kurtosis(1.2) = {k12}; divergence flagged at q=1.8 n=2: {var_flagged}, q=1.45 n=4: {m4_flagged}",
            w.value, w.at
        ),
    )
}

fn escort() -> Outcome {
    let mut w = Worst::new();
    for q in [1.2, 1.5] {
        let p = QGaussianParams::new(q, 0.4, 1.3).unwrap();
        for power in [2.0 - q, q, 2.0 * q - 1.0, 4.0 * q - 3.0] {
            let e = p.escort_params(power).unwrap();
            let nu = p.nu_p_closed(power).unwrap();
            for i in 0..=100 {
                let x = p.m - 8.0 + 16.0 * f64::from(i) / 100.0;
                let lhs = p.pdf(x).powf(power) / nu;
                w.record(rel(lhs, e.pdf(x)), 1e-8, || format!("q={q} p={power:.3} x={x:.2}"));
            }
        }
    }
    let mut v = Worst::new();
    for q in [0.6, 0.9, 1.0, 1.2, 1.5, 2.0, 2.5] {
        let p = QGaussianParams::new(q, 0.25, 0.8).unwrap();
        let oracle = escort_central_moment_oracle(&p, 2, 2.0 * q - 1.0, MOMENT_TOL).unwrap();
        v.record(rel(normalized_q_variance(&p).unwrap(), oracle.value), 1e-7, || format!("q={q}"));
    }
    outcome(
        w.ok && v.ok,
        format!(
            "pointwise max rel {:.2e} ({}); normalized q-variance max rel {:.2e} ({})",
            w.value, w.at, v.value, v.at
        ),
    )
}

fn laplace() -> Outcome {
    let mut w = Worst::new();
    for q in [1.0, 1.1, 1.3, 1.5] {
        let p = QGaussianParams::new(q, 0.5, 1.3).unwrap();
        for theta in THETA_GRID {
            let c = laplace_closed(&p, theta).unwrap().value;
            let o = laplace_oracle(&p, theta, LAPLACE_TOL).unwrap();
            let err = if o.converged { rel(c, o.value) } else { f64::INFINITY };
            w.record(err, 1e-7, || format!("q={q} theta={theta}"));
        }
    }
    let mut g = Worst::new();
    let p = QGaussianParams::new(1.0, -0.7, 2.0).unwrap();
    for theta in [-1.0, -0.5, -0.1, 0.1, 0.5, 1.0] {
        let mgf = (p.m * theta + 0.5 * p.sigma2 * theta * theta).exp();
        g.record(rel(laplace_closed(&p, theta).unwrap().value, mgf), 1e-12, || format!("theta={theta}"));
    }
    let mut l = Worst::new();
    for q in [1.0, 1.1, 1.2] {
        let p = QGaussianParams::new(q, 0.4, 0.9).unwrap();
        for n in 1..=4 {
            let r = derivative_ladder_check(&p, n, 0.05, LAPLACE_TOL).unwrap();
            let tol = if n <= 2 { 1e-4 } else { 1e-3 };
            l.record(rel(r.oracle, r.closed), tol, || format!("q={q} n={n}"));
        }
    }
    outcome(
        w.ok && g.ok && l.ok,
        format!(
            "closed vs quadrature max rel {:.2e} ({}); q=1 vs MGF {:.2e}; ladder max rel {:.2e} ({})",
            w.value, w.at, g.value, l.value, l.at
        ),
    )
}

fn q_independence() -> Outcome {
    let mut w = Worst::new();
    for q in [1.0, 1.3, 1.5] {
        let p = QGaussianParams::new(q, 0.0, 1.0).unwrap();
        for theta in THETA_GRID {
            let r = q_independence_residual(&p, &p, theta).unwrap();
            w.record(r, 1e-10, || format!("q={q} theta={theta}"));
        }
    }
    let p = QGaussianParams::standard(1.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let caveat = sum_law_experiment(&p, &p, 100_000, &mut rng).unwrap();
    let caveat_ok = caveat.z_score.abs() > 5.0;
    outcome(
        w.ok && caveat_ok,
        format!(
            "residual max {:.2e} at {} (tolerance 1e-10); ordinary-independence discrepancy {:.1} standard errors",
            w.value, w.at, caveat.z_score
        ),
    )
}

fn estimators() -> Outcome {
    let start = Instant::now();
    let mut bias_ok = true;
    let mut parts = Vec::new();
    for (i, (q, n)) in [(1.0, 10), (1.3, 10), (1.5, 20)].into_iter().enumerate() {
        let p = QGaussianParams::standard(q).unwrap();
        let r = bias_experiment(&p, n, 100_000, 1 + i as u64).unwrap();
        let z1 = (r.mean_s2 - r.expected_s2) / r.se_s2;
        let z2 = (r.mean_sigma2_hat - r.sigma2) / r.se_sigma2_hat;
        bias_ok &= r.pass && z1.abs() <= 4.0 && z2.abs() <= 4.0;
        parts.push(format!("q={q}: z={z1:.2}/{z2:.2}"));
    }
    let p = QGaussianParams::new(1.2, 0.3, 1.0).unwrap();
    let cov = coverage_experiment(&p, 400, 2000, 0.95, IntervalKind::default(), 8).unwrap();
    let cov_ok = (cov.coverage - 0.95).abs() <= 0.02;
    let took = start.elapsed();
    outcome(
        bias_ok && cov_ok && took < Duration::from_secs(60),
        format!(
            "bias {}; coverage {:.4}; {:.1} s",
            parts.join(", "),
            cov.coverage,
            took.as_secs_f64()
        ),
    )
}

fn algebra() -> Outcome {
    let r = algebra_identity_suite(10_000, 7);
    outcome(
        r.max_rel_err <= 1e-12,
        format!("{} cases, {} checks, max rel {:.2e} ({})", r.cases, r.checks, r.max_rel_err, r.worst),
    )
}

fn errata() -> Outcome {
    let report = run_verify(&VerifyConfig { monte_carlo: false, ..VerifyConfig::default() });
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["qprod-exponent", "qneg-sign", "laplace-sign", "normalized-kurtosis-window"] {
        match report.entry(name) {
            Some(e) => {
                let backed = e.oracle.is_finite() && !e.note.is_empty();
                ok &= e.status == Status::Pass && backed;
                parts.push(format!("{name} {}", e.status));
            }
            None => {
                ok = false;
                parts.push(format!("{name} missing"));
            }
        }
    }
    let sign_named = report.entry("laplace-sign").is_some_and(|e| e.note.contains("certified variant: plus"));
    ok &= sign_named;
    outcome(ok, format!("{}; certified sign named: {sign_named}", parts.join(", ")))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        (1, "normalization", normalization),
        (2, "normalizing constant", normalizer),
        (3, "ordinary moments", moments),
        (4, "escort identities", escort),
        (5, "q-Laplace transform", laplace),
        (6, "q-independence", q_independence),
        (7, "estimators", estimators),
        (8, "q-algebra identities", algebra),
        (9, "errata adjudication", errata),
    ];
    let mut unexpected = Vec::new();
    for (id, name, run) in criteria {
        let o = run();
        println!("criterion {id} ({name}): {}  {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        let expected_pass = !EXPECTED_FAILURES.contains(&id);
        if o.pass != expected_pass {
            unexpected.push(id);
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: all outcomes as expected (expected failures: {EXPECTED_FAILURES:?})");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: unexpected outcome for criteria {unexpected:?}");
        ExitCode::FAILURE
    }
}
