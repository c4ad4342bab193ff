//! Central finite differences with Richardson extrapolation.

/// Second-order central difference for the `n`-th derivative with step `h`.
fn central<F: Fn(f64) -> f64>(f: &F, x0: f64, n: u32, h: f64) -> f64 {
    match n {
        1 => (f(x0 + h) - f(x0 - h)) / (2.0 * h),
        2 => (f(x0 + h) - 2.0 * f(x0) + f(x0 - h)) / (h * h),
        3 => {
            (f(x0 + 2.0 * h) - 2.0 * f(x0 + h) + 2.0 * f(x0 - h) - f(x0 - 2.0 * h))
                / (2.0 * h.powi(3))
        }
        4 => {
            (f(x0 + 2.0 * h) - 4.0 * f(x0 + h) + 6.0 * f(x0) - 4.0 * f(x0 - h)
                + f(x0 - 2.0 * h))
                / h.powi(4)
        }
        _ => unreachable!(),
    }
}

/// Default base step for [`differentiate_n`].
///
/// The extrapolated estimate has truncation error `O(h^6)` and round-off
/// error `O(eps / h^n)`, which balance at `h ~ eps^{1/(n+6)}`.
pub fn default_step(n: u32, x0: f64) -> f64 {
    f64::EPSILON.powf(1.0 / f64::from(n + 6)) * (1.0 + x0.abs())
}

/// Estimate the `n`-th derivative (`1 <= n <= 4`) of `f` at `x0`.
///
/// Central differences at steps `h`, `h/2`, `h/4` are combined by two rounds
/// of Richardson extrapolation. `h = None` uses [`default_step`]. Callers
/// differentiating a noisy function (for instance a quadrature result) should
/// pass a larger step.
///
/// # Panics
/// If `n` is outside `1..=4`.
pub fn differentiate_n<F: Fn(f64) -> f64>(f: F, x0: f64, n: u32, h: Option<f64>) -> f64 {
    assert!((1..=4).contains(&n), "derivative order must be 1..=4, got {n}");
    let h = h.unwrap_or_else(|| default_step(n, x0));
    let d0 = central(&f, x0, n, h);
    let d1 = central(&f, x0, n, h / 2.0);
    let d2 = central(&f, x0, n, h / 4.0);
    let r1 = (4.0 * d1 - d0) / 3.0;
    let r2 = (4.0 * d2 - d1) / 3.0;
    (16.0 * r2 - r1) / 15.0
}
