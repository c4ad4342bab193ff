//! `qstat`: evaluate, sample, estimate and verify q-Gaussian distributions.

mod num;

use std::io::{self, BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qstat_core::estimators::{confidence_interval, summarize};
use qstat_core::moments::{moment_report, raw_moment_closed, raw_moment_oracle, unnormalized_q_moment, MOMENT_TOL};
use qstat_core::qlaplace::{laplace_closed_variant, laplace_oracle, LAPLACE_TOL};
use qstat_core::verify::DEFAULT_SEED;
use qstat_core::{
    run_verify, ConfidenceInterval, Error, IntervalKind, LaplaceEval, MomentReport, QGaussian, QGaussianParams,
    SampleStats, SignVariant, VerifyConfig, VerifyReport,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use num::{fmt, fmt_opt};

#[derive(Parser)]
#[command(name = "qstat", version, about = "q-Gaussian distributions and their verification suite")]
struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Command {
    /// Density, distribution function or quantile at one point.
    Eval(EvalArgs),
    /// A moment in closed form next to its quadrature value.
    Moments(MomentsArgs),
    /// The q-Laplace transform at one argument.
    Laplace(LaplaceArgs),
    /// Seeded random draws, one per line.
    Sample(SampleArgs),
    /// Sample statistics and an optional confidence interval for the location.
    Estimate(EstimateArgs),
    /// Check every closed form against its numerical oracle.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct Dist {
    #[arg(long)]
    q: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    m: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma2: f64,
}

impl Dist {
    fn params(&self) -> Result<QGaussianParams, Error> {
        QGaussianParams::new(self.q, self.m, self.sigma2)
    }
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum What {
    Pdf,
    Cdf,
    Quantile,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    dist: Dist,
    /// Point of evaluation; a probability for `--what quantile`.
    #[arg(long, allow_negative_numbers = true)]
    x: f64,
    #[arg(long, value_enum, default_value_t = What::Pdf)]
    what: What,
}

#[derive(Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Kind {
    /// `E(X^n)`
    Raw,
    /// `integral of x^n pdf^p`
    Unnormalized,
    /// `integral of x^n pdf^p / integral of pdf^p`
    Normalized,
}

#[derive(Args)]
struct MomentsArgs {
    #[command(flatten)]
    dist: Dist,
    #[arg(long)]
    order: u32,
    #[arg(long, value_enum, default_value_t = Kind::Raw)]
    kind: Kind,
    /// Density power for the q-moments; defaults to q.
    #[arg(long)]
    power: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Oracle,
    Closed,
}

#[derive(Clone, Copy, ValueEnum)]
enum Sign {
    Plus,
    Minus,
}

#[derive(Args)]
struct LaplaceArgs {
    #[command(flatten)]
    dist: Dist,
    #[arg(long, allow_negative_numbers = true)]
    theta: f64,
    #[arg(long, value_enum, default_value_t = Method::Closed)]
    method: Method,
    /// Sign of the theta^2 term in the closed form. `plus` is the one that
    /// agrees with quadrature.
    #[arg(long, value_enum, default_value_t = Sign::Plus)]
    sign: Sign,
}

#[derive(Args)]
struct SampleArgs {
    #[command(flatten)]
    dist: Dist,
    #[arg(long)]
    n: usize,
    #[arg(long, env = "QSTAT_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum Interval {
    Normal,
    QGaussian,
}

#[derive(Args)]
struct EstimateArgs {
    #[arg(long)]
    q: f64,
    /// Read the sample from this file instead of stdin.
    #[arg(long)]
    file: Option<PathBuf>,
    /// Known sigma^2; enables the confidence interval.
    #[arg(long)]
    sigma2_known: Option<f64>,
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, value_enum, default_value_t = Interval::Normal)]
    interval: Interval,
}

#[derive(Args)]
struct VerifyArgs {
    /// Comma-separated q values replacing the built-in grids.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    q_grid: Option<Vec<f64>>,
    /// Tolerances are divided by this factor.
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
    #[arg(long, env = "QSTAT_SEED", default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Skip the Monte Carlo entries.
    #[arg(long)]
    no_monte_carlo: bool,
}

/// How a command ended: a domain problem (exit 2), a numerical one (exit 3)
/// or a failed verification (exit 1).
enum Failure {
    Domain(String),
    Numerical(String),
    Verify,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_numerical() {
            Failure::Numerical(e.to_string())
        } else {
            Failure::Domain(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Domain(e.to_string())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = io::stdout().lock();
    let result = match &cli.command {
        Command::Eval(a) => eval(a, cli.format, &mut out),
        Command::Moments(a) => moments(a, cli.format, &mut out),
        Command::Laplace(a) => laplace(a, cli.format, &mut out),
        Command::Sample(a) => sample(a, cli.format, &mut out),
        Command::Estimate(a) => estimate(a, cli.format, &mut out),
        Command::Verify(a) => verify(a, cli.format, &mut out),
    };
    let _ = out.flush();
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verify) => ExitCode::from(1),
        Err(Failure::Domain(msg)) => {
            eprintln!("qstat: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("qstat: {msg}");
            ExitCode::from(3)
        }
    }
}

fn json<T: Serialize>(out: &mut impl Write, value: &T) -> Outcome {
    serde_json::to_writer_pretty(&mut *out, value).map_err(|e| Failure::Domain(e.to_string()))?;
    writeln!(out)?;
    Ok(())
}

fn csv_rows(out: &mut impl Write, header: &[&str], rows: &[Vec<String>]) -> Outcome {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct EvalOutput {
    q: f64,
    m: f64,
    sigma2: f64,
    what: What,
    x: f64,
    value: f64,
}

fn eval(a: &EvalArgs, format: Format, out: &mut impl Write) -> Outcome {
    let p = a.dist.params()?;
    let value = match a.what {
        What::Pdf => p.pdf(a.x),
        What::Cdf => QGaussian::new(p)?.cdf(a.x)?,
        What::Quantile => QGaussian::new(p)?.quantile(a.x)?,
    };
    match format {
        Format::Text => writeln!(out, "{}", fmt(value))?,
        Format::Json => json(out, &EvalOutput { q: p.q, m: p.m, sigma2: p.sigma2, what: a.what, x: a.x, value })?,
        Format::Csv => csv_rows(out, &["x", "value"], &[vec![fmt(a.x), fmt(value)]])?,
    }
    Ok(())
}

fn moment(a: &MomentsArgs) -> Result<MomentReport, Failure> {
    let p = a.dist.params()?;
    let n = a.order;
    let power = a.power.unwrap_or(p.q);
    if power.is_nan() || power <= 0.0 {
        return Err(Failure::Domain(format!("--power must be > 0, got {power}")));
    }
    // Escort powers of a q-Gaussian are q-Gaussians, so every kind has a closed
    // form through the raw moments of some N_q'.
    let (name, closed, oracle) = match a.kind {
        Kind::Raw => {
            let oracle = raw_moment_oracle(&p, n, MOMENT_TOL);
            let closed = raw_moment_closed(&p, n).unwrap_or(f64::NAN);
            (format!("E(X^{n})"), closed, oracle)
        }
        Kind::Unnormalized => {
            let tol = MOMENT_TOL * p.prefactor.powf(power);
            let oracle = unnormalized_q_moment(&p, n, power, tol);
            let closed = match (p.nu_p_closed(power), p.escort_params(power)) {
                (Ok(nu), Ok(e)) => raw_moment_closed(&e, n).map_or(f64::NAN, |r| r * nu),
                _ => f64::NAN,
            };
            (format!("integral x^{n} pdf^{power}"), closed, oracle)
        }
        Kind::Normalized => {
            let tol = MOMENT_TOL * p.prefactor.powf(power);
            let nu = p.nu_p_oracle(power, tol)?;
            let oracle = unnormalized_q_moment(&p, n, power, tol).scaled(1.0 / nu);
            let closed = p
                .escort_params(power)
                .ok()
                .and_then(|e| raw_moment_closed(&e, n).ok())
                .unwrap_or(f64::NAN);
            (format!("escort E(X^{n}) with power {power}"), closed, oracle)
        }
    };
    if !oracle.converged {
        return Err(Failure::Numerical(format!(
            "quadrature for {name} did not converge (estimate {}, error {}); the moment may diverge at q = {}",
            fmt(oracle.value),
            fmt(oracle.error_estimate),
            p.q
        )));
    }
    Ok(moment_report(name, closed, &oracle))
}

fn moments(a: &MomentsArgs, format: Format, out: &mut impl Write) -> Outcome {
    let r = moment(a)?;
    match format {
        Format::Text => {
            writeln!(out, "{}", r.name)?;
            writeln!(out, "closed        {}", fmt(r.closed))?;
            writeln!(out, "oracle        {} ± {}", fmt(r.oracle), fmt(r.oracle_error))?;
            if let (Some(abs), Some(rel)) = (r.abs_err, r.rel_err) {
                writeln!(out, "abs_err       {}", fmt(abs))?;
                writeln!(out, "rel_err       {}", fmt(rel))?;
            }
        }
        Format::Json => json(out, &r)?,
        Format::Csv => csv_rows(
            out,
            &["name", "closed", "oracle", "oracle_error", "abs_err", "rel_err"],
            &[vec![
                r.name.clone(),
                fmt(r.closed),
                fmt(r.oracle),
                fmt(r.oracle_error),
                fmt_opt(r.abs_err),
                fmt_opt(r.rel_err),
            ]],
        )?,
    }
    Ok(())
}

fn laplace(a: &LaplaceArgs, format: Format, out: &mut impl Write) -> Outcome {
    let p = a.dist.params()?;
    let eval: LaplaceEval = match a.method {
        Method::Closed => {
            let sign = match a.sign {
                Sign::Plus => SignVariant::Plus,
                Sign::Minus => SignVariant::Minus,
            };
            laplace_closed_variant(&p, a.theta, sign)?
        }
        Method::Oracle => {
            let e = laplace_oracle(&p, a.theta, LAPLACE_TOL)?;
            if !e.converged {
                return Err(Failure::Numerical(format!(
                    "the q-Laplace integral diverges or did not converge at theta = {}",
                    a.theta
                )));
            }
            e
        }
    };
    match format {
        Format::Text => writeln!(out, "{}", fmt(eval.value))?,
        Format::Json => json(out, &eval)?,
        Format::Csv => csv_rows(out, &["theta", "value"], &[vec![fmt(eval.theta), fmt(eval.value)]])?,
    }
    Ok(())
}

fn sample(a: &SampleArgs, format: Format, out: &mut impl Write) -> Outcome {
    let dist = QGaussian::new(a.dist.params()?)?;
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let xs = dist.sample(&mut rng, a.n);
    match format {
        Format::Text => {
            for x in &xs {
                writeln!(out, "{}", fmt(*x))?;
            }
        }
        Format::Json => json(out, &xs)?,
        Format::Csv => csv_rows(out, &["value"], &xs.iter().map(|x| vec![fmt(*x)]).collect::<Vec<_>>())?,
    }
    Ok(())
}

fn read_sample(reader: impl BufRead) -> Result<Vec<f64>, Failure> {
    let mut xs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let x: f64 = t
            .parse()
            .map_err(|_| Failure::Domain(format!("line {}: not a number: {t:?}", i + 1)))?;
        if !x.is_finite() {
            return Err(Failure::Domain(format!("line {}: value must be finite, got {t}", i + 1)));
        }
        xs.push(x);
    }
    Ok(xs)
}

#[derive(Serialize)]
struct EstimateOutput {
    stats: SampleStats,
    interval: Option<ConfidenceInterval>,
}

fn estimate(a: &EstimateArgs, format: Format, out: &mut impl Write) -> Outcome {
    let xs = match &a.file {
        Some(path) => {
            let f = std::fs::File::open(path)
                .map_err(|e| Failure::Domain(format!("{}: {e}", path.display())))?;
            read_sample(io::BufReader::new(f))?
        }
        None => read_sample(io::stdin().lock())?,
    };
    let stats = summarize(&xs, a.q)?;
    let kind = match a.interval {
        Interval::Normal => IntervalKind::Normal,
        Interval::QGaussian => IntervalKind::QGaussianQuantile,
    };
    let interval = a
        .sigma2_known
        .map(|s2| confidence_interval(&stats, s2, a.level, kind))
        .transpose()?;
    match format {
        Format::Text => {
            writeln!(out, "n             {}", stats.n)?;
            writeln!(out, "mean          {}", fmt(stats.mean))?;
            writeln!(out, "s2            {}", fmt(stats.s2))?;
            writeln!(out, "sigma2_hat    {}", fmt(stats.sigma2_hat))?;
            if let Some(ci) = &interval {
                writeln!(out, "interval      [{}, {}] at level {}", fmt(ci.lo), fmt(ci.hi), fmt(ci.level))?;
            }
        }
        Format::Json => json(out, &EstimateOutput { stats, interval })?,
        Format::Csv => {
            let mut header = vec!["n", "q", "mean", "s2", "sigma2_hat"];
            let mut row = vec![stats.n.to_string(), fmt(stats.q), fmt(stats.mean), fmt(stats.s2), fmt(stats.sigma2_hat)];
            if let Some(ci) = &interval {
                header.extend(["lo", "hi", "level"]);
                row.extend([fmt(ci.lo), fmt(ci.hi), fmt(ci.level)]);
            }
            csv_rows(out, &header, &[row])?;
        }
    }
    Ok(())
}

fn verify(a: &VerifyArgs, format: Format, out: &mut impl Write) -> Outcome {
    if !(a.tol_scale > 0.0 && a.tol_scale.is_finite()) {
        return Err(Failure::Domain(format!("--tol-scale must be positive, got {}", a.tol_scale)));
    }
    let report = run_verify(&VerifyConfig {
        q_grid: a.q_grid.clone(),
        tol_scale: a.tol_scale,
        seed: a.seed,
        monte_carlo: !a.no_monte_carlo,
        ..VerifyConfig::default()
    });
    match format {
        Format::Text => verify_text(&report, out)?,
        Format::Json => json(out, &report)?,
        Format::Csv => csv_rows(
            out,
            &["name", "locus", "closed", "oracle", "abs_err", "rel_err", "status"],
            &report
                .entries
                .iter()
                .map(|e| {
                    vec![
                        e.name.clone(),
                        e.locus.clone(),
                        fmt(e.closed),
                        fmt(e.oracle),
                        fmt_opt(e.abs_err),
                        fmt_opt(e.rel_err),
                        e.status.to_string(),
                    ]
                })
                .collect::<Vec<_>>(),
        )?,
    }
    if report.passed() {
        Ok(())
    } else {
        Err(Failure::Verify)
    }
}

fn verify_text(r: &VerifyReport, out: &mut impl Write) -> Outcome {
    let width = r.entries.iter().map(|e| e.name.len()).max().unwrap_or(0);
    for e in &r.entries {
        writeln!(
            out,
            "{:<17} {:<width$}  closed {}  oracle {}  tol {}",
            e.status.to_string(),
            e.name,
            fmt(e.closed),
            fmt(e.oracle),
            fmt(e.tolerance)
        )?;
        if e.status != qstat_core::Status::Pass || is_erratum(&e.name) {
            writeln!(out, "{:17} {:width$}  {}: {}", "", "", e.locus, e.note)?;
        }
    }
    let s = r.summary;
    writeln!(
        out,
        "\n{} passed, {} failed, {} skipped as divergent (seed {}, qstat {})",
        s.pass, s.fail, s.skipped_divergent, r.seed, r.version
    )?;
    Ok(())
}

fn is_erratum(name: &str) -> bool {
    matches!(name, "qprod-exponent" | "qneg-sign" | "laplace-sign" | "normalized-kurtosis-window")
}
