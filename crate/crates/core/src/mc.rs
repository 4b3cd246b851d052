//! Monte Carlo harness: strong-error convergence studies, ruin-time
//! studies, an exact event-driven ruin oracle, and aggregation.
//!
//! Every trial draws from its own stream keyed by `(row seed, trial index)`
//! and results are aggregated in trial order, so tables do not depend on
//! how many worker threads ran them.

use rand_distr::{Distribution, Exp};
use rayon::prelude::*;

use crate::analytic::{eta_rho, printed, RuinAnalytics, RuinModelInputs};
use crate::drivers::{derive_seed, make_stream, RngStream};
use crate::models::{
    detect_ruin, gl_coefficients, gl_exact_path, GeometricLevyParams, SurplusCoefficients,
    SurplusParams,
};
use crate::scheme::simulate_path;
use crate::{Error, Result};

/// Sample mean and standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    /// Sample standard deviation over `√n`; 0 for a single value.
    pub stderr: f64,
    pub count: usize,
}

/// Neumaier-compensated sum.
fn compensated_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

pub fn aggregate(values: &[f64]) -> Result<Estimate> {
    if values.is_empty() {
        return Err(Error::Empty);
    }
    let n = values.len();
    let mean = compensated_sum(values.iter().copied()) / n as f64;
    let stderr = if n > 1 {
        let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
        (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
    } else {
        0.0
    };
    Ok(Estimate {
        mean,
        stderr,
        count: n,
    })
}

/// Settings shared by the studies.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub replications: usize,
    pub horizon: f64,
    pub master_seed: u64,
    /// Worker threads; `None` uses rayon's default.
    pub threads: Option<usize>,
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::InvalidParameter("replications must be at least 1".into()));
        }
        if !(self.horizon > 0.0) || !self.horizon.is_finite() {
            return Err(Error::InvalidHorizon(self.horizon));
        }
        Ok(())
    }
}

/// Runs `f(0..n)` on a pool of the requested width and returns the results
/// in index order.
fn run_indexed<T, F>(n: usize, threads: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| Error::InvalidParameter(format!("cannot build thread pool: {e}")))?;
    pool.install(|| (0..n as u64).into_par_iter().map(&f).collect())
}

/// Row seeds are keyed by the row's parameter value, so adding or removing
/// rows leaves the others untouched.
fn row_seed(master_seed: u64, key: f64) -> u64 {
    derive_seed(master_seed, key.to_bits())
}

/// Result of one coupled Euler/exact trial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrongErrorSample {
    /// `max_k |X(t_k) − y(t_k)|²`, left limits included.
    pub sup_sq_error: f64,
    /// Whether the Euler path ever left `(0, ∞)`.
    pub euler_nonpositive: bool,
}

pub fn strong_error_sample(
    p: &GeometricLevyParams,
    delta: f64,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<StrongErrorSample> {
    let drivers = p.drivers(horizon, delta, stream)?;
    let euler = simulate_path(&gl_coefficients(p), &drivers, &[p.y0])?;
    let exact = gl_exact_path(p, &drivers)?;
    let mut sup: f64 = 0.0;
    for k in 0..euler.len() {
        let post = euler.state(k)[0] - exact.state(k)[0];
        let pre = euler.left_limit(k)[0] - exact.left_limit(k)[0];
        sup = sup.max(post * post).max(pre * pre);
    }
    let euler_nonpositive = euler
        .states()
        .iter()
        .chain((0..euler.len()).map(|k| &euler.left_limit(k)[0]))
        .any(|&v| !(v > 0.0));
    Ok(StrongErrorSample {
        sup_sq_error: sup,
        euler_nonpositive,
    })
}

/// Sup over grid points of the squared Euler-vs-exact gap for one trial.
pub fn strong_error_trial(
    p: &GeometricLevyParams,
    delta: f64,
    horizon: f64,
    stream: &mut RngStream,
) -> Result<f64> {
    strong_error_sample(p, delta, horizon, stream).map(|s| s.sup_sq_error)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub delta: f64,
    pub mean_sup_sq_error: f64,
    pub stderr: f64,
    pub replications: usize,
    /// Trials whose Euler path was not strictly positive.
    pub nonpositive_paths: usize,
}

/// Ordinary least squares of `log(error)` on `log(Δ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_stderr: f64,
    pub intercept_stderr: f64,
}

/// Fits `log y = intercept + slope·log x`. Standard errors are 0 when there
/// are only two points.
pub fn fit_loglog(points: &[(f64, f64)]) -> Result<LogLogFit> {
    if points.len() < 2 {
        return Err(Error::InvalidParameter(
            "log-log fit needs at least two points".into(),
        ));
    }
    if let Some((x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "log-log fit needs positive values, got ({x}, {y})"
        )));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidParameter("log-log fit needs distinct Δ values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let (slope_stderr, intercept_stderr) = if points.len() > 2 {
        let rss: f64 = xs
            .iter()
            .zip(&ys)
            .map(|(x, y)| {
                let r = y - intercept - slope * x;
                r * r
            })
            .sum();
        let s2 = rss / (n - 2.0);
        ((s2 / sxx).sqrt(), (s2 * (1.0 / n + mx * mx / sxx)).sqrt())
    } else {
        (0.0, 0.0)
    };
    Ok(LogLogFit {
        slope,
        intercept,
        slope_stderr,
        intercept_stderr,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorTable {
    /// Sorted by ascending Δ.
    pub rows: Vec<ErrorRow>,
    /// Present when there are at least two rows with positive error.
    pub fit: Option<LogLogFit>,
}

/// Mean sup-squared error of the Euler scheme against the exact geometric
/// Lévy solution, one row per step size.
pub fn convergence_study(
    p: &GeometricLevyParams,
    deltas: &[f64],
    cfg: &StudyConfig,
) -> Result<ErrorTable> {
    cfg.validate()?;
    if deltas.is_empty() {
        return Err(Error::InvalidParameter("no step sizes given".into()));
    }
    if let Some(&d) = deltas
        .iter()
        .find(|&&d| !(d > 0.0) || !d.is_finite() || d > cfg.horizon)
    {
        return Err(Error::InvalidStep {
            delta: d,
            horizon: cfg.horizon,
        });
    }
    let mut sorted = deltas.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());

    let mut rows = Vec::with_capacity(sorted.len());
    for &delta in &sorted {
        let seed = row_seed(cfg.master_seed, delta);
        let samples = run_indexed(cfg.replications, cfg.threads, |trial| {
            strong_error_sample(p, delta, cfg.horizon, &mut make_stream(seed, trial))
        })?;
        let errors: Vec<f64> = samples.iter().map(|s| s.sup_sq_error).collect();
        let est = aggregate(&errors)?;
        rows.push(ErrorRow {
            delta,
            mean_sup_sq_error: est.mean,
            stderr: est.stderr,
            replications: est.count,
            nonpositive_paths: samples.iter().filter(|s| s.euler_nonpositive).count(),
        });
    }
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.mean_sup_sq_error > 0.0)
        .map(|r| (r.delta, r.mean_sup_sq_error))
        .collect();
    let fit = if pts.len() >= 2 {
        Some(fit_loglog(&pts)?)
    } else {
        None
    };
    Ok(ErrorTable { rows, fit })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuinRow {
    pub reserve: f64,
    /// Closed form with the fixed constants of [`printed`]; only for the
    /// reference configuration started in regime 1.
    pub exact_printed: Option<f64>,
    /// Closed form with computed coefficients, for the initial regime.
    pub exact_solver: f64,
    pub sim_mean: f64,
    pub stderr: f64,
    pub replications: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuinTable {
    /// Sorted by ascending reserve.
    pub rows: Vec<RuinRow>,
    pub analytics: RuinAnalytics,
}

/// One simulated ruin time, truncated at the horizon.
pub fn ruin_trial(p: &SurplusParams, delta: f64, horizon: f64, stream: &mut RngStream) -> Result<f64> {
    let drivers = p.drivers(horizon, delta, stream)?;
    let path = simulate_path(&SurplusCoefficients, &drivers, &[p.reserve])?;
    Ok(detect_ruin(&path, horizon))
}

/// Simulated expected ruin times next to the closed forms, one row per
/// initial reserve.
pub fn ruin_study(
    p: &SurplusParams,
    delta: f64,
    reserves: &[f64],
    cfg: &StudyConfig,
) -> Result<RuinTable> {
    cfg.validate()?;
    if !(delta > 0.0) || !delta.is_finite() || delta > cfg.horizon {
        return Err(Error::InvalidStep {
            delta,
            horizon: cfg.horizon,
        });
    }
    if reserves.is_empty() {
        return Err(Error::InvalidParameter("no reserves given".into()));
    }
    let inputs = RuinModelInputs::from_surplus(p)?;
    let analytics = RuinAnalytics::new(inputs)?;
    let show_printed = inputs.is_reference() && p.initial_regime == 0;

    let mut sorted = reserves.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut rows = Vec::with_capacity(sorted.len());
    for &u in &sorted {
        let model = p.with_reserve(u)?;
        let seed = row_seed(cfg.master_seed, u);
        let times = run_indexed(cfg.replications, cfg.threads, |trial| {
            ruin_trial(&model, delta, cfg.horizon, &mut make_stream(seed, trial))
        })?;
        let est = aggregate(&times)?;
        rows.push(RuinRow {
            reserve: u,
            exact_printed: show_printed.then(|| printed::xi1(u)),
            exact_solver: analytics.expected_ruin_time(u, p.initial_regime),
            sim_mean: est.mean,
            stderr: est.stderr,
            replications: est.count,
        });
    }
    Ok(RuinTable { rows, analytics })
}

/// Ruin time of one exact trajectory: CTMC sojourns are exponential, claims
/// arrive at the exact regime rate, and ruin is checked at every claim.
/// No time grid is involved.
pub fn event_driven_ruin_time(
    inputs: &RuinModelInputs,
    reserve: f64,
    horizon: f64,
    initial_regime: usize,
    stream: &mut RngStream,
) -> f64 {
    let switch = [
        Exp::new(inputs.q1).expect("positive"),
        Exp::new(inputs.q2).expect("positive"),
    ];
    let arrive = [
        Exp::new(inputs.lambda1).expect("positive"),
        Exp::new(inputs.lambda2).expect("positive"),
    ];
    let claim = Exp::new(1.0 / inputs.claim_mean).expect("positive");

    let mut t = 0.0;
    let mut surplus = reserve;
    let mut regime = initial_regime;
    loop {
        let end = (t + switch[regime].sample(stream)).min(horizon);
        loop {
            let gap = arrive[regime].sample(stream);
            if t + gap > end {
                break;
            }
            t += gap;
            surplus += gap - claim.sample(stream);
            if surplus < 0.0 {
                return t;
            }
        }
        surplus += end - t;
        t = end;
        if t >= horizon {
            return horizon;
        }
        regime = 1 - regime;
    }
}

/// Mean of `R` event-driven ruin times started in regime 1, truncated at
/// `horizon`. Replication `i` uses stream `(master_seed, i)`.
pub fn event_driven_ruin_oracle(
    inputs: &RuinModelInputs,
    reserve: f64,
    horizon: f64,
    replications: usize,
    master_seed: u64,
) -> Result<Estimate> {
    let pi = inputs.generator().stationary_distribution()?;
    eta_rho([pi[0], pi[1]], inputs.lambda1, inputs.lambda2, inputs.claim_mean)?;
    let times = run_indexed(replications, None, |i| {
        Ok(event_driven_ruin_time(
            inputs,
            reserve,
            horizon,
            0,
            &mut make_stream(master_seed, i),
        ))
    })?;
    aggregate(&times)
}
