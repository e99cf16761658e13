//! Monte-Carlo strong errors, order fits and trajectory statistics.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrators::{Stepper, Trajectory};
use crate::noise::NoiseStream;

/// Relative slack allowed when checking that `T / h` is an integer.
const STEP_COUNT_TOLERANCE: f64 = 1e-9;

/// A grid point is kept by [`fit_order_screened`] only if its mean squared
/// error exceeds this many standard errors.
pub const SIGNIFICANCE_RATIO: f64 = 4.0;
/// Screening never leaves fewer points than this.
pub const MIN_FIT_POINTS: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct McOptions {
    /// Thread count; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    /// Sum per-path results sequentially in path order.
    pub deterministic: bool,
}

/// `T / h` as an integer.
pub fn step_count(t_end: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::DegenerateStep(h));
    }
    let ratio = t_end / h;
    let n = ratio.round();
    if !(n >= 1.0) || (ratio - n).abs() > STEP_COUNT_TOLERANCE * n.max(1.0) {
        return Err(Error::NonIntegralStepCount { ratio });
    }
    Ok(n as usize)
}

fn run_paths<T, F, R>(paths: usize, opts: McOptions, per_path: F, reduce: R, zero: T) -> Result<T>
where
    T: Send + Sync + Clone,
    F: Fn(u64) -> Option<T> + Sync + Send,
    R: Fn(T, T) -> T + Sync + Send,
{
    let work = || {
        if opts.deterministic {
            let results: Vec<Option<T>> = (0..paths as u64).into_par_iter().map(&per_path).collect();
            results.into_iter().flatten().fold(zero.clone(), &reduce)
        } else {
            (0..paths as u64)
                .into_par_iter()
                .filter_map(&per_path)
                .reduce(|| zero.clone(), &reduce)
        }
    };
    match opts.workers {
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// Strong error of one step size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorEstimate {
    pub h: f64,
    /// `√(mean |X_N - Y_N|²)`.
    pub rms: f64,
    pub mse: f64,
    /// Standard error of the mean squared error.
    pub mse_stderr: f64,
    pub paths: usize,
    /// Paths whose scheme or reference step failed.
    pub aborted: usize,
}

#[derive(Clone, Copy)]
struct Moments {
    n: usize,
    sum: f64,
    sum_sq: f64,
}

impl Moments {
    const ZERO: Self = Self { n: 0, sum: 0.0, sum_sq: 0.0 };

    fn one(v: f64) -> Self {
        Self { n: 1, sum: v, sum_sq: v * v }
    }

    fn merge(self, o: Self) -> Self {
        Self {
            n: self.n + o.n,
            sum: self.sum + o.sum,
            sum_sq: self.sum_sq + o.sum_sq,
        }
    }
}

/// Squared end-point distance between scheme and reference on one path.
pub fn path_error<S: Stepper>(stepper: &S, x0: &[f64], steps: usize, stream: &mut NoiseStream) -> Result<f64> {
    let mut x = x0.to_vec();
    let mut y = x0.to_vec();
    for step in 1..=steps {
        let wrap = |e| Error::StepFailed { step, source: Box::new(e) };
        let noise = stepper.sample(stream).map_err(wrap)?;
        x = stepper.advance(&x, &noise).map_err(wrap)?;
        y = stepper.advance_reference(&y, &noise).map_err(wrap)?;
    }
    let e: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum();
    if e.is_finite() {
        Ok(e)
    } else {
        Err(Error::NonFinite)
    }
}

/// Monte-Carlo strong error at the stepper's step size; path `k` uses
/// stream `(seed, k)`.
pub fn strong_error<S: Stepper>(stepper: &S, x0: &[f64], t_end: f64, paths: usize, seed: u64, opts: McOptions) -> Result<ErrorEstimate> {
    let h = stepper.step_size();
    let steps = step_count(t_end, h)?;
    if x0.len() != stepper.dim() {
        return Err(Error::DimensionMismatch {
            expected: stepper.dim(),
            actual: x0.len(),
        });
    }
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let m = run_paths(
        paths,
        opts,
        |k| path_error(stepper, x0, steps, &mut NoiseStream::new(seed, k)).ok().map(Moments::one),
        Moments::merge,
        Moments::ZERO,
    )?;
    if m.n == 0 {
        return Err(Error::AllPathsFailed { paths });
    }
    let n = m.n as f64;
    let mse = m.sum / n;
    let var = if m.n > 1 { ((m.sum_sq - n * mse * mse) / (n - 1.0)).max(0.0) } else { 0.0 };
    Ok(ErrorEstimate {
        h,
        rms: mse.sqrt(),
        mse,
        mse_stderr: (var / n).sqrt(),
        paths: m.n,
        aborted: paths - m.n,
    })
}

/// Errors over a grid of step sizes for one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorSeries {
    pub h_values: Vec<f64>,
    pub rms_errors: Vec<f64>,
    pub mse_stderr: Vec<f64>,
    pub paths: usize,
    pub seed: u64,
    pub aborted_paths: usize,
}

impl ErrorSeries {
    pub fn from_estimates(estimates: &[ErrorEstimate], paths: usize, seed: u64) -> Self {
        Self {
            h_values: estimates.iter().map(|e| e.h).collect(),
            rms_errors: estimates.iter().map(|e| e.rms).collect(),
            mse_stderr: estimates.iter().map(|e| e.mse_stderr).collect(),
            paths,
            seed,
            aborted_paths: estimates.iter().map(|e| e.aborted).sum(),
        }
    }

    pub fn len(&self) -> usize {
        self.h_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.h_values.is_empty()
    }
}

/// Runs `strong_error` for every step size, building a stepper per `h`.
pub fn error_series<S, B>(build: B, x0: &[f64], t_end: f64, grid: &[f64], paths: usize, seed: u64, opts: McOptions) -> Result<ErrorSeries>
where
    S: Stepper,
    B: Fn(f64) -> Result<S>,
{
    let estimates = grid
        .iter()
        .map(|&h| strong_error(&build(h)?, x0, t_end, paths, seed, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(ErrorSeries::from_estimates(&estimates, paths, seed))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderFit {
    pub slope: f64,
    pub intercept: f64,
    /// Largest absolute residual of the log-log fit.
    pub max_residual: f64,
}

/// Least-squares line through `(x, y)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<(f64, f64)> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::DegenerateSeries(format!("need two or more paired points, got {} and {}", x.len(), y.len())));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::DegenerateSeries("abscissae are all equal".into()));
    }
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// Fits `ln rms = slope ln h + intercept`.
pub fn fit_order(series: &ErrorSeries) -> Result<OrderFit> {
    fit_points(&series.h_values, &series.rms_errors)
}

fn fit_points(h: &[f64], rms: &[f64]) -> Result<OrderFit> {
    if h.len() < 2 {
        return Err(Error::DegenerateSeries(format!("{} points", h.len())));
    }
    if h.iter().chain(rms).any(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::DegenerateSeries("step sizes and errors must be positive".into()));
    }
    let x: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = rms.iter().map(|v| v.ln()).collect();
    let (slope, intercept) = linear_fit(&x, &y)?;
    let max_residual = x
        .iter()
        .zip(&y)
        .map(|(a, b)| (b - slope * a - intercept).abs())
        .fold(0.0, f64::max);
    Ok(OrderFit {
        slope,
        intercept,
        max_residual,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScreenedFit {
    pub fit: OrderFit,
    /// `kept[i]` is false for grid points dropped as statistically unresolved.
    pub kept: Vec<bool>,
}

impl ScreenedFit {
    pub fn dropped(&self) -> impl Iterator<Item = usize> + '_ {
        self.kept.iter().enumerate().filter(|(_, k)| !**k).map(|(i, _)| i)
    }
}

/// Order fit that first discards points whose mean squared error is not
/// resolved (`mse < SIGNIFICANCE_RATIO · stderr`), worst relative error
/// first, keeping at least `MIN_FIT_POINTS`.
pub fn fit_order_screened(series: &ErrorSeries) -> Result<ScreenedFit> {
    let n = series.len();
    if series.mse_stderr.len() != n || series.rms_errors.len() != n {
        return Err(Error::DegenerateSeries("ragged error series".into()));
    }
    let rel = |i: usize| {
        let mse = series.rms_errors[i].powi(2);
        if mse > 0.0 {
            series.mse_stderr[i] / mse
        } else {
            f64::INFINITY
        }
    };
    let mut kept = vec![true; n];
    loop {
        let remaining = kept.iter().filter(|k| **k).count();
        if remaining <= MIN_FIT_POINTS {
            break;
        }
        let worst = (0..n)
            .filter(|&i| kept[i] && rel(i) * SIGNIFICANCE_RATIO > 1.0)
            .max_by(|&a, &b| rel(a).total_cmp(&rel(b)));
        match worst {
            Some(i) => kept[i] = false,
            None => break,
        }
    }
    let pick = |v: &[f64]| -> Vec<f64> { v.iter().zip(&kept).filter(|(_, k)| **k).map(|(x, _)| *x).collect() };
    let fit = fit_points(&pick(&series.h_values), &pick(&series.rms_errors))?;
    Ok(ScreenedFit { fit, kept })
}

/// `max_k |H(X_k) - H(X_0)|` from a recorded trajectory.
pub fn hamiltonian_drift(traj: &Trajectory) -> Result<f64> {
    let h = traj
        .hamiltonian
        .as_ref()
        .ok_or(Error::MissingDiagnostics("hamiltonian"))?;
    let h0 = h.first().copied().unwrap_or(0.0);
    Ok(h.iter().map(|v| (v - h0).abs()).fold(0.0, f64::max))
}

/// Largest one-step symplectic defect recorded along a trajectory.
pub fn max_defect(traj: &Trajectory) -> Result<f64> {
    let d = traj.defect.as_ref().ok_or(Error::MissingDiagnostics("defect"))?;
    Ok(d.iter().copied().fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    /// Sample mean of `|Z_k|²` at each time.
    pub second_moment: Vec<f64>,
    pub paths: usize,
    pub aborted: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentGrowth {
    pub series: MomentSeries,
    /// Least-squares slope of the second moment against time.
    pub slope: f64,
    pub intercept: f64,
}

/// Sample second moment of the scheme along `[0, T]`.
pub fn second_moment_growth<S: Stepper>(stepper: &S, z0: &[f64], t_end: f64, paths: usize, seed: u64, opts: McOptions) -> Result<MomentGrowth> {
    let h = stepper.step_size();
    let steps = step_count(t_end, h)?;
    if z0.len() != stepper.dim() {
        return Err(Error::DimensionMismatch {
            expected: stepper.dim(),
            actual: z0.len(),
        });
    }
    if paths == 0 {
        return Err(Error::InvalidArgument("need at least one path".into()));
    }
    let norm2 = |z: &[f64]| z.iter().map(|v| v * v).sum::<f64>();
    let per_path = |k: u64| -> Option<(usize, Vec<f64>)> {
        let mut stream = NoiseStream::new(seed, k);
        let mut z = z0.to_vec();
        let mut out = Vec::with_capacity(steps + 1);
        out.push(norm2(&z));
        for _ in 0..steps {
            let noise = stepper.sample(&mut stream).ok()?;
            z = stepper.advance(&z, &noise).ok()?;
            out.push(norm2(&z));
        }
        out.iter().all(|v| v.is_finite()).then_some((1, out))
    };
    let merge = |a: (usize, Vec<f64>), b: (usize, Vec<f64>)| {
        let (n, mut acc) = a;
        for (x, y) in acc.iter_mut().zip(&b.1) {
            *x += y;
        }
        (n + b.0, acc)
    };
    let (ok, sums) = run_paths(paths, opts, per_path, merge, (0, vec![0.0; steps + 1]))?;
    if ok == 0 {
        return Err(Error::AllPathsFailed { paths });
    }
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let second_moment: Vec<f64> = sums.iter().map(|s| s / ok as f64).collect();
    let (slope, intercept) = linear_fit(&times, &second_moment)?;
    Ok(MomentGrowth {
        series: MomentSeries {
            times,
            second_moment,
            paths: ok,
            aborted: paths - ok,
        },
        slope,
        intercept,
    })
}

/// Times where `component` changes sign, by linear interpolation between
/// recorded states. A sample that is exactly zero counts once.
pub fn zero_crossings(traj: &Trajectory, component: usize) -> Result<Vec<f64>> {
    if let Some(x) = traj.states.first() {
        if component >= x.len() {
            return Err(Error::InvalidArgument(format!("component {component} out of range for dimension {}", x.len())));
        }
    }
    let mut out = Vec::new();
    for k in 1..traj.states.len() {
        let (a, b) = (traj.states[k - 1][component], traj.states[k][component]);
        let (ta, tb) = (traj.times[k - 1], traj.times[k]);
        if a == 0.0 {
            if k == 1 {
                out.push(ta);
            }
            continue;
        }
        if b == 0.0 {
            out.push(tb);
        } else if (a < 0.0) != (b < 0.0) {
            out.push(ta + (tb - ta) * a / (a - b));
        }
    }
    Ok(out)
}
