//! The four experiment commands and `--check` evaluation.

use padesym::analysis::{
    error_series, fit_order, fit_order_screened, second_moment_growth, step_count, McOptions,
};
use padesym::integrators::{integrate, AdditiveStepper, Diagnostics, LinearStepper, Trajectory};
use padesym::NoiseStream;

use crate::csv::{format_number, CsvSeries};
use crate::error::CliError;
use crate::experiment::{Check, Experiment, SchemeDef, SystemDef};

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Overrides the experiment's own seed.
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub deterministic: bool,
}

impl RunOptions {
    fn seed(&self, exp: &Experiment) -> u64 {
        self.seed.or(exp.seed).unwrap_or(DEFAULT_SEED)
    }

    fn mc(&self) -> McOptions {
        McOptions {
            workers: self.workers,
            deterministic: self.deterministic,
        }
    }
}

/// Scalar results that `--check` thresholds are evaluated against.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Metrics {
    pub slope: Option<f64>,
    pub relative_drift: Option<f64>,
    pub defect: Option<f64>,
    pub moment_slope: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub csv: CsvSeries,
    pub metrics: Metrics,
}

fn mismatch() -> CliError {
    CliError::Config("scheme: kind does not fit the system".into())
}

/// Strong error per grid point; footer carries the fitted order.
pub fn convergence(exp: &Experiment, opts: &RunOptions) -> Result<Outcome, CliError> {
    let seed = opts.seed(exp);
    let x0 = exp.system.initial();
    let series = match (&exp.system, &exp.scheme) {
        (SystemDef::Linear { sys, .. }, SchemeDef::Linear(scheme)) => error_series(
            |h| Ok(LinearStepper::new(sys, *scheme, h)?.with_reference()),
            x0,
            exp.t_end,
            &exp.grid,
            exp.paths,
            seed,
            opts.mc(),
        )?,
        (SystemDef::Additive { sys, .. }, SchemeDef::Additive(scheme)) => error_series(
            |h| AdditiveStepper::new(sys, *scheme, h),
            x0,
            exp.t_end,
            &exp.grid,
            exp.paths,
            seed,
            opts.mc(),
        )?,
        _ => return Err(mismatch()),
    };
    let mut csv = CsvSeries::new(["h", "rms_error", "stderr"]);
    for i in 0..series.len() {
        csv.push_row(vec![series.h_values[i], series.rms_errors[i], series.mse_stderr[i]]);
    }
    csv.note("experiment", &exp.name);
    csv.note("scheme", exp.scheme);
    let slope = if series.len() >= 2 {
        let screened = fit_order_screened(&series)?;
        let all = fit_order(&series)?;
        let dropped: Vec<String> = screened.dropped().map(|i| format_number(series.h_values[i])).collect();
        csv.note("slope", format_number(screened.fit.slope));
        csv.note("intercept", format_number(screened.fit.intercept));
        csv.note("max_residual", format_number(screened.fit.max_residual));
        csv.note(
            "dropped_h",
            if dropped.is_empty() { "none".to_string() } else { dropped.join(" ") },
        );
        csv.note("slope_all_points", format_number(all.slope));
        Some(screened.fit.slope)
    } else {
        None
    };
    csv.note("paths", exp.paths);
    csv.note("aborted_paths", series.aborted_paths);
    csv.note("seed", seed);
    csv.note("t_end", format_number(exp.t_end));
    Ok(Outcome {
        csv,
        metrics: Metrics {
            slope,
            ..Metrics::default()
        },
    })
}

fn run_single(exp: &Experiment, opts: &RunOptions, diagnostics: &Diagnostics) -> Result<Trajectory, CliError> {
    let h = exp.single_step()?;
    let steps = step_count(exp.t_end, h)?;
    let mut stream = NoiseStream::new(opts.seed(exp), 0);
    let x0 = exp.system.initial();
    let traj = match (&exp.system, &exp.scheme) {
        (SystemDef::Linear { sys, .. }, SchemeDef::Linear(scheme)) => {
            integrate(&LinearStepper::new(sys, *scheme, h)?, x0, steps, &mut stream, diagnostics)?
        }
        (SystemDef::Additive { sys, .. }, SchemeDef::Additive(scheme)) => {
            integrate(&AdditiveStepper::new(sys, *scheme, h)?, x0, steps, &mut stream, diagnostics)?
        }
        _ => return Err(mismatch()),
    };
    Ok(traj)
}

fn state_columns(dim: usize) -> Vec<String> {
    let n = dim / 2;
    if n == 1 {
        return vec!["p".into(), "q".into()];
    }
    (1..=n).map(|i| format!("p{i}")).chain((1..=n).map(|i| format!("q{i}"))).collect()
}

fn trajectory_metrics(traj: &Trajectory) -> Metrics {
    let relative_drift = traj.hamiltonian.as_ref().map(|h| {
        let h0 = h[0];
        let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
        h.iter().map(|v| (v - h0).abs()).fold(0.0, f64::max) / scale
    });
    let defect = traj.defect.as_ref().map(|d| d.iter().copied().fold(0.0, f64::max));
    Metrics {
        relative_drift,
        defect,
        ..Metrics::default()
    }
}

fn note_trajectory(csv: &mut CsvSeries, exp: &Experiment, seed: u64, m: &Metrics) {
    csv.note("experiment", &exp.name);
    csv.note("scheme", exp.scheme);
    csv.note("seed", seed);
    if let Some(d) = m.relative_drift {
        csv.note("max_relative_drift", format_number(d));
    }
    if let Some(d) = m.defect {
        csv.note("max_defect", format_number(d));
    }
}

/// One sample path: `t, p, q[, H][, defect]`.
pub fn trajectory(exp: &Experiment, opts: &RunOptions, hamiltonian: bool, defect: bool) -> Result<Outcome, CliError> {
    let diagnostics = Diagnostics {
        hamiltonian: hamiltonian.then(|| exp.system.invariant().clone()),
        defect,
    };
    let traj = run_single(exp, opts, &diagnostics)?;
    let mut header = vec!["t".to_string()];
    header.extend(state_columns(exp.system.dim()));
    if hamiltonian {
        header.push("H".into());
    }
    if defect {
        header.push("defect".into());
    }
    let mut csv = CsvSeries::new(header);
    for k in 0..traj.times.len() {
        let mut row = vec![traj.times[k]];
        row.extend_from_slice(&traj.states[k]);
        if let Some(h) = &traj.hamiltonian {
            row.push(h[k]);
        }
        if let Some(d) = &traj.defect {
            row.push(d[k]);
        }
        csv.push_row(row);
    }
    let metrics = trajectory_metrics(&traj);
    note_trajectory(&mut csv, exp, opts.seed(exp), &metrics);
    Ok(Outcome { csv, metrics })
}

/// `t, H, defect` along one sample path.
pub fn invariants(exp: &Experiment, opts: &RunOptions) -> Result<Outcome, CliError> {
    let diagnostics = Diagnostics {
        hamiltonian: Some(exp.system.invariant().clone()),
        defect: true,
    };
    let traj = run_single(exp, opts, &diagnostics)?;
    let (h, d) = (traj.hamiltonian.as_ref().expect("recorded"), traj.defect.as_ref().expect("recorded"));
    let mut csv = CsvSeries::new(["t", "H", "defect"]);
    for k in 0..traj.times.len() {
        csv.push_row(vec![traj.times[k], h[k], d[k]]);
    }
    let metrics = trajectory_metrics(&traj);
    note_trajectory(&mut csv, exp, opts.seed(exp), &metrics);
    Ok(Outcome { csv, metrics })
}

/// Sample mean of `|Z|²` over time with its least-squares slope.
pub fn moment_growth(exp: &Experiment, opts: &RunOptions) -> Result<Outcome, CliError> {
    let h = exp.single_step()?;
    let seed = opts.seed(exp);
    let x0 = exp.system.initial();
    let growth = match (&exp.system, &exp.scheme) {
        (SystemDef::Linear { sys, .. }, SchemeDef::Linear(scheme)) => {
            second_moment_growth(&LinearStepper::new(sys, *scheme, h)?, x0, exp.t_end, exp.paths, seed, opts.mc())?
        }
        (SystemDef::Additive { sys, .. }, SchemeDef::Additive(scheme)) => {
            second_moment_growth(&AdditiveStepper::new(sys, *scheme, h)?, x0, exp.t_end, exp.paths, seed, opts.mc())?
        }
        _ => return Err(mismatch()),
    };
    let mut csv = CsvSeries::new(["t", "second_moment"]);
    for (t, m) in growth.series.times.iter().zip(&growth.series.second_moment) {
        csv.push_row(vec![*t, *m]);
    }
    csv.note("experiment", &exp.name);
    csv.note("scheme", exp.scheme);
    csv.note("slope", format_number(growth.slope));
    csv.note("intercept", format_number(growth.intercept));
    csv.note("paths", growth.series.paths);
    csv.note("aborted_paths", growth.series.aborted);
    csv.note("seed", seed);
    Ok(Outcome {
        csv,
        metrics: Metrics {
            moment_slope: Some(growth.slope),
            ..Metrics::default()
        },
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: Check,
    pub value: f64,
    pub passed: bool,
}

/// Evaluates the thresholds whose metric this run produced.
pub fn evaluate_checks(checks: &[Check], m: &Metrics) -> Vec<CheckResult> {
    checks
        .iter()
        .filter_map(|&check| {
            let (value, passed) = match check {
                Check::SlopeWithin { target, tol } => m.slope.map(|v| (v, (v - target).abs() <= tol))?,
                Check::RelativeDriftAtMost(t) => m.relative_drift.map(|v| (v, v <= t))?,
                Check::RelativeDriftAbove(t) => m.relative_drift.map(|v| (v, v > t))?,
                Check::DefectAtMost(t) => m.defect.map(|v| (v, v <= t))?,
                Check::DefectAbove(t) => m.defect.map(|v| (v, v > t))?,
                Check::MomentSlopeWithin { target, rel } => {
                    m.moment_slope.map(|v| (v, (v - target).abs() <= rel * target.abs()))?
                }
                Check::MomentSlopeAbsAtMost(t) => m.moment_slope.map(|v| (v, v.abs() <= t))?,
            };
            Some(CheckResult { check, value, passed })
        })
        .collect()
}
