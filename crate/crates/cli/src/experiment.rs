//! Resolved experiment descriptions and pass/fail thresholds.

use std::fmt;

use padesym::analysis::step_count;
use padesym::{AdditiveScheme, AdditiveShs, LinearScheme, LinearShs, Matrix};

use crate::error::CliError;

#[derive(Debug, Clone)]
pub enum SystemDef {
    Linear {
        sys: LinearShs,
        initial: Vec<f64>,
        /// `C` of the quadratic reported in the `H` column.
        invariant: Matrix,
    },
    Additive {
        sys: AdditiveShs,
        initial: Vec<f64>,
    },
}

impl SystemDef {
    pub fn dim(&self) -> usize {
        match self {
            SystemDef::Linear { sys, .. } => sys.dim(),
            SystemDef::Additive { sys, .. } => sys.dim(),
        }
    }

    pub fn initial(&self) -> &[f64] {
        match self {
            SystemDef::Linear { initial, .. } | SystemDef::Additive { initial, .. } => initial,
        }
    }

    pub fn invariant(&self) -> &Matrix {
        match self {
            SystemDef::Linear { invariant, .. } => invariant,
            SystemDef::Additive { sys, .. } => sys.c0(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeDef {
    Linear(LinearScheme),
    Additive(AdditiveScheme),
}

impl fmt::Display for SchemeDef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeDef::Linear(s) => s.fmt(f),
            SchemeDef::Additive(s) => s.fmt(f),
        }
    }
}

/// Threshold evaluated by `--check`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Check {
    /// `|slope - target| <= tol` for the convergence fit.
    SlopeWithin { target: f64, tol: f64 },
    RelativeDriftAtMost(f64),
    RelativeDriftAbove(f64),
    DefectAtMost(f64),
    DefectAbove(f64),
    /// `|slope - target| <= rel · |target|` for the second moment.
    MomentSlopeWithin { target: f64, rel: f64 },
    MomentSlopeAbsAtMost(f64),
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Check::SlopeWithin { target, tol } => write!(f, "order slope {target} ± {tol}"),
            Check::RelativeDriftAtMost(v) => write!(f, "relative H drift <= {v:e}"),
            Check::RelativeDriftAbove(v) => write!(f, "relative H drift > {v:e}"),
            Check::DefectAtMost(v) => write!(f, "symplectic defect <= {v:e}"),
            Check::DefectAbove(v) => write!(f, "symplectic defect > {v:e}"),
            Check::MomentSlopeWithin { target, rel } => {
                write!(f, "moment slope within {}% of {target}", rel * 100.0)
            }
            Check::MomentSlopeAbsAtMost(v) => write!(f, "|moment slope| <= {v:e}"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Experiment {
    pub name: String,
    pub description: String,
    pub system: SystemDef,
    pub scheme: SchemeDef,
    pub grid: Vec<f64>,
    pub t_end: f64,
    pub paths: usize,
    pub seed: Option<u64>,
    pub checks: Vec<Check>,
}

impl Experiment {
    pub fn validate(&self) -> Result<(), CliError> {
        match (&self.system, &self.scheme) {
            (SystemDef::Linear { sys, initial, invariant }, SchemeDef::Linear(scheme)) => {
                if *scheme == LinearScheme::Exact && !sys.is_commuting() {
                    return Err(CliError::Config(
                        "scheme: exact stepping needs commuting generators".into(),
                    ));
                }
                if invariant.dim() != sys.dim() {
                    return Err(CliError::Config(format!(
                        "system.invariant: expected {0}x{0} matrix",
                        sys.dim()
                    )));
                }
                check_initial(initial, sys.dim())?;
            }
            (SystemDef::Additive { sys, initial }, SchemeDef::Additive(_)) => {
                check_initial(initial, sys.dim())?;
            }
            _ => {
                return Err(CliError::Config(
                    "scheme: kind does not fit the system (linear systems take pade/euler-maruyama/exact, additive systems take pade with drift_order)".into(),
                ))
            }
        }
        if self.grid.is_empty() {
            return Err(CliError::Config("grid: must list at least one step size".into()));
        }
        for &h in &self.grid {
            if !(h > 0.0 && h < 1.0) {
                return Err(CliError::Config(format!("grid: step size {h} outside (0, 1)")));
            }
            step_count(self.t_end, h)
                .map_err(|_| CliError::Config(format!("t_end: {} is not a multiple of h = {h}", self.t_end)))?;
        }
        if self.paths == 0 {
            return Err(CliError::Config("paths: must be positive".into()));
        }
        Ok(())
    }

    pub fn single_step(&self) -> Result<f64, CliError> {
        match self.grid.as_slice() {
            [h] => Ok(*h),
            _ => Err(CliError::Config(format!(
                "grid: this command needs exactly one step size, got {} (use --h)",
                self.grid.len()
            ))),
        }
    }
}

fn check_initial(initial: &[f64], dim: usize) -> Result<(), CliError> {
    if initial.len() != dim {
        return Err(CliError::Config(format!(
            "system.initial: expected {dim} components, got {}",
            initial.len()
        )));
    }
    if initial.iter().any(|v| !v.is_finite()) {
        return Err(CliError::Config("system.initial: entries must be finite".into()));
    }
    Ok(())
}
