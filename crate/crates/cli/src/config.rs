//! TOML experiment files.
//!
//! ```toml
//! builtin = "kubo-(2,2)"      # optional starting point
//! grid = [0.01, 0.02]
//! t_end = 5.0
//! paths = 200
//! seed = 7
//!
//! [system]
//! kind = "linear"             # linear | additive | kubo | oscillator
//! generators = [[[0.0, -1.0], [1.0, 0.0]], [[0.0, -1.0], [1.0, 0.0]]]
//! initial = [1.0, 0.0]
//!
//! [scheme]
//! kind = "pade"               # pade | euler-maruyama | exact
//! order = [2, 2]
//! ```

use serde::Deserialize;

use padesym::{
    AdditiveScheme, AdditiveSchemeSpec, AdditiveShs, KuboParams, LinearScheme, LinearSchemeSpec, LinearShs, Matrix,
    OscillatorParams, PadePair,
};

use crate::builtins;
use crate::error::CliError;
use crate::experiment::{Experiment, SchemeDef, SystemDef};

type Rows = Vec<Vec<f64>>;

#[derive(Debug, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub builtin: Option<String>,
    pub grid: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub system: Option<SystemConfig>,
    pub scheme: Option<SchemeConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SystemConfig {
    /// `generators` are `[A⁰, A¹, …]`; alternatively `hamiltonians` are the
    /// symmetric `[C⁰, C¹, …]` with `Aⁱ = J⁻¹Cⁱ`.
    Linear {
        generators: Option<Vec<Rows>>,
        hamiltonians: Option<Vec<Rows>>,
        initial: Vec<f64>,
        invariant: Option<Rows>,
    },
    Additive {
        c0: Rows,
        c1: Rows,
        c2: Rows,
        initial: Vec<f64>,
    },
    Kubo {
        a: Option<f64>,
        sigma: Option<f64>,
        p0: Option<f64>,
        q0: Option<f64>,
    },
    Oscillator {
        sigma: Option<f64>,
        p0: Option<f64>,
        q0: Option<f64>,
    },
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum VariantConfig {
    Integral,
    LeftRectangle,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SchemeConfig {
    Pade {
        order: Option<[usize; 2]>,
        ell: Option<f64>,
        drift_order: Option<[usize; 2]>,
        kernel_order: Option<[usize; 2]>,
        variant: Option<VariantConfig>,
    },
    EulerMaruyama,
    Exact,
}

pub fn parse(text: &str) -> Result<ConfigFile, CliError> {
    toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
}

fn matrix(field: &str, rows: &Rows) -> Result<Matrix, CliError> {
    Matrix::from_rows(rows).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn pade_pair(field: &str, [r, s]: [usize; 2]) -> Result<PadePair, CliError> {
    PadePair::new(r, s).map_err(|e| CliError::Config(format!("{field}: {e}")))
}

fn field(name: &'static str) -> impl Fn(padesym::Error) -> CliError {
    move |e| CliError::Config(format!("{name}: {e}"))
}

fn system_def(cfg: &SystemConfig) -> Result<SystemDef, CliError> {
    Ok(match cfg {
        SystemConfig::Linear {
            generators,
            hamiltonians,
            initial,
            invariant,
        } => {
            let sys = match (generators, hamiltonians) {
                (Some(g), None) => {
                    let mats = g
                        .iter()
                        .enumerate()
                        .map(|(i, m)| matrix(&format!("system.generators[{i}]"), m))
                        .collect::<Result<Vec<_>, _>>()?;
                    LinearShs::new(mats).map_err(field("system.generators"))?
                }
                (None, Some(c)) => {
                    let mats = c
                        .iter()
                        .enumerate()
                        .map(|(i, m)| matrix(&format!("system.hamiltonians[{i}]"), m))
                        .collect::<Result<Vec<_>, _>>()?;
                    LinearShs::from_hamiltonians(&mats).map_err(field("system.hamiltonians"))?
                }
                _ => {
                    return Err(CliError::Config(
                        "system: give exactly one of `generators` or `hamiltonians`".into(),
                    ))
                }
            };
            let invariant = match invariant {
                Some(rows) => matrix("system.invariant", rows)?,
                None => sys.hamiltonian_matrices().swap_remove(0),
            };
            SystemDef::Linear {
                sys,
                initial: initial.clone(),
                invariant,
            }
        }
        SystemConfig::Additive { c0, c1, c2, initial } => SystemDef::Additive {
            sys: AdditiveShs::new(matrix("system.c0", c0)?, c1.clone(), c2.clone()).map_err(field("system"))?,
            initial: initial.clone(),
        },
        SystemConfig::Kubo { a, sigma, p0, q0 } => {
            let d = KuboParams::default();
            let params = KuboParams {
                a: a.unwrap_or(d.a),
                sigma: sigma.unwrap_or(d.sigma),
                p0: p0.unwrap_or(d.p0),
                q0: q0.unwrap_or(d.q0),
            };
            SystemDef::Linear {
                sys: params.system().map_err(field("system"))?,
                initial: params.initial_state(),
                invariant: params.invariant_matrix(),
            }
        }
        SystemConfig::Oscillator { sigma, p0, q0 } => {
            let d = OscillatorParams::default();
            let params = OscillatorParams {
                sigma: sigma.unwrap_or(d.sigma),
                p0: p0.unwrap_or(d.p0),
                q0: q0.unwrap_or(d.q0),
            };
            SystemDef::Additive {
                sys: params.system().map_err(field("system"))?,
                initial: params.initial_state(),
            }
        }
    })
}

fn scheme_def(cfg: &SchemeConfig, system: &SystemDef) -> Result<SchemeDef, CliError> {
    let additive = matches!(system, SystemDef::Additive { .. });
    Ok(match cfg {
        SchemeConfig::EulerMaruyama if !additive => SchemeDef::Linear(LinearScheme::EulerMaruyama),
        SchemeConfig::Exact if additive => SchemeDef::Additive(AdditiveScheme::Exact),
        SchemeConfig::Exact => SchemeDef::Linear(LinearScheme::Exact),
        SchemeConfig::EulerMaruyama => {
            return Err(CliError::Config("scheme.kind: euler-maruyama is only available for linear systems".into()))
        }
        SchemeConfig::Pade {
            order,
            ell,
            drift_order,
            kernel_order,
            variant,
        } if !additive => {
            if drift_order.is_some() || kernel_order.is_some() || variant.is_some() {
                return Err(CliError::Config(
                    "scheme: drift_order/kernel_order/variant apply to additive systems only".into(),
                ));
            }
            let order = pade_pair("scheme.order", order.ok_or_else(|| CliError::Config("scheme.order: missing".into()))?)?;
            let spec = match ell {
                Some(l) => LinearSchemeSpec::with_ell(order, *l).map_err(|e| CliError::Config(format!("scheme.ell: {e}")))?,
                None => LinearSchemeSpec::new(order),
            };
            SchemeDef::Linear(LinearScheme::Pade(spec))
        }
        SchemeConfig::Pade {
            order,
            ell,
            drift_order,
            kernel_order,
            variant,
        } => {
            if order.is_some() || ell.is_some() {
                return Err(CliError::Config(
                    "scheme: additive systems take drift_order (and kernel_order), not order/ell".into(),
                ));
            }
            let drift = pade_pair(
                "scheme.drift_order",
                drift_order.ok_or_else(|| CliError::Config("scheme.drift_order: missing".into()))?,
            )?;
            let spec = match variant.unwrap_or(VariantConfig::Integral) {
                VariantConfig::LeftRectangle => {
                    if kernel_order.is_some() {
                        return Err(CliError::Config("scheme.kernel_order: not used by left-rectangle".into()));
                    }
                    AdditiveSchemeSpec::left_rectangle(drift)
                }
                VariantConfig::Integral => {
                    let kernel = pade_pair(
                        "scheme.kernel_order",
                        kernel_order.ok_or_else(|| CliError::Config("scheme.kernel_order: missing".into()))?,
                    )?;
                    AdditiveSchemeSpec::integral(drift, kernel).map_err(|e| CliError::Config(format!("scheme: {e}")))?
                }
            };
            SchemeDef::Additive(AdditiveScheme::Pade(spec))
        }
    })
}

/// Builds an experiment from a file, starting from its builtin if named.
pub fn resolve(cfg: &ConfigFile) -> Result<Experiment, CliError> {
    let base = match &cfg.builtin {
        Some(name) => Some(builtin(name)?),
        None => None,
    };
    let custom = cfg.system.is_some() || cfg.scheme.is_some();
    let system = match (&cfg.system, &base) {
        (Some(s), _) => system_def(s)?,
        (None, Some(b)) => b.system.clone(),
        (None, None) => return Err(CliError::Config("system: missing (or set `builtin`)".into())),
    };
    let scheme = match (&cfg.scheme, &base) {
        (Some(s), _) => scheme_def(s, &system)?,
        (None, Some(b)) => b.scheme,
        (None, None) => return Err(CliError::Config("scheme: missing (or set `builtin`)".into())),
    };
    let field = |name: &str| CliError::Config(format!("{name}: missing (or set `builtin`)"));
    let exp = Experiment {
        name: base.as_ref().map_or_else(|| "custom".to_string(), |b| b.name.clone()),
        description: base.as_ref().map_or_else(String::new, |b| b.description.clone()),
        system,
        scheme,
        grid: match (&cfg.grid, &base) {
            (Some(g), _) => g.clone(),
            (None, Some(b)) => b.grid.clone(),
            (None, None) => return Err(field("grid")),
        },
        t_end: cfg.t_end.or(base.as_ref().map(|b| b.t_end)).ok_or_else(|| field("t_end"))?,
        paths: cfg.paths.or(base.as_ref().map(|b| b.paths)).unwrap_or(1),
        seed: cfg.seed.or(base.as_ref().and_then(|b| b.seed)),
        // Thresholds belong to the builtin's system and scheme only.
        checks: match &base {
            Some(b) if !custom => b.checks.clone(),
            _ => Vec::new(),
        },
    };
    exp.validate()?;
    Ok(exp)
}

pub fn builtin(name: &str) -> Result<Experiment, CliError> {
    builtins::find(name).ok_or_else(|| CliError::Config(format!("builtin: unknown experiment `{name}` (see --list)")))
}
