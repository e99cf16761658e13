//! Padé-approximant integrators for linear stochastic Hamiltonian systems.
//!
//! The crate provides small dense matrix kernels, the Padé machinery,
//! counter-based noise generation, the system definitions, one-step schemes
//! and Monte-Carlo error analysis.

pub mod analysis;
pub mod error;
pub mod integrators;
pub mod matrix;
pub mod noise;
pub mod pade;
pub mod quadrature;
pub mod systems;

pub use error::{Error, Result};
pub use integrators::{
    integrate, AdditiveScheme, AdditiveSchemeSpec, AdditiveStepper, AdditiveVariant, Diagnostics, LinearScheme,
    LinearSchemeSpec, LinearStepper, Stepper, Trajectory,
};
pub use matrix::Matrix;
pub use noise::{NoiseStream, StepNoise};
pub use pade::PadePair;
pub use systems::{AdditiveShs, KuboParams, LinearShs, OscillatorParams};
