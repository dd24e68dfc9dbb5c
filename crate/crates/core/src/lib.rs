//! Pseudo-transient topology optimization on structured grids.
//!
//! The design problem is recast as a set of coupled pseudo-time PDEs that are
//! advanced together inside one optimization loop:
//!
//! 1. the state equation (heat conduction or linear elasticity) is relaxed
//!    with a fixed number of accelerated pseudo-transient (damped wave) steps
//!    followed by plain pseudo-transient steps ([`state_solver`]);
//! 2. the phase densities take one descent step along the objective
//!    sensitivities computed with the state held fixed ([`objectives`]);
//! 3. the densities take one explicit Cahn-Hilliard step that drives phase
//!    separation ([`phase_field`]).
//!
//! [`optimizer::run`] drives the loop, [`config`] and [`presets`] describe
//! problems, and [`output`] writes CSV, PGM and legacy VTK files.

pub mod config;
pub mod grid;
pub mod objectives;
pub mod optimizer;
pub mod output;
pub mod parallel;
pub mod phase_field;
pub mod presets;
pub mod state_solver;

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::path::PathBuf;

pub use grid::{BoundarySpec, Face, FaceCondition, Field, Grid, NodeConstraint};
pub use objectives::{MaterialModel, ObjectiveReport, ObjectiveWeights, VolumeTargets};
pub use optimizer::{LoopSchedule, OptimizationResult, Termination};
pub use phase_field::{CahnHilliardParams, PhaseSet};
pub use state_solver::{AptForm, PTParams, StateHistory};

/// Floating point type the solvers are generic over (`f32` or `f64`).
pub trait Real:
    num_traits::Float
    + Send
    + Sync
    + Debug
    + Display
    + LowerExp
    + Sum
    + Default
    + std::ops::AddAssign
    + std::ops::SubAssign
    + std::ops::MulAssign
    + 'static
{
    /// Significant decimal digits needed to round-trip a value.
    const DIGITS: usize;

    fn lit(x: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Real for f64 {
    const DIGITS: usize = 17;

    #[inline(always)]
    fn lit(x: f64) -> Self {
        x
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self
    }
}

impl Real for f32 {
    const DIGITS: usize = 9;

    #[inline(always)]
    fn lit(x: f64) -> Self {
        x as f32
    }

    #[inline(always)]
    fn as_f64(self) -> f64 {
        self as f64
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("fields live on different grids")]
    GridMismatch,

    #[error("expected {expected} component(s), got {actual}")]
    ComponentMismatch { expected: usize, actual: usize },

    #[error("expected {expected} entries, got {actual}")]
    CountMismatch { expected: usize, actual: usize },

    #[error("{name} must be positive everywhere (node {node} has {value})")]
    NonPositive {
        name: &'static str,
        node: usize,
        value: f64,
    },

    #[error("invalid boundary specification: {0}")]
    InvalidBoundary(String),

    #[error("region mask selects no nodes")]
    EmptyMask,

    #[error("non-finite value in {field} at step {step}")]
    NonFinite { field: String, step: usize },

    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("config parse error: {0}")]
    Parse(String),

    #[error("unknown preset `{name}` (valid presets: {valid})")]
    UnknownPreset { name: String, valid: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn param(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
