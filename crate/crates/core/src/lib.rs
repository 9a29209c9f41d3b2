//! Steepest-entropy-ascent dynamics for composite quantum systems.

// `!(x <= limit)` is used on purpose so that NaN fails the check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod error;

pub mod composite;
pub mod integrator;
pub mod linalg;
pub mod nosignal;
pub mod oracles;
pub mod perception;
pub mod random;
pub mod sea;

pub use composite::{CompositeModel, CompositeStructure, HamiltonianSpec, PauliState2Q};
pub use error::{Result, SeaError};
pub use integrator::{detect_fixed_point, evolve, Classification, IntegratorConfig, Trajectory};
pub use linalg::{CMat, DensityMatrix, C64};
pub use sea::{SeaParams, SeaSystem};
