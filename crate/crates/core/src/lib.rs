//! Adaptive iterative learning control for discrete-time, parameterised,
//! non-affine plants with relative degree `rho >= 1`.
//!
//! The building blocks are usable on their own:
//!
//! * [`plant`]: channel regressors, time-varying parameters, causal stepping.
//! * [`adaptation`]: projection-based updates with a dead zone and a
//!   disturbance-bound estimate.
//! * [`estimator`]: multi-step state prediction for `rho > 1`.
//! * [`solver`]: contraction-based solution of the implicit input equation.
//! * [`controller`]: the iteration loop tying these together.
//! * [`ddilc`]: a data-driven baseline for comparison.
//! * [`harness`]: scenario configuration, built-in catalogue and output.

pub mod adaptation;
pub mod controller;
pub mod ddilc;
pub mod disturbance;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod plant;
pub mod reference;
pub mod rng;
pub mod solver;
pub mod systems;

pub use error::{Error, Result};
