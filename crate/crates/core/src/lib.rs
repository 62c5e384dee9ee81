//! Physics-inspired Ising solvers viewed as Lagrange-multiplier optimizers.
//!
//! The crate is organized bottom-up:
//!
//! - [`ising`]: instances, energies, Gset I/O, field absorption, exhaustive oracle.
//! - [`lagrangian`]: Lagrange / augmented-Lagrange functions, descent-ascent, KKT
//!   residuals, finite-difference gradients.
//! - [`dynamics`]: oscillator right-hand sides paired with the dissipation
//!   functions they descend.
//! - [`iterators`]: discrete matrix-multiplier solvers.
//! - [`engine`]: fixed-step integration, gain schedules, multi-restart harness.
//! - [`regression`]: least squares compiled to Ising form.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod dynamics;
pub mod engine;
pub mod ising;
pub mod iterators;
pub mod lagrangian;
pub mod linalg;
pub mod regression;

pub use dynamics::{ComplexState, OscParams, RealState};
pub use engine::{GainSchedule, IntegratorConfig, Method, RunRecord, SolverKind};
pub use ising::{EnergyReport, IsingInstance, SpinConfig};
pub use lagrangian::{LagrangeProblem, MultiplierState};
pub use num_complex::Complex64;

/// Version tag written into every JSON/CSV artifact.
pub const SCHEMA_VERSION: u32 = 1;
