//! Analysis toolkit for a coupled resource-consumption system: an n-agent
//! nondimensional model with logistic resource growth and socially weighted
//! effort dynamics, plus the machinery built around it — closed-form
//! equilibria and stability verdicts, network aggregation into block models,
//! optimal-control feedback synthesis, the two-player consumption game, and
//! best-response learning dynamics.

// negated comparisons like `!(x >= 0.0)` are deliberate NaN guards
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod equilibrium;
pub mod game;
pub mod learning;
pub mod model;
pub mod network;
pub mod ode;
pub mod stability;

pub use equilibrium::EquilibriumReport;
pub use model::{
    integrate, integrate_sampled, nondimensionalize, rhs, steady_state, ConvergenceSpec,
    DimensionalParams, ModelError, ModelParams, SteadyStateOutcome, StepControl, SystemState,
    Trajectory,
};
