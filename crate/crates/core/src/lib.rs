//! Two critical times of the SIR epidemic model.
//!
//! For `S(0) = x`, `I(0) = y` the crate computes
//!
//! * `u(x, y)`: the first time the infected count falls to a threshold `mu`;
//! * `v(x, y)`: the first time the susceptible count falls to `gamma/beta`,
//!   which is the moment infections peak.
//!
//! Each time is available from ODE event detection ([`ode`]) and from an exact
//! integral along the conserved level curve ([`analytic`]), together with
//! closed-form bounds and large-population asymptotics. [`pde`] checks the
//! transport equation both times satisfy, and [`cli`] drives everything from
//! the command line.

// `!(a > b)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod cli;
pub mod error;
pub mod model;
pub mod ode;
pub mod pde;
pub mod quadrature;
pub mod roots;

pub use error::{Result, SirError};
pub use model::{exact_u_at_x0, psi, vector_field, CriticalTime, LevelSetValue, ModelParams, SirState};
pub use ode::{
    hitting_time_u, hitting_time_v, integrate, CriticalTimeResult, EventKind, IntegratorConfig,
    Method, Trajectory,
};
