//! Elastic-demand dynamic user equilibrium with arrival penalties.
//!
//! The crate couples a link transmission network loader with the exact
//! projection onto the demand-coupled feasible set and three iterative
//! solvers for the resulting variational inequality.

pub mod bundled;
pub mod diagnostics;
pub mod error;
pub mod io;
pub mod loader;
pub mod model;
pub mod paths;
pub mod reference;
pub mod solvers;
pub mod synthetic;
pub mod vi;

pub use error::{Error, Result};
pub use model::*;
pub use solvers::{IterateHistory, Method, SolverConfig, Termination};
pub use vi::{Operator, OperatorValue, TrafficOperator};
