//! Problem statement: grid, network, demand and the extended space.

mod demand;
mod grid;
mod network;
mod scenario;
mod space;

pub use demand::{AffineLine, ArrivalPenalty, InverseDemand};
pub use grid::TimeGrid;
pub use network::{Link, OdPair, Path};
pub use scenario::{Scenario, ScenarioDocument};
pub use space::{
    check_feasible, distance, essential_infimum, inner_product, norm, od_min_cost, ExtendedPoint,
    FeasibilityReport, FeasibleSet,
};
pub(crate) use space::inner_unchecked;

/// Default absolute tolerance on the per-OD demand constraint.
pub const TOL_FEAS: f64 = 1e-9;
