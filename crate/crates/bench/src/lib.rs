//! Shared inputs for the benchmarks.

use edue_core::solvers::initial_point;
use edue_core::{ExtendedPoint, Scenario};

/// Bundled scenario with its uniform starting point.
pub fn scenario_with_start(scenario: Scenario) -> (Scenario, ExtendedPoint) {
    let x = initial_point(scenario.feasible_set());
    (scenario, x)
}
