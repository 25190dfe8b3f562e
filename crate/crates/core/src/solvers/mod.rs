//! Projection, self-adaptive projection and proximal point methods.
//!
//! All three work on an abstract [`Operator`] over a [`FeasibleSet`] and end
//! every update with the exact projection, so every iterate is feasible.

mod config;
mod history;
mod projection;
mod proximal;
mod self_adaptive;

use std::cell::Cell;
use std::time::Instant;

pub use config::{Method, SolverConfig};
pub use history::{IterRecord, IterateHistory, ProximalStop, Termination};
pub use projection::projection_solve;
pub use proximal::{diameter_estimate, diameter_from_caps, ppm_inner_solve, ppm_solve};
pub use self_adaptive::{sa_search_quantities, sa_solve, SearchQuantities};

use crate::diagnostics::average_travel_cost;
use crate::error::{Error, Result};
use crate::model::{check_feasible, ExtendedPoint, FeasibleSet, Scenario};
use crate::vi::{Operator, OperatorValue, TrafficOperator};

/// Initial demand per OD pair used by the bundled runs.
pub const INITIAL_DEMAND: f64 = 1000.0;

/// Uniform departure profile carrying `INITIAL_DEMAND` per OD pair.
pub fn initial_point(set: &FeasibleSet) -> ExtendedPoint {
    set.uniform_point(&vec![INITIAL_DEMAND; set.n_od()])
        .expect("demand vector sized from the feasible set")
}

/// Runs the configured method on a scenario's traffic operator from the uniform start.
pub fn solve_scenario(scenario: &Scenario, cfg: &SolverConfig) -> Result<IterateHistory> {
    let op = TrafficOperator::new(scenario);
    let set = scenario.feasible_set();
    let x0 = initial_point(set);
    match cfg.method {
        Method::Projection => projection_solve(&x0, &op, set, cfg),
        Method::SelfAdaptive => sa_solve(&x0, &op, set, cfg),
        Method::ProximalPoint => {
            let d = diameter_estimate(scenario)?;
            ppm_solve(&x0, &op, set, cfg, d)
        }
    }
}

/// Wraps an operator with a loading counter and budget.
pub(crate) struct Budgeted<'a> {
    op: &'a dyn Operator,
    calls: Cell<usize>,
    limit: usize,
}

pub(crate) enum Eval {
    Value(OperatorValue),
    Exhausted,
}

impl<'a> Budgeted<'a> {
    pub(crate) fn new(op: &'a dyn Operator, limit: usize) -> Self {
        Budgeted {
            op,
            calls: Cell::new(0),
            limit,
        }
    }

    pub(crate) fn eval(&self, x: &ExtendedPoint) -> Result<Eval> {
        if self.calls.get() >= self.limit {
            return Ok(Eval::Exhausted);
        }
        self.calls.set(self.calls.get() + 1);
        Ok(Eval::Value(self.op.eval(x)?))
    }

    pub(crate) fn calls(&self) -> usize {
        self.calls.get()
    }
}

pub(crate) struct Recorder {
    start: Instant,
    records: Vec<IterRecord>,
}

impl Recorder {
    pub(crate) fn new() -> Self {
        Recorder {
            start: Instant::now(),
            records: Vec::new(),
        }
    }

    pub(crate) fn push(
        &mut self,
        gap: f64,
        x: &ExtendedPoint,
        fx: &OperatorValue,
        set: &FeasibleSet,
        dnl_calls: usize,
    ) {
        let avg_cost = average_travel_cost(x, &fx.psi, set)
            .into_iter()
            .map(|v| v.unwrap_or(f64::NAN))
            .collect();
        self.records.push(IterRecord {
            iteration: self.records.len(),
            gap,
            demand: x.demand.to_vec(),
            avg_cost,
            dnl_calls,
            elapsed: self.start.elapsed().as_secs_f64(),
        });
    }

    pub(crate) fn finish(
        self,
        method: Method,
        final_point: ExtendedPoint,
        termination: Termination,
    ) -> IterateHistory {
        IterateHistory {
            method,
            records: self.records,
            final_point,
            termination,
            proximal: None,
            line_search_trials: Vec::new(),
        }
    }
}

pub(crate) fn check_start(x0: &ExtendedPoint, set: &FeasibleSet) -> Result<()> {
    let scale = 1.0 + x0.demand.iter().map(|q| q.abs()).sum::<f64>();
    let report = check_feasible(x0, set, 1e-9 * scale)?;
    if !report.feasible {
        return Err(Error::Domain(format!(
            "initial point is infeasible (min flow {:e}, defects {:?})",
            report.min_flow, report.demand_defects
        )));
    }
    Ok(())
}

pub(crate) fn nonzero_norm(norm: f64) -> Result<f64> {
    if norm > 0.0 && norm.is_finite() {
        Ok(norm)
    } else {
        Err(Error::DegenerateIterate(format!(
            "iterate norm {norm} cannot normalize the gap"
        )))
    }
}
