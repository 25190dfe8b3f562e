use serde::{Deserialize, Serialize};

use super::config::Method;
use crate::model::ExtendedPoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Converged,
    MaxIters,
    MaxDnl,
    Error,
}

impl Termination {
    pub fn label(self) -> &'static str {
        match self {
            Termination::Converged => "converged",
            Termination::MaxIters => "max_iters",
            Termination::MaxDnl => "max_dnl",
            Termination::Error => "error",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterRecord {
    pub iteration: usize,
    /// Relative gap (projection, proximal) or relative residual (self-adaptive).
    pub gap: f64,
    /// `Q^k` per OD pair.
    pub demand: Vec<f64>,
    /// Average effective cost `v̄^k` per OD pair; NaN where the demand is zero.
    pub avg_cost: Vec<f64>,
    /// Cumulative operator evaluations (network loadings).
    pub dnl_calls: usize,
    pub elapsed: f64,
}

/// Which proximal stopping rule fired.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProximalStop {
    /// `a · D · ‖X^{k+1} − X^k‖_E`; at most `δ` when the certificate rule fires.
    pub certificate: f64,
    pub diameter: f64,
    pub certificate_rule: bool,
    pub relative_gap_rule: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterateHistory {
    pub method: Method,
    pub records: Vec<IterRecord>,
    pub final_point: ExtendedPoint,
    pub termination: Termination,
    pub proximal: Option<ProximalStop>,
    pub line_search_trials: Vec<usize>,
}

impl IterateHistory {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }

    pub fn dnl_calls(&self) -> usize {
        self.records.last().map_or(0, |r| r.dnl_calls)
    }

    pub fn final_gap(&self) -> Option<f64> {
        self.records.last().map(|r| r.gap)
    }

    pub fn converged(&self) -> bool {
        self.termination == Termination::Converged
    }
}
