use ndarray::Array1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One OD pair's inverse demand line `v = intercept - slope * Q`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineLine {
    pub od: String,
    pub intercept: f64,
    pub slope: f64,
}

/// Inverse demand map `Q -> v`, one cost per OD pair.
///
/// Only the separable affine family is provided. The solvers see this type
/// through [`InverseDemand::evaluate`] alone, so a jointly determined map can
/// be added as another variant without touching them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InverseDemand {
    /// Lines ordered like the scenario's OD pairs.
    Affine(Vec<AffineLine>),
}

impl InverseDemand {
    pub fn evaluate(&self, demand: &Array1<f64>) -> Array1<f64> {
        match self {
            InverseDemand::Affine(lines) => Array1::from_iter(
                lines
                    .iter()
                    .zip(demand.iter())
                    .map(|(l, &q)| l.intercept - l.slope * q),
            ),
        }
    }

    /// Forward demand `Q = G[v]`, clamped at zero. Reporting and initialization only.
    pub fn demand_from_cost(&self, cost: &[f64]) -> Result<Array1<f64>> {
        match self {
            InverseDemand::Affine(lines) => {
                if lines.len() != cost.len() {
                    return Err(Error::Dimension(format!(
                        "{} costs for {} OD pairs",
                        cost.len(),
                        lines.len()
                    )));
                }
                lines
                    .iter()
                    .zip(cost)
                    .map(|(l, &v)| {
                        if l.slope == 0.0 {
                            return Err(Error::scenario(
                                format!("inverse_demand.{}.slope", l.od),
                                "zero slope: the demand line is not invertible",
                            ));
                        }
                        Ok(((l.intercept - v) / l.slope).max(0.0))
                    })
                    .collect()
            }
        }
    }

    /// Demand at which each OD's cost reaches zero; the natural per-OD demand cap.
    pub fn zero_cost_demand(&self) -> Option<Array1<f64>> {
        match self {
            InverseDemand::Affine(lines) => {
                self.demand_from_cost(&vec![0.0; lines.len()]).ok()
            }
        }
    }

    pub fn len(&self) -> usize {
        match self {
            InverseDemand::Affine(lines) => lines.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            InverseDemand::Affine(lines) => {
                for (i, l) in lines.iter().enumerate() {
                    if !(l.intercept.is_finite() && l.intercept > 0.0) {
                        return Err(Error::scenario(
                            format!("inverse_demand.affine[{i}].intercept"),
                            format!("must be finite and positive, got {}", l.intercept),
                        ));
                    }
                    if !(l.slope.is_finite() && l.slope > 0.0) {
                        return Err(Error::scenario(
                            format!("inverse_demand.affine[{i}].slope"),
                            format!(
                                "must be finite and positive (strictly decreasing demand), got {}",
                                l.slope
                            ),
                        ));
                    }
                }
                Ok(())
            }
        }
    }
}

/// Schedule-delay penalty `f(x) = early_slope * max(0, -x) + late_slope * max(0, x)`,
/// where `x` is arrival time minus `target_arrival`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArrivalPenalty {
    pub target_arrival: f64,
    pub early_slope: f64,
    pub late_slope: f64,
}

impl ArrivalPenalty {
    pub fn penalty(&self, lateness: f64) -> f64 {
        self.early_slope * (-lateness).max(0.0) + self.late_slope * lateness.max(0.0)
    }

    pub(crate) fn validate(&self, tf: f64) -> Result<()> {
        if !(self.early_slope.is_finite() && (0.0..1.0).contains(&self.early_slope)) {
            return Err(Error::scenario(
                "arrival_penalty.early_slope",
                format!(
                    "must lie in [0, 1): a unit of earliness may not cost as much as a unit of travel time (got {})",
                    self.early_slope
                ),
            ));
        }
        if !(self.late_slope.is_finite() && self.late_slope >= 0.0) {
            return Err(Error::scenario(
                "arrival_penalty.late_slope",
                format!("must be finite and non-negative, got {}", self.late_slope),
            ));
        }
        if !(self.target_arrival.is_finite() && self.target_arrival < tf) {
            return Err(Error::scenario(
                "arrival_penalty.target_arrival",
                format!(
                    "target arrival {} must precede the end of the period {tf}",
                    self.target_arrival
                ),
            ));
        }
        Ok(())
    }
}
