use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform discretization of the commuting period `[t0, tf]` (hours).
///
/// All time integrals use the left-endpoint rule on this grid: a step `k`
/// covers `[t_k, t_k + dt)` and a path flow is constant on it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct TimeGrid {
    t0: f64,
    tf: f64,
    n_steps: usize,
    dt: f64,
}

#[derive(Serialize, Deserialize)]
struct GridSpec {
    t0: f64,
    tf: f64,
    n_steps: usize,
}

impl TryFrom<GridSpec> for TimeGrid {
    type Error = Error;

    fn try_from(s: GridSpec) -> Result<Self> {
        TimeGrid::new(s.t0, s.tf, s.n_steps)
    }
}

impl From<TimeGrid> for GridSpec {
    fn from(g: TimeGrid) -> Self {
        GridSpec {
            t0: g.t0,
            tf: g.tf,
            n_steps: g.n_steps,
        }
    }
}

impl TimeGrid {
    pub fn new(t0: f64, tf: f64, n_steps: usize) -> Result<Self> {
        if !t0.is_finite() || !tf.is_finite() {
            return Err(Error::scenario("grid", "t0 and tf must be finite"));
        }
        if tf <= t0 {
            return Err(Error::scenario("grid.tf", format!("tf ({tf}) must exceed t0 ({t0})")));
        }
        if n_steps == 0 {
            return Err(Error::scenario("grid.n_steps", "need at least one step"));
        }
        Ok(TimeGrid {
            t0,
            tf,
            n_steps,
            dt: (tf - t0) / n_steps as f64,
        })
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn tf(&self) -> f64 {
        self.tf
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn span(&self) -> f64 {
        self.tf - self.t0
    }

    /// Left endpoint of step `k`. Valid past `n_steps` for the loader's extended horizon.
    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dt_is_derived() {
        let g = TimeGrid::new(0.0, 2.0, 120).unwrap();
        assert!((g.dt() * g.n_steps() as f64 - g.span()).abs() < 1e-15);
        assert_eq!(g.time(0), 0.0);
        assert!((g.time(60) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(TimeGrid::new(1.0, 1.0, 4).is_err());
        assert!(TimeGrid::new(0.0, 1.0, 0).is_err());
        assert!(TimeGrid::new(0.0, f64::NAN, 3).is_err());
    }

    #[test]
    fn serde_goes_through_validation() {
        let g: TimeGrid = serde_json::from_str(r#"{"t0":0,"tf":1,"n_steps":4}"#).unwrap();
        assert_eq!(g.dt(), 0.25);
        assert!(serde_json::from_str::<TimeGrid>(r#"{"t0":0,"tf":-1,"n_steps":4}"#).is_err());
    }
}
