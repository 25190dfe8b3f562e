use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Projection,
    SelfAdaptive,
    ProximalPoint,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::Projection => "projection",
            Method::SelfAdaptive => "self_adaptive",
            Method::ProximalPoint => "proximal_point",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "projection" | "pm" => Ok(Method::Projection),
            "self_adaptive" | "self-adaptive" | "sa" => Ok(Method::SelfAdaptive),
            "proximal_point" | "proximal-point" | "pp" | "ppm" => Ok(Method::ProximalPoint),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

/// Solver parameters. Step sizes are in the units of the extended space:
/// flows in veh/h, demands in veh, costs in hour-equivalents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub method: Method,
    /// Projection step `α`.
    pub alpha: f64,
    /// Self-adaptive line-search contraction, in (0, 1).
    pub mu: f64,
    /// Self-adaptive relaxation, in (0, 2).
    pub gamma: f64,
    /// Self-adaptive growth factor for the residual step, > 1.
    pub theta: f64,
    /// Self-adaptive line-search acceptance ratio, in (0, 1).
    pub line_l: f64,
    /// Self-adaptive runs on `sa_scale · F`, which has the same solutions.
    /// With the unit step cap a larger scale moves further per iteration.
    pub sa_scale: f64,
    /// Maximum number of step reductions per self-adaptive iteration.
    pub line_search_cap: usize,
    /// Proximal regularization weight `a`.
    pub ppm_a: f64,
    /// Proximal tolerance `δ` on the approximate VI.
    pub ppm_delta: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    /// Inner projection step; `1 / (2a)` when absent.
    pub inner_alpha: Option<f64>,
    /// Relative gap (projection, proximal) or relative residual (self-adaptive) threshold.
    pub epsilon: f64,
    pub max_iters: usize,
    pub max_dnl_calls: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig::for_method(Method::Projection)
    }
}

impl SolverConfig {
    pub fn for_method(method: Method) -> Self {
        SolverConfig {
            method,
            alpha: 0.5,
            mu: 0.5,
            gamma: 1.8,
            theta: 1.5,
            line_l: 0.9,
            sa_scale: 1.0,
            line_search_cap: 40,
            ppm_a: 10.0,
            ppm_delta: 1e-3,
            inner_tol: 1e-4,
            inner_max_iters: 200,
            inner_alpha: None,
            epsilon: match method {
                Method::SelfAdaptive => 1e-6,
                _ => 1e-5,
            },
            max_iters: 200_000,
            max_dnl_calls: 1_000_000,
        }
    }

    pub fn inner_step(&self) -> f64 {
        self.inner_alpha.unwrap_or(1.0 / (2.0 * self.ppm_a))
    }

    pub fn validate(&self) -> Result<()> {
        fn check(ok: bool, what: &str, value: f64) -> Result<()> {
            if ok {
                Ok(())
            } else {
                Err(Error::Config(format!("{what} out of range: {value}")))
            }
        }
        check(self.epsilon > 0.0 && self.epsilon.is_finite(), "epsilon", self.epsilon)?;
        check(self.max_iters > 0, "max_iters", self.max_iters as f64)?;
        match self.method {
            Method::Projection => check(self.alpha > 0.0 && self.alpha.is_finite(), "alpha", self.alpha),
            Method::SelfAdaptive => {
                check(self.mu > 0.0 && self.mu < 1.0, "mu", self.mu)?;
                check(self.gamma > 0.0 && self.gamma < 2.0, "gamma", self.gamma)?;
                check(self.theta > 1.0 && self.theta.is_finite(), "theta", self.theta)?;
                check(self.line_l > 0.0 && self.line_l < 1.0, "line_l", self.line_l)?;
                check(self.sa_scale > 0.0 && self.sa_scale.is_finite(), "sa_scale", self.sa_scale)
            }
            Method::ProximalPoint => {
                check(self.ppm_a > 0.0 && self.ppm_a.is_finite(), "ppm_a", self.ppm_a)?;
                check(self.ppm_delta > 0.0, "ppm_delta", self.ppm_delta)?;
                check(self.inner_tol > 0.0, "inner_tol", self.inner_tol)?;
                check(self.inner_max_iters > 0, "inner_max_iters", self.inner_max_iters as f64)?;
                let step = self.inner_step();
                check(step > 0.0 && step.is_finite(), "inner_alpha", step)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        for m in [Method::Projection, Method::SelfAdaptive, Method::ProximalPoint] {
            SolverConfig::for_method(m).validate().unwrap();
        }
        assert_eq!(SolverConfig::for_method(Method::SelfAdaptive).epsilon, 1e-6);
    }

    #[test]
    fn interval_checks() {
        let mut c = SolverConfig::for_method(Method::SelfAdaptive);
        c.gamma = 2.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::for_method(Method::SelfAdaptive);
        c.theta = 1.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::for_method(Method::ProximalPoint);
        c.ppm_a = 0.0;
        assert!(c.validate().is_err());
        let mut c = SolverConfig::default();
        c.epsilon = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!("sa".parse::<Method>().unwrap(), Method::SelfAdaptive);
        assert_eq!("proximal_point".parse::<Method>().unwrap(), Method::ProximalPoint);
        assert!("newton".parse::<Method>().is_err());
    }
}
