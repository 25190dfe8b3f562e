use super::{check_start, nonzero_norm, Budgeted, Eval, Recorder};
use super::{IterateHistory, Method, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::model::{inner_unchecked, norm, ExtendedPoint, FeasibleSet};
use crate::vi::{project_onto_feasible, residual_with, Operator, OperatorValue};

/// Residual `r`, direction `d`, correction `g` and step ratio `ρ` at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchQuantities {
    pub r: ExtendedPoint,
    pub d: ExtendedPoint,
    pub g: ExtendedPoint,
    pub rho: f64,
}

/// `d = α r + β F(X − α r)`, `g = α [r − β (F(X) − F(X − α r))]`, `ρ = ⟨r, g⟩ / ‖d‖²`.
fn assemble(
    r: ExtendedPoint,
    fx: &OperatorValue,
    f_trial: &OperatorValue,
    alpha: f64,
    beta: f64,
    set: &FeasibleSet,
) -> Result<SearchQuantities> {
    let dt = set.grid().dt();
    let f_trial = f_trial.to_point();
    let d = r.scaled(alpha).add_scaled(beta, &f_trial);
    let df = &fx.to_point() - &f_trial;
    let g = r.add_scaled(-beta, &df).scaled(alpha);
    let dd = inner_unchecked(&d, &d, dt);
    let rg = inner_unchecked(&r, &g, dt);
    let rho = if dd > 0.0 {
        rg / dd
    } else if inner_unchecked(&r, &r, dt) == 0.0 {
        0.0
    } else {
        return Err(Error::Internal("search direction vanished with a nonzero residual".into()));
    };
    Ok(SearchQuantities { r, d, g, rho })
}

fn unscaled(v: &OperatorValue, scale: f64) -> OperatorValue {
    OperatorValue {
        psi: &v.psi / scale,
        neg_theta: &v.neg_theta / scale,
    }
}

/// Evaluates the search quantities at `x` for the given `α`, `β` (two operator calls).
pub fn sa_search_quantities(
    x: &ExtendedPoint,
    alpha: f64,
    beta: f64,
    op: &dyn Operator,
    set: &FeasibleSet,
) -> Result<SearchQuantities> {
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(Error::Domain(format!("steps must be positive (alpha {alpha}, beta {beta})")));
    }
    let fx = op.eval(x)?;
    let r = residual_with(x, &fx, beta, set)?;
    let f_trial = op.eval(&x.add_scaled(-alpha, &r))?;
    assemble(r, &fx, &f_trial, alpha, beta, set)
}

/// Self-adaptive projection method, applied to `sa_scale · F`.
///
/// Each iteration computes the residual with `β = min(1, θ α)`, shrinks the
/// trial step `α = β μ^m` until `β ‖F(X) − F(X − α r)‖ ≤ L ‖r‖`, and moves
/// to `P[X − γ ρ d]`. Stops when `‖r‖ / ‖X‖ ≤ ε`.
pub fn sa_solve(
    x0: &ExtendedPoint,
    op: &dyn Operator,
    set: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<IterateHistory> {
    cfg.validate()?;
    check_start(x0, set)?;
    let grid = set.grid();
    let scale = cfg.sa_scale;
    let scaled = |x: &ExtendedPoint| -> Result<OperatorValue> {
        let v = op.eval(x)?;
        Ok(OperatorValue {
            psi: v.psi * scale,
            neg_theta: v.neg_theta * scale,
        })
    };
    let op = Budgeted::new(&scaled, cfg.max_dnl_calls);
    let mut rec = Recorder::new();
    let mut trials = Vec::new();
    let mut x = x0.clone();
    let mut alpha = 1.0;

    let finish = |rec: Recorder, x, t, trials| {
        let mut h = rec.finish(Method::SelfAdaptive, x, t);
        h.line_search_trials = trials;
        h
    };

    for _ in 0..cfg.max_iters {
        let beta = (cfg.theta * alpha).min(1.0);
        let fx = match op.eval(&x)? {
            Eval::Value(v) => v,
            Eval::Exhausted => return Ok(finish(rec, x, Termination::MaxDnl, trials)),
        };
        let r = residual_with(&x, &fx, beta, set)?;
        let r_norm = norm(&r, grid);
        let rel = r_norm / nonzero_norm(norm(&x, grid))?;
        // Averages are recorded in the operator's own units.
        rec.push(rel, &x, &unscaled(&fx, scale), set, op.calls());
        if rel <= cfg.epsilon {
            return Ok(finish(rec, x, Termination::Converged, trials));
        }

        let fx_point = fx.to_point();
        let mut m = 0;
        let (step, f_trial) = loop {
            if m > cfg.line_search_cap {
                return Err(Error::StepFailure {
                    trials: m,
                    residual_norm: r_norm,
                });
            }
            let step = beta * cfg.mu.powi(m as i32);
            let f_trial = match op.eval(&x.add_scaled(-step, &r))? {
                Eval::Value(v) => v,
                Eval::Exhausted => return Ok(finish(rec, x, Termination::MaxDnl, trials)),
            };
            let change = norm(&(&fx_point - &f_trial.to_point()), grid);
            if beta * change <= cfg.line_l * r_norm {
                break (step, f_trial);
            }
            m += 1;
        };
        trials.push(m);

        let q = assemble(r, &fx, &f_trial, step, beta, set)?;
        x = project_onto_feasible(&x.add_scaled(-cfg.gamma * q.rho, &q.d), set)?;
        alpha = step;
    }
    Ok(finish(rec, x, Termination::MaxIters, trials))
}
