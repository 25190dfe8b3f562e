use super::{check_start, nonzero_norm, Budgeted, Eval, Recorder};
use super::{IterateHistory, Method, ProximalStop, SolverConfig, Termination};
use crate::error::{Error, Result};
use crate::model::{distance, norm, ExtendedPoint, FeasibleSet, Scenario};
use crate::vi::{project_onto_feasible, Operator, OperatorValue};

enum Inner {
    Solved {
        point: ExtendedPoint,
        anchor_value: OperatorValue,
    },
    Exhausted,
}

/// Solves the regularized problem with operator `F(Y) + a (Y − anchor)` by
/// projection steps, warm-started at the anchor.
fn inner_solve(
    anchor: &ExtendedPoint,
    op: &Budgeted<'_>,
    set: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<Inner> {
    let grid = set.grid();
    let a = cfg.ppm_a;
    let step = cfg.inner_step();
    let mut y = anchor.clone();
    let mut anchor_value = None;
    let mut best = (f64::INFINITY, anchor.clone());
    for _ in 0..cfg.inner_max_iters {
        let fy = match op.eval(&y)? {
            Eval::Value(v) => v,
            Eval::Exhausted => return Ok(Inner::Exhausted),
        };
        let regularized = fy.to_point().add_scaled(a, &(&y - anchor));
        if anchor_value.is_none() {
            anchor_value = Some(fy);
        }
        let next = project_onto_feasible(&y.add_scaled(-step, &regularized), set)?;
        let gap = distance(&next, &y, grid) / nonzero_norm(norm(&y, grid))?;
        y = next;
        if gap < best.0 {
            best = (gap, y.clone());
        }
        if gap <= cfg.inner_tol {
            return Ok(Inner::Solved {
                point: y,
                anchor_value: anchor_value.unwrap(),
            });
        }
    }
    Err(Error::InnerStall {
        iterations: cfg.inner_max_iters,
        gap: best.0,
        best: Box::new(best.1),
    })
}

/// One proximal subproblem, unbudgeted.
pub fn ppm_inner_solve(
    anchor: &ExtendedPoint,
    op: &dyn Operator,
    set: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<ExtendedPoint> {
    cfg.validate()?;
    match inner_solve(anchor, &Budgeted::new(op, usize::MAX), set, cfg)? {
        Inner::Solved { point, .. } => Ok(point),
        Inner::Exhausted => unreachable!("unbounded budget"),
    }
}

/// Proximal point method.
///
/// Stops when the displacement certifies `⟨F(X^{k+1}), X − X^{k+1}⟩ ≥ −δ`
/// (`a D ‖X^{k+1} − X^k‖ ≤ δ`) or when the relative gap falls below `ε`;
/// the history records which rule fired.
pub fn ppm_solve(
    x0: &ExtendedPoint,
    op: &dyn Operator,
    set: &FeasibleSet,
    cfg: &SolverConfig,
    diameter: f64,
) -> Result<IterateHistory> {
    cfg.validate()?;
    check_start(x0, set)?;
    if !(diameter > 0.0 && diameter.is_finite()) {
        return Err(Error::CannotBound(format!("diameter {diameter} is not a positive bound")));
    }
    let grid = set.grid();
    let a = cfg.ppm_a;
    let op = Budgeted::new(op, cfg.max_dnl_calls);
    let mut rec = Recorder::new();
    let mut x = x0.clone();
    let mut stop = ProximalStop {
        certificate: f64::INFINITY,
        diameter,
        certificate_rule: false,
        relative_gap_rule: false,
    };
    let finish = |rec: Recorder, x, t, stop| {
        let mut h = rec.finish(Method::ProximalPoint, x, t);
        h.proximal = Some(stop);
        h
    };

    for _ in 0..cfg.max_iters {
        let (next, fx) = match inner_solve(&x, &op, set, cfg)? {
            Inner::Solved { point, anchor_value } => (point, anchor_value),
            Inner::Exhausted => return Ok(finish(rec, x, Termination::MaxDnl, stop)),
        };
        let displacement = distance(&next, &x, grid);
        let gap = displacement / nonzero_norm(norm(&x, grid))?;
        rec.push(gap, &x, &fx, set, op.calls());
        stop.certificate = a * diameter * displacement;
        stop.certificate_rule = displacement <= cfg.ppm_delta / (a * diameter);
        stop.relative_gap_rule = gap <= cfg.epsilon;
        x = next;
        if stop.certificate_rule || stop.relative_gap_rule {
            return Ok(finish(rec, x, Termination::Converged, stop));
        }
    }
    Ok(finish(rec, x, Termination::MaxIters, stop))
}

/// Upper bound on the diameter of the demand-capped feasible set.
///
/// A flow block carrying at most `U` vehicles has squared norm at most `U²/dt`
/// (all of it in one cell), so each point lies within
/// `sqrt(Σ_w U_w² + 2 |P_w| U_w² / dt)` of the origin; the diameter is twice that.
pub fn diameter_from_caps(caps: &[f64], paths_per_od: &[usize], dt: f64) -> Result<f64> {
    if caps.len() != paths_per_od.len() {
        return Err(Error::Dimension(format!(
            "{} caps for {} OD pairs",
            caps.len(),
            paths_per_od.len()
        )));
    }
    let mut sum = 0.0;
    for (&u, &n) in caps.iter().zip(paths_per_od) {
        if !(u.is_finite() && u >= 0.0) {
            return Err(Error::CannotBound(format!("demand cap {u} is not a finite bound")));
        }
        sum += u * u + n as f64 * (u / dt).powi(2) * dt * 2.0;
    }
    Ok(2.0 * sum.sqrt())
}

pub fn diameter_estimate(scenario: &Scenario) -> Result<f64> {
    let caps = scenario.demand_caps().ok_or_else(|| {
        Error::CannotBound("no demand caps and no invertible demand line; set demand_caps".into())
    })?;
    let counts: Vec<usize> = scenario.feasible_set().od_paths().iter().map(Vec::len).collect();
    diameter_from_caps(&caps, &counts, scenario.grid().dt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameter_closed_form() {
        let d = diameter_from_caps(&[1.0], &[1], 1.0).unwrap();
        assert!((d - 2.0 * 3f64.sqrt()).abs() < 1e-12);
        let d3 = diameter_from_caps(&[3.0], &[1], 1.0).unwrap();
        assert!((d3 - 3.0 * d).abs() < 1e-12);
        assert!(diameter_from_caps(&[f64::INFINITY], &[1], 1.0).is_err());
    }
}
