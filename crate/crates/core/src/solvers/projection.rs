use super::{check_start, nonzero_norm, Budgeted, Eval, Recorder};
use super::{IterateHistory, Method, SolverConfig, Termination};
use crate::error::Result;
use crate::model::{distance, norm, ExtendedPoint, FeasibleSet};
use crate::vi::{project_onto_feasible, Operator};

/// Fixed-point iteration `X ← P[X − α F(X)]`, stopped on the relative gap
/// `‖X^{k+1} − X^k‖ / ‖X^k‖ ≤ ε`.
pub fn projection_solve(
    x0: &ExtendedPoint,
    op: &dyn Operator,
    set: &FeasibleSet,
    cfg: &SolverConfig,
) -> Result<IterateHistory> {
    cfg.validate()?;
    check_start(x0, set)?;
    let grid = set.grid();
    let op = Budgeted::new(op, cfg.max_dnl_calls);
    let mut rec = Recorder::new();
    let mut x = x0.clone();

    for _ in 0..cfg.max_iters {
        let fx = match op.eval(&x)? {
            Eval::Value(v) => v,
            Eval::Exhausted => return Ok(rec.finish(Method::Projection, x, Termination::MaxDnl)),
        };
        let scale = nonzero_norm(norm(&x, grid))?;
        let next = project_onto_feasible(&x.add_scaled(-cfg.alpha, &fx.to_point()), set)?;
        let gap = distance(&next, &x, grid) / scale;
        rec.push(gap, &x, &fx, set, op.calls());
        x = next;
        if gap <= cfg.epsilon {
            return Ok(rec.finish(Method::Projection, x, Termination::Converged));
        }
    }
    Ok(rec.finish(Method::Projection, x, Termination::MaxIters))
}
