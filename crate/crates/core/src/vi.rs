//! The variational inequality on the extended space: operator, projection,
//! residual and equilibrium metrics.

use ndarray::{Array1, Array2};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::loader::delay_operator;
use crate::model::{check_feasible, inner_unchecked, ExtendedPoint, FeasibleSet, Scenario, TOL_FEAS};

/// Absolute bisection tolerance on the demand root.
pub const TOL_BISECT: f64 = 1e-12;
const MAX_BISECTIONS: usize = 200;

/// `F(X) = (Ψ(h), -Θ[Q])`
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorValue {
    pub psi: Array2<f64>,
    pub neg_theta: Array1<f64>,
}

impl OperatorValue {
    /// The value viewed as an element of the extended space.
    pub fn to_point(&self) -> ExtendedPoint {
        ExtendedPoint::new(self.psi.clone(), self.neg_theta.clone())
    }

    pub fn into_point(self) -> ExtendedPoint {
        ExtendedPoint::new(self.psi, self.neg_theta)
    }

    /// Reference cost `Θ[Q]` per OD pair.
    pub fn theta(&self) -> Array1<f64> {
        self.neg_theta.mapv(|v| -v)
    }
}

/// A map from the feasible set into the extended space.
pub trait Operator {
    fn eval(&self, x: &ExtendedPoint) -> Result<OperatorValue>;
}

impl<F> Operator for F
where
    F: Fn(&ExtendedPoint) -> Result<OperatorValue>,
{
    fn eval(&self, x: &ExtendedPoint) -> Result<OperatorValue> {
        self(x)
    }
}

/// The traffic operator of a scenario: one network loading per evaluation.
#[derive(Debug, Clone, Copy)]
pub struct TrafficOperator<'a> {
    scenario: &'a Scenario,
}

impl<'a> TrafficOperator<'a> {
    pub fn new(scenario: &'a Scenario) -> Self {
        TrafficOperator { scenario }
    }

    pub fn scenario(&self) -> &'a Scenario {
        self.scenario
    }
}

impl Operator for TrafficOperator<'_> {
    fn eval(&self, x: &ExtendedPoint) -> Result<OperatorValue> {
        let set = self.scenario.feasible_set();
        let report = check_feasible(x, set, TOL_FEAS)?;
        if !report.feasible {
            log::warn!(
                "operator evaluated at an infeasible point (min flow {:e}, max defect {:e})",
                report.min_flow,
                report.demand_defects.iter().copied().fold(0.0, f64::max)
            );
        }
        let field = delay_operator(&x.flow, self.scenario)?;
        let theta = self.scenario.inverse_demand().evaluate(&x.demand);
        Ok(OperatorValue {
            psi: field.psi,
            neg_theta: theta.mapv(|v| -v),
        })
    }
}

fn demand_balance(cells: &[f64], shift: f64, q: f64, dt: f64) -> f64 {
    let mut s = 0.0;
    for &z in cells {
        s += (z + shift - q).max(0.0);
    }
    s * dt - q
}

/// Root of `φ(Q) = Σ max(0, z + r − Q) dt − Q` over `Q ≥ 0`.
///
/// `φ` is continuous, piecewise linear and strictly decreasing with `φ(0) ≥ 0`,
/// so the root is unique. Bisection isolates it; the closed form on the final
/// active set then removes the bisection error.
pub fn solve_demand_scalar(cells: &[f64], shift: f64, dt: f64) -> Result<f64> {
    if !shift.is_finite() || cells.iter().any(|z| !z.is_finite()) || !(dt > 0.0) {
        return Err(Error::Domain("non-finite input to the demand root".into()));
    }
    let phi0 = demand_balance(cells, shift, 0.0, dt);
    if phi0 <= 0.0 {
        return Ok(0.0);
    }
    let mut lo = 0.0;
    let mut hi = phi0 + 1.0;
    if demand_balance(cells, shift, hi, dt) >= 0.0 {
        return Err(Error::Internal(format!("demand root not bracketed by [0, {hi}]")));
    }
    for _ in 0..MAX_BISECTIONS {
        if hi - lo <= TOL_BISECT {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if demand_balance(cells, shift, mid, dt) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    let mut active_sum = 0.0;
    let mut active = 0usize;
    for &z in cells {
        if z + shift > mid {
            active_sum += z + shift;
            active += 1;
        }
    }
    let exact = active_sum * dt / (1.0 + active as f64 * dt);
    let slack = 1e-9 * (1.0 + hi);
    if exact >= lo - slack && exact <= hi + slack {
        Ok(exact.max(0.0))
    } else {
        Ok(mid)
    }
}

/// Nearest feasible point in `‖·‖_E` to an arbitrary point `(g, R)` of the space.
///
/// Per OD pair, the demand `Q*` solves the scalar balance with shift `R`; path
/// flows are `max(0, g + R − Q*)`.
pub fn project_onto_feasible(y: &ExtendedPoint, set: &FeasibleSet) -> Result<ExtendedPoint> {
    set.check_shape(y)?;
    let dt = set.grid().dt();
    let mut out = set.zero_point();
    let mut cells = Vec::new();
    for (w, paths) in set.od_paths().iter().enumerate() {
        cells.clear();
        for &p in paths {
            cells.extend(y.flow.row(p).iter().copied());
        }
        let shift = y.demand[w];
        let q = solve_demand_scalar(&cells, shift, dt)?;
        let offset = shift - q;
        let mut volume = 0.0;
        for &p in paths {
            let mut row = out.flow.row_mut(p);
            row.zip_mut_with(&y.flow.row(p), |h, &g| *h = (g + offset).max(0.0));
            volume += row.sum() * dt;
        }
        // Same summation order as the feasibility check, so the defect is exactly zero.
        out.demand[w] = volume;
    }
    Ok(out)
}

/// `r(X; β) = X − P[X − β F(X)]` for a precomputed `F(X)`.
pub fn residual_with(
    x: &ExtendedPoint,
    fx: &OperatorValue,
    beta: f64,
    set: &FeasibleSet,
) -> Result<ExtendedPoint> {
    if !(beta > 0.0) {
        return Err(Error::Domain(format!("residual step must be positive, got {beta}")));
    }
    let moved = x.add_scaled(-beta, &fx.to_point());
    Ok(x - &project_onto_feasible(&moved, set)?)
}

pub fn residual(
    x: &ExtendedPoint,
    beta: f64,
    op: &dyn Operator,
    set: &FeasibleSet,
) -> Result<ExtendedPoint> {
    let fx = op.eval(x)?;
    residual_with(x, &fx, beta, set)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OdViolation {
    pub od: String,
    pub demand: f64,
    /// `Θ[Q]`, the cost every used cell should carry.
    pub reference_cost: f64,
    /// Largest `max(0, ref − Ψ)` over all cells: a cell cheaper than the reference.
    pub min_cost_deficit: f64,
    /// Largest `|Ψ − ref|` over used cells.
    pub used_cost_deviation: f64,
    /// `max Ψ − min Ψ` over used cells.
    pub used_cost_range: f64,
    pub used_cells: usize,
    /// `Σ (Ψ − ref) h dt` over this OD's cells.
    pub merit: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ViolationReport {
    pub used_threshold: f64,
    pub per_od: Vec<OdViolation>,
    pub merit: f64,
}

impl ViolationReport {
    pub fn max_deficit(&self) -> f64 {
        self.per_od.iter().map(|o| o.min_cost_deficit).fold(0.0, f64::max)
    }

    pub fn max_used_deviation(&self) -> f64 {
        self.per_od.iter().map(|o| o.used_cost_deviation).fold(0.0, f64::max)
    }
}

/// Default relative cutoff separating used cells from numerically empty ones.
pub const USED_THRESHOLD: f64 = 1e-3;

/// Equilibrium conditions checked cell by cell against `Θ[Q]`.
///
/// `labels` names the OD pairs in the report; indices are used when absent.
pub fn equilibrium_violation(
    x: &ExtendedPoint,
    fx: &OperatorValue,
    set: &FeasibleSet,
    used_threshold: f64,
    labels: Option<&[String]>,
) -> Result<ViolationReport> {
    set.check_shape(x)?;
    let dt = set.grid().dt();
    let theta = fx.theta();
    let mut per_od = Vec::with_capacity(set.n_od());
    let mut merit = 0.0;
    for (w, paths) in set.od_paths().iter().enumerate() {
        let reference = theta[w];
        let peak = paths
            .iter()
            .flat_map(|&p| x.flow.row(p).to_vec())
            .fold(0.0, f64::max);
        let cutoff = used_threshold * peak;
        let mut deficit: f64 = 0.0;
        let mut deviation: f64 = 0.0;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut used = 0;
        let mut od_merit = 0.0;
        for &p in paths {
            for (&h, &psi) in x.flow.row(p).iter().zip(fx.psi.row(p).iter()) {
                deficit = deficit.max(reference - psi);
                if peak > 0.0 && h > cutoff {
                    used += 1;
                    deviation = deviation.max((psi - reference).abs());
                    lo = lo.min(psi);
                    hi = hi.max(psi);
                }
                od_merit += (psi - reference) * h * dt;
            }
        }
        merit += od_merit;
        per_od.push(OdViolation {
            od: labels.map_or_else(|| w.to_string(), |l| l[w].clone()),
            demand: x.demand[w],
            reference_cost: reference,
            min_cost_deficit: deficit.max(0.0),
            used_cost_deviation: deviation,
            used_cost_range: if used > 0 { hi - lo } else { 0.0 },
            used_cells: used,
            merit: od_merit,
        });
    }
    Ok(ViolationReport {
        used_threshold,
        per_od,
        merit,
    })
}

/// Evaluates the traffic operator at `x` and reports its equilibrium violation.
pub fn scenario_violation(x: &ExtendedPoint, scenario: &Scenario, used_threshold: f64) -> Result<ViolationReport> {
    let fx = TrafficOperator::new(scenario).eval(x)?;
    let labels: Vec<String> = scenario.od_pairs().iter().map(|o| o.id.clone()).collect();
    equilibrium_violation(x, &fx, scenario.feasible_set(), used_threshold, Some(&labels))
}

/// `min_X ⟨F(X), X − x⟩_E` over a finite candidate set. Non-negative values
/// are evidence that `x` solves the dual (Minty) problem on those candidates.
pub fn dual_gap_probe(
    x: &ExtendedPoint,
    candidates: &[ExtendedPoint],
    op: &dyn Operator,
    set: &FeasibleSet,
) -> Result<f64> {
    let dt = set.grid().dt();
    let mut best = f64::INFINITY;
    for c in candidates {
        set.check_shape(c)?;
        let fc = op.eval(c)?.into_point();
        best = best.min(inner_unchecked(&fc, &(c - x), dt));
    }
    Ok(best)
}
