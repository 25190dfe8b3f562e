//! Affine test operators on the extended space with known solutions.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::{ExtendedPoint, FeasibleSet, TimeGrid};
use crate::reference::random_feasible_point;
use crate::vi::{Operator, OperatorValue};

/// `F(X) = offset + diag(c_h, c_q)(X − anchor) + S(X − anchor)`, where `S`
/// rotates each listed pair of paths cell by cell:
/// `(S y)_p = s y_q`, `(S y)_q = −s y_p`.
///
/// `S` is skew in the extended inner product, so the operator is strongly
/// monotone with constant `min(c_h, c_q)` whenever both gains are positive.
#[derive(Debug, Clone)]
pub struct AffineOperator {
    pub anchor: ExtendedPoint,
    pub offset: ExtendedPoint,
    pub flow_gain: f64,
    pub demand_gain: f64,
    pub skew: f64,
    pub pairs: Vec<(usize, usize)>,
}

impl AffineOperator {
    /// Pure rotation: zero gains, anchor and offset.
    pub fn skew(set: &FeasibleSet, pairs: Vec<(usize, usize)>, skew: f64) -> Result<Self> {
        let zero = set.zero_point();
        let op = AffineOperator {
            anchor: zero.clone(),
            offset: zero,
            flow_gain: 0.0,
            demand_gain: 0.0,
            skew,
            pairs,
        };
        op.check_pairs()?;
        Ok(op)
    }

    fn check_pairs(&self) -> Result<()> {
        let n = self.anchor.flow.nrows();
        let mut seen = vec![false; n];
        for &(p, q) in &self.pairs {
            if p >= n || q >= n || p == q || seen[p] || seen[q] {
                return Err(Error::Domain(format!("skew pair ({p}, {q}) is not a disjoint pair of paths")));
            }
            seen[p] = true;
            seen[q] = true;
        }
        Ok(())
    }

    /// Lipschitz constants of the flow and demand blocks.
    pub fn lipschitz(&self) -> (f64, f64) {
        let flow = if self.pairs.is_empty() {
            self.flow_gain.abs()
        } else {
            self.flow_gain.hypot(self.skew).max(self.flow_gain.abs())
        };
        (flow, self.demand_gain.abs())
    }
}

impl Operator for AffineOperator {
    fn eval(&self, x: &ExtendedPoint) -> Result<OperatorValue> {
        x.same_shape(&self.anchor)?;
        let y = x - &self.anchor;
        let mut psi: Array2<f64> = &self.offset.flow + &y.flow.mapv(|v| self.flow_gain * v);
        for &(p, q) in &self.pairs {
            for k in 0..psi.ncols() {
                psi[[p, k]] += self.skew * y.flow[[q, k]];
                psi[[q, k]] -= self.skew * y.flow[[p, k]];
            }
        }
        let neg_theta: Array1<f64> = &self.offset.demand + &y.demand.mapv(|v| self.demand_gain * v);
        Ok(OperatorValue { psi, neg_theta })
    }
}

/// Largest admissible constant step of the projection method under partial
/// strong monotonicity:
/// `2 min{(K_sm − K_wm M)/(M + 1), K₂} / max{L₁², L₂²}` (exclusive).
pub fn contraction_step_bound(k_sm: f64, k_wm: f64, m: f64, k2: f64, l1: f64, l2: f64) -> Result<f64> {
    let vals = [k_sm, k_wm, m, k2, l1, l2];
    if vals.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::CannotBound(format!("constants must be finite and nonnegative: {vals:?}")));
    }
    let flow = (k_sm - k_wm * m) / (m + 1.0);
    let num = flow.min(k2);
    let den = l1.max(l2).powi(2);
    if num <= 0.0 || den <= 0.0 {
        return Err(Error::CannotBound(format!(
            "no contraction step: margin {num}, Lipschitz square {den}"
        )));
    }
    Ok(2.0 * num / den)
}

/// Affine operator together with its unique solution.
#[derive(Debug, Clone)]
pub struct SyntheticInstance {
    pub set: FeasibleSet,
    pub operator: AffineOperator,
    pub solution: ExtendedPoint,
}

impl SyntheticInstance {
    /// Step bound implied by the operator constants (single strong partition).
    pub fn step_bound(&self) -> Result<f64> {
        let (l1, l2) = self.operator.lipschitz();
        contraction_step_bound(self.operator.flow_gain, 0.0, 0.0, self.operator.demand_gain, l1, l2)
    }

    /// Random feasible point with demands in `[0, 2 max Q*)`.
    pub fn random_feasible(&self, rng: &mut impl Rng) -> ExtendedPoint {
        let q_max = self.solution.demand.iter().fold(1.0f64, |a, &b| a.max(b));
        random_feasible_point(&self.set, 2.0 * q_max, rng)
    }
}

/// Builds an instance on `od_paths` over `[0, 1]` with `n_steps` cells.
///
/// The solution puts flow on a random subset of cells at common cost `v_w`
/// and the offset charges unused cells strictly more, so `−F(X*)` lies in the
/// normal cone of the feasible set at `X*`.
pub fn known_solution_instance(
    od_paths: Vec<Vec<usize>>,
    n_steps: usize,
    flow_gain: f64,
    demand_gain: f64,
    skew: f64,
    seed: u64,
) -> Result<SyntheticInstance> {
    if !(flow_gain > 0.0 && demand_gain > 0.0) {
        return Err(Error::Domain("gains must be positive for a unique solution".into()));
    }
    let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, n_steps)?, od_paths)?;
    let dt = set.grid().dt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut solution = set.zero_point();
    let mut offset = set.zero_point();
    for (w, paths) in set.od_paths().iter().enumerate() {
        let cost = rng.gen_range(0.5..1.5);
        let mut any = false;
        for &p in paths {
            for k in 0..n_steps {
                if rng.gen_bool(0.4) {
                    solution.flow[[p, k]] = rng.gen_range(1.0..20.0);
                    offset.flow[[p, k]] = cost;
                    any = true;
                } else {
                    offset.flow[[p, k]] = cost + rng.gen_range(0.1..1.0);
                }
            }
        }
        if !any {
            solution.flow[[paths[0], 0]] = 10.0;
            offset.flow[[paths[0], 0]] = cost;
        }
        let mut q = 0.0;
        for &p in paths {
            for &v in solution.flow.row(p) {
                q += v * dt;
            }
        }
        solution.demand[w] = q;
        offset.demand[w] = -cost;
    }
    let pairs = set
        .od_paths()
        .iter()
        .flat_map(|paths| paths.chunks_exact(2).map(|c| (c[0], c[1])))
        .collect();
    let operator = AffineOperator {
        anchor: solution.clone(),
        offset,
        flow_gain,
        demand_gain,
        skew,
        pairs,
    };
    operator.check_pairs()?;
    Ok(SyntheticInstance {
        set,
        operator,
        solution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::inner_unchecked;
    use crate::vi::dual_gap_probe;

    #[test]
    fn skew_part_is_orthogonal() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 4).unwrap(), vec![vec![0, 1]]).unwrap();
        let op = AffineOperator::skew(&set, vec![(0, 1)], 3.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let mut x = set.zero_point();
            x.flow.mapv_inplace(|_| rng.gen_range(-5.0..5.0));
            let f = op.eval(&x).unwrap().into_point();
            assert!(inner_unchecked(&f, &x, set.grid().dt()).abs() < 1e-12);
        }
    }

    #[test]
    fn known_solution_satisfies_the_inequality() {
        let inst = known_solution_instance(vec![vec![0, 1, 2], vec![3]], 6, 2.0, 1.0, 0.5, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cands: Vec<_> = (0..200).map(|_| inst.random_feasible(&mut rng)).collect();
        let gap = dual_gap_probe(&inst.solution, &cands, &inst.operator, &inst.set).unwrap();
        assert!(gap >= -1e-9, "{gap}");
    }

    #[test]
    fn step_bound_formula() {
        assert!((contraction_step_bound(2.0, 0.0, 0.0, 1.0, 1.0, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((contraction_step_bound(4.0, 1.0, 1.0, 5.0, 1.0, 1.0).unwrap() - 3.0).abs() < 1e-15);
        assert!(contraction_step_bound(1.0, 2.0, 1.0, 1.0, 1.0, 1.0).is_err());
    }
}
