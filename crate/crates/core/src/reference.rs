//! Slow reference implementations and random point generators for verification.
//!
//! These share no code with the fast paths they check.

use rand::Rng;

use crate::loader::CumulativeCurves;
use crate::model::{ExtendedPoint, FeasibleSet};

/// Points per scan and number of zoom rounds of [`project_by_scan`].
const SCAN_POINTS: usize = 2000;
const SCAN_ROUNDS: usize = 6;

/// Projection by scanning the multiplier `λ` of the volume constraint.
///
/// Per OD, `h(λ) = max(0, g − λ)` and `Q(λ) = R + λ`; the feasible `λ` is
/// the sign change of `Σ h(λ) dt − Q(λ)`, located by repeated grid scans and
/// a final secant on the bracketing cell, where the balance is linear.
/// When the balance is already nonpositive at `Q = 0`, the projection is zero.
pub fn project_by_scan(y: &ExtendedPoint, set: &FeasibleSet) -> ExtendedPoint {
    let dt = set.grid().dt();
    let mut out = set.zero_point();
    for (w, paths) in set.od_paths().iter().enumerate() {
        let cells: Vec<f64> = paths.iter().flat_map(|&p| y.flow.row(p).to_vec()).collect();
        let r = y.demand[w];
        let balance = |lambda: f64| -> f64 {
            let s: f64 = cells.iter().map(|&g| (g - lambda).max(0.0)).sum();
            s * dt - (r + lambda)
        };
        // Q = 0 corresponds to λ = −R.
        if balance(-r) <= 0.0 {
            continue;
        }
        let top = cells.iter().fold(-r, |a, &g| a.max(g)) + 1.0;
        let (mut lo, mut hi) = (-r, top);
        for _ in 0..SCAN_ROUNDS {
            let step = (hi - lo) / SCAN_POINTS as f64;
            let mut prev = lo;
            for i in 1..=SCAN_POINTS {
                let x = if i == SCAN_POINTS { hi } else { lo + step * i as f64 };
                if balance(x) <= 0.0 {
                    hi = x;
                    lo = prev;
                    break;
                }
                prev = x;
            }
        }
        let (flo, fhi) = (balance(lo), balance(hi));
        let lambda = if fhi < flo { lo + flo * (hi - lo) / (flo - fhi) } else { hi };
        let mut volume = 0.0;
        for &p in paths {
            for k in 0..y.flow.ncols() {
                let v = (y.flow[[p, k]] - lambda).max(0.0);
                out.flow[[p, k]] = v;
                volume += v * dt;
            }
        }
        out.demand[w] = volume;
    }
    out
}

/// Unconstrained point with entries in `[-scale, scale]`.
pub fn random_free_point(set: &FeasibleSet, scale: f64, rng: &mut impl Rng) -> ExtendedPoint {
    let mut x = set.zero_point();
    x.flow.mapv_inplace(|_| rng.gen_range(-scale..=scale));
    x.demand.mapv_inplace(|_| rng.gen_range(-scale..=scale));
    x
}

/// Feasible point whose OD demands are uniform in `[0, q_max)`, with about
/// half of the cells empty.
pub fn random_feasible_point(set: &FeasibleSet, q_max: f64, rng: &mut impl Rng) -> ExtendedPoint {
    let dt = set.grid().dt();
    let mut x = set.zero_point();
    for (w, paths) in set.od_paths().iter().enumerate() {
        let q = rng.gen_range(0.0..q_max);
        let mut total = 0.0;
        for &p in paths {
            for k in 0..x.flow.ncols() {
                let v: f64 = if rng.gen_bool(0.5) { rng.gen_range(0.0..1.0) } else { 0.0 };
                x.flow[[p, k]] = v;
                total += v * dt;
            }
        }
        if total == 0.0 {
            x.flow[[paths[0], 0]] = 1.0;
            total = dt;
        }
        let mut sum = 0.0;
        for &p in paths {
            for v in x.flow.row_mut(p) {
                *v *= q / total;
                sum += *v * dt;
            }
        }
        x.demand[w] = sum;
    }
    x
}

/// Largest breach of FIFO within links, in steps.
///
/// For each link and sample, the aggregate exit count `D(s)` was reached
/// upstream at some time `τ`; every path's exit count must lie between its
/// upstream counts one step before and one step after `τ`. The result is the
/// worst violation in vehicles; zero when FIFO holds with one-step slack.
pub fn fifo_violation(curves: &CumulativeCurves) -> f64 {
    let mut worst = 0.0f64;
    for lc in &curves.links {
        let n = lc.upstream.len();
        for s in 0..lc.downstream.len() {
            let target = lc.downstream[s];
            // First sample where the upstream count reaches the target.
            let j = match lc.upstream.iter().position(|&u| u >= target - 1e-12) {
                Some(j) => j,
                None => n - 1,
            };
            let before = j.saturating_sub(2);
            let after = (j + 1).min(n - 1);
            for slot in 0..lc.paths.len() {
                let d = lc.downstream_by_path[slot][s];
                let lo = lc.upstream_by_path[slot][before];
                let hi = lc.upstream_by_path[slot][after];
                worst = worst.max(lo - d).max(d - hi);
            }
        }
    }
    worst
}

/// Largest per-path imbalance between departures and arrivals at the end of
/// the loading, and between aggregate and per-path link counts.
pub fn conservation_error(curves: &CumulativeCurves) -> f64 {
    let mut worst = 0.0f64;
    for p in 0..curves.departed.len() {
        let last = curves.departed[p].len() - 1;
        worst = worst.max((curves.departed[p][last] - curves.arrived[p][last]).abs());
        worst = worst.max((curves.departed[p][last] - curves.entered[p][last]).abs());
    }
    for lc in &curves.links {
        for s in 0..lc.upstream.len() {
            let up: f64 = lc.upstream_by_path.iter().map(|c| c[s]).sum();
            let down: f64 = lc.downstream_by_path.iter().map(|c| c[s]).sum();
            worst = worst.max((up - lc.upstream[s]).abs()).max((down - lc.downstream[s]).abs());
        }
    }
    worst
}

/// Largest per-step link outflow in excess of the step capacity.
pub fn capacity_excess(curves: &CumulativeCurves) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for lc in &curves.links {
        for w in lc.downstream.windows(2) {
            worst = worst.max(w[1] - w[0] - lc.step_capacity);
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeGrid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn scan_matches_hand_solution() {
        // one path, one step of length 1: h = max(0, g − λ), Q = R + λ = h
        // g = 3, R = 1: 3 − λ = 1 + λ ⇒ λ = 1, h = Q = 2
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 1).unwrap(), vec![vec![0]]).unwrap();
        let y = ExtendedPoint::new(ndarray::array![[3.0]], ndarray::array![1.0]);
        let p = project_by_scan(&y, &set);
        assert!((p.flow[[0, 0]] - 2.0).abs() < 1e-9);
        assert!((p.demand[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn negative_mass_projects_to_zero() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 2).unwrap(), vec![vec![0]]).unwrap();
        let y = ExtendedPoint::new(ndarray::array![[-1.0, 0.5]], ndarray::array![-3.0]);
        assert_eq!(project_by_scan(&y, &set), set.zero_point());
    }

    #[test]
    fn random_feasible_points_balance() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 2.0, 5).unwrap(), vec![vec![0, 1], vec![2]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let x = random_feasible_point(&set, 50.0, &mut rng);
            assert!(crate::model::check_feasible(&x, &set, 1e-9).unwrap().feasible);
        }
    }
}
