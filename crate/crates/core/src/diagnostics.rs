//! Average costs, empirical monotonicity probes and gap-trace export.

use std::path::Path;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{inner_unchecked, norm, ExtendedPoint, FeasibleSet, Scenario};
use crate::solvers::IterateHistory;
use crate::vi::{project_onto_feasible, Operator, TrafficOperator};

/// Flow-weighted average effective cost per OD pair, `None` where `Q_w ≤ 0`.
pub fn average_travel_cost(x: &ExtendedPoint, psi: &Array2<f64>, set: &FeasibleSet) -> Vec<Option<f64>> {
    let dt = set.grid().dt();
    set.od_paths()
        .iter()
        .enumerate()
        .map(|(w, paths)| {
            let q = x.demand[w];
            if q <= 0.0 {
                return None;
            }
            let mut total = 0.0;
            for &p in paths {
                for (&h, &c) in x.flow.row(p).iter().zip(psi.row(p).iter()) {
                    total += c * h;
                }
            }
            Some(total * dt / q)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    EvidenceStrong,
    EvidenceWeakOnly,
    EvidenceNonmonotone,
}

/// Quotients restricted to a split of the paths into a "strong" group and the rest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionQuotients {
    /// Smallest flow-block quotient over the strong group (estimate of its strong constant).
    pub strong_min: f64,
    /// Smallest flow-block quotient over the remaining paths.
    pub rest_min: f64,
    /// Largest ratio of rest to strong squared displacement.
    pub displacement_ratio_max: f64,
    /// `strong_min − max(0, −rest_min) · displacement_ratio_max`
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotonicityReport {
    pub sample_count: usize,
    /// `⟨F(x₁) − F(x₂), x₁ − x₂⟩ / ‖x₁ − x₂‖²`
    pub min_quotient: f64,
    pub mean_quotient: f64,
    pub max_quotient: f64,
    /// Largest `‖F(x₁) − F(x₂)‖ / ‖x₁ − x₂‖` seen.
    pub lipschitz_estimate: f64,
    pub partition: Option<PartitionQuotients>,
    /// Ordered pairs contradicting pseudo monotonicity.
    pub pseudo_disproofs: usize,
    /// Ordered pairs contradicting quasi monotonicity.
    pub quasi_disproofs: usize,
    pub verdict: Verdict,
}

/// Noise scale of probe samples relative to the uniform profile.
pub const PROBE_NOISE: f64 = 0.1;

fn probe_sample(base: &ExtendedPoint, set: &FeasibleSet, rng: &mut ChaCha8Rng) -> Result<ExtendedPoint> {
    let mut y = base.clone();
    for v in y.flow.iter_mut() {
        *v = (*v * (1.0 + PROBE_NOISE * rng.gen_range(-1.0..=1.0))).max(0.0);
    }
    for v in y.demand.iter_mut() {
        *v = (*v * (1.0 + PROBE_NOISE * rng.gen_range(-1.0..=1.0))).max(0.0);
    }
    project_onto_feasible(&y, set)
}

/// Draws `samples` random feasible pairs around the uniform profile with the
/// given demands and measures monotonicity quotients of `op` on them.
pub fn monotonicity_probe(
    op: &dyn Operator,
    set: &FeasibleSet,
    base_demand: &[f64],
    samples: usize,
    seed: u64,
    strong_paths: Option<&[usize]>,
) -> Result<MonotonicityReport> {
    if samples == 0 {
        return Err(Error::Domain("monotonicity probe needs at least one sample".into()));
    }
    let dt = set.grid().dt();
    let base = set.uniform_point(base_demand)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut in_strong = vec![false; set.n_paths()];
    if let Some(paths) = strong_paths {
        for &p in paths {
            *in_strong.get_mut(p).ok_or_else(|| Error::Dimension(format!("path index {p}")))? = true;
        }
    }

    let mut quotients = Vec::with_capacity(samples);
    let mut lipschitz: f64 = 0.0;
    let (mut strong_min, mut rest_min, mut ratio_max) = (f64::INFINITY, f64::INFINITY, 0.0f64);
    let (mut pseudo, mut quasi) = (0, 0);
    while quotients.len() < samples {
        let x1 = probe_sample(&base, set, &mut rng)?;
        let x2 = probe_sample(&base, set, &mut rng)?;
        let dx = &x1 - &x2;
        let dist2 = inner_unchecked(&dx, &dx, dt);
        if dist2 == 0.0 {
            continue;
        }
        let f1 = op.eval(&x1)?.into_point();
        let f2 = op.eval(&x2)?.into_point();
        let df = &f1 - &f2;
        let q = inner_unchecked(&df, &dx, dt) / dist2;
        if !q.is_finite() {
            return Err(Error::Domain("non-finite monotonicity quotient".into()));
        }
        quotients.push(q);
        lipschitz = lipschitz.max(norm(&df, set.grid()) / dist2.sqrt());

        // ⟨F(b), a − b⟩ for both orderings.
        let f2_on = inner_unchecked(&f2, &dx, dt);
        let f1_on = inner_unchecked(&f1, &dx, dt);
        for (premise, conclusion) in [(f2_on, f1_on), (-f1_on, -f2_on)] {
            if premise >= 0.0 && conclusion < 0.0 {
                pseudo += 1;
            }
            if premise > 0.0 && conclusion < 0.0 {
                quasi += 1;
            }
        }

        if strong_paths.is_some() {
            let (mut sp, mut sd, mut rp, mut rd) = (0.0, 0.0, 0.0, 0.0);
            for p in 0..set.n_paths() {
                let mut prod = 0.0;
                let mut sq = 0.0;
                for (&a, &b) in df.flow.row(p).iter().zip(dx.flow.row(p).iter()) {
                    prod += a * b;
                    sq += b * b;
                }
                if in_strong[p] {
                    sp += prod * dt;
                    sd += sq * dt;
                } else {
                    rp += prod * dt;
                    rd += sq * dt;
                }
            }
            if sd > 0.0 {
                strong_min = strong_min.min(sp / sd);
                ratio_max = ratio_max.max(rd / sd);
            }
            if rd > 0.0 {
                rest_min = rest_min.min(rp / rd);
            }
        }
    }

    let min_quotient = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    let max_quotient = quotients.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean_quotient = quotients.iter().sum::<f64>() / quotients.len() as f64;
    let tol = 1e-9 * lipschitz.max(f64::MIN_POSITIVE);
    let verdict = if min_quotient > tol {
        Verdict::EvidenceStrong
    } else if min_quotient >= -tol {
        Verdict::EvidenceWeakOnly
    } else {
        Verdict::EvidenceNonmonotone
    };
    let partition = strong_paths.map(|_| PartitionQuotients {
        strong_min,
        rest_min,
        displacement_ratio_max: ratio_max,
        margin: strong_min - (-rest_min).max(0.0) * ratio_max,
    });
    Ok(MonotonicityReport {
        sample_count: quotients.len(),
        min_quotient,
        mean_quotient,
        max_quotient,
        lipschitz_estimate: lipschitz,
        partition,
        pseudo_disproofs: pseudo,
        quasi_disproofs: quasi,
        verdict,
    })
}

/// Probe of a scenario's traffic operator around the uniform start; `strong_paths` are path ids.
pub fn scenario_monotonicity_probe(
    scenario: &Scenario,
    samples: usize,
    seed: u64,
    strong_paths: Option<&[String]>,
) -> Result<MonotonicityReport> {
    let idx = strong_paths
        .map(|ids| {
            ids.iter()
                .map(|id| {
                    scenario
                        .paths()
                        .iter()
                        .position(|p| &p.id == id)
                        .ok_or_else(|| Error::Domain(format!("unknown path `{id}`")))
                })
                .collect::<Result<Vec<_>>>()
        })
        .transpose()?;
    let set = scenario.feasible_set();
    let demand = vec![crate::solvers::INITIAL_DEMAND; set.n_od()];
    monotonicity_probe(&TrafficOperator::new(scenario), set, &demand, samples, seed, idx.as_deref())
}

fn fmt_f64(v: f64) -> String {
    // `Display` for f64 is the shortest representation that parses back exactly.
    format!("{v}")
}

/// Columns: `iteration, relative_gap, Q_<od>..., vbar_<od>...`.
pub fn gap_trace_export(history: &IterateHistory, od_labels: &[String], path: &Path) -> Result<()> {
    if history.records.is_empty() {
        return Err(Error::Domain("empty iterate history".into()));
    }
    let mut out = String::new();
    let mut header = vec!["iteration".to_string(), "relative_gap".to_string()];
    header.extend(od_labels.iter().map(|l| format!("Q_{l}")));
    header.extend(od_labels.iter().map(|l| format!("vbar_{l}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for r in &history.records {
        let mut row = vec![r.iteration.to_string(), fmt_f64(r.gap)];
        row.extend(r.demand.iter().map(|&v| fmt_f64(v)));
        row.extend(r.avg_cost.iter().map(|&v| fmt_f64(v)));
        out.push_str(&row.join(","));
        out.push('\n');
    }
    crate::io::write_atomic(path, out.as_bytes())?;
    Ok(())
}

/// Numeric content of a gap trace, as written by [`gap_trace_export`].
#[derive(Debug, Clone, PartialEq)]
pub struct GapTrace {
    pub od_labels: Vec<String>,
    pub iterations: Vec<usize>,
    pub gaps: Vec<f64>,
    pub demand: Vec<Vec<f64>>,
    pub avg_cost: Vec<Vec<f64>>,
}

pub fn read_gap_trace(path: &Path) -> Result<GapTrace> {
    let mut reader = csv::Reader::from_path(path)?;
    let header = reader.headers()?.clone();
    let n_od = (header.len().saturating_sub(2)) / 2;
    let od_labels = header
        .iter()
        .skip(2)
        .take(n_od)
        .map(|h| h.trim_start_matches("Q_").to_string())
        .collect();
    let mut trace = GapTrace {
        od_labels,
        iterations: Vec::new(),
        gaps: Vec::new(),
        demand: Vec::new(),
        avg_cost: Vec::new(),
    };
    for row in reader.records() {
        let row = row?;
        let num = |i: usize| -> Result<f64> {
            row[i].parse::<f64>().map_err(|e| Error::Parse(format!("column {i}: {e}")))
        };
        trace
            .iterations
            .push(row[0].parse().map_err(|e| Error::Parse(format!("iteration: {e}")))?);
        trace.gaps.push(num(1)?);
        trace.demand.push((0..n_od).map(|w| num(2 + w)).collect::<Result<_>>()?);
        trace.avg_cost.push((0..n_od).map(|w| num(2 + n_od + w)).collect::<Result<_>>()?);
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TimeGrid;
    use crate::vi::OperatorValue;
    use ndarray::array;

    #[test]
    fn average_of_constant_cost() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 2).unwrap(), vec![vec![0, 1]]).unwrap();
        let x = ExtendedPoint::new(array![[1.0, 3.0], [0.0, 2.0]], array![3.0]);
        let psi = Array2::from_elem((2, 2), 0.8);
        let v = average_travel_cost(&x, &psi, &set);
        assert!((v[0].unwrap() - 0.8).abs() < 1e-15);
        let doubled = ExtendedPoint::new(x.flow.mapv(|h| 2.0 * h), x.demand.mapv(|q| 2.0 * q));
        let psi2 = array![[0.5, 1.0], [2.0, 0.7]];
        let a = average_travel_cost(&x, &psi2, &set)[0].unwrap();
        let b = average_travel_cost(&doubled, &psi2, &set)[0].unwrap();
        assert!((a - b).abs() < 1e-15);
    }

    #[test]
    fn zero_demand_is_undefined() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 2).unwrap(), vec![vec![0]]).unwrap();
        let x = set.zero_point();
        assert_eq!(average_travel_cost(&x, &Array2::ones((1, 2)), &set), vec![None]);
    }

    #[test]
    fn scaled_identity_is_strongly_monotone() {
        let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 3).unwrap(), vec![vec![0, 1]]).unwrap();
        let c = 2.5;
        let op = move |x: &ExtendedPoint| -> Result<OperatorValue> {
            Ok(OperatorValue {
                psi: x.flow.mapv(|v| c * v),
                neg_theta: x.demand.mapv(|v| c * v),
            })
        };
        let r = monotonicity_probe(&op, &set, &[10.0], 20, 7, Some(&[0])).unwrap();
        assert_eq!(r.verdict, Verdict::EvidenceStrong);
        assert!((r.min_quotient - c).abs() < 1e-9);
        assert!((r.max_quotient - c).abs() < 1e-9);
        assert_eq!(r.pseudo_disproofs, 0);
        let part = r.partition.unwrap();
        assert!((part.strong_min - c).abs() < 1e-9);
    }
}
