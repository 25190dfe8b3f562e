//! Dynamic network loading with the link transmission model.
//!
//! Each link keeps cumulative vehicle counts at its upstream and downstream
//! ends, both in aggregate and per path. Per step, a link can send what
//! entered one free-flow traversal ago (capped by capacity) and receive what
//! left one backward-wave traversal ago plus its jam storage (also capped).
//! Nodes merge proportionally to sending flow and diverge by path. Exits
//! are FIFO within a link: the path composition of an outflow is read off the
//! per-path upstream curves at the moment the aggregate count was reached.
//! A link facing a full outlet releases the longest FIFO prefix that fits.
//!
//! Path travel times come from a probe that enters each link when the
//! previous one releases it and leaves once the aggregate downstream count
//! catches up with the aggregate upstream count at its entry, never earlier
//! than the free-flow traversal.

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::model::{ArrivalPenalty, Scenario, TimeGrid};

/// Delay `d` and effective delay `psi`, paths × departure steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayField {
    pub d: Array2<f64>,
    pub psi: Array2<f64>,
}

/// Cumulative counts of one link, sampled at the loader's grid points.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkCurves {
    pub link: usize,
    /// Path indices travelling through this link, one per curve slot.
    pub paths: Vec<usize>,
    pub upstream: Vec<f64>,
    pub downstream: Vec<f64>,
    pub upstream_by_path: Vec<Vec<f64>>,
    pub downstream_by_path: Vec<Vec<f64>>,
    /// Free-flow traversal in whole steps.
    pub forward_steps: usize,
    pub backward_steps: usize,
    /// Capacity per step, `M_a * dt` (veh).
    pub step_capacity: f64,
}

/// Every curve produced by one loading, over the extended horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct CumulativeCurves {
    pub t0: f64,
    pub dt: f64,
    /// Number of samples per curve (`steps + 1`).
    pub samples: usize,
    /// Only links used by at least one path are simulated.
    pub links: Vec<LinkCurves>,
    /// Per path: departed, entered the first link, absorbed at the destination.
    pub departed: Vec<Vec<f64>>,
    pub entered: Vec<Vec<f64>>,
    pub arrived: Vec<Vec<f64>>,
}

impl CumulativeCurves {
    pub fn time(&self, sample: usize) -> f64 {
        self.t0 + sample as f64 * self.dt
    }
}

/// Maximum number of times the drain horizon doubles before giving up.
const MAX_TAIL_DOUBLINGS: u32 = 8;

#[derive(Clone, Copy)]
enum Next {
    Link { link: usize, slot: usize },
    Sink(usize),
}

struct Inlet {
    /// `None` for a path's origin source.
    link: Option<usize>,
    source_path: usize,
}

struct Node {
    inlets: Vec<Inlet>,
    outlets: Vec<usize>,
}

/// Steps (rounded up) needed to cover `duration` hours.
fn steps_for(duration: f64, dt: f64) -> usize {
    let raw = duration / dt;
    let rounded = raw.round();
    let steps = if (raw - rounded).abs() <= 1e-9 * rounded.max(1.0) {
        rounded
    } else {
        raw.ceil()
    };
    (steps as usize).max(1)
}

/// Propagates departure rates `h` (paths × steps, veh/h) through the network.
///
/// Returns the curves over the extended horizon and the travel time `D_p(t_k)`
/// of every step of `[t0, tf)`, measured on the step's middle vehicle.
pub fn load_network(h: &Array2<f64>, scenario: &Scenario) -> Result<(CumulativeCurves, Array2<f64>)> {
    let grid = *scenario.grid();
    let n = grid.n_steps();
    let n_paths = scenario.paths().len();
    if h.dim() != (n_paths, n) {
        return Err(Error::Dimension(format!(
            "flow matrix {:?}, expected ({n_paths}, {n})",
            h.dim()
        )));
    }
    if let Some(v) = h.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
        return Err(Error::Domain(format!("departure rates must be finite and non-negative, found {v}")));
    }
    let dt = grid.dt();
    let links = scenario.links();
    let path_links = scenario.path_links();

    // Simulated links and their per-path slots.
    let mut slot_of = vec![Vec::new(); links.len()];
    let mut curves_idx = vec![usize::MAX; links.len()];
    let mut curves: Vec<LinkCurves> = Vec::new();
    for (p, route) in path_links.iter().enumerate() {
        for &a in route {
            if curves_idx[a] == usize::MAX {
                curves_idx[a] = curves.len();
                let link = &links[a];
                curves.push(LinkCurves {
                    link: a,
                    paths: Vec::new(),
                    upstream: vec![0.0],
                    downstream: vec![0.0],
                    upstream_by_path: Vec::new(),
                    downstream_by_path: Vec::new(),
                    forward_steps: steps_for(link.length / link.free_flow_speed, dt),
                    backward_steps: steps_for(link.length / link.backward_wave_speed, dt),
                    step_capacity: link.flow_capacity * dt,
                });
            }
            let c = &mut curves[curves_idx[a]];
            slot_of[a].push((p, c.paths.len()));
            c.paths.push(p);
            c.upstream_by_path.push(vec![0.0]);
            c.downstream_by_path.push(vec![0.0]);
        }
    }
    let slot = |a: usize, p: usize| -> usize {
        slot_of[a].iter().find(|(q, _)| *q == p).map(|&(_, s)| s).unwrap()
    };

    // Routing: for each simulated link slot, where its vehicles go next.
    let mut next: Vec<Vec<Next>> = curves.iter().map(|c| Vec::with_capacity(c.paths.len())).collect();
    for (ci, c) in curves.iter().enumerate() {
        for &p in &c.paths {
            let route = &path_links[p];
            let pos = route.iter().position(|&a| a == c.link).unwrap();
            next[ci].push(match route.get(pos + 1) {
                Some(&b) => Next::Link {
                    link: curves_idx[b],
                    slot: slot(b, p),
                },
                None => Next::Sink(p),
            });
        }
    }
    let first_hop: Vec<Next> = path_links
        .iter()
        .enumerate()
        .map(|(p, route)| Next::Link {
            link: curves_idx[route[0]],
            slot: slot(route[0], p),
        })
        .collect();

    // Node wiring restricted to simulated links and path origins.
    let node_index: std::collections::HashMap<&str, usize> = scenario
        .nodes()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let mut nodes: Vec<Node> = (0..scenario.nodes().len())
        .map(|_| Node {
            inlets: Vec::new(),
            outlets: Vec::new(),
        })
        .collect();
    for (ci, c) in curves.iter().enumerate() {
        let link = &links[c.link];
        nodes[node_index[link.to.as_str()]].inlets.push(Inlet {
            link: Some(ci),
            source_path: usize::MAX,
        });
        nodes[node_index[link.from.as_str()]].outlets.push(ci);
    }
    for (p, route) in path_links.iter().enumerate() {
        let origin = &links[route[0]].from;
        nodes[node_index[origin.as_str()]].inlets.push(Inlet {
            link: None,
            source_path: p,
        });
    }
    nodes.retain(|nd| !nd.inlets.is_empty());

    let longest_ff = path_links
        .iter()
        .map(|route| route.iter().map(|&a| curves[curves_idx[a]].forward_steps).sum::<usize>())
        .max()
        .unwrap_or(1);
    let min_tail = 3 * longest_ff;
    let max_steps = n + min_tail * (1usize << MAX_TAIL_DOUBLINGS);

    let mut departed: Vec<Vec<f64>> = vec![vec![0.0]; n_paths];
    let mut entered: Vec<Vec<f64>> = vec![vec![0.0]; n_paths];
    let mut arrived: Vec<Vec<f64>> = vec![vec![0.0]; n_paths];

    // Per-step scratch.
    let mut sending = vec![0.0; curves.len()];
    let mut receiving = vec![0.0; curves.len()];
    let mut inflow: Vec<Vec<f64>> = curves.iter().map(|c| vec![0.0; c.paths.len()]).collect();
    let mut outflow: Vec<Vec<f64>> = curves.iter().map(|c| vec![0.0; c.paths.len()]).collect();
    let mut source_out = vec![0.0; n_paths];
    let mut absorbed = vec![0.0; n_paths];
    let mut split: Vec<Vec<f64>> = curves.iter().map(|c| vec![0.0; c.paths.len()]).collect();
    let mut outlet_demand = vec![0.0; curves.len()];
    let mut outlet_factor = vec![1.0; curves.len()];
    let mut scratch = ReleaseScratch::default();

    let total_departed: f64 = h.iter().sum::<f64>() * dt;
    let drain_tol = 1e-12 * (1.0 + total_departed);

    let mut k = 0usize;
    loop {
        for p in 0..n_paths {
            let rate = if k < n { h[[p, k]] } else { 0.0 };
            let a = departed[p][k] + rate * dt;
            departed[p].push(a);
        }

        for (ci, c) in curves.iter().enumerate() {
            let up_lag = (k + 1).checked_sub(c.forward_steps).map_or(0.0, |i| c.upstream[i]);
            sending[ci] = (up_lag - c.downstream[k]).max(0.0).min(c.step_capacity);
            let down_lag = (k + 1).checked_sub(c.backward_steps).map_or(0.0, |i| c.downstream[i]);
            let storage = links[c.link].jam_density * links[c.link].length;
            receiving[ci] = (down_lag + storage - c.upstream[k]).max(0.0).min(c.step_capacity);
            inflow[ci].fill(0.0);
            outflow[ci].fill(0.0);
        }
        source_out.fill(0.0);
        absorbed.fill(0.0);

        for node in &nodes {
            for &o in &node.outlets {
                outlet_demand[o] = 0.0;
                outlet_factor[o] = 1.0;
            }
            // Candidate flows of each inlet, split by path (FIFO composition).
            for inlet in &node.inlets {
                match inlet.link {
                    Some(ci) => {
                        fifo_parts(&curves[ci], k, sending[ci], &mut split[ci]);
                        for (slot, &part) in split[ci].iter().enumerate() {
                            if let Next::Link { link, .. } = next[ci][slot] {
                                outlet_demand[link] += part;
                            }
                        }
                    }
                    None => {
                        let p = inlet.source_path;
                        let s = (departed[p][k + 1] - entered[p][k]).max(0.0);
                        source_out[p] = s;
                        if let Next::Link { link, .. } = first_hop[p] {
                            outlet_demand[link] += s;
                        }
                    }
                }
            }
            for &o in &node.outlets {
                if outlet_demand[o] > receiving[o] {
                    outlet_factor[o] = receiving[o] / outlet_demand[o];
                }
            }
            // An inlet moves at the pace of its most constrained outlet.
            for inlet in &node.inlets {
                match inlet.link {
                    Some(ci) => {
                        let blocked = split[ci].iter().enumerate().any(|(slot, &part)| {
                            part > 0.0
                                && matches!(next[ci][slot], Next::Link { link, .. } if outlet_factor[link] < 1.0)
                        });
                        if blocked {
                            release_blocked(&curves[ci], k, &next[ci], &outlet_factor, &mut split[ci], &mut scratch);
                        }
                        for (slot, &moved) in split[ci].iter().enumerate() {
                            outflow[ci][slot] = moved;
                            match next[ci][slot] {
                                Next::Link { link, slot: s2 } => inflow[link][s2] += moved,
                                Next::Sink(p) => absorbed[p] += moved,
                            }
                        }
                    }
                    None => {
                        let p = inlet.source_path;
                        if let Next::Link { link, slot: s2 } = first_hop[p] {
                            let moved = outlet_factor[link] * source_out[p];
                            source_out[p] = moved;
                            inflow[link][s2] += moved;
                        }
                    }
                }
            }
        }

        for (ci, c) in curves.iter_mut().enumerate() {
            let mut tin = 0.0;
            let mut tout = 0.0;
            for slot in 0..c.paths.len() {
                let fi = inflow[ci][slot];
                let fo = outflow[ci][slot];
                let u = c.upstream_by_path[slot][k] + fi;
                let d = c.downstream_by_path[slot][k] + fo;
                c.upstream_by_path[slot].push(u);
                c.downstream_by_path[slot].push(d);
                tin += fi;
                tout += fo;
            }
            let u = c.upstream[k] + tin;
            let d = c.downstream[k] + tout;
            c.upstream.push(u);
            c.downstream.push(d);
        }
        for p in 0..n_paths {
            let e = entered[p][k] + source_out[p];
            entered[p].push(e);
            let r = arrived[p][k] + absorbed[p];
            arrived[p].push(r);
        }
        k += 1;

        if k >= n + min_tail {
            let remaining: f64 = (0..n_paths).map(|p| departed[p][k] - arrived[p][k]).sum();
            if remaining <= drain_tol {
                break;
            }
            if k >= max_steps {
                let (worst, load) = curves
                    .iter()
                    .map(|c| (c.link, c.upstream[k] - c.downstream[k]))
                    .fold((usize::MAX, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                let link = if worst == usize::MAX {
                    "<origin>".to_string()
                } else {
                    links[worst].id.clone()
                };
                return Err(Error::HorizonTooShort {
                    link,
                    remaining: load,
                    steps: k,
                });
            }
        }
    }

    let result = CumulativeCurves {
        t0: grid.t0(),
        dt,
        samples: k + 1,
        links: curves,
        departed,
        entered,
        arrived,
    };
    let d = travel_times(&result, scenario, &curves_idx, n)?;
    Ok((result, d))
}

fn travel_times(
    curves: &CumulativeCurves,
    scenario: &Scenario,
    curves_idx: &[usize],
    n: usize,
) -> Result<Array2<f64>> {
    let n_paths = scenario.paths().len();
    let mut d = Array2::zeros((n_paths, n));
    for (p, route) in scenario.path_links().iter().enumerate() {
        for k in 0..n {
            // The probe is the cell's middle vehicle, so a cell's delay
            // includes the queue formed by its own departures.
            let start = k as f64 + 0.5;
            let level = 0.5 * (curves.departed[p][k] + curves.departed[p][k + 1]);
            let mut clock = match crossing(&curves.entered[p], level) {
                Some(t) => t.max(start),
                None => return Err(horizon_error(scenario, route[0], curves)),
            };
            for &a in route {
                let c = &curves.links[curves_idx[a]];
                let level = interp_time(&c.upstream, clock);
                let exit = crossing(&c.downstream, level).ok_or_else(|| horizon_error(scenario, a, curves))?;
                clock = exit.max(clock + c.forward_steps as f64);
            }
            d[[p, k]] = (clock - start) * curves.dt;
        }
    }
    Ok(d)
}

fn horizon_error(scenario: &Scenario, link: usize, curves: &CumulativeCurves) -> Error {
    Error::HorizonTooShort {
        link: scenario.links()[link].id.clone(),
        remaining: f64::NAN,
        steps: curves.samples - 1,
    }
}

/// Earliest fractional sample index at which the nondecreasing `curve` reaches
/// `level` (up to a relative round-off allowance).
/// Per-path split of the next `amount` vehicles to leave link `c` after
/// step `k`, read off the per-path entry curves (FIFO).
fn fifo_parts(c: &LinkCurves, k: usize, amount: f64, parts: &mut [f64]) {
    parts.fill(0.0);
    if amount <= 0.0 {
        return;
    }
    let target = c.downstream[k] + amount;
    let (j, frac) = locate(&c.upstream[..=k], target);
    let mut total = 0.0;
    for (slot, part) in parts.iter_mut().enumerate() {
        let up = interp_at(&c.upstream_by_path[slot], j, frac);
        *part = (up - c.downstream_by_path[slot][k]).max(0.0);
        total += *part;
    }
    if total > amount {
        let scale = amount / total;
        parts.iter_mut().for_each(|v| *v *= scale);
    }
}

/// Reusable buffers for [`release_blocked`].
#[derive(Default)]
struct ReleaseScratch {
    /// Per slot, index into the outlet lists (`usize::MAX` for a sink).
    group: Vec<usize>,
    outlets: Vec<usize>,
    /// This link's share of each outlet's receiving flow.
    allow: Vec<f64>,
    flow: Vec<f64>,
    fixed: Vec<f64>,
    rise: Vec<f64>,
}

/// Flow of `parts` into each outlet group.
fn group_flows(parts: &[f64], group: &[usize], flow: &mut [f64]) {
    flow.fill(0.0);
    for (&p, &g) in parts.iter().zip(group) {
        if g != usize::MAX {
            flow[g] += p;
        }
    }
}

/// Shrinks the candidate split of a link facing constrained outlets to the
/// largest FIFO release that sends each outlet at most this link's merge
/// share, `factor · candidate flow to that outlet`.
///
/// Outlet flows are piecewise linear and nondecreasing in the release, with
/// breaks where the exit count passes an upstream sample, so the first
/// segment that overfills an outlet is found by walking the samples and the
/// release is then solved in closed form on that segment.
fn release_blocked(
    c: &LinkCurves,
    k: usize,
    next: &[Next],
    outlet_factor: &[f64],
    parts: &mut [f64],
    sc: &mut ReleaseScratch,
) {
    sc.group.clear();
    sc.outlets.clear();
    sc.allow.clear();
    for (&part, hop) in parts.iter().zip(next) {
        match *hop {
            Next::Link { link, .. } => {
                let g = match sc.outlets.iter().position(|&o| o == link) {
                    Some(g) => g,
                    None => {
                        sc.outlets.push(link);
                        sc.allow.push(0.0);
                        sc.outlets.len() - 1
                    }
                };
                sc.allow[g] += outlet_factor[link] * part;
                sc.group.push(g);
            }
            Next::Sink(_) => sc.group.push(usize::MAX),
        }
    }
    let n_groups = sc.outlets.len();
    sc.flow.resize(n_groups, 0.0);
    let fits = |flow: &[f64], allow: &[f64]| {
        flow.iter().zip(allow).all(|(&f, &a)| f <= a + 1e-12 * (1.0 + a))
    };
    let sent: f64 = parts.iter().sum();
    let base = c.downstream[k];
    let up = &c.upstream[..=k];
    let mut release = sent;
    let (mut j, _) = locate(up, base);
    while j + 1 < up.len() {
        let seg_end = (up[j + 1] - base).min(sent);
        fifo_parts(c, k, seg_end, parts);
        group_flows(parts, &sc.group, &mut sc.flow);
        if !fits(&sc.flow, &sc.allow) {
            // On this segment the flow into group g is fixed_g + rise_g · frac.
            sc.fixed.clear();
            sc.fixed.resize(n_groups, 0.0);
            sc.rise.clear();
            sc.rise.resize(n_groups, 0.0);
            for (slot, &g) in sc.group.iter().enumerate() {
                if g != usize::MAX {
                    let curve = &c.upstream_by_path[slot];
                    sc.fixed[g] += curve[j] - c.downstream_by_path[slot][k];
                    sc.rise[g] += curve[j + 1] - curve[j];
                }
            }
            let span = up[j + 1] - up[j];
            let mut x = seg_end;
            if span > 0.0 {
                for g in 0..n_groups {
                    if sc.rise[g] > 0.0 {
                        let frac = (sc.allow[g] - sc.fixed[g]) / sc.rise[g];
                        x = x.min(up[j] - base + frac * span);
                    }
                }
            }
            release = x.clamp((up[j] - base).max(0.0), seg_end);
            break;
        }
        if seg_end >= sent {
            break;
        }
        j += 1;
    }
    fifo_parts(c, k, release, parts);
    // Rounding in the composition must not overfill an outlet.
    group_flows(parts, &sc.group, &mut sc.flow);
    for (p, &g) in parts.iter_mut().zip(&sc.group) {
        if g != usize::MAX && sc.flow[g] > sc.allow[g] {
            *p *= sc.allow[g] / sc.flow[g];
        }
    }
}

fn crossing(curve: &[f64], level: f64) -> Option<f64> {
    let level = level - 1e-10 * (1.0 + level.abs());
    if curve[0] >= level {
        return Some(0.0);
    }
    let j = curve.partition_point(|&v| v < level);
    if j == curve.len() {
        return None;
    }
    let (lo, hi) = (curve[j - 1], curve[j]);
    Some((j - 1) as f64 + (level - lo) / (hi - lo))
}

/// Segment `(j, frac)` of the earliest point where `curve` reaches `level`,
/// clamped to the available samples.
fn locate(curve: &[f64], level: f64) -> (usize, f64) {
    if curve[0] >= level || curve.len() == 1 {
        return (0, 0.0);
    }
    let j = curve.partition_point(|&v| v < level);
    if j == curve.len() {
        return (curve.len() - 2, 1.0);
    }
    let (lo, hi) = (curve[j - 1], curve[j]);
    (j - 1, ((level - lo) / (hi - lo)).clamp(0.0, 1.0))
}

fn interp_at(curve: &[f64], j: usize, frac: f64) -> f64 {
    if frac == 0.0 || j + 1 >= curve.len() {
        return curve[j.min(curve.len() - 1)];
    }
    curve[j] + frac * (curve[j + 1] - curve[j])
}

fn interp_time(curve: &[f64], t: f64) -> f64 {
    let last = curve.len() - 1;
    if t >= last as f64 {
        return curve[last];
    }
    let j = t.floor() as usize;
    interp_at(curve, j, t - j as f64)
}

/// `psi_p(t_k) = d_p(t_k) + f(t_k + d_p(t_k) - T_A)`
pub fn effective_delay(d: &Array2<f64>, penalty: &ArrivalPenalty, grid: &TimeGrid) -> Array2<f64> {
    let mut psi = d.clone();
    for ((_, k), v) in psi.indexed_iter_mut() {
        let t = grid.time(k);
        *v += penalty.penalty(t + *v - penalty.target_arrival);
    }
    psi
}

/// Loading followed by the effective delay: the delay operator every solver uses.
pub fn delay_operator(h: &Array2<f64>, scenario: &Scenario) -> Result<DelayField> {
    let (_, d) = load_network(h, scenario)?;
    let psi = effective_delay(&d, scenario.penalty(), scenario.grid());
    Ok(DelayField { d, psi })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn crossing_interpolates_and_takes_earliest() {
        let c = [0.0, 2.0, 2.0, 4.0];
        assert_eq!(crossing(&c, 0.0), Some(0.0));
        assert!((crossing(&c, 1.0).unwrap() - 0.5).abs() < 1e-9);
        // flat stretch: earliest time the count is reached
        assert!((crossing(&c, 2.0).unwrap() - 1.0).abs() < 1e-9);
        assert!((crossing(&c, 3.0).unwrap() - 2.5).abs() < 1e-9);
        assert_eq!(crossing(&c, 5.0), None);
    }

    #[test]
    fn locate_segments() {
        let c = [0.0, 2.0, 4.0];
        assert_eq!(locate(&c, 0.0), (0, 0.0));
        let (j, f) = locate(&c, 3.0);
        assert_eq!(j, 1);
        assert!((f - 0.5).abs() < 1e-15);
        assert_eq!(locate(&c, 9.0), (1, 1.0));
    }

    #[test]
    fn steps_round_up_with_tolerance() {
        assert_eq!(steps_for(1.0 / 60.0, 1.0 / 60.0), 1);
        assert_eq!(steps_for(1.0 / 60.0, 1.0 / 120.0), 2);
        assert_eq!(steps_for(0.025, 0.01), 3);
    }

    #[test]
    fn effective_delay_branches() {
        let grid = TimeGrid::new(0.0, 2.0, 4).unwrap();
        let f = ArrivalPenalty {
            target_arrival: 1.0,
            early_slope: 0.4,
            late_slope: 2.0,
        };
        // steps start at 0, 0.5, 1.0, 1.5
        let d = array![[0.5, 0.5, 0.5, 0.5]];
        let psi = effective_delay(&d, &f, &grid);
        assert!((psi[[0, 0]] - 0.7).abs() < 1e-12);
        assert!((psi[[0, 1]] - 0.5).abs() < 1e-12);
        assert!((psi[[0, 2]] - 1.5).abs() < 1e-12);
    }
}
