//! Loopless k-shortest paths (Yen) over a link list.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

/// Directed arc `from → to` with a nonnegative cost.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoutedPath {
    /// Arc indices in travel order.
    pub arcs: Vec<usize>,
    pub cost: f64,
}

#[derive(PartialEq)]
struct Entry(f64, usize);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(
    n_nodes: usize,
    out: &[Vec<usize>],
    arcs: &[Arc],
    source: usize,
    target: usize,
    banned_arc: &[bool],
    banned_node: &[bool],
) -> Option<RoutedPath> {
    let mut dist = vec![f64::INFINITY; n_nodes];
    let mut via: Vec<Option<usize>> = vec![None; n_nodes];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry(0.0, source));
    while let Some(Entry(d, u)) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        if u == target {
            break;
        }
        for &a in &out[u] {
            let v = arcs[a].to;
            if banned_arc[a] || banned_node[v] {
                continue;
            }
            let nd = d + arcs[a].cost;
            if nd < dist[v] {
                dist[v] = nd;
                via[v] = Some(a);
                heap.push(Entry(nd, v));
            }
        }
    }
    if !dist[target].is_finite() {
        return None;
    }
    let mut path = Vec::new();
    let mut node = target;
    while node != source {
        let a = via[node]?;
        path.push(a);
        node = arcs[a].from;
    }
    path.reverse();
    Some(RoutedPath {
        arcs: path,
        cost: dist[target],
    })
}

fn path_cost(arcs: &[Arc], path: &[usize]) -> f64 {
    path.iter().map(|&a| arcs[a].cost).sum()
}

/// Up to `k` loopless paths from `source` to `target` in nondecreasing cost,
/// ties broken by arc sequence.
pub fn k_shortest_paths(
    n_nodes: usize,
    arcs: &[Arc],
    source: usize,
    target: usize,
    k: usize,
) -> Result<Vec<RoutedPath>> {
    if source >= n_nodes || target >= n_nodes {
        return Err(Error::Domain(format!("node index out of range ({source}, {target})")));
    }
    if source == target {
        return Err(Error::Domain("source equals target".into()));
    }
    let mut out = vec![Vec::new(); n_nodes];
    for (i, a) in arcs.iter().enumerate() {
        if a.from >= n_nodes || a.to >= n_nodes || !(a.cost >= 0.0 && a.cost.is_finite()) {
            return Err(Error::Domain(format!("arc {i} is malformed: {a:?}")));
        }
        out[a.from].push(i);
    }
    let mut found: Vec<RoutedPath> = Vec::new();
    let none_arcs = vec![false; arcs.len()];
    let none_nodes = vec![false; n_nodes];
    match dijkstra(n_nodes, &out, arcs, source, target, &none_arcs, &none_nodes) {
        Some(p) => found.push(p),
        None => return Ok(found),
    }
    let mut candidates: Vec<RoutedPath> = Vec::new();
    while found.len() < k {
        let last = found.last().expect("nonempty").arcs.clone();
        for i in 0..last.len() {
            let spur = if i == 0 { source } else { arcs[last[i - 1]].to };
            let root = &last[..i];
            let mut banned_arc = none_arcs.clone();
            for p in &found {
                if p.arcs.len() > i && p.arcs[..i] == *root {
                    banned_arc[p.arcs[i]] = true;
                }
            }
            let mut banned_node = none_nodes.clone();
            banned_node[source] = true;
            for &a in root {
                banned_node[arcs[a].to] = true;
            }
            banned_node[spur] = false;
            if let Some(tail) = dijkstra(n_nodes, &out, arcs, spur, target, &banned_arc, &banned_node) {
                let mut full = root.to_vec();
                full.extend(tail.arcs);
                if !candidates.iter().any(|c| c.arcs == full) && !found.iter().any(|c| c.arcs == full) {
                    let cost = path_cost(arcs, &full);
                    candidates.push(RoutedPath { arcs: full, cost });
                }
            }
        }
        if candidates.is_empty() {
            break;
        }
        let best = (0..candidates.len())
            .min_by(|&a, &b| {
                candidates[a]
                    .cost
                    .total_cmp(&candidates[b].cost)
                    .then_with(|| candidates[a].arcs.cmp(&candidates[b].arcs))
            })
            .expect("nonempty");
        found.push(candidates.swap_remove(best));
    }
    Ok(found)
}
