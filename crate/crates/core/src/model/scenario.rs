use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use super::demand::{AffineLine, ArrivalPenalty, InverseDemand};
use super::grid::TimeGrid;
use super::network::{Link, OdPair, Path};
use super::space::FeasibleSet;
use crate::error::{Error, Result};

/// The on-disk layout of a scenario. [`Scenario`] is the validated form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDocument {
    #[serde(default)]
    pub name: String,
    pub grid: TimeGrid,
    pub nodes: Vec<String>,
    pub links: Vec<Link>,
    pub od_pairs: Vec<OdPair>,
    pub paths: Vec<Path>,
    pub inverse_demand: InverseDemand,
    pub arrival_penalty: ArrivalPenalty,
    /// Optional upper bounds on each OD demand, ordered like `od_pairs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub demand_caps: Option<Vec<f64>>,
}

/// An immutable, validated problem statement.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    doc: ScenarioDocument,
    path_links: Vec<Vec<usize>>,
    path_od: Vec<usize>,
    set: FeasibleSet,
}

impl Scenario {
    pub fn from_document(mut doc: ScenarioDocument) -> Result<Self> {
        let grid = doc.grid;

        let nodes = unique_ids("nodes", doc.nodes.iter().map(String::as_str))?;
        let link_index = unique_ids("links", doc.links.iter().map(|l| l.id.as_str()))?;
        let od_index = unique_ids("od_pairs", doc.od_pairs.iter().map(|o| o.id.as_str()))?;
        unique_ids("paths", doc.paths.iter().map(|p| p.id.as_str()))?;

        if doc.od_pairs.is_empty() {
            return Err(Error::scenario("od_pairs", "at least one OD pair is required"));
        }
        if doc.paths.is_empty() {
            return Err(Error::scenario("paths", "at least one path is required"));
        }

        for (i, link) in doc.links.iter().enumerate() {
            let field = format!("links[{i}]");
            link.validate(&field)?;
            for (end, node) in [("from", &link.from), ("to", &link.to)] {
                if !nodes.contains_key(node.as_str()) {
                    return Err(Error::scenario(
                        format!("{field}.{end}"),
                        format!("unknown node `{node}`"),
                    ));
                }
            }
        }
        for (i, od) in doc.od_pairs.iter().enumerate() {
            for (end, node) in [("origin", &od.origin), ("destination", &od.destination)] {
                if !nodes.contains_key(node.as_str()) {
                    return Err(Error::scenario(
                        format!("od_pairs[{i}].{end}"),
                        format!("unknown node `{node}`"),
                    ));
                }
            }
            if od.origin == od.destination {
                return Err(Error::scenario(
                    format!("od_pairs[{i}]"),
                    "origin and destination coincide",
                ));
            }
        }

        let mut path_links = Vec::with_capacity(doc.paths.len());
        let mut path_od = Vec::with_capacity(doc.paths.len());
        let mut od_paths = vec![Vec::new(); doc.od_pairs.len()];
        for (p, path) in doc.paths.iter().enumerate() {
            let field = format!("paths[{p}]");
            let &w = od_index.get(path.od.as_str()).ok_or_else(|| {
                Error::scenario(format!("{field}.od"), format!("unknown OD pair `{}`", path.od))
            })?;
            if path.links.is_empty() {
                return Err(Error::scenario(format!("{field}.links"), "path has no links"));
            }
            let mut idx = Vec::with_capacity(path.links.len());
            let mut used = HashSet::new();
            for (j, id) in path.links.iter().enumerate() {
                let &a = link_index.get(id.as_str()).ok_or_else(|| {
                    Error::scenario(format!("{field}.links[{j}]"), format!("dangling link `{id}`"))
                })?;
                if !used.insert(a) {
                    return Err(Error::scenario(
                        format!("{field}.links[{j}]"),
                        format!("link `{id}` repeats within the path"),
                    ));
                }
                if let Some(&prev) = idx.last() {
                    let prev: &Link = &doc.links[prev];
                    if prev.to != doc.links[a].from {
                        return Err(Error::scenario(
                            format!("{field}.links[{j}]"),
                            format!("`{}` ends at `{}` but `{id}` starts at `{}`", prev.id, prev.to, doc.links[a].from),
                        ));
                    }
                }
                idx.push(a);
            }
            let od = &doc.od_pairs[w];
            let first = &doc.links[idx[0]];
            let last = &doc.links[*idx.last().unwrap()];
            if first.from != od.origin || last.to != od.destination {
                return Err(Error::scenario(
                    format!("{field}.links"),
                    format!(
                        "path runs {} -> {} but OD `{}` is {} -> {}",
                        first.from, last.to, od.id, od.origin, od.destination
                    ),
                ));
            }
            od_paths[w].push(p);
            path_od.push(w);
            path_links.push(idx);
        }
        for (w, paths) in od_paths.iter().enumerate() {
            if paths.is_empty() {
                return Err(Error::scenario(
                    format!("od_pairs[{w}]"),
                    format!("OD pair `{}` has no path", doc.od_pairs[w].id),
                ));
            }
        }

        doc.inverse_demand = order_inverse_demand(doc.inverse_demand, &doc.od_pairs)?;
        doc.inverse_demand.validate()?;
        doc.arrival_penalty.validate(grid.tf())?;

        if let Some(caps) = &doc.demand_caps {
            if caps.len() != doc.od_pairs.len() {
                return Err(Error::scenario(
                    "demand_caps",
                    format!("{} caps for {} OD pairs", caps.len(), doc.od_pairs.len()),
                ));
            }
            if let Some(i) = caps.iter().position(|c| !(c.is_finite() && *c > 0.0)) {
                return Err(Error::scenario(format!("demand_caps[{i}]"), "must be finite and positive"));
            }
        }

        let set = FeasibleSet::new(grid, od_paths)?;
        Ok(Scenario {
            doc,
            path_links,
            path_od,
            set,
        })
    }

    pub fn document(&self) -> &ScenarioDocument {
        &self.doc
    }

    pub fn name(&self) -> &str {
        &self.doc.name
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.doc.grid
    }

    pub fn nodes(&self) -> &[String] {
        &self.doc.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.doc.links
    }

    pub fn od_pairs(&self) -> &[OdPair] {
        &self.doc.od_pairs
    }

    pub fn paths(&self) -> &[Path] {
        &self.doc.paths
    }

    pub fn inverse_demand(&self) -> &InverseDemand {
        &self.doc.inverse_demand
    }

    pub fn penalty(&self) -> &ArrivalPenalty {
        &self.doc.arrival_penalty
    }

    /// Link indices of each path, in travel order.
    pub fn path_links(&self) -> &[Vec<usize>] {
        &self.path_links
    }

    pub fn path_od(&self) -> &[usize] {
        &self.path_od
    }

    pub fn feasible_set(&self) -> &FeasibleSet {
        &self.set
    }

    /// Explicit caps if given, otherwise the demand at which each inverse demand line hits zero.
    pub fn demand_caps(&self) -> Option<Vec<f64>> {
        match &self.doc.demand_caps {
            Some(c) => Some(c.clone()),
            None => self.doc.inverse_demand.zero_cost_demand().map(|a| a.to_vec()),
        }
    }

    /// Free-flow traversal time of each path (h).
    pub fn free_flow_times(&self) -> Vec<f64> {
        self.path_links
            .iter()
            .map(|links| links.iter().map(|&a| self.doc.links[a].free_flow_time()).sum())
            .collect()
    }

    /// Same scenario with paths reordered; `order[i]` is the old index of new path `i`.
    pub fn with_path_order(&self, order: &[usize]) -> Result<Scenario> {
        let mut doc = self.doc.clone();
        doc.paths = order
            .iter()
            .map(|&i| {
                self.doc
                    .paths
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Dimension(format!("path index {i} out of range")))
            })
            .collect::<Result<_>>()?;
        Scenario::from_document(doc)
    }
}

fn unique_ids<'a>(
    field: &str,
    ids: impl Iterator<Item = &'a str>,
) -> Result<HashMap<&'a str, usize>> {
    let mut map = HashMap::new();
    for (i, id) in ids.enumerate() {
        if map.insert(id, i).is_some() {
            return Err(Error::scenario(format!("{field}[{i}].id"), format!("duplicate id `{id}`")));
        }
    }
    Ok(map)
}

fn order_inverse_demand(theta: InverseDemand, ods: &[OdPair]) -> Result<InverseDemand> {
    match theta {
        InverseDemand::Affine(lines) => {
            let mut by_od: HashMap<String, AffineLine> = HashMap::new();
            for (i, l) in lines.into_iter().enumerate() {
                if by_od.contains_key(&l.od) {
                    return Err(Error::scenario(
                        format!("inverse_demand.affine[{i}].od"),
                        format!("second line for OD `{}`", l.od),
                    ));
                }
                by_od.insert(l.od.clone(), l);
            }
            let ordered = ods
                .iter()
                .map(|od| {
                    by_od.remove(&od.id).ok_or_else(|| {
                        Error::scenario("inverse_demand.affine", format!("no line for OD `{}`", od.id))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            if let Some(extra) = by_od.keys().next() {
                return Err(Error::scenario(
                    "inverse_demand.affine",
                    format!("line for unknown OD `{extra}`"),
                ));
            }
            Ok(InverseDemand::Affine(ordered))
        }
    }
}
