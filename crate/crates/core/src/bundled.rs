//! Test networks shipped with the crate.

use crate::error::Result;
use crate::io::parse_scenario;
use crate::model::{
    AffineLine, ArrivalPenalty, InverseDemand, Link, OdPair, Path, Scenario, ScenarioDocument, TimeGrid,
};
use crate::paths::{k_shortest_paths, Arc};

pub const SEVEN_ARC_JSON: &str = include_str!("../scenarios/seven_arc.json");
pub const SIOUX_FALLS_JSON: &str = include_str!("../scenarios/sioux_falls.json");

/// One OD pair, three paths over seven links.
pub fn seven_arc() -> Result<Scenario> {
    parse_scenario(SEVEN_ARC_JSON)
}

/// Six OD pairs into node 20 with 119 frozen paths.
pub fn sioux_falls() -> Result<Scenario> {
    parse_scenario(SIOUX_FALLS_JSON)
}

/// Standard Sioux Falls links: `(from, to, capacity veh/h, free-flow minutes)`.
const SIOUX_FALLS_LINKS: [(u8, u8, f64, f64); 76] = [
    (1, 2, 25900.20064, 6.0),
    (1, 3, 23403.47319, 4.0),
    (2, 1, 25900.20064, 6.0),
    (2, 6, 4958.180928, 5.0),
    (3, 1, 23403.47319, 4.0),
    (3, 4, 17110.52372, 4.0),
    (3, 12, 23403.47319, 4.0),
    (4, 3, 17110.52372, 4.0),
    (4, 5, 17782.7941, 2.0),
    (4, 11, 4908.82673, 6.0),
    (5, 4, 17782.7941, 2.0),
    (5, 6, 4948.088872, 4.0),
    (5, 9, 10000.0, 5.0),
    (6, 2, 4958.180928, 5.0),
    (6, 5, 4948.088872, 4.0),
    (6, 8, 4898.588089, 2.0),
    (7, 8, 7841.81131, 3.0),
    (7, 18, 23403.47319, 2.0),
    (8, 6, 4898.588089, 2.0),
    (8, 7, 7841.81131, 3.0),
    (8, 9, 5050.193156, 10.0),
    (8, 16, 5045.822583, 5.0),
    (9, 5, 10000.0, 5.0),
    (9, 8, 5050.193156, 10.0),
    (9, 10, 13915.78842, 3.0),
    (10, 9, 13915.78842, 3.0),
    (10, 11, 10000.0, 5.0),
    (10, 15, 13512.00155, 6.0),
    (10, 16, 4854.917717, 4.0),
    (10, 17, 4993.510694, 8.0),
    (11, 4, 4908.82673, 6.0),
    (11, 10, 10000.0, 5.0),
    (11, 12, 4908.82673, 6.0),
    (11, 14, 4876.508287, 4.0),
    (12, 3, 23403.47319, 4.0),
    (12, 11, 4908.82673, 6.0),
    (12, 13, 25900.20064, 3.0),
    (13, 12, 25900.20064, 3.0),
    (13, 24, 5091.256152, 4.0),
    (14, 11, 4876.508287, 4.0),
    (14, 15, 5127.526119, 5.0),
    (14, 23, 4924.790605, 4.0),
    (15, 10, 13512.00155, 6.0),
    (15, 14, 5127.526119, 5.0),
    (15, 19, 14564.75315, 3.0),
    (15, 22, 9599.180565, 3.0),
    (16, 8, 5045.822583, 5.0),
    (16, 10, 4854.917717, 4.0),
    (16, 17, 5229.910063, 2.0),
    (16, 18, 19679.89671, 3.0),
    (17, 10, 4993.510694, 8.0),
    (17, 16, 5229.910063, 2.0),
    (17, 19, 4823.950831, 2.0),
    (18, 7, 23403.47319, 2.0),
    (18, 16, 19679.89671, 3.0),
    (18, 20, 23403.47319, 4.0),
    (19, 15, 14564.75315, 3.0),
    (19, 17, 4823.950831, 2.0),
    (19, 20, 5002.607563, 4.0),
    (20, 18, 23403.47319, 4.0),
    (20, 19, 5002.607563, 4.0),
    (20, 21, 5059.91234, 6.0),
    (20, 22, 5075.697193, 5.0),
    (21, 20, 5059.91234, 6.0),
    (21, 22, 5229.910063, 2.0),
    (21, 24, 4885.357564, 3.0),
    (22, 15, 9599.180565, 3.0),
    (22, 20, 5075.697193, 5.0),
    (22, 21, 5229.910063, 2.0),
    (22, 23, 5000.0, 4.0),
    (23, 14, 4924.790605, 4.0),
    (23, 22, 5000.0, 4.0),
    (23, 24, 5078.508436, 2.0),
    (24, 13, 5091.256152, 4.0),
    (24, 21, 4885.357564, 3.0),
    (24, 23, 5078.508436, 2.0),
];

const SF_FREE_FLOW_SPEED: f64 = 60.0;
const SF_BACKWARD_WAVE_SPEED: f64 = 20.0;
const SF_JAM_DENSITY: f64 = 200.0;
/// Published capacities are scaled down so the desk-sized demand congests.
const SF_CAPACITY_SCALE: f64 = 0.1;
const SF_DESTINATION: u8 = 20;
/// `(origin, path count)`; the counts add up to 119.
const SF_ORIGINS: [(u8, usize); 6] = [(1, 20), (2, 20), (3, 20), (4, 20), (5, 20), (6, 19)];

/// Builds the Sioux Falls document from the link table, enumerating each
/// OD's paths by free-flow time. The bundled file is this output, frozen.
pub fn build_sioux_falls() -> Result<ScenarioDocument> {
    let nodes: Vec<String> = (1..=24).map(|n| n.to_string()).collect();
    let links: Vec<Link> = SIOUX_FALLS_LINKS
        .iter()
        .map(|&(from, to, cap, minutes)| {
            let capacity = cap * SF_CAPACITY_SCALE;
            Link {
                id: format!("{from}-{to}"),
                from: from.to_string(),
                to: to.to_string(),
                length: minutes * SF_FREE_FLOW_SPEED / 60.0,
                free_flow_speed: SF_FREE_FLOW_SPEED,
                backward_wave_speed: SF_BACKWARD_WAVE_SPEED,
                jam_density: SF_JAM_DENSITY,
                flow_capacity: capacity,
            }
        })
        .collect();
    let arcs: Vec<Arc> = SIOUX_FALLS_LINKS
        .iter()
        .map(|&(from, to, _, minutes)| Arc {
            from: from as usize - 1,
            to: to as usize - 1,
            cost: minutes,
        })
        .collect();
    let mut od_pairs = Vec::new();
    let mut paths = Vec::new();
    let mut lines = Vec::new();
    for &(origin, count) in &SF_ORIGINS {
        let od = format!("{origin}-{SF_DESTINATION}");
        let routes = k_shortest_paths(24, &arcs, origin as usize - 1, SF_DESTINATION as usize - 1, count)?;
        for (i, r) in routes.iter().enumerate() {
            paths.push(Path {
                id: format!("{od}:{}", i + 1),
                od: od.clone(),
                links: r.arcs.iter().map(|&a| links[a].id.clone()).collect(),
            });
        }
        lines.push(AffineLine {
            od: od.clone(),
            intercept: 1.6,
            slope: 1.0 / 500.0,
        });
        od_pairs.push(OdPair {
            id: od,
            origin: origin.to_string(),
            destination: SF_DESTINATION.to_string(),
        });
    }
    Ok(ScenarioDocument {
        name: "sioux-falls".into(),
        grid: TimeGrid::new(0.0, 2.0, 120)?,
        nodes,
        links,
        od_pairs,
        paths,
        inverse_demand: InverseDemand::Affine(lines),
        arrival_penalty: ArrivalPenalty {
            target_arrival: 1.25,
            early_slope: 0.5,
            late_slope: 2.0,
        },
        demand_caps: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seven_arc_shape() {
        let s = seven_arc().unwrap();
        assert_eq!(s.od_pairs().len(), 1);
        assert_eq!(s.paths().len(), 3);
        assert_eq!(s.links().len(), 7);
    }

    #[test]
    fn sioux_falls_shape() {
        let s = sioux_falls().unwrap();
        assert_eq!(s.od_pairs().len(), 6);
        assert_eq!(s.paths().len(), 119);
        assert_eq!(s.links().len(), 76);
    }

    #[test]
    fn frozen_sioux_falls_matches_builder() {
        let frozen: ScenarioDocument = serde_json::from_str(SIOUX_FALLS_JSON).unwrap();
        assert_eq!(frozen, build_sioux_falls().unwrap());
    }
}
