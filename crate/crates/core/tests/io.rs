use proptest::prelude::*;

use edue_core::bundled::{seven_arc, sioux_falls};
use edue_core::diagnostics::{gap_trace_export, read_gap_trace};
use edue_core::io::{
    parse_final_point, parse_flow_profile, parse_scenario, read_scenario, scenario_point_csv, scenario_to_json,
    write_atomic,
};
use edue_core::solvers::solve_scenario;
use edue_core::{ExtendedPoint, Method, SolverConfig};

#[test]
fn scenario_json_round_trips() {
    for s in [seven_arc().unwrap(), sioux_falls().unwrap()] {
        let text = scenario_to_json(&s).unwrap();
        let back = parse_scenario(&text).unwrap();
        assert_eq!(back.document(), s.document());
        assert_eq!(scenario_to_json(&back).unwrap(), text);
    }
}

#[test]
fn scenario_file_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("seven.json");
    let s = seven_arc().unwrap();
    write_atomic(&path, scenario_to_json(&s).unwrap().as_bytes()).unwrap();
    assert_eq!(read_scenario(&path).unwrap().document(), s.document());
}

#[test]
fn malformed_scenarios_are_rejected() {
    assert!(parse_scenario("{").is_err());
    let mut doc: serde_json::Value = serde_json::from_str(edue_core::bundled::SEVEN_ARC_JSON).unwrap();
    doc["paths"][0]["links"][0] = "nowhere".into();
    assert!(parse_scenario(&doc.to_string()).is_err());
}

#[test]
fn final_point_feeds_the_loader() {
    let s = seven_arc().unwrap();
    let x = edue_core::solvers::initial_point(s.feasible_set());
    let bytes = scenario_point_csv(&x, &s).unwrap();
    let h = parse_flow_profile(&bytes, &s).unwrap();
    assert_eq!(h, x.flow);
}

#[test]
fn gap_trace_round_trips() {
    let s = seven_arc().unwrap();
    let mut cfg = SolverConfig::for_method(Method::Projection);
    cfg.max_iters = 5;
    let h = solve_scenario(&s, &cfg).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("trace.csv");
    let labels = vec!["1-6".to_string()];
    gap_trace_export(&h, &labels, &path).unwrap();
    let t = read_gap_trace(&path).unwrap();
    assert_eq!(t.od_labels, labels);
    assert_eq!(t.iterations.len(), 5);
    for (i, r) in h.records.iter().enumerate() {
        assert_eq!(t.iterations[i], r.iteration);
        assert_eq!(t.gaps[i].to_bits(), r.gap.to_bits());
        assert_eq!(t.demand[i], r.demand);
        assert_eq!(t.avg_cost[i], r.avg_cost);
    }
}

proptest! {
    #[test]
    fn point_csv_is_bit_exact(
        flow in prop::collection::vec(prop::num::f64::NORMAL | prop::num::f64::ZERO | prop::num::f64::SUBNORMAL, 6),
        demand in prop::collection::vec(prop::num::f64::ANY.prop_filter("finite", |v| v.is_finite()), 2),
    ) {
        let x = ExtendedPoint::new(
            ndarray::Array2::from_shape_vec((2, 3), flow).unwrap(),
            ndarray::Array1::from(demand),
        );
        let paths = vec!["a".to_string(), "b,c".to_string()];
        let ods = vec!["w\"1".to_string(), "w2".to_string()];
        let bytes = edue_core::io::final_point_csv(&x, &paths, &ods).unwrap();
        let back = parse_final_point(&bytes).unwrap();
        prop_assert_eq!(back.path_ids, paths);
        prop_assert_eq!(back.od_ids, ods);
        for (a, b) in back.point.flow.iter().zip(x.flow.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
        for (a, b) in back.point.demand.iter().zip(x.demand.iter()) {
            prop_assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
