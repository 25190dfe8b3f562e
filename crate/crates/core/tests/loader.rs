use ndarray::Array2;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edue_core::bundled::{seven_arc, sioux_falls};
use edue_core::loader::{delay_operator, load_network};
use edue_core::reference::{capacity_excess, conservation_error, fifo_violation};
use edue_core::{
    AffineLine, ArrivalPenalty, InverseDemand, Link, OdPair, Path, Scenario, ScenarioDocument, TimeGrid,
};

fn link(id: &str, from: &str, to: &str, length: f64, capacity: f64) -> Link {
    Link {
        id: id.into(),
        from: from.into(),
        to: to.into(),
        length,
        free_flow_speed: 60.0,
        backward_wave_speed: 20.0,
        jam_density: 200.0,
        flow_capacity: capacity,
    }
}

/// Three links of 1, 2 and 3 km in series: six minutes at free flow.
fn corridor() -> Scenario {
    Scenario::from_document(ScenarioDocument {
        name: "corridor".into(),
        grid: TimeGrid::new(0.0, 1.0, 60).unwrap(),
        nodes: vec!["a".into(), "b".into(), "c".into(), "d".into()],
        links: vec![
            link("ab", "a", "b", 1.0, 2000.0),
            link("bc", "b", "c", 2.0, 2000.0),
            link("cd", "c", "d", 3.0, 2000.0),
        ],
        od_pairs: vec![OdPair {
            id: "a-d".into(),
            origin: "a".into(),
            destination: "d".into(),
        }],
        paths: vec![Path {
            id: "only".into(),
            od: "a-d".into(),
            links: vec!["ab".into(), "bc".into(), "cd".into()],
        }],
        inverse_demand: InverseDemand::Affine(vec![AffineLine {
            od: "a-d".into(),
            intercept: 1.0,
            slope: 0.001,
        }]),
        arrival_penalty: ArrivalPenalty {
            target_arrival: 0.5,
            early_slope: 0.5,
            late_slope: 2.0,
        },
        demand_caps: None,
    })
    .unwrap()
}

fn random_profile(scenario: &Scenario, peak: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = scenario.grid().n_steps();
    Array2::from_shape_fn((scenario.paths().len(), n), |_| {
        if rng.gen_bool(0.5) {
            rng.gen_range(0.0..peak)
        } else {
            0.0
        }
    })
}

fn check_physics(scenario: &Scenario, h: &Array2<f64>) -> Result<(), TestCaseError> {
    let (curves, d) = load_network(h, scenario).unwrap();
    prop_assert!(fifo_violation(&curves) <= 1e-9, "fifo {}", fifo_violation(&curves));
    prop_assert!(conservation_error(&curves) <= 1e-6, "conservation {}", conservation_error(&curves));
    prop_assert!(capacity_excess(&curves) <= 1e-12, "capacity {}", capacity_excess(&curves));
    // Exits are ordered like departures, up to one step.
    let dt = scenario.grid().dt();
    for p in 0..d.nrows() {
        for k in 1..d.ncols() {
            let earlier = (k - 1) as f64 * dt + d[[p, k - 1]];
            let later = k as f64 * dt + d[[p, k]];
            prop_assert!(later + dt >= earlier - 1e-9, "path {p} step {k}: {earlier} then {later}");
        }
    }
    Ok(())
}

#[test]
fn free_flow_delay_is_exact() {
    let s = corridor();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let h = random_profile(&s, 500.0, &mut rng);
        let field = delay_operator(&h, &s).unwrap();
        for &v in field.d.iter() {
            assert!((v - 0.1).abs() <= 1e-9, "{v}");
        }
    }
}

#[test]
fn empty_network_has_free_flow_delay() {
    let s = seven_arc().unwrap();
    let h = Array2::zeros((3, s.grid().n_steps()));
    let field = delay_operator(&h, &s).unwrap();
    // p1: 1 + 3 + 1 + 1 km, p2: 1 + 1 + 2 + 1 + 1 km, p3: 1 + 1 + 4 + 1 km, at 60 km/h
    for (p, minutes) in [6.0, 6.0, 7.0].into_iter().enumerate() {
        for k in 0..s.grid().n_steps() {
            assert!((field.d[[p, k]] - minutes / 60.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn bottleneck_caps_throughput() {
    let s = corridor();
    let mut h = Array2::zeros((1, 60));
    h.row_mut(0).fill(4000.0);
    let (curves, d) = load_network(&h, &s).unwrap();
    assert!(capacity_excess(&curves) <= 1e-12);
    // Twice the capacity for an hour leaves the last vehicles about half an hour late.
    assert!(d[[0, 59]] > 0.4, "{}", d[[0, 59]]);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn seven_arc_physics(seed in any::<u64>(), peak in 10.0f64..6000.0) {
        let s = seven_arc().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_profile(&s, peak, &mut rng);
        check_physics(&s, &h)?;
    }

    #[test]
    fn corridor_physics(seed in any::<u64>(), peak in 10.0f64..6000.0) {
        let s = corridor();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_profile(&s, peak, &mut rng);
        check_physics(&s, &h)?;
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(6))]

    #[test]
    fn sioux_falls_physics(seed in any::<u64>(), peak in 5.0f64..200.0) {
        let s = sioux_falls().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = random_profile(&s, peak, &mut rng);
        check_physics(&s, &h)?;
    }
}
