use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use edue_core::reference::{project_by_scan, random_feasible_point, random_free_point};
use edue_core::vi::{project_onto_feasible, solve_demand_scalar};
use edue_core::{check_feasible, distance, inner_product, ExtendedPoint, FeasibleSet, TimeGrid};

/// Random shape up to 3 paths per OD, 4 steps and 2 OD pairs.
fn random_set(rng: &mut ChaCha8Rng) -> FeasibleSet {
    let n_od = rng.gen_range(1..=2);
    let steps = rng.gen_range(1..=4);
    let tf = rng.gen_range(0.25..3.0);
    let mut next = 0;
    let od_paths = (0..n_od)
        .map(|_| {
            let k = rng.gen_range(1..=3);
            let ids = (next..next + k).collect();
            next += k;
            ids
        })
        .collect();
    FeasibleSet::new(TimeGrid::new(0.0, tf, steps).unwrap(), od_paths).unwrap()
}

fn setup(seed: u64) -> (FeasibleSet, ChaCha8Rng) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = random_set(&mut rng);
    (set, rng)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn output_is_feasible(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (set, mut rng) = setup(seed);
        let y = random_free_point(&set, scale, &mut rng);
        let p = project_onto_feasible(&y, &set).unwrap();
        prop_assert!(check_feasible(&p, &set, 1e-9).unwrap().feasible);
    }

    #[test]
    fn agrees_with_multiplier_scan(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (set, mut rng) = setup(seed);
        let y = random_free_point(&set, scale, &mut rng);
        let fast = project_onto_feasible(&y, &set).unwrap();
        let slow = project_by_scan(&y, &set);
        prop_assert!(distance(&fast, &slow, set.grid()) <= 1e-6, "{:?} vs {:?}", fast, slow);
    }

    #[test]
    fn idempotent_on_feasible_points(seed in any::<u64>(), q_max in 0.01f64..100.0) {
        let (set, mut rng) = setup(seed);
        let x = random_feasible_point(&set, q_max, &mut rng);
        let p = project_onto_feasible(&x, &set).unwrap();
        prop_assert!(distance(&p, &x, set.grid()) <= 1e-9);
    }

    #[test]
    fn non_expansive(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (set, mut rng) = setup(seed);
        let a = random_free_point(&set, scale, &mut rng);
        let b = random_free_point(&set, scale, &mut rng);
        let pa = project_onto_feasible(&a, &set).unwrap();
        let pb = project_onto_feasible(&b, &set).unwrap();
        let g = set.grid();
        prop_assert!(distance(&pa, &pb, g) <= distance(&a, &b, g) + 1e-9);
    }

    #[test]
    fn obtuse_angle_with_feasible_points(seed in any::<u64>(), scale in 0.01f64..100.0) {
        let (set, mut rng) = setup(seed);
        let y = random_free_point(&set, scale, &mut rng);
        let p = project_onto_feasible(&y, &set).unwrap();
        let x = random_feasible_point(&set, 2.0 * scale, &mut rng);
        let lhs = inner_product(&(&y - &p), &(&x - &p), set.grid()).unwrap();
        prop_assert!(lhs <= 1e-9 * (1.0 + scale * scale), "{lhs}");
    }

    #[test]
    fn scalar_root_balances(
        cells in prop::collection::vec(-50.0f64..50.0, 1..12),
        shift in -50.0f64..50.0,
        dt in 0.01f64..1.0,
    ) {
        let q = solve_demand_scalar(&cells, shift, dt).unwrap();
        prop_assert!(q >= 0.0);
        let phi: f64 = cells.iter().map(|&z| (z + shift - q).max(0.0)).sum::<f64>() * dt - q;
        let at_zero: f64 = cells.iter().map(|&z| (z + shift).max(0.0)).sum::<f64>() * dt;
        if at_zero <= 0.0 {
            prop_assert_eq!(q, 0.0);
        } else {
            prop_assert!(phi.abs() <= 1e-10, "phi {phi}");
        }
    }
}

#[test]
fn nonpositive_cells_give_exact_zero() {
    for shift in [0.0, -1.0, -1e-300] {
        assert_eq!(solve_demand_scalar(&[-2.0, -0.5, 0.0], shift, 0.25).unwrap(), 0.0);
    }
}

#[test]
fn projection_of_zero_mass_point() {
    let set = FeasibleSet::new(TimeGrid::new(0.0, 1.0, 3).unwrap(), vec![vec![0, 1]]).unwrap();
    let y = ExtendedPoint::new(ndarray::Array2::from_elem((2, 3), -1.0), ndarray::array![-1.0]);
    assert_eq!(project_onto_feasible(&y, &set).unwrap(), set.zero_point());
}
