use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use edue_bench::scenario_with_start;
use edue_core::bundled::{seven_arc, sioux_falls};
use edue_core::loader::delay_operator;
use edue_core::solvers::projection_solve;
use edue_core::vi::project_onto_feasible;
use edue_core::{Method, Operator, SolverConfig, TrafficOperator};

fn loading(c: &mut Criterion) {
    for (name, s) in [("seven-arc", seven_arc()), ("sioux-falls", sioux_falls())] {
        let (s, x) = scenario_with_start(s.unwrap());
        c.bench_function(&format!("load/{name}"), |b| {
            b.iter(|| delay_operator(black_box(&x.flow), &s).unwrap())
        });
    }
}

fn projection(c: &mut Criterion) {
    for (name, s) in [("seven-arc", seven_arc()), ("sioux-falls", sioux_falls())] {
        let (s, x) = scenario_with_start(s.unwrap());
        let fx = TrafficOperator::new(&s).eval(&x).unwrap().into_point();
        let y = x.add_scaled(-0.5, &fx);
        c.bench_function(&format!("project/{name}"), |b| {
            b.iter(|| project_onto_feasible(black_box(&y), s.feasible_set()).unwrap())
        });
    }
}

fn iteration(c: &mut Criterion) {
    let (s, x) = scenario_with_start(seven_arc().unwrap());
    let op = TrafficOperator::new(&s);
    let mut cfg = SolverConfig::for_method(Method::Projection);
    cfg.max_iters = 1;
    c.bench_function("projection-iteration/seven-arc", |b| {
        b.iter(|| projection_solve(black_box(&x), &op, s.feasible_set(), &cfg).unwrap())
    });
}

criterion_group!(benches, loading, projection, iteration);
criterion_main!(benches);
