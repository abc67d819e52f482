use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use semiretract::action::{bumped_reflection_action, estimate_uniform_lipschitz, LipschitzAction};
use semiretract::analysis::check_holder;
use semiretract::geometry::vector;
use semiretract::retraction::{build_retraction, verify_retraction};
use semiretract::semigroup::solve_left_invariant_mean;
use semiretract::{Exec, IndexSet, InvariantMean, Matrix, Mean};

fn setup() -> (LipschitzAction, Mean) {
    let refl = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
    let action = bumped_reflection_action(refl, 0.05, vector(&[0.6, 0.8]).unwrap(), 1.0).unwrap();
    let IndexSet::Finite(s) = action.index() else { unreachable!() };
    let InvariantMean::Feasible(mean) = solve_left_invariant_mean(s).unwrap() else {
        unreachable!()
    };
    (action, mean)
}

fn modes() -> Vec<(&'static str, Exec)> {
    let mut out = vec![("sequential", Exec::Sequential)];
    #[cfg(feature = "parallel")]
    out.push(("parallel", Exec::Parallel));
    out
}

fn bench_exec(c: &mut Criterion) {
    let (action, mean) = setup();
    let retraction = build_retraction(&action, &mean, 1e-10, None).unwrap();
    let k = action.declared_k();

    let mut group = c.benchmark_group("check_holder");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 1000), &exec, |b, &exec| {
            b.iter(|| check_holder(|x| retraction.apply(x), action.body(), k, 1000, 7, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("verify_retraction");
    group.sample_size(10);
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 200), &exec, |b, &exec| {
            b.iter(|| verify_retraction(&retraction, 200, 7, 1e-6, exec).unwrap())
        });
    }
    group.finish();

    let mut group = c.benchmark_group("estimate_uniform_lipschitz");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::new(name, 2000), &exec, |b, &exec| {
            b.iter(|| estimate_uniform_lipschitz(&action, 2000, 7, 2, exec).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, bench_exec);
criterion_main!(benches);
