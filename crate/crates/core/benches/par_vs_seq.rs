//! Worker pool of one thread against the full pool on the lattice kernels
//! and a fixture batch. Build with `--no-default-features` for the plain
//! sequential path.

use std::f64::consts::TAU;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use gpwb::experiments::checks;
use gpwb::lattice::examples::assemble_example;
use gpwb::lattice::flow::{heat_flow, LatticeFlowOptions};
use gpwb::lattice::residual::pointwise_residual;
use gpwb::par;

fn workers() -> Vec<(&'static str, usize)> {
    vec![("one", 1), ("all", 0)]
}

fn residual(c: &mut Criterion) {
    let st = assemble_example(&checks::higgs_off_diagonal_fixture().to_example(32, 2.0)).unwrap();
    let mut g = c.benchmark_group("pointwise_residual_n32");
    for (name, w) in workers() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_workers(w, || pointwise_residual(&st).unwrap()))
        });
    }
    g.finish();
}

fn flow(c: &mut Criterion) {
    let st = assemble_example(&checks::vortex_params(32, 1, 2.0 * TAU)).unwrap();
    let opts = LatticeFlowOptions {
        max_iter: 5,
        ..LatticeFlowOptions::default()
    };
    let mut g = c.benchmark_group("heat_flow_5_steps_n32");
    g.sample_size(10);
    for (name, w) in workers() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| {
                let mut s = st.clone();
                par::with_workers(w, || heat_flow(&mut s, &opts).unwrap())
            })
        });
    }
    g.finish();
}

fn batch(c: &mut Criterion) {
    let mut g = c.benchmark_group("ssc_batch_20x200");
    g.sample_size(10);
    for (name, w) in workers() {
        g.bench_function(BenchmarkId::from_parameter(name), |b| {
            b.iter(|| par::with_workers(w, || checks::ssc_check(20, 200, 1).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, residual, flow, batch);
criterion_main!(benches);
