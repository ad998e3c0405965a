//! Data-parallel against single-threaded execution.
//!
//! `cargo bench` runs each workload inside a one-thread rayon pool and inside
//! the default pool. `cargo bench --no-default-features` builds the plain
//! sequential code path and times it alone.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use lsfts::experiments::{BandwidthRule, EigenRateSpec, ExperimentSpec};
use lsfts::kernels::BandwidthMode;
use lsfts::simulate::{simulate_lsfts, ComponentModel, Path, SimConfig};
use lsfts::{longrun_cov, make_uniform_grid, FunctionalSeries, LagWindowKernel, LocalSmoother};

fn model() -> SimConfig {
    SimConfig::new(vec![
        ComponentModel { a: Path::linear(0.2, 0.6), sigma: Path::constant(1.0) },
        ComponentModel { a: Path::constant(0.3), sigma: Path::constant(0.5) },
        ComponentModel { a: Path::constant(-0.2), sigma: Path::constant(0.3) },
    ])
    .with_seed(1)
}

fn series() -> FunctionalSeries {
    let grid = make_uniform_grid(51, 1).unwrap();
    simulate_lsfts(&model(), 20_000, &grid).unwrap()
}

fn replicate_batch() -> ExperimentSpec {
    ExperimentSpec::EigenRate(EigenRateSpec {
        model: model(),
        u: 0.5,
        t_ladder: vec![500, 1000],
        replicates: 32,
        grid_points: 21,
        h: BandwidthRule::Rate(BandwidthMode::Estimation),
        center: false,
        kernel: Default::default(),
    })
}

type Workload = Box<dyn Fn() + Send + Sync>;

fn workloads() -> Vec<(&'static str, Workload)> {
    let x = series();
    let sm = LocalSmoother::epanechnikov(0.3).unwrap();
    let spec = replicate_batch();
    vec![
        (
            "longrun_cov/T=20000,n=51,b=30",
            Box::new(move || {
                black_box(longrun_cov(&x, 0.5, &sm, 30.0, LagWindowKernel::Bartlett).unwrap());
            }),
        ),
        (
            "eigen_rate_replicates/64",
            Box::new(move || {
                black_box(spec.run().unwrap());
            }),
        ),
    ]
}

#[cfg(feature = "parallel")]
fn compare(c: &mut Criterion) {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let default = rayon::ThreadPoolBuilder::new().build().unwrap();
    for (name, work) in workloads() {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        group.bench_function("threads=1", |b| b.iter(|| single.install(&work)));
        let label = format!("default_pool({} threads)", default.current_num_threads());
        group.bench_function(label, |b| b.iter(|| default.install(&work)));
        group.finish();
    }
}

#[cfg(not(feature = "parallel"))]
fn compare(c: &mut Criterion) {
    for (name, work) in workloads() {
        let mut group = c.benchmark_group(name);
        group.sample_size(10);
        group.bench_function("sequential", |b| b.iter(&work));
        group.finish();
    }
}

criterion_group!(benches, compare);
criterion_main!(benches);
