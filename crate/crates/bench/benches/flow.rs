use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use efl_core::{
    classify, flow, integrate, integrate_oracle, CurvatureSign, EventSpec, FlowConfig, IntegratorSettings,
};

fn bench_rhs(c: &mut Criterion) {
    let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, 1.3).unwrap();
    let state = flow::FlowState {
        t: 1.0,
        x: 0.7,
        y: 0.4,
        xp: 0.9,
        yp: 0.6,
    };
    c.bench_function("rhs n=4", |b| b.iter(|| flow::rhs(black_box(&cfg), black_box(&state))));
    c.bench_function("observables n=4", |b| {
        b.iter(|| flow::observables(black_box(&cfg), black_box(&state)))
    });
}

fn bench_integrate(c: &mut Criterion) {
    let events = EventSpec::default();
    let mut group = c.benchmark_group("integrate");
    for (name, sign, s, t_max) in [
        ("equilibrium s=1.3 t=50", CurvatureSign::Positive, 1.3, 50.0),
        ("recollapse s=3", CurvatureSign::Positive, 3.0, 50.0),
        ("negative s=2 t=50", CurvatureSign::Negative, 2.0, 50.0),
    ] {
        let cfg = FlowConfig::with_dimension(4, sign, s).unwrap();
        let settings = IntegratorSettings::with_horizon(t_max);
        group.bench_function(name, |b| b.iter(|| integrate(black_box(&cfg), &settings, &events)));
    }
    let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, 1.2).unwrap();
    group.sample_size(10);
    group.bench_function("rk4 oracle dt=1e-4 t=5", |b| {
        b.iter(|| integrate_oracle(black_box(&cfg), 1e-4, 5.0, 0.01, &events))
    });
    group.finish();
}

fn bench_classify(c: &mut Criterion) {
    let mut group = c.benchmark_group("classify");
    group.sample_size(20);
    for s in [0.74, 1.49] {
        let cfg = FlowConfig::with_dimension(4, CurvatureSign::Positive, s).unwrap();
        group.bench_function(format!("s={s} horizon 50"), |b| b.iter(|| classify(black_box(&cfg), 50.0)));
    }
    group.finish();
}

criterion_group!(benches, bench_rhs, bench_integrate, bench_classify);
criterion_main!(benches);
