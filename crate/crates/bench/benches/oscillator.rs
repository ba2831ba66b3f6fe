use std::sync::Arc;

use criterion::{criterion_group, criterion_main, Criterion};
use tdnls_core::oscillator::{build_derived, solve_fundamental, OscillatorModel, SigmaKind};

fn fundamental(c: &mut Criterion) {
    let sub = OscillatorModel::new(
        SigmaKind::SubQuadratic {
            amplitude: 0.5,
            decay_power: 3.0,
        },
        1.0,
        1.0,
    )
    .unwrap();
    c.bench_function("solve_fundamental/numeric/100", |b| b.iter(|| solve_fundamental(&sub, 100.0, 1e-12).unwrap()));
    let ex1 = OscillatorModel::attractive(3.0 / 16.0, 1.0).unwrap();
    c.bench_function("solve_fundamental/closed_form/1e4", |b| b.iter(|| solve_fundamental(&ex1, 1e4, 1e-12).unwrap()));
    let pair = Arc::new(solve_fundamental(&ex1, 1e3, 1e-12).unwrap());
    c.bench_function("build_derived/y2_clock/1e3", |b| {
        b.iter(|| build_derived(Arc::clone(&pair), 1, 3.0, 1.0, 1e3).unwrap())
    });
}

criterion_group!(benches, fundamental);
criterion_main!(benches);
