use std::hint::black_box;

use cfsim_bench::{inputs, large_layers, small_layers};
use cfsim_core::{estimate, simulate, ArchConfig, Method};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn timing_model(c: &mut Criterion) {
    let arch = ArchConfig::baseline();
    let mut g = c.benchmark_group("estimate");
    for (name, spec) in large_layers() {
        for m in Method::ALL {
            g.bench_with_input(BenchmarkId::new(m.name(), name), &spec, |b, s| {
                b.iter(|| estimate(black_box(s), &arch, m).unwrap())
            });
        }
    }
    g.finish();
}

fn functional(c: &mut Criterion) {
    let arch = ArchConfig::baseline().with_array_size(16).with_word_elems(2);
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    for (name, spec) in small_layers() {
        let (x, f) = inputs(&spec);
        for m in Method::ALL {
            g.bench_with_input(BenchmarkId::new(m.name(), name), &spec, |b, s| {
                b.iter(|| simulate(black_box(&x), black_box(&f), s, &arch, m).unwrap())
            });
        }
    }
    g.finish();
}

criterion_group!(benches, timing_model, functional);
criterion_main!(benches);
