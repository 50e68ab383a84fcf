use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dwt_core::harness::{map_samples, resolve_threads};
use dwt_core::rng::SampleStreams;
use dwt_core::sim::{grow_profile_with, GrowOptions};
use dwt_core::WeightSpec;

fn batch(spec: &WeightSpec, n: u64, samples: u64, threads: usize) -> u64 {
    let opts = GrowOptions::default();
    map_samples(samples, threads, |i| {
        let mut s = SampleStreams::new(1, i);
        grow_profile_with(spec, n, &mut s.attach, &mut s.clock, &opts).unwrap().final_depth
    })
    .into_iter()
    .sum()
}

fn sequential_vs_parallel(c: &mut Criterion) {
    let threads = resolve_threads(None).max(2);
    let mut group = c.benchmark_group("depth_batch");
    group.sample_size(10);
    for (name, spec) in [
        ("constant", WeightSpec::constant(1.0).unwrap()),
        ("exponential_1.5", WeightSpec::exponential(1.5).unwrap()),
    ] {
        group.bench_with_input(BenchmarkId::new("sequential", name), &spec, |b, spec| {
            b.iter(|| batch(black_box(spec), 20_000, 64, 1))
        });
        group.bench_with_input(BenchmarkId::new(format!("parallel_{threads}"), name), &spec, |b, spec| {
            b.iter(|| batch(black_box(spec), 20_000, 64, threads))
        });
    }
    group.finish();
}

fn single_run(c: &mut Criterion) {
    let spec = WeightSpec::exponential(1.5).unwrap();
    c.bench_function("grow_profile_1e6", |b| {
        b.iter(|| {
            let mut s = SampleStreams::new(2, 0);
            grow_profile_with(&spec, 1_000_000, &mut s.attach, &mut s.clock, &GrowOptions::default()).unwrap().final_depth
        })
    });
}

criterion_group!(benches, sequential_vs_parallel, single_run);
criterion_main!(benches);
