use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use lensirs::channel::synth_channel_set;
use lensirs::harness::{alternating_optimize, AlternatingOptions};
use lensirs::par;
use lensirs::system::Scenario;

fn seeds_sweep(c: &mut Criterion) {
    let mut s = Scenario::desk().with_users(2);
    s.n_elements = 8;
    let seeds: Vec<u64> = (0..8).collect();
    let opts = AlternatingOptions::default();
    let mut group = c.benchmark_group("alternating_over_seeds");
    group.sample_size(10);
    let modes: &[(&str, bool)] = if par::parallel_available() {
        &[("sequential", false), ("parallel", true)]
    } else {
        &[("sequential", false)]
    };
    for &(name, parallel) in modes {
        group.bench_with_input(BenchmarkId::new(name, seeds.len()), &parallel, |b, &parallel| {
            b.iter(|| {
                par::map(&seeds, parallel, |&seed| {
                    let ch = synth_channel_set(&s, seed).unwrap();
                    black_box(alternating_optimize(&ch, &s, &opts).unwrap().trace.len())
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, seeds_sweep);
criterion_main!(benches);
