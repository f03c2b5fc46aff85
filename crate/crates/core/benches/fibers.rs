use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use strposet::bits::IdxSet;
use strposet::models::{affine_plane_fragment, random_fragment, GeneratorParams};
use strposet::reconstruction::{roundtrip, RoundTripOptions};
use strposet::structure::enumerate_fiber;
use strposet::{Exec, PosetFragment};

fn modes() -> Vec<(&'static str, Exec)> {
    let mut v = vec![("sequential", Exec::Sequential)];
    if Exec::parallel_available() {
        v.push(("parallel", Exec::Parallel));
    }
    v
}

fn planted() -> PosetFragment {
    random_fragment(&GeneratorParams {
        n1: 24,
        n2: 5,
        planted_pairs_per_point: 3,
        pairwise_cap: 3,
        seed: 1,
        ..Default::default()
    })
    .unwrap()
}

fn fibers(c: &mut Criterion) {
    let f = planted();
    let b = IdxSet::from([0]);
    let mut g = c.benchmark_group("enumerate_fiber");
    g.sample_size(10);
    for (name, exec) in modes() {
        g.bench_with_input(BenchmarkId::new(name, "random24x5"), &exec, |bench, &exec| {
            bench.iter(|| enumerate_fiber(&f, &b, &f.curves(), 3, exec).unwrap().len())
        });
    }
    g.finish();
}

fn roundtrips(c: &mut Criterion) {
    let cases = [("random24x5", planted()), ("affine3x1", affine_plane_fragment(3, 1).unwrap())];
    let mut g = c.benchmark_group("roundtrip");
    g.sample_size(10);
    for (label, f) in &cases {
        for (name, exec) in modes() {
            g.bench_with_input(BenchmarkId::new(name, label), &exec, |bench, &exec| {
                bench.iter(|| {
                    roundtrip(f, &RoundTripOptions { seed: 3, ..Default::default() }, exec)
                        .unwrap()
                        .recovered
                })
            });
        }
    }
    g.finish();
}

criterion_group!(benches, fibers, roundtrips);
criterion_main!(benches);
