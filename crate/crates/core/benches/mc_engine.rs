use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nplab::harness::mc::{map_reps, map_reps_sequential};
use nplab::quadratic_tests::{KappaFamily, QuadraticTest, TruncationRule};
use nplab::rng::StreamKey;
use nplab::{Basis, CoefficientVector, SequenceObservation};

const REPS: usize = 2000;

fn engine(c: &mut Criterion) {
    let fam = KappaFamily::new(
        0.25,
        3.0,
        1.0,
        1.0,
        TruncationRule::ScaleMultiple { multiple: 8.0 },
    )
    .unwrap();
    let mut group = c.benchmark_group("quadratic_rejections");
    group.sample_size(10);
    for n in [1024u64, 4096] {
        let w = fam.weights(n).unwrap();
        let test = QuadraticTest::new(&w, Basis::CosineHalf, 0.05).unwrap();
        let theta = CoefficientVector::zero(Basis::CosineHalf);
        let key = StreamKey::named(7, "bench");
        let init =
            || SequenceObservation::empty(Basis::CosineHalf, n, 1.0, w.truncation()).unwrap();
        let once = |obs: &mut SequenceObservation, r: u64| {
            obs.resample(&theta, &mut key.rng(r)).unwrap();
            test.decide(obs).reject
        };
        group.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, _| {
            b.iter(|| {
                map_reps(REPS, None, init, once)
                    .into_iter()
                    .filter(|&x| x)
                    .count()
            })
        });
        group.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, _| {
            b.iter(|| {
                map_reps_sequential(REPS, init, once)
                    .into_iter()
                    .filter(|&x| x)
                    .count()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, engine);
criterion_main!(benches);
