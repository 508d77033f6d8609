use std::convert::Infallible;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use eotrack::eo::{self, Bounds, EoParams};
use eotrack::sequence::{self, Motion, SyntheticSpec, SyntheticTarget};
use eotrack::tracker::{self, TrackerConfig};

fn crowd(objects: usize) -> SyntheticSpec {
    let targets = (0..objects)
        .map(|i| SyntheticTarget {
            width: 30,
            height: 30,
            color: sequence::object_color(i),
            start: [10.0 + 45.0 * (i % 6) as f64, 10.0 + 60.0 * (i / 6) as f64],
            motion: Motion::Linear { velocity: [1.0, 1.0] },
            occluder: None,
        })
        .collect();
    SyntheticSpec { width: 320, height: 240, frames: 12, targets, ..SyntheticSpec::default() }
}

fn bench_tracking(c: &mut Criterion) {
    let mut group = c.benchmark_group("track_sequence");
    group.sample_size(10);
    for objects in [1, 4, 12] {
        let seq = sequence::generate_synthetic(&crowd(objects)).unwrap();
        for parallel in [false, true] {
            let config = TrackerConfig { rng_seed: Some(1), parallel, ..TrackerConfig::mot() };
            let label = if parallel { "parallel" } else { "sequential" };
            group.bench_with_input(BenchmarkId::new(label, objects), &seq, |b, seq| {
                b.iter(|| {
                    let frames = seq.frames.iter().cloned().map(Ok::<_, Infallible>);
                    tracker::track_sequence(frames, &seq.spec.objects, &config).unwrap()
                })
            });
        }
    }
    group.finish();
}

fn bench_optimizer(c: &mut Criterion) {
    let bounds = Bounds::uniform(2, -10.0, 10.0).unwrap();
    let params = EoParams {
        population_size: 16,
        max_iterations: 50,
        rng_seed: Some(1),
        ..EoParams::default()
    };
    c.bench_function("optimize_sphere_n16_it50", |b| {
        b.iter(|| eo::optimize(|x| x[0] * x[0] + x[1] * x[1], &params, &bounds, &[]).unwrap())
    });
}

criterion_group!(benches, bench_tracking, bench_optimizer);
criterion_main!(benches);
