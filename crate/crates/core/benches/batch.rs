use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use constxr::abel::{abel_forward_grid, synthesize_constant};
use constxr::metric::RadialProfile;
use constxr::xray2d::{ball_density, line_integrals, LineParam, SupportFunction};
use constxr::Execution;

fn modes() -> [(&'static str, Execution); 2] {
    [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)]
}

fn forward_transform(c: &mut Criterion) {
    let profile = RadialProfile::gaussian();
    let f = synthesize_constant(&profile).unwrap();
    let ss: Vec<f64> = (0..256).map(|k| (k as f64 + 0.5) / 256.0).collect();
    let mut group = c.benchmark_group("abel_forward_grid");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| abel_forward_grid(exec, &f, &profile, black_box(&ss)).unwrap())
        });
    }
    group.finish();
}

fn planar_chords(c: &mut Criterion) {
    let dom = SupportFunction::disc([0.1, -0.2], 1.3, 256).unwrap();
    let density = ball_density(2, &[0.1, -0.2], 1.3).unwrap();
    let lines: Vec<LineParam> = (0..2048)
        .map(|k| {
            let theta = k as f64 * 0.618_033_988_749_895 * std::f64::consts::TAU;
            let p = 1.2 * ((k % 97) as f64 / 48.0 - 1.0);
            LineParam::new(p, theta)
        })
        .collect();
    let mut group = c.benchmark_group("line_integrals");
    for (name, exec) in modes() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| line_integrals(exec, &density, &dom, black_box(&lines), 1e-10).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, forward_transform, planar_chords);
criterion_main!(benches);
