use std::hint::black_box;

use classical_bell::{
    analytic_chsh, grid_search, mc_chsh, mc_pair_run, refine, Angle, AngleSet,
    CorrelationCoefficient, NoiseModel,
};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

fn corr(r: f64) -> CorrelationCoefficient {
    CorrelationCoefficient::new(r).unwrap()
}

fn analytic(c: &mut Criterion) {
    let angles = AngleSet::standard();
    let r = corr(0.8);
    c.bench_function("analytic_chsh", |b| {
        b.iter(|| analytic_chsh(black_box(&angles), black_box(r)))
    });
}

fn optimizer(c: &mut Criterion) {
    let mut g = c.benchmark_group("optimizer");
    g.sample_size(10);
    for step in [15.0, 7.5] {
        g.bench_with_input(BenchmarkId::new("grid_search", step), &step, |b, &step| {
            b.iter(|| grid_search(corr(-0.8), black_box(step)).unwrap())
        });
    }
    g.bench_function("refine", |b| {
        b.iter(|| refine(corr(-0.8), black_box(AngleSet::standard_anti()), 1e-12))
    });
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("monte_carlo");
    g.sample_size(20);
    let n = 100_000u64;
    g.throughput(Throughput::Elements(n));
    let rtw = NoiseModel::rtw(corr(0.8));
    let gauss = NoiseModel::gaussian(0.9).unwrap();
    for (name, noise) in [("rtw", &rtw), ("gaussian", &gauss)] {
        g.bench_function(BenchmarkId::new("pair_run", name), |b| {
            b.iter(|| mc_pair_run(noise, 7, 0, Angle::deg(0.0), Angle::deg(22.5), n).unwrap())
        });
    }
    g.throughput(Throughput::Elements(4 * n));
    g.bench_function("chsh_rtw", |b| {
        b.iter(|| mc_chsh(&rtw, &AngleSet::standard(), n, 7).unwrap())
    });
    g.finish();
}

criterion_group!(benches, analytic, optimizer, monte_carlo);
criterion_main!(benches);
