use blowup_bench::{cubic_disc, cubic_interval, log1p_kernel};
use blowup_core::radial::default_schedule;
use blowup_core::rate_fit::{fit_power, Window};
use blowup_core::{NonlinearitySpec, PhiTransform, SlowlyVarying};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn shooting(c: &mut Criterion) {
    let interval = cubic_interval().unwrap();
    let disc = cubic_disc().unwrap();
    let mut g = c.benchmark_group("shooting");
    g.bench_function("critical_bracket/interval", |b| b.iter(|| interval.critical_bracket().unwrap()));
    g.bench_function("critical_bracket/disc", |b| b.iter(|| disc.critical_bracket().unwrap()));
    g.bench_function("blow_up_radius/disc", |b| b.iter(|| disc.blow_up_radius(black_box(2.0)).unwrap()));
    g.finish();
}

fn large_solution(c: &mut Criterion) {
    let interval = cubic_interval().unwrap();
    let schedule = default_schedule();
    let profile = interval.large_solution(&schedule).unwrap();
    let mut g = c.benchmark_group("large_solution");
    g.sample_size(10);
    g.bench_function("schedule/interval", |b| b.iter(|| interval.large_solution(&schedule).unwrap()));
    g.bench_function("fit_power", |b| b.iter(|| fit_power(black_box(&profile), Window::default()).unwrap()));
    g.finish();
}

fn ingredients(c: &mut Criterion) {
    let kernel = log1p_kernel().unwrap();
    let mut g = c.benchmark_group("ingredients");
    g.sample_size(10);
    g.bench_function("karamata_limits/log1p", |b| b.iter(|| kernel.estimate_limits().unwrap()));
    g.bench_function("ko_check/log1p", |b| {
        let f = NonlinearitySpec::new(2.0, SlowlyVarying::Log1p);
        b.iter(|| f.keller_osserman(black_box(2.0)).unwrap())
    });
    g.bench_function("transform/power", |b| {
        b.iter(|| PhiTransform::new(NonlinearitySpec::power(3.0), 2.0).unwrap().phi(black_box(1e-3)).unwrap())
    });
    g.finish();
}

criterion_group!(benches, shooting, large_solution, ingredients);
criterion_main!(benches);
