use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use roughbook::lob_spde::{step, StepWorkspace};
use roughbook::mittag_leffler::ml;
use roughbook::price_dynamics::{simulate_coupled, CouplingOptions, PriceParams};
use roughbook::hawkes_sim::simulate_replicate;
use roughbook::rough_volterra::solve_y_fractional;
use roughbook_bench::{four_type_model, reference_book, volterra_params};

fn mittag_leffler(c: &mut Criterion) {
    let mut g = c.benchmark_group("mittag_leffler");
    for z in [-0.5, -3.0, -20.0, 2.0] {
        g.bench_with_input(BenchmarkId::new("e_0.7_1", z), &z, |b, &z| {
            b.iter(|| ml(0.7, 1.0, black_box(z)).unwrap())
        });
    }
    g.finish();
}

fn volterra(c: &mut Criterion) {
    let mut g = c.benchmark_group("volterra_solve");
    for n in [1024, 4096] {
        let p = volterra_params(n);
        g.bench_with_input(BenchmarkId::from_parameter(n), &p, |b, p| {
            b.iter(|| solve_y_fractional(p, black_box(7)).unwrap())
        });
    }
    g.finish();
}

fn book(c: &mut Criterion) {
    let (p, g0) = reference_book();
    c.bench_function("book_step", |b| {
        let mut g = g0.clone();
        let mut ws = StepWorkspace::default();
        b.iter(|| {
            g.clone_from(&g0);
            step(&mut g, &p, 1.6, black_box(0.01), 1e-3, &mut ws).unwrap()
        })
    });
    let pp = PriceParams { delta: 0.01, c_a: 1.0, c_b: 1.5, s0: 100.0 };
    let vp = volterra_params(1000);
    let opts = CouplingOptions { snapshot_stride: usize::MAX, ..Default::default() };
    c.bench_function("coupled_1000_steps", |b| {
        b.iter(|| simulate_coupled(&p, &pp, &g0, &vp, black_box(3), 1.0, 1e-3, &opts).unwrap())
    });
}

fn thinning(c: &mut Criterion) {
    let model = four_type_model(0.9);
    c.bench_function("hawkes_four_type_horizon_20", |b| {
        b.iter(|| simulate_replicate(&model, 20.0, black_box(1), 0).unwrap())
    });
}

criterion_group!(benches, mittag_leffler, volterra, book, thinning);
criterion_main!(benches);
