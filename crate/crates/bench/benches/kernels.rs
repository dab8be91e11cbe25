use branched_bench::{ring_points, torus};
use branched_core::flat_kernel::{eval_h0, eval_i0, KernelPoint};
use branched_core::oracle::{oracle_p, CurveConfig};
use branched_core::p_operator::line::{p_line_multiplier, LineSamples};
use branched_core::solver::{solve_harmonic_plus, SolveOptions};
use branched_core::Complex64;
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;
use std::sync::Arc;

fn flat_kernel(c: &mut Criterion) {
    let pts = ring_points(64, 0.7);
    c.bench_function("eval_h0 x64", |b| {
        b.iter(|| {
            for z in &pts {
                black_box(eval_h0(&KernelPoint::n3(*z, 0.3)).unwrap());
            }
        })
    });
    c.bench_function("eval_i0 x64", |b| {
        b.iter(|| {
            for z in &pts {
                black_box(eval_i0(*z).unwrap());
            }
        })
    });
}

fn solver(c: &mut Criterion) {
    let cfg = Arc::new(torus(1.0 / 64.0).validate().unwrap());
    let opts = SolveOptions::default();
    let mut g = c.benchmark_group("solver");
    g.sample_size(10);
    g.bench_function("harmonic section 1/64", |b| {
        b.iter(|| black_box(solve_harmonic_plus(cfg.clone(), None, &opts).unwrap()))
    });
    g.finish();
}

fn operators(c: &mut Criterion) {
    let curve = CurveConfig::square(Complex64::new(1.0, 0.0));
    let sigma = vec![Complex64::new(1.0, 0.0); 4];
    let mut g = c.benchmark_group("operators");
    g.sample_size(10);
    g.bench_function("oracle P", |b| b.iter(|| black_box(oracle_p(&curve, &sigma).unwrap())));
    g.finish();
    let line = LineSamples::from_fn(2.0, 256, |x| Complex64::new(x.sin(), (2.0 * x).cos())).unwrap();
    c.bench_function("line multiplier 256", |b| b.iter(|| black_box(p_line_multiplier(&line))));
}

criterion_group!(benches, flat_kernel, solver, operators);
criterion_main!(benches);
