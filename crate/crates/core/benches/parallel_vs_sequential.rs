use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qsdlab::kernel::{build_operator_with, check_h1_modulus_with, registry};
use qsdlab::mc::{simulate, McOptions};
use qsdlab::Execution;

const STRATEGIES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn operator_assembly(c: &mut Criterion) {
    let mut g = c.benchmark_group("build_operator");
    for n in [401, 1601] {
        let spec = registry::bundled("example23gauss").unwrap().with_grid_size(n);
        for (name, exec) in STRATEGIES {
            g.bench_with_input(BenchmarkId::new(name, n), &spec, |b, s| {
                b.iter(|| build_operator_with(black_box(s), exec).unwrap())
            });
        }
    }
    g.finish();
}

fn matvec(c: &mut Criterion) {
    let mut g = c.benchmark_group("apply_50_steps");
    let spec = registry::bundled("example21").unwrap().with_grid_size(1601);
    for (name, exec) in STRATEGIES {
        let op = build_operator_with(&spec, exec).unwrap();
        let start = vec![1.0; op.len()];
        g.bench_function(name, |b| {
            b.iter(|| {
                let mut f = start.clone();
                for _ in 0..50 {
                    f = op.apply(&f);
                }
                black_box(f)
            })
        });
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("simulate");
    g.sample_size(10);
    let spec = registry::bundled("example23gauss").unwrap();
    for (name, exec) in STRATEGIES {
        let opts = McOptions::new(1 << 19, 1).with_execution(exec);
        g.bench_function(name, |b| b.iter(|| simulate(&spec, 0.0, 8, None, black_box(&opts)).unwrap()));
    }
    g.finish();
}

fn continuity_audit(c: &mut Criterion) {
    let mut g = c.benchmark_group("h1_audit");
    g.sample_size(10);
    let spec = registry::bundled("example23gauss").unwrap();
    for (name, exec) in STRATEGIES {
        g.bench_function(name, |b| b.iter(|| check_h1_modulus_with(black_box(&spec), 16, exec).unwrap()));
    }
    g.finish();
}

criterion_group!(benches, operator_assembly, matvec, monte_carlo, continuity_audit);
criterion_main!(benches);
