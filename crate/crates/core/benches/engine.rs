//! Sequential vs rayon execution of the three data-parallel workloads:
//! information-function enumeration, Monte Carlo EXIT estimation and
//! batched threshold evaluation.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use dgldpc::montecarlo::{mc_exit, Role};
use dgldpc::{engine, reproduce, ComponentCode, Exec};

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

fn information_functions(c: &mut Criterion) {
    let mut g = c.benchmark_group("information_functions");
    g.sample_size(10);
    for name in ["spc-cyc-15", "hamming-7-4"] {
        let code = ComponentCode::builtin(name).unwrap();
        for (label, exec) in POLICIES {
            g.bench_with_input(BenchmarkId::new(label, name), &exec, |b, &exec| {
                b.iter(|| black_box(code.compute_split_information_functions(exec).unwrap()))
            });
        }
    }
    g.finish();
}

fn monte_carlo(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_exit");
    g.sample_size(10);
    let code = ComponentCode::builtin("spc-cyc-15").unwrap();
    for (label, exec) in POLICIES {
        g.bench_function(label, |b| {
            b.iter(|| black_box(mc_exit(&code, Role::Vn, 0.4, 0.5, 100_000, 1, exec).unwrap()))
        });
    }
    g.finish();
}

fn thresholds(c: &mut Criterion) {
    let mut g = c.benchmark_group("thresholds");
    g.sample_size(10);
    let batch: Vec<_> = (0..8).map(|_| reproduce::dgldpc_table().unwrap()).collect();
    for e in &batch {
        e.exits().unwrap();
    }
    for (label, exec) in POLICIES {
        g.bench_function(label, |b| {
            b.iter(|| black_box(engine::thresholds(batch.clone(), 1e-5, exec)))
        });
    }
    g.finish();
}

criterion_group!(benches, information_functions, monte_carlo, thresholds);
criterion_main!(benches);
