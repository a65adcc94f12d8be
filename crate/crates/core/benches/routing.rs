//! Sequential vs. parallel execution of the data-parallel stages: V-path
//! construction, the oracle and a full workload run.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pace_core::bench::{generate_workload, run_bench, WorkloadSpec};
use pace_core::engine::{Engine, Variant};
use pace_core::oracle::exact_best_with;
use pace_core::par::Execution;
use pace_core::synth::{chain_instance, desk_instance};
use pace_core::vpath::{build_vpaths, BuildOptions};

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn vpath_build(c: &mut Criterion) {
    let g = chain_instance(3).unwrap();
    let mut group = c.benchmark_group("build_vpaths");
    for (name, exec) in MODES {
        group.bench_function(name, |b| {
            b.iter(|| build_vpaths(black_box(&g), &BuildOptions { max_len: None, execution: Some(exec) }).unwrap())
        });
    }
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let g = desk_instance(4, 10).unwrap();
    let spec = WorkloadSpec { buckets: vec![(4, 8)], pairs_per_bucket: 1, multipliers: vec![1.0], ..Default::default() };
    let q = generate_workload(&g.base, &spec).unwrap()[0].query;
    let mut group = c.benchmark_group("oracle");
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| exact_best_with(black_box(&g), &q, 12, exec).unwrap()));
    }
    group.finish();
}

fn workload(c: &mut Criterion) {
    let g = chain_instance(5).unwrap();
    let spec = WorkloadSpec::default();
    let queries = generate_workload(&g.base, &spec).unwrap();
    let variants: Vec<Variant> = ["T-B-P", "V-BS-1"].iter().map(|s| s.parse().unwrap()).collect();
    let mut group = c.benchmark_group("workload");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::new(name, queries.len()), &queries, |b, qs| {
            // A fresh engine per iteration so heuristic caches start cold.
            b.iter(|| {
                let engine = Engine::single(g.clone()).unwrap();
                run_bench(&engine, qs, &spec, &variants, exec).unwrap()
            })
        });
    }
    group.finish();
}

criterion_group!(benches, vpath_build, oracle, workload);
criterion_main!(benches);
