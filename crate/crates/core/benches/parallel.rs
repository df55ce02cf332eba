//! Sequential against data-parallel execution of the hot loops.

use std::hint::black_box;
use std::path::Path;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use clusterforge_core::dsl::{execute, RunContext};
use clusterforge_core::graph::ConfigGraph;
use clusterforge_core::layout::route_cables_with;
use clusterforge_core::net::{design_fattree_with, SwitchConfig};
use clusterforge_core::par::Exec;
use clusterforge_core::space::CandidatePool;

const POLICIES: [(&str, Exec); 2] = [("sequential", Exec::Sequential), ("parallel", Exec::Parallel)];

/// Six partitions of six vertices, fully connected: 46656 configurations.
fn wide_graph() -> ConfigGraph {
    let mut xml = String::from("<database>\n");
    for p in 0..6 {
        xml += &format!("<partition name=\"p{p}\" position=\"{}\">\n", p + 1);
        for v in 0..6 {
            xml += &format!(
                "<vertex id=\"v{v}\" label=\"part {p}.{v}\">\
                 <expr metric=\"cost\" value=\"+{}\"/>\
                 <expr metric=\"power\" value=\"+{}\"/>\
                 <expr metric=\"perf\" value=\"*1.0{v}\"/></vertex>\n",
                100 * (v + 1),
                10 + v
            );
        }
        xml += "</partition>\n";
    }
    xml += "</database>\n";
    ConfigGraph::parse(&xml).unwrap()
}

fn enumerate(c: &mut Criterion) {
    let g = wide_graph();
    let mut group = c.benchmark_group("enumerate");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| b.iter(|| black_box(g.enumerate_with(exec).unwrap().len())));
    }
    group.finish();
}

fn constraints(c: &mut Criterion) {
    let configs = wide_graph().enumerate().unwrap();
    let mut group = c.benchmark_group("constraint");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter_batched(
                || CandidatePool::new(configs.clone()).with_exec(exec),
                |mut pool| {
                    pool.apply_constraint("cost / max(power, 1) < 9 and sqrt(cost) > 20").unwrap();
                    black_box(pool.len())
                },
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

fn catalogue(size: usize) -> Vec<SwitchConfig> {
    (0..size)
        .map(|i| {
            let ports = [8u64, 12, 16, 24, 32, 36, 48, 64, 96, 128, 324, 648][i % 12];
            SwitchConfig {
                origin_index: i,
                label: format!("sw{i}"),
                ports,
                cost: ports as f64 * (120.0 + (i * 37 % 90) as f64),
                power: ports as f64 * 4.0,
                size_u: 1 + (ports / 100) as u32,
                weight: 5.0,
                technology: Default::default(),
                vendor: None,
            }
        })
        .collect()
}

fn fattree(c: &mut Criterion) {
    let cat = catalogue(120);
    let mut group = c.benchmark_group("design_fattree");
    for (name, exec) in POLICIES {
        for n in [500u64, 20_000] {
            group.bench_with_input(BenchmarkId::new(name, n), &n, |b, &n| {
                b.iter(|| black_box(design_fattree_with(n, &cat, None, exec).unwrap().totals.cost))
            });
        }
    }
    group.finish();
}

fn cables(c: &mut Criterion) {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let src = std::fs::read_to_string(root.join("fig2-1pflops.cfs")).unwrap();
    let out = tempfile::tempdir().unwrap();
    let (report, state) = execute(&src, RunContext::new(&root, out.path()));
    assert!(report.ok(), "{:?}", report.error);
    let state = state.unwrap();
    let (placement, floor) = (state.placement.unwrap(), state.floor.unwrap());
    let mut group = c.benchmark_group("route_cables");
    for (name, exec) in POLICIES {
        group.bench_function(name, |b| {
            b.iter(|| black_box(route_cables_with(&placement, &floor, exec).unwrap().len()))
        });
    }
    group.finish();
}

criterion_group!(benches, enumerate, constraints, fattree, cables);
criterion_main!(benches);
