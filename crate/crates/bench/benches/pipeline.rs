use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use lrpop::lifting::{assign_to_cliques, build_lifted_pop};
use lrpop::relaxation::assemble_lr_moment_sdp;
use lrpop::sparsity::lr_clique_tree;
use lrpop::{solve_low_rank, PipelineOptions};
use lrpop_bench::{bernstein, SIZES};

fn clique_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("clique_tree");
    for n in SIZES {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| lr_clique_tree(2, black_box(n)))
        });
    }
    group.finish();
}

fn assembly(c: &mut Criterion) {
    let mut group = c.benchmark_group("assembly");
    for n in SIZES {
        let f = bernstein(n);
        let pop = build_lifted_pop(&f, 1.0, false);
        let tree = lr_clique_tree(2, n);
        let asg = assign_to_cliques(&pop, &tree).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| assemble_lr_moment_sdp(&pop, &tree, &asg, 2, false).unwrap())
        });
    }
    group.finish();
}

fn solve(c: &mut Criterion) {
    let mut group = c.benchmark_group("solve");
    group.sample_size(10);
    for n in [10, 50] {
        let f = bernstein(n);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| solve_low_rank(&f, &PipelineOptions::with_order(2)).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, clique_tree, assembly, solve);
criterion_main!(benches);
