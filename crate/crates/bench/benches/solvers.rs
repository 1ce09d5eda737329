use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ellgraph_core::heat;
use ellgraph_core::isoperimetry::{beta_estimate, SubsetFamily};
use ellgraph_core::spectral::lambda0_dirichlet;
use ellgraph_core::{EllipticOperator, SolverOptions, VertexId, WeightedGraph};

fn dirichlet(c: &mut Criterion) {
    let mut group = c.benchmark_group("lambda0_dirichlet");
    for (name, graph, radius) in [("lattice2", WeightedGraph::lattice(2), 20), ("tree3", WeightedGraph::regular_tree(3), 9)] {
        let mut op = EllipticOperator::without_potential(graph.unwrap());
        let region = op.graph_mut().ball(VertexId(0), radius).unwrap();
        group.bench_with_input(BenchmarkId::new(name, region.interior().len()), &region, |b, r| {
            b.iter(|| lambda0_dirichlet(&op, r, &SolverOptions::default()).unwrap())
        });
    }
    group.finish();
}

fn kernel(c: &mut Criterion) {
    let mut group = c.benchmark_group("heat_kernel");
    for t in [1.0, 10.0] {
        let mut op = EllipticOperator::without_potential(WeightedGraph::lattice(2).unwrap());
        group.bench_with_input(BenchmarkId::new("lattice2_r10", t), &t, |b, &t| {
            b.iter(|| heat::heat_kernel(&mut op, VertexId(0), t, 10, 1e-10).unwrap())
        });
    }
    group.finish();
}

fn subsets(c: &mut Criterion) {
    let mut op = EllipticOperator::without_potential(WeightedGraph::lattice(2).unwrap());
    let universe = op.graph_mut().ball(VertexId(0), 3).unwrap().interior().to_vec();
    let family = SubsetFamily::Exhaustive { universe };
    c.bench_function("beta_exhaustive_lattice2_r3", |b| b.iter(|| beta_estimate(&mut op, &family).unwrap()));
}

criterion_group!(benches, dirichlet, kernel, subsets);
criterion_main!(benches);
