//! Seeded random instances: connected weighted graphs, potentials, regions
//! and functions.

use crate::error::Result;
use crate::graph::{Region, VertexId, WeightedGraph};
use crate::operator::{Potential, VertexFunction};
use rand::seq::SliceRandom;
use rand::Rng;
use std::collections::{BTreeSet, HashSet};

pub type Rng64 = rand_chacha::ChaCha8Rng;

/// Deterministic generator used across tests and benches.
pub fn rng(seed: u64) -> Rng64 {
    use rand::SeedableRng;
    Rng64::seed_from_u64(seed)
}

fn sample_weight<R: Rng>(rng: &mut R, weights: (f64, f64)) -> f64 {
    if weights.0 >= weights.1 {
        weights.0
    } else {
        rng.gen_range(weights.0..weights.1)
    }
}

/// Connected graph on `n ≥ 1` vertices: a random recursive tree plus up to
/// `extra` further edges, weights uniform in `weights`.
pub fn connected_graph<R: Rng>(rng: &mut R, n: usize, extra: usize, weights: (f64, f64)) -> WeightedGraph {
    let mut labels: Vec<usize> = (0..n).collect();
    labels.shuffle(rng);
    let mut seen = HashSet::new();
    let mut edges = Vec::new();
    for i in 1..n {
        let (x, y) = (labels[rng.gen_range(0..i)], labels[i]);
        seen.insert((x.min(y), x.max(y)));
        edges.push((x, y, sample_weight(rng, weights)));
    }
    let max_edges = n * (n - 1) / 2;
    let target = (n - 1 + extra).min(max_edges);
    while edges.len() < target {
        let (x, y) = (rng.gen_range(0..n), rng.gen_range(0..n));
        if x != y && seen.insert((x.min(y), x.max(y))) {
            edges.push((x, y, sample_weight(rng, weights)));
        }
    }
    WeightedGraph::from_edges_with_vertices(n, edges).expect("generated edges are valid")
}

/// Potential with independent values uniform in `[0, max)` at every vertex.
pub fn potential<R: Rng>(rng: &mut R, graph: &WeightedGraph, max: f64) -> Potential {
    let vals: Vec<_> = graph.vertices().map(|v| (v, if max > 0.0 { rng.gen_range(0.0..max) } else { 0.0 })).collect();
    Potential::from_values(vals).expect("finite values")
}

/// Values uniform in `[lo, hi)` on `domain`.
pub fn function<R: Rng>(rng: &mut R, domain: &[VertexId], lo: f64, hi: f64) -> VertexFunction {
    VertexFunction::from_fn(domain, |_| rng.gen_range(lo..hi))
}

/// Region with a nonempty connected interior of at most `max_interior`
/// vertices and a nonempty boundary: a random connected core grown from a
/// random vertex, together with its neighbors.
///
/// Returns `None` when the graph is too small or too dense to produce one
/// within a bounded number of attempts.
pub fn region<R: Rng>(rng: &mut R, graph: &WeightedGraph, max_interior: usize) -> Result<Option<Region>> {
    let n = graph.num_vertices();
    for _ in 0..64 {
        let k = rng.gen_range(1..=max_interior.max(1));
        let start = VertexId(rng.gen_range(0..n));
        let mut core = BTreeSet::from([start]);
        while core.len() < k {
            let mut frontier = BTreeSet::new();
            for &v in &core {
                for &(y, _) in graph.neighbors(v)? {
                    if !core.contains(&y) {
                        frontier.insert(y);
                    }
                }
            }
            let frontier: Vec<_> = frontier.into_iter().collect();
            match frontier.choose(rng) {
                Some(&y) => {
                    core.insert(y);
                }
                None => break,
            }
        }
        let mut members = core.clone();
        for &v in &core {
            for &(y, _) in graph.neighbors(v)? {
                members.insert(y);
            }
        }
        let r = Region::from_vertices(graph, members)?;
        let interior = r.interior().len();
        if interior >= 1 && interior <= max_interior && !r.boundary().is_empty() && r.interior_connected(graph) {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graphs_are_connected_and_reproducible() {
        for seed in 0..20 {
            let g = connected_graph(&mut rng(seed), 15, 10, (0.1, 10.0));
            assert!(g.is_connected());
            assert_eq!(g.edges().count(), 24);
            let h = connected_graph(&mut rng(seed), 15, 10, (0.1, 10.0));
            assert!(g.edges().eq(h.edges()));
        }
    }

    #[test]
    fn regions_meet_requirements() {
        let mut r = rng(7);
        let mut found = 0;
        for _ in 0..50 {
            let g = connected_graph(&mut r, 25, 6, (0.1, 10.0));
            if let Some(reg) = region(&mut r, &g, 12).unwrap() {
                assert!(reg.interior().len() <= 12 && !reg.interior().is_empty());
                assert!(reg.interior_connected(&g));
                found += 1;
            }
        }
        assert!(found > 40);
    }
}
