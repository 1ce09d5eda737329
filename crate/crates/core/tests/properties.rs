use ellgraph_core::heat;
use ellgraph_core::isoperimetry::{beta1_quotient, h_constant};
use ellgraph_core::random;
use ellgraph_core::spectral::{lambda0_dirichlet, lambda0_infinite, rayleigh_quotient, ExhaustionOptions};
use ellgraph_core::verify::{check_growth_envelope, check_harnack_all, CheckOptions};
use ellgraph_core::{EllipticOperator, Region, SolverOptions, VertexFunction, VertexId, WeightedGraph};
use proptest::prelude::*;
use rand::Rng;
use std::collections::BTreeSet;

fn op_from_seed(seed: u64, n: usize, w_max: f64) -> (EllipticOperator, random::Rng64) {
    let mut rng = random::rng(seed);
    let extra = rng.gen_range(0..=n);
    let g = random::connected_graph(&mut rng, n, extra, (0.1, 10.0));
    let p = random::potential(&mut rng, &g, w_max);
    (EllipticOperator::new(g, p).unwrap(), rng)
}

fn random_region(seed: u64, max_interior: usize, w_max: f64) -> Option<(EllipticOperator, Region, random::Rng64)> {
    let (op, mut rng) = op_from_seed(seed, 2 * max_interior + 2, w_max);
    let r = random::region(&mut rng, op.graph(), max_interior).unwrap()?;
    Some((op, r, rng))
}

// shortest path length by trying every simple path
fn shortest_by_enumeration(g: &WeightedGraph, x: VertexId, y: VertexId) -> Option<usize> {
    fn dfs(g: &WeightedGraph, v: VertexId, y: VertexId, seen: &mut Vec<VertexId>, best: &mut Option<usize>) {
        if v == y {
            let len = seen.len() - 1;
            *best = Some(best.map_or(len, |b| b.min(len)));
            return;
        }
        for &(w, _) in g.neighbors(v).unwrap() {
            if !seen.contains(&w) {
                seen.push(w);
                dfs(g, w, y, seen, best);
                seen.pop();
            }
        }
    }
    let mut best = None;
    dfs(g, x, y, &mut vec![x], &mut best);
    best
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn weights_symmetric_bit_exact(seed in any::<u64>(), n in 2usize..40) {
        let (op, _) = op_from_seed(seed, n, 0.0);
        for (x, y, a) in op.graph().edges() {
            prop_assert_eq!(op.graph().weight(y, x).unwrap().to_bits(), a.to_bits());
        }
    }

    #[test]
    fn generated_balls_nested(dim in 1usize..4, r in 0usize..4) {
        let mut g = WeightedGraph::lattice(dim).unwrap();
        let o = g.origin();
        let small = g.ball(o, r).unwrap();
        let big = g.ball(o, r + 1).unwrap();
        let big_set: BTreeSet<_> = big.vertices().iter().collect();
        prop_assert!(small.vertices().iter().all(|v| big_set.contains(v)));
        let interior: BTreeSet<_> = big.interior().iter().collect();
        prop_assert!(small.vertices().iter().all(|v| interior.contains(v)));
        for (x, y, a) in g.edges() {
            prop_assert_eq!(g.weight(y, x).unwrap().to_bits(), a.to_bits());
        }
    }

    #[test]
    fn bfs_matches_path_enumeration(seed in any::<u64>(), n in 2usize..=10) {
        let (op, mut rng) = op_from_seed(seed, n, 0.0);
        let g = op.graph();
        let x = VertexId(rng.gen_range(0..n));
        let y = VertexId(rng.gen_range(0..n));
        prop_assert_eq!(g.materialized_distance(x, y, usize::MAX).unwrap(), shortest_by_enumeration(g, x, y));
    }

    #[test]
    fn energy_positive(seed in any::<u64>()) {
        if let Some((op, region, mut rng)) = random_region(seed, 10, 2.0) {
            let int: BTreeSet<_> = region.interior().iter().copied().collect();
            let f = VertexFunction::from_fn(region.vertices(), |v| if int.contains(&v) { rng.gen_range(0.1..1.0) * if rng.gen() { 1.0 } else { -1.0 } } else { 0.0 });
            prop_assert!(op.quadratic_form(&f, &f).unwrap() > 0.0);
        }
    }

    #[test]
    fn constants_annihilated(seed in any::<u64>(), c in -5.0f64..5.0) {
        if let Some((op, region, _)) = random_region(seed, 10, 0.0) {
            let f = VertexFunction::constant(region.vertices(), c);
            let af = op.apply(&f, region.interior()).unwrap();
            prop_assert!(af.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn dirichlet_matrix_from_delta_columns(seed in any::<u64>()) {
        if let Some((op, region, _)) = random_region(seed, 10, 3.0) {
            let dm = op.dirichlet_restrict(&region).unwrap();
            let dense = dm.matrix.to_dense_rows();
            for (j, &xj) in dm.index.iter().enumerate() {
                let col = op.apply(&VertexFunction::delta(region.vertices(), xj), &dm.index).unwrap();
                for (i, row) in dense.iter().enumerate() {
                    prop_assert_eq!(row[j], col.values()[i]);
                }
            }
        }
    }

    #[test]
    fn dirichlet_monotone_under_inclusion(seed in any::<u64>(), r in 1usize..4) {
        let (mut op, mut rng) = op_from_seed(seed, 30, 2.0);
        let c = VertexId(rng.gen_range(0..30));
        let small = op.graph_mut().ball(c, r).unwrap();
        let big = op.graph_mut().ball(c, r + 1).unwrap();
        if !small.interior().is_empty() && !big.boundary().is_empty() {
            let opts = SolverOptions::default();
            let l_small = lambda0_dirichlet(&op, &small, &opts).unwrap().lambda0;
            let l_big = lambda0_dirichlet(&op, &big, &opts).unwrap().lambda0;
            prop_assert!(l_small >= l_big - 1e-9 * l_big.abs().max(1.0));
        }
    }

    #[test]
    fn rayleigh_above_lambda0(seed in any::<u64>()) {
        let (mut op, mut rng) = op_from_seed(seed, 25, 2.0);
        let c = VertexId(rng.gen_range(0..25));
        let near = op.graph_mut().ball(c, 1).unwrap().vertices().to_vec();
        let region = op.graph_mut().ball(c, 2).unwrap();
        if region.boundary().is_empty() {
            return Ok(());
        }
        let support: Vec<VertexId> = near.into_iter().filter(|_| rng.gen_bool(0.6)).collect();
        let f = VertexFunction::from_fn(&support, |_| rng.gen_range(-1.0..1.0));
        if f.norm2() == 0.0 {
            return Ok(());
        }
        let lambda0 = lambda0_dirichlet(&op, &region, &SolverOptions::default()).unwrap().lambda0;
        prop_assert!(rayleigh_quotient(&op, &f).unwrap() >= lambda0 - 1e-9);
    }

    #[test]
    fn lattice_ball_quotients(n in 1usize..40) {
        let mut op = EllipticOperator::without_potential(WeightedGraph::lattice(1).unwrap());
        let vs = op.graph_mut().ball(VertexId(0), n).unwrap().vertices().to_vec();
        let next = op.graph_mut().ball(VertexId(0), n + 1).unwrap().vertices().to_vec();
        let h = h_constant(&op, &vs).unwrap();
        let exact = 2.0 / (2 * n + 1) as f64;
        prop_assert!((h - exact).abs() <= 1e-15);
        prop_assert_eq!(h, beta1_quotient(&op, &vs).unwrap());
        prop_assert!(h_constant(&op, &next).unwrap() <= h);
    }

    #[test]
    fn heat_contracts_and_improves_positivity(seed in any::<u64>(), n in 2usize..12, t in 0.1f64..3.0) {
        let (mut op, mut rng) = op_from_seed(seed, n, 2.0);
        let all: Vec<VertexId> = op.graph().vertices().collect();
        let u0 = random::function(&mut rng, &all, -1.0, 1.0);
        let err = 1e-12;
        let u = heat::semigroup_apply(&mut op, &u0, t, err).unwrap().values;
        prop_assert!(u.norm2() <= u0.norm2() + err);
        prop_assert!(u.sup_norm() <= u0.sup_norm() + err);
        let x = all[rng.gen_range(0..n)];
        let p = heat::semigroup_apply(&mut op, &VertexFunction::delta(&all, x), t, err).unwrap().values;
        prop_assert!(p.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn checkers_deterministic_and_pure(seed in any::<u64>()) {
        if let Some((op, region, _)) = random_region(seed, 10, 2.0) {
            let pair = lambda0_dirichlet(&op, &region, &SolverOptions::default()).unwrap();
            let phi = pair.eigenfunction.clone();
            let opts = CheckOptions::default();
            let first = check_harnack_all(&op, &region, &phi, &opts).unwrap();
            let second = check_harnack_all(&op, &region, &phi, &opts).unwrap();
            prop_assert!(first.passed);
            prop_assert_eq!(&first, &second);
            prop_assert_eq!(&phi, &pair.eigenfunction);
        }
    }

    #[test]
    fn envelope_symmetric_in_pair(seed in any::<u64>()) {
        if let Some((op, region, mut rng)) = random_region(seed, 10, 0.0) {
            // the Dirichlet ground state is positive with Aφ = λφ ≥ 0 on its support
            let phi = lambda0_dirichlet(&op, &region, &SolverOptions::default()).unwrap().eigenfunction;
            let int = region.interior();
            let f = VertexFunction::from_fn(int, |v| phi.value_or_zero(v));
            let (x, y) = (int[rng.gen_range(0..int.len())], int[rng.gen_range(0..int.len())]);
            let opts = CheckOptions::default();
            let xy = check_growth_envelope(&op, &f, &[(x, y)], &opts).unwrap();
            let yx = check_growth_envelope(&op, &f, &[(y, x)], &opts).unwrap();
            prop_assert!(xy.passed);
            prop_assert_eq!(xy.passed, yx.passed);
            prop_assert_eq!(xy.checked, yx.checked);
        }
    }
}

#[test]
fn exhaustion_levels_inside_envelope() {
    for (graph, levels) in [(WeightedGraph::lattice(2).unwrap(), 6), (WeightedGraph::regular_tree(3).unwrap(), 6)] {
        let mut op = EllipticOperator::without_potential(graph);
        let schedule: Vec<usize> = (1..=levels).collect();
        let gs = lambda0_infinite(&mut op, VertexId(0), &schedule, &ExhaustionOptions::default()).unwrap();
        let kappa = gs.envelope_ratio;
        for w in gs.levels.windows(2) {
            assert!(w[1].lambda <= w[0].lambda * (1.0 + 1e-9));
        }
        for level in &gs.levels {
            for (y, &v) in level.phi.iter().filter(|(_, &v)| v > 0.0) {
                let d = op.graph().materialized_distance(VertexId(0), y, usize::MAX).unwrap().unwrap() as i32;
                assert!(v <= kappa.powi(d) && v >= kappa.powi(-d), "φ_{}({y}) = {v}", level.n);
            }
        }
    }
}
