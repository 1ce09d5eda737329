//! Bottom of the spectrum: Dirichlet eigenpairs on finite regions and the
//! ground state of an infinite graph by exhaustion.

use crate::error::{Error, Result};
use crate::graph::{Region, VertexId};
use crate::operator::{DirichletMatrix, EllipticOperator, VertexFunction};
use crate::oracle::{self, DenseMatrix};
use crate::sparse::CsrMatrix;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::HashMap;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Residual target, relative to `max(1, ‖L_U‖_∞)`.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-12, max_iterations: 10_000 }
    }
}

/// Smallest Dirichlet eigenvalue of a region and its eigenfunction.
#[derive(Clone, Debug)]
pub struct DirichletEigenpair {
    pub region: Region,
    pub lambda0: f64,
    /// Positive on `int U`, zero on `∂U`, unit 2-norm. Domain: `U`.
    pub eigenfunction: VertexFunction,
    /// `‖L_U ψ − λ₀ ψ‖_∞`.
    pub residual: f64,
    pub iterations: usize,
    pub matrix: DirichletMatrix,
}

// refactorizations allowed while moving the shift towards the eigenvalue
const MAX_REFACTORS: usize = 30;

/// Smallest eigenpair of a symmetric matrix whose spectrum lies above
/// `floor`, by shifted inverse iteration from the all-ones vector.
///
/// The matrix must be a Dirichlet restriction (nonpositive off-diagonal,
/// irreducible), so the iterates stay positive. The shift starts at
/// `floor − 1` and is then raised towards the eigenvalue using the lower
/// bound `min_i (Mv)_i / v_i`, valid for any positive `v`.
pub fn smallest_eigenpair(m: &CsrMatrix, floor: f64, opts: &SolverOptions) -> Result<(f64, Vec<f64>, f64, usize)> {
    let n = m.dim();
    if n == 0 {
        return Err(Error::EmptyInterior);
    }
    if n == 1 {
        return Ok((m.get(0, 0), vec![1.0], 0.0, 0));
    }
    let scale = m.max_abs_row_sum().max(1.0);
    let target = opts.tol * scale;
    let mut shift = floor - 1.0;
    let mut fac = m.ldl_shifted(shift)?;
    let mut refactors = 0;
    let mut v = vec![1.0 / (n as f64).sqrt(); n];
    let mut mv = vec![0.0; n];
    for it in 1..=opts.max_iterations {
        fac.solve_in_place(&mut v);
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let sign = if v.iter().sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        v.iter_mut().for_each(|x| *x *= sign / norm);
        m.matvec_into(&v, &mut mv);
        let mu: f64 = v.iter().zip(&mv).map(|(a, b)| a * b).sum();
        let residual = v.iter().zip(&mv).map(|(a, b)| (b - mu * a).abs()).fold(0.0, f64::max);
        if residual <= target {
            return Ok((mu, v, residual, it));
        }
        if refactors < MAX_REFACTORS && v.iter().all(|&x| x > 0.0) {
            let lower = v.iter().zip(&mv).map(|(a, b)| b / a).fold(f64::INFINITY, f64::min);
            let margin = (1e-8 * scale).max(1e-3 * (mu - lower).max(0.0));
            let candidate = lower - margin;
            if candidate > shift && mu - candidate < 0.5 * (mu - shift) {
                if let Ok(f) = m.ldl_shifted(candidate) {
                    fac = f;
                    shift = candidate;
                    refactors += 1;
                }
            }
        }
    }
    Err(Error::NoConvergence(opts.max_iterations))
}

/// `λ₀(L_U)` and its positive eigenfunction.
pub fn lambda0_dirichlet(op: &EllipticOperator, region: &Region, opts: &SolverOptions) -> Result<DirichletEigenpair> {
    let matrix = op.dirichlet_restrict(region)?;
    let floor = matrix.index.iter().map(|&x| op.potential().get(x)).fold(f64::INFINITY, f64::min);
    let (lambda0, psi, residual, iterations) = smallest_eigenpair(&matrix.matrix, floor, opts)?;
    let pos: HashMap<VertexId, usize> = matrix.index.iter().enumerate().map(|(i, &x)| (x, i)).collect();
    let eigenfunction = VertexFunction::from_fn(region.vertices(), |x| pos.get(&x).map_or(0.0, |&i| psi[i]));
    Ok(DirichletEigenpair { region: region.clone(), lambda0, eigenfunction, residual, iterations, matrix })
}

/// `(Lf, f) / (f, f)` for a finitely supported `f`.
pub fn rayleigh_quotient(op: &EllipticOperator, f: &VertexFunction) -> Result<f64> {
    let norm = f.dot(f);
    if norm == 0.0 {
        return Err(Error::ZeroFunction);
    }
    Ok(op.energy(f)? / norm)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PositivityReport {
    pub interior_size: usize,
    pub min_value: f64,
    pub min_vertex: VertexId,
    /// From the dense oracle; absent above its size cap.
    pub oracle_lambda0: Option<f64>,
    /// `λ₁ − λ₀`; absent for a single interior vertex or above the cap.
    pub gap: Option<f64>,
}

/// Checks that the eigenfunction is positive on the interior and, for
/// regions small enough for the dense oracle, that `λ₀` is simple.
pub fn positivity_certificate(pair: &DirichletEigenpair) -> Result<PositivityReport> {
    let (min_vertex, min_value) = pair
        .matrix
        .index
        .iter()
        .map(|&x| (x, pair.eigenfunction.value_or_zero(x)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::EmptyInterior)?;
    if min_value <= 0.0 {
        return Err(Error::SignViolation { vertex: min_vertex, value: min_value });
    }
    let n = pair.matrix.index.len();
    let (mut oracle_lambda0, mut gap) = (None, None);
    if n <= oracle::MAX_DENSE {
        let dense = DenseMatrix::from_rows(pair.matrix.matrix.to_dense_rows())?;
        let e = oracle::dense_eigh(&dense)?;
        oracle_lambda0 = Some(e.values[0]);
        if n > 1 {
            let g = e.values[1] - e.values[0];
            if g <= 1e-10 * e.values[0].abs().max(1.0) {
                return Err(Error::DegenerateGroundEigenvalue(g));
            }
            gap = Some(g);
        }
    }
    Ok(PositivityReport { interior_size: n, min_value, min_vertex, oracle_lambda0, gap })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExhaustionOptions {
    pub solver: SolverOptions,
    /// A vertex counts as converged when its last two level-to-level
    /// changes are both below this.
    pub stabilization_tol: f64,
    /// Also report a Richardson extrapolation of the last two levels under
    /// an `n⁻²` error model. Heuristic.
    pub richardson: bool,
}

impl Default for ExhaustionOptions {
    fn default() -> Self {
        ExhaustionOptions { solver: SolverOptions::default(), stabilization_tol: 1e-8, richardson: false }
    }
}

/// One exhaustion level `V_n`.
#[derive(Clone, Debug)]
pub struct Level {
    pub n: usize,
    pub lambda: f64,
    /// Solver residual of the unit-norm eigenfunction.
    pub residual: f64,
    /// `max_{int V_n} |Lφ_n − λ_n φ_n|` after normalizing `φ_n(x₀) = 1`.
    pub normalized_residual: f64,
    pub interior_size: usize,
    pub iterations: usize,
    /// Normalized so that `φ_n(x₀) = 1`. Domain: `V_n`.
    pub phi: VertexFunction,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroundStateValue {
    pub vertex: VertexId,
    pub distance: usize,
    pub value: f64,
    /// Change between the last two levels containing the vertex in their
    /// interior.
    pub last_change: Option<f64>,
    pub converged: bool,
}

/// Ground state approximation from an exhaustion run.
#[derive(Clone, Debug)]
pub struct GroundStateApprox {
    pub origin: VertexId,
    pub levels: Vec<Level>,
    /// Values at the interior of the last level, ascending by vertex.
    pub values: Vec<GroundStateValue>,
    pub lambda0_estimate: f64,
    pub richardson_estimate: Option<f64>,
    /// Harnack constant used for the `κ^{±d}` envelope check.
    pub envelope_ratio: f64,
    /// The graph is finite and the balls stopped at the component of the origin.
    pub restricted_to_component: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LevelRecord {
    pub n: usize,
    pub lambda: f64,
    pub residual: f64,
    pub interior_size: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct GroundStateReport {
    pub origin: VertexId,
    pub levels: Vec<LevelRecord>,
    pub ground_state: Vec<GroundStateValue>,
    pub lambda0_estimate: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub richardson_estimate_heuristic: Option<f64>,
    pub envelope_ratio: f64,
    pub restricted_to_component: bool,
}

impl GroundStateApprox {
    pub fn report(&self) -> GroundStateReport {
        GroundStateReport {
            origin: self.origin,
            levels: self
                .levels
                .iter()
                .map(|l| LevelRecord { n: l.n, lambda: l.lambda, residual: l.residual, interior_size: l.interior_size })
                .collect(),
            ground_state: self.values.clone(),
            lambda0_estimate: self.lambda0_estimate,
            richardson_estimate_heuristic: self.richardson_estimate,
            envelope_ratio: self.envelope_ratio,
            restricted_to_component: self.restricted_to_component,
        }
    }

    pub fn last(&self) -> &Level {
        self.levels.last().expect("schedule is nonempty")
    }

    /// Converged value at `v`, if any.
    pub fn value(&self, v: VertexId) -> Option<f64> {
        self.values.binary_search_by_key(&v, |g| g.vertex).ok().map(|i| self.values[i].value)
    }
}

/// Harnack constant `κ = (MΓ + ω)/γ` for positive solutions of `Lf = λf`
/// with `λ ≥ inf W`, where `ω = sup W − inf W` over `vertices`. Reduces to
/// `MΓ/γ` for `W ≡ 0`.
pub fn harnack_ratio(op: &EllipticOperator, vertices: &[VertexId]) -> f64 {
    let b = op.bounds();
    let (lo, hi) = vertices
        .iter()
        .map(|&x| op.potential().get(x))
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), w| (lo.min(w), hi.max(w)));
    let omega = if vertices.is_empty() { 0.0 } else { hi - lo };
    (b.max_degree as f64 * b.sup_weight + omega) / b.inf_weight
}

/// Ground state by exhaustion with balls `V_n` around `origin` for `n` in
/// `schedule` (strictly increasing, `n ≥ 1`).
///
/// Levels are solved in parallel and merged in order. Fails if `λ_n`
/// increases by more than `1e-9·max(1, |λ|)` or if some `φ_n` leaves the
/// Harnack envelope `κ^{±d(x₀, y)}`.
pub fn lambda0_infinite(
    op: &mut EllipticOperator,
    origin: VertexId,
    schedule: &[usize],
    opts: &ExhaustionOptions,
) -> Result<GroundStateApprox> {
    let Some(&top) = schedule.last() else {
        return Err(Error::ScheduleTooShort("the level schedule is empty".into()));
    };
    if schedule[0] == 0 || schedule.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter("levels must be positive and strictly increasing".into()));
    }
    op.graph_mut().materialize_ball(origin, top)?;
    let op: &EllipticOperator = op;
    let graph = op.graph();
    let distances: HashMap<VertexId, usize> = graph.materialized_distances(origin, top)?.into_iter().collect();
    let restricted = graph.is_finite() && distances.len() < graph.num_vertices();

    let solved: Vec<Result<Level>> = schedule
        .par_iter()
        .map(|&n| {
            let region = graph.materialized_ball(origin, n)?;
            let pair = lambda0_dirichlet(op, &region, &opts.solver)?;
            let at_origin = pair.eigenfunction.value_or_zero(origin);
            if at_origin <= 0.0 {
                return Err(Error::SignViolation { vertex: origin, value: at_origin });
            }
            let phi = pair.eigenfunction.map(|_, v| v / at_origin);
            let lphi = op.apply(&phi, region.interior())?;
            let normalized_residual = lphi
                .iter()
                .map(|(x, l)| (l - pair.lambda0 * phi.value_or_zero(x)).abs())
                .fold(0.0, f64::max);
            Ok(Level {
                n,
                lambda: pair.lambda0,
                residual: pair.residual,
                normalized_residual,
                interior_size: region.interior().len(),
                iterations: pair.iterations,
                phi,
            })
        })
        .collect();

    let mut levels = Vec::with_capacity(schedule.len());
    for r in solved {
        let level = r?;
        if let Some(prev) = levels.last() {
            let prev: &Level = prev;
            if level.lambda > prev.lambda + 1e-9 * prev.lambda.abs().max(1.0) {
                return Err(Error::MonotonicityViolation { level: level.n, previous: prev.lambda, current: level.lambda });
            }
        }
        levels.push(level);
    }

    let all: Vec<VertexId> = distances.keys().copied().collect();
    let kappa = harnack_ratio(op, &all);
    let ln_kappa = kappa.ln();
    for level in &levels {
        for (y, &value) in level.phi.iter() {
            let d = distances[&y];
            if value == 0.0 && d == level.n {
                continue;
            }
            let (lower, upper) = ((-(d as f64) * ln_kappa).exp(), ((d as f64) * ln_kappa).exp());
            let slack = 1e-9;
            let ok = value > 0.0 && value.ln() >= -(d as f64) * ln_kappa - slack && value.ln() <= (d as f64) * ln_kappa + slack;
            // boundary vertices of a finite ball sit in the interior of the
            // next one; only interior values are constrained
            let interior = level.phi.value(y).is_some() && (value != 0.0 || d < level.n);
            if interior && !ok {
                return Err(Error::EnvelopeViolation { vertex: y, value, lower, upper });
            }
        }
    }

    let last = levels.last().unwrap();
    let mut values: Vec<GroundStateValue> = last
        .phi
        .iter()
        .filter(|(_, &v)| v > 0.0)
        .map(|(y, &value)| {
            let history: Vec<f64> = levels
                .iter()
                .filter_map(|l| l.phi.value(y))
                .filter(|&v| v > 0.0)
                .collect();
            let changes: Vec<f64> = history.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            let converged = changes.len() >= 2 && changes[changes.len() - 2..].iter().all(|&c| c < opts.stabilization_tol);
            GroundStateValue { vertex: y, distance: distances[&y], value, last_change: changes.last().copied(), converged }
        })
        .collect();
    values.sort_by_key(|g| g.vertex);

    let richardson_estimate = if opts.richardson && levels.len() >= 2 {
        let (a, b) = (&levels[levels.len() - 2], &levels[levels.len() - 1]);
        let (n1, n2) = ((a.n * a.n) as f64, (b.n * b.n) as f64);
        Some((n2 * b.lambda - n1 * a.lambda) / (n2 - n1))
    } else {
        None
    };

    Ok(GroundStateApprox {
        origin,
        lambda0_estimate: last.lambda,
        levels,
        values,
        richardson_estimate,
        envelope_ratio: kappa,
        restricted_to_component: restricted,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::operator::Potential;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn lattice_op() -> EllipticOperator {
        EllipticOperator::without_potential(WeightedGraph::lattice(1).unwrap())
    }

    #[test]
    fn three_interior_path() {
        let mut op = lattice_op();
        let r = op.graph_mut().ball(VertexId(0), 2).unwrap();
        let pair = lambda0_dirichlet(&op, &r, &SolverOptions::default()).unwrap();
        assert!((pair.lambda0 - (2.0 - 2.0 * (PI / 4.0).cos())).abs() < 1e-12);
        let g = op.graph();
        let at = |c: i64| pair.eigenfunction.value(g.vertex_at(&[c]).unwrap()).unwrap();
        assert!((at(-1) - at(1)).abs() < 1e-12);
        assert_eq!(at(2), 0.0);
        assert!((pair.eigenfunction.norm2() - 1.0).abs() < 1e-12);

        let cert = positivity_certificate(&pair).unwrap();
        assert!((cert.gap.unwrap() - 2f64.sqrt()).abs() < 1e-10);
    }

    #[test]
    fn single_interior_vertex() {
        let g = WeightedGraph::from_edges([(0, 1, 2.0), (0, 2, 0.5), (1, 3, 1.0)]).unwrap();
        let mut op = EllipticOperator::new(g, Potential::from_values([(VertexId(0), 0.75)]).unwrap()).unwrap();
        let r = op.graph_mut().region([0, 1, 2].map(VertexId)).unwrap();
        assert_eq!(r.interior(), &[VertexId(0), VertexId(2)]);
        let r = op.graph_mut().ball(VertexId(0), 0).unwrap();
        assert!(lambda0_dirichlet(&op, &r, &SolverOptions::default()).is_err());
        let mut z = lattice_op();
        let r1 = z.graph_mut().ball(VertexId(0), 1).unwrap();
        let p = lambda0_dirichlet(&z, &r1, &SolverOptions::default()).unwrap();
        assert_eq!(p.lambda0, 2.0);
        let cert = positivity_certificate(&p).unwrap();
        assert_eq!(cert.gap, None);
    }

    #[test]
    fn rayleigh_examples() {
        let mut z = lattice_op();
        let r = z.graph_mut().ball(VertexId(0), 3).unwrap();
        let d = VertexFunction::delta(r.vertices(), VertexId(0));
        assert_eq!(rayleigh_quotient(&z, &d).unwrap(), 2.0);
        assert_eq!(rayleigh_quotient(&z, &d.scaled(2.0)).unwrap(), 2.0);
        assert!(matches!(rayleigh_quotient(&z, &d.scaled(0.0)), Err(Error::ZeroFunction)));
        let pair = lambda0_dirichlet(&z, &r, &SolverOptions::default()).unwrap();
        assert!((rayleigh_quotient(&z, &pair.eigenfunction).unwrap() - pair.lambda0).abs() < 1e-10);
    }

    #[test]
    fn lattice_exhaustion() {
        let mut z = lattice_op();
        let schedule: Vec<usize> = (1..=50).collect();
        let gs = lambda0_infinite(&mut z, VertexId(0), &schedule, &ExhaustionOptions::default()).unwrap();
        for l in &gs.levels {
            // the ball of radius n has 2n - 1 interior vertices
            let exact = 2.0 - 2.0 * (PI / (2 * l.n) as f64).cos();
            assert!((l.lambda - exact).abs() < 1e-10, "level {}", l.n);
        }
        assert!(gs.lambda0_estimate < 0.005);
        assert!(gs.levels.windows(2).all(|w| w[1].lambda < w[0].lambda));
    }

    #[test]
    fn finite_exhaustion_stabilizes() {
        let g = WeightedGraph::from_edges([(0, 1, 1.0), (1, 2, 2.0), (2, 3, 1.0), (3, 0, 0.5), (1, 4, 1.0)]).unwrap();
        let mut op = EllipticOperator::new(g, Potential::from_values([(VertexId(2), 1.0)]).unwrap()).unwrap();
        let gs = lambda0_infinite(&mut op, VertexId(0), &[1, 2, 3, 4], &ExhaustionOptions::default()).unwrap();
        let whole = DenseMatrix::from_rows(op.compressed_matrix(&(0..5).map(VertexId).collect::<Vec<_>>()).unwrap().to_dense_rows()).unwrap();
        let exact = oracle::dense_eigh(&whole).unwrap().values[0];
        for l in &gs.levels[1..] {
            assert!((l.lambda - exact).abs() < 1e-10);
        }
    }

    #[test]
    fn schedule_validation() {
        let mut z = lattice_op();
        assert!(matches!(lambda0_infinite(&mut z, VertexId(0), &[], &ExhaustionOptions::default()), Err(Error::ScheduleTooShort(_))));
        assert!(lambda0_infinite(&mut z, VertexId(0), &[3, 2], &ExhaustionOptions::default()).is_err());
        let single = lambda0_infinite(&mut z, VertexId(0), &[4], &ExhaustionOptions::default()).unwrap();
        assert_eq!(single.levels.len(), 1);
        assert!(single.values.iter().all(|v| !v.converged));
    }

    #[test]
    fn report_serializes() {
        let mut z = lattice_op();
        let opts = ExhaustionOptions { richardson: true, ..Default::default() };
        let gs = lambda0_infinite(&mut z, VertexId(0), &[5, 10], &opts).unwrap();
        let json = serde_json::to_value(gs.report()).unwrap();
        assert_eq!(json["levels"].as_array().unwrap().len(), 2);
        assert!(json["richardson_estimate_heuristic"].as_f64().unwrap() < gs.lambda0_estimate);
    }

    proptest! {
        #[test]
        fn matches_dense_oracle(
            n in 3usize..14,
            extra in proptest::collection::vec((0usize..14, 0usize..14, 0.5f64..2.0), 0..12),
            w in proptest::collection::vec(0.5f64..2.0, 14),
            pot in proptest::collection::vec(-1.0f64..1.0, 14),
        ) {
            // a path with chords, the two ends forming the boundary
            let mut edges: Vec<(usize, usize, f64)> = (1..n).map(|i| (i - 1, i, w[i])).collect();
            for &(a, b, x) in &extra {
                let (a, b) = (a % n, b % n);
                if a != b && !edges.iter().any(|e| (e.0, e.1) == (a.min(b), a.max(b))) {
                    edges.push((a.min(b), a.max(b), x));
                }
            }
            // pendant vertices outside U
            edges.push((0, n, 1.0));
            edges.push((n - 1, n + 1, 1.0));
            let g = WeightedGraph::from_edges(edges).unwrap();
            let p = Potential::from_values((0..n).map(|i| (VertexId(i), pot[i]))).unwrap();
            let mut op = EllipticOperator::new(g, p).unwrap();
            let r = op.graph_mut().region((0..n).map(VertexId)).unwrap();
            let pair = lambda0_dirichlet(&op, &r, &SolverOptions::default()).unwrap();
            let cert = positivity_certificate(&pair).unwrap();
            prop_assert!((pair.lambda0 - cert.oracle_lambda0.unwrap()).abs() <= 1e-10);
            // any finitely supported function has quotient at least lambda0
            let f = VertexFunction::from_fn(r.vertices(), |v| if r.is_interior(v) { w[v.0] } else { 0.0 });
            prop_assert!(rayleigh_quotient(&op, &f).unwrap() >= pair.lambda0 - 1e-9);
        }
    }
}
