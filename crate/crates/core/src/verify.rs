//! Checkers for the local inequalities: the elliptic maximum principle, the
//! one-edge Harnack inequality, its iterated growth envelope, and the
//! parabolic maximum principle.
//!
//! Hypotheses are verified first and reported as errors when they fail;
//! conclusions are reported as violations with their slack.

use crate::error::{Error, Result};
use crate::graph::{Region, VertexId};
use crate::operator::{EllipticOperator, VertexFunction};
use serde::Serialize;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Violation {
    pub location: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`, negative for a violation of `lhs ≤ rhs`.
    pub slack: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct ViolationReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
    pub passed: bool,
    /// Smallest slack over all checked inequalities.
    pub min_slack: Option<f64>,
    pub notes: Vec<String>,
}

impl ViolationReport {
    fn new() -> Self {
        ViolationReport { passed: true, ..Default::default() }
    }

    // records lhs ≤ rhs up to `allow`
    fn check(&mut self, location: impl FnOnce() -> String, lhs: f64, rhs: f64, allow: f64) {
        self.checked += 1;
        let slack = rhs - lhs;
        self.min_slack = Some(self.min_slack.map_or(slack, |m| m.min(slack)));
        if slack < -allow {
            self.violations.push(Violation { location: location(), lhs, rhs, slack });
            self.passed = false;
        }
    }

    pub fn merge(&mut self, other: ViolationReport) {
        self.checked += other.checked;
        self.passed &= other.passed;
        self.violations.extend(other.violations);
        self.min_slack = match (self.min_slack, other.min_slack) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        self.notes.extend(other.notes);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CheckOptions {
    /// Relative tolerance for hypotheses and conclusions.
    pub tol: f64,
    /// Replace `W` by `W − min(W, 0)` when the potential is somewhere
    /// negative, instead of rejecting the operator.
    pub shift_potential: bool,
}

impl Default for CheckOptions {
    fn default() -> Self {
        CheckOptions { tol: 1e-9, shift_potential: false }
    }
}

fn potential_min(op: &EllipticOperator) -> (f64, Option<VertexId>) {
    let g = op.graph();
    if g.is_finite() {
        g.vertices()
            .map(|v| (op.potential().get(v), Some(v)))
            .fold((f64::INFINITY, None), |a, b| if b.0 < a.0 { b } else { a })
    } else {
        (op.potential().lower_bound(), None)
    }
}

// additive shift making W ≥ 0
fn shift_for(op: &EllipticOperator, opts: &CheckOptions, report: &mut ViolationReport) -> Result<f64> {
    let (m, at) = potential_min(op);
    if m >= 0.0 {
        return Ok(0.0);
    }
    if !opts.shift_potential {
        return Err(Error::NegativePotential { vertex: at.unwrap_or(VertexId(0)), value: m });
    }
    report.notes.push(format!("potential shifted by {}", -m));
    Ok(-m)
}

// Lf(x) + c f(x) at x, with the magnitude of the terms for tolerances
fn shifted_apply(op: &EllipticOperator, f: &VertexFunction, x: VertexId, c: f64) -> Result<(f64, f64)> {
    let fx = f.value(x).ok_or(Error::MissingNeighborValue(x))?;
    let mut scale = (op.potential().get(x) + c).abs() * fx.abs();
    for &(y, a) in op.graph().neighbors(x)? {
        let fy = f.value(y).ok_or(Error::MissingNeighborValue(y))?;
        scale += a * (fx.abs() + fy.abs());
    }
    Ok((op.apply_at(f, x)? + c * fx, scale))
}

fn require_supersolution(op: &EllipticOperator, f: &VertexFunction, at: &[VertexId], c: f64, tol: f64) -> Result<()> {
    for &x in at {
        let (lf, scale) = shifted_apply(op, f, x, c)?;
        if lf < -tol * scale {
            return Err(Error::InputNotSupersolution { vertex: x, value: lf });
        }
    }
    Ok(())
}

fn values_on(f: &VertexFunction, vs: &[VertexId]) -> Result<Vec<f64>> {
    vs.iter().map(|&v| f.value(v).ok_or(Error::MissingNeighborValue(v))).collect()
}

/// If `Lf ≥ 0` on the interior of `region` and `f` has a nonpositive
/// minimum at an interior vertex, `f` is constant on the region.
pub fn check_max_principle(op: &EllipticOperator, region: &Region, f: &VertexFunction, opts: &CheckOptions) -> Result<ViolationReport> {
    let mut report = ViolationReport::new();
    let c = shift_for(op, opts, &mut report)?;
    require_supersolution(op, f, region.interior(), c, opts.tol)?;
    if !region.interior_connected(op.graph()) {
        return Err(Error::DisconnectedInterior);
    }
    let all = values_on(f, region.vertices())?;
    let scale = all.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let allow = opts.tol * scale;
    let min_all = all.iter().copied().fold(f64::INFINITY, f64::min);
    let (x0, min_int) = region
        .interior()
        .iter()
        .map(|&x| (x, f.value_or_zero(x)))
        .fold((None, f64::INFINITY), |a, (x, v)| if v < a.1 { (Some(x), v) } else { a });
    let x0 = match x0 {
        Some(x0) if min_int <= min_all + allow && min_int <= allow => x0,
        _ => {
            report.notes.push("hypothesis not triggered, vacuous pass".into());
            return Ok(report);
        }
    };
    for (&v, &fv) in region.vertices().iter().zip(&all) {
        report.check(|| format!("|f({v}) - f({x0})|"), (fv - min_int).abs(), 0.0, allow);
    }
    Ok(report)
}

/// The Harnack bracket for one edge:
/// `a/(W(x)+Σa_x) ≤ f(x)/f(y) ≤ (W(y)+Σa_y)/a`.
pub fn harnack_bounds(op: &EllipticOperator, x: VertexId, y: VertexId, shift: f64) -> Result<(f64, f64)> {
    let a = op.graph().weight(x, y).ok_or(Error::UnknownEdge(x, y))?;
    let dx = op.potential().get(x) + shift + op.graph().weighted_degree(x)?;
    let dy = op.potential().get(y) + shift + op.graph().weighted_degree(y)?;
    Ok((a / dx, dy / a))
}

/// Harnack inequality on the edge `{x, y}` of interior vertices.
///
/// Requires `Lf ≥ 0` on the interior, `f ≥ 0` on the region and `f > 0` on
/// the interior; the one-edge argument needs no more.
pub fn check_harnack(
    op: &EllipticOperator,
    region: &Region,
    f: &VertexFunction,
    edge: (VertexId, VertexId),
    opts: &CheckOptions,
) -> Result<ViolationReport> {
    let (x, y) = edge;
    if !region.is_interior(x) || !region.is_interior(y) || op.graph().weight(x, y).is_none() {
        return Err(Error::NotInteriorEdge(x, y));
    }
    let mut report = ViolationReport::new();
    let c = shift_for(op, opts, &mut report)?;
    harnack_hypotheses(op, region, f, c, opts.tol)?;
    harnack_edge(op, f, x, y, c, opts.tol, &mut report)?;
    Ok(report)
}

/// [`check_harnack`] on every edge between interior vertices.
pub fn check_harnack_all(op: &EllipticOperator, region: &Region, f: &VertexFunction, opts: &CheckOptions) -> Result<ViolationReport> {
    let mut report = ViolationReport::new();
    let c = shift_for(op, opts, &mut report)?;
    harnack_hypotheses(op, region, f, c, opts.tol)?;
    for &x in region.interior() {
        for &(y, _) in op.graph().neighbors(x)? {
            if x < y && region.is_interior(y) {
                harnack_edge(op, f, x, y, c, opts.tol, &mut report)?;
            }
        }
    }
    Ok(report)
}

fn harnack_hypotheses(op: &EllipticOperator, region: &Region, f: &VertexFunction, c: f64, tol: f64) -> Result<()> {
    for &v in region.vertices() {
        let fv = f.value(v).ok_or(Error::MissingNeighborValue(v))?;
        if fv < 0.0 || fv == 0.0 && region.is_interior(v) {
            return Err(Error::NonpositiveFunction { vertex: v, value: fv });
        }
    }
    require_supersolution(op, f, region.interior(), c, tol)
}

fn harnack_edge(op: &EllipticOperator, f: &VertexFunction, x: VertexId, y: VertexId, c: f64, tol: f64, report: &mut ViolationReport) -> Result<()> {
    let (lower, upper) = harnack_bounds(op, x, y, c)?;
    let r = f.value_or_zero(x) / f.value_or_zero(y);
    report.check(|| format!("lower bound on f({x})/f({y})"), lower, r, tol * lower);
    report.check(|| format!("upper bound on f({x})/f({y})"), r, upper, tol * upper);
    Ok(())
}

/// Iterated Harnack envelope `κ^{−d} ≤ f(x)/f(y) ≤ κ^{d}` with
/// `κ = MΓ/γ` and `d = d(x, y)`, for `f > 0` with `Af ≥ 0`.
///
/// `Af` is checked at every vertex of `f`'s domain whose neighbors all lie
/// in the domain; distances use the materialized graph.
pub fn check_growth_envelope(
    op: &EllipticOperator,
    f: &VertexFunction,
    pairs: &[(VertexId, VertexId)],
    opts: &CheckOptions,
) -> Result<ViolationReport> {
    let b = op.bounds();
    if !(b.inf_weight > 0.0) || !b.sup_weight.is_finite() || b.max_degree == 0 {
        return Err(Error::MetadataMissing("uniform ellipticity bounds γ, Γ and the valence M"));
    }
    let kappa = b.max_degree as f64 * b.sup_weight / b.inf_weight;
    for (v, &fv) in f.iter() {
        if !(fv > 0.0) {
            return Err(Error::HypothesisFailed(format!("f({v}) = {fv} is not positive")));
        }
    }
    let a_only = op.with_potential(crate::operator::Potential::zero())?;
    for &x in f.domain() {
        let nbrs = op.graph().neighbors(x)?;
        if nbrs.iter().all(|(y, _)| f.contains(*y)) {
            let (af, scale) = shifted_apply(&a_only, f, x, 0.0)?;
            if af < -opts.tol * scale {
                return Err(Error::HypothesisFailed(format!("Af({x}) = {af} < 0")));
            }
        }
    }
    let mut report = ViolationReport::new();
    report.notes.push(format!("envelope base MΓ/γ = {kappa}"));
    for &(x, y) in pairs {
        let (fx, fy) = (
            f.value(x).ok_or(Error::MissingNeighborValue(x))?,
            f.value(y).ok_or(Error::MissingNeighborValue(y))?,
        );
        let d = op
            .graph()
            .materialized_distance(x, y, usize::MAX)?
            .ok_or_else(|| Error::HypothesisFailed(format!("{x} and {y} are not connected")))?;
        let upper = kappa.powi(d as i32);
        let lower = 1.0 / upper;
        let r = fx / fy;
        report.check(|| format!("lower envelope for f({x})/f({y}), d = {d}"), lower, r, opts.tol * lower);
        report.check(|| format!("upper envelope for f({x})/f({y}), d = {d}"), r, upper, opts.tol * upper);
    }
    Ok(report)
}

/// A function of (vertex, time) sampled on a uniform time grid.
#[derive(Clone, Debug)]
pub struct TimeSamples {
    pub times: Vec<f64>,
    /// One function per time, each defined on the region.
    pub values: Vec<VertexFunction>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ParabolicDiagnostics {
    pub step: f64,
    /// Largest value of `Lu + ∂u/∂t` plus its finite-difference uncertainty;
    /// negative when strictness is verified.
    pub strictness_margin: f64,
    pub interior_max: f64,
    pub boundary_max: f64,
}

/// Parabolic maximum principle on a finite region: if `Lu + ∂u/∂t < 0` on
/// the interior for all sampled times, the maximum over the region and
/// time grid is attained at `t = 0` or on the boundary.
///
/// `∂u/∂t` is a centered difference (one-sided at the ends); a residual is
/// accepted as negative only when it stays negative after adding the
/// difference-quotient uncertainty `h·|u''|`. An exact solution of the heat
/// equation therefore fails the hypothesis.
pub fn check_parabolic_max(
    op: &EllipticOperator,
    region: &Region,
    samples: &TimeSamples,
    opts: &CheckOptions,
) -> Result<(ViolationReport, ParabolicDiagnostics)> {
    let times = &samples.times;
    let k = times.len();
    if k < 3 || samples.values.len() != k {
        return Err(Error::InvalidSamples("need at least three times with one sample each".into()));
    }
    let h = (times[k - 1] - times[0]) / (k - 1) as f64;
    if !(h > 0.0) || times[0] < 0.0 {
        return Err(Error::InvalidSamples("times must start at t ≥ 0 and increase".into()));
    }
    for (i, &t) in times.iter().enumerate() {
        if (t - (times[0] + i as f64 * h)).abs() > 1e-9 * h {
            return Err(Error::InvalidSamples(format!("time grid is not uniform at index {i}")));
        }
    }
    let mut report = ViolationReport::new();
    let c = shift_for(op, opts, &mut report)?;
    let grid: Vec<Vec<f64>> = samples.values.iter().map(|u| values_on(u, region.vertices())).collect::<Result<_>>()?;
    let pos = |v: VertexId| region.vertices().binary_search(&v).ok();
    let mut margin = f64::NEG_INFINITY;
    for &x in region.interior() {
        let i = pos(x).ok_or(Error::UnknownVertex(x))?;
        for j in 0..k {
            let (lu, scale) = shifted_apply(op, &samples.values[j], x, c)?;
            let (dt, curv) = match j {
                0 => ((grid[1][i] - grid[0][i]) / h, grid[2][i] - 2.0 * grid[1][i] + grid[0][i]),
                j if j == k - 1 => ((grid[j][i] - grid[j - 1][i]) / h, grid[j][i] - 2.0 * grid[j - 1][i] + grid[j - 2][i]),
                j => ((grid[j + 1][i] - grid[j - 1][i]) / (2.0 * h), grid[j + 1][i] - 2.0 * grid[j][i] + grid[j - 1][i]),
            };
            let m = lu + dt + curv.abs() / h + opts.tol * scale;
            margin = margin.max(m);
            if m >= 0.0 {
                return Err(Error::HypothesisFailed(format!(
                    "Lu + du/dt = {} at ({x}, t = {}) is not certifiably negative (uncertainty {})",
                    lu + dt,
                    times[j],
                    curv.abs() / h
                )));
            }
        }
    }
    let mut interior_max = f64::NEG_INFINITY;
    let mut boundary_max = f64::NEG_INFINITY;
    let mut boundary_rate = 0.0f64;
    let mut scale = 0.0f64;
    for (i, &v) in region.vertices().iter().enumerate() {
        for j in 0..k {
            let u = grid[j][i];
            scale = scale.max(u.abs());
            if j == 0 || !region.is_interior(v) {
                boundary_max = boundary_max.max(u);
                if j > 0 {
                    boundary_rate = boundary_rate.max((u - grid[j - 1][i]).abs());
                }
            } else {
                interior_max = interior_max.max(u);
            }
        }
    }
    // the continuous boundary maximum may sit between samples
    let allow = boundary_rate + opts.tol * scale;
    for (i, &v) in region.vertices().iter().enumerate() {
        if region.is_interior(v) {
            for j in 1..k {
                report.check(|| format!("u({v}, {})", times[j]), grid[j][i], boundary_max, allow);
            }
        }
    }
    report.notes.push(format!("grid step {h}, boundary sampling slack {boundary_rate}"));
    Ok((report, ParabolicDiagnostics { step: h, strictness_margin: margin, interior_max, boundary_max }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::WeightedGraph;
    use crate::heat::semigroup_apply;
    use crate::operator::Potential;
    use crate::spectral::{lambda0_dirichlet, SolverOptions};

    fn path(n: usize) -> EllipticOperator {
        EllipticOperator::without_potential(WeightedGraph::from_edges((0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap())
    }

    fn ids(r: std::ops::Range<usize>) -> Vec<VertexId> {
        r.map(VertexId).collect()
    }

    #[test]
    fn max_principle_cases() {
        let mut op = path(6);
        let region = op.graph_mut().region(ids(0..6)).unwrap();
        let opts = CheckOptions::default();
        let five = check_max_principle(&op, &region, &VertexFunction::constant(&ids(0..6), 5.0), &opts).unwrap();
        assert!(five.passed && five.checked == 0);
        assert!(five.notes[0].contains("vacuous"));
        let zero = check_max_principle(&op, &region, &VertexFunction::zeros(&ids(0..6)), &opts).unwrap();
        assert!(zero.passed && zero.checked == 6);
        let pair = lambda0_dirichlet(&op, &region, &SolverOptions::default()).unwrap();
        let r = check_max_principle(&op, &region, &pair.eigenfunction, &opts).unwrap();
        assert!(r.passed);
        let bad = VertexFunction::new(ids(0..6), vec![0.0, 1.0, 3.0, 1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(check_max_principle(&op, &region, &bad, &opts), Err(Error::InputNotSupersolution { .. })));
    }

    #[test]
    fn harnack_on_unit_weights() {
        let mut op = path(5);
        let region = op.graph_mut().region(ids(0..5)).unwrap();
        let (lo, hi) = harnack_bounds(&op, VertexId(1), VertexId(2), 0.0).unwrap();
        assert_eq!((lo, hi), (0.5, 2.0));
        let r = check_harnack(&op, &region, &VertexFunction::constant(&ids(0..5), 3.0), (VertexId(1), VertexId(2)), &CheckOptions::default()).unwrap();
        assert!(r.passed && r.checked == 2);
        let part = op.graph_mut().region(ids(0..4)).unwrap();
        assert!(matches!(
            check_harnack(&op, &part, &VertexFunction::constant(&ids(0..5), 3.0), (VertexId(2), VertexId(3)), &CheckOptions::default()),
            Err(Error::NotInteriorEdge(..))
        ));
        let pair = lambda0_dirichlet(&op, &region, &SolverOptions::default()).unwrap();
        assert!(check_harnack_all(&op, &region, &pair.eigenfunction, &CheckOptions::default()).unwrap().passed);
    }

    #[test]
    fn negative_potential_needs_opt_in() {
        let g = WeightedGraph::from_edges([(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let mut op = EllipticOperator::new(g, Potential::from_values([(VertexId(1), -0.5)]).unwrap()).unwrap();
        let region = op.graph_mut().region(ids(0..3)).unwrap();
        let f = VertexFunction::constant(&ids(0..3), 1.0);
        assert!(matches!(check_max_principle(&op, &region, &f, &CheckOptions::default()), Err(Error::NegativePotential { .. })));
        let opts = CheckOptions { shift_potential: true, ..Default::default() };
        let r = check_max_principle(&op, &region, &f, &opts).unwrap();
        assert!(r.notes.iter().any(|n| n.contains("shifted by 0.5")));
    }

    #[test]
    fn envelope_on_lattice() {
        let mut z = EllipticOperator::without_potential(WeightedGraph::lattice(1).unwrap());
        let ball = z.graph_mut().ball(VertexId(0), 6).unwrap();
        let f = VertexFunction::constant(ball.vertices(), 2.0);
        let pairs: Vec<_> = ball.vertices().iter().map(|&v| (VertexId(0), v)).collect();
        let r = check_growth_envelope(&z, &f, &pairs, &CheckOptions::default()).unwrap();
        assert!(r.passed);
        assert!(r.notes[0].contains("= 2"));
        // e^{x} has Af = (2 − e − 1/e) e^x < 0 on ℤ
        let g = VertexFunction::from_fn(ball.vertices(), |v| (z.graph().site(v).unwrap()[0] as f64).exp());
        assert!(matches!(check_growth_envelope(&z, &g, &pairs, &CheckOptions::default()), Err(Error::HypothesisFailed(_))));
    }

    fn heat_samples(op: &mut EllipticOperator, u0: &VertexFunction, times: &[f64], delta: f64) -> TimeSamples {
        let values = times
            .iter()
            .map(|&t| {
                let u = semigroup_apply(op, u0, t, 1e-14).unwrap().values;
                u.map(|_, v| v - delta * t)
            })
            .collect();
        TimeSamples { times: times.to_vec(), values }
    }

    #[test]
    fn parabolic_max_principle() {
        let mut op = path(6);
        let region = op.graph_mut().region(ids(0..6)).unwrap();
        let u0 = VertexFunction::new(ids(0..6), vec![0.0, 1.0, 3.0, 2.0, 0.5, 1.0]).unwrap();
        let times: Vec<f64> = (0..=200).map(|i| i as f64 * 0.005).collect();
        let s = heat_samples(&mut op, &u0, &times, 0.5);
        let (r, d) = check_parabolic_max(&op, &region, &s, &CheckOptions::default()).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(d.strictness_margin < 0.0);
        let exact = heat_samples(&mut op, &u0, &times, 0.0);
        assert!(matches!(check_parabolic_max(&op, &region, &exact, &CheckOptions::default()), Err(Error::HypothesisFailed(_))));
    }
}
