//! Heat semigroup `P_t = e^{−tL}`, heat kernel, parabolic initial value
//! problems, and the ground-state transform.
//!
//! The exponential action is computed by uniformization: with
//! `Λ = max_x L(x,x)` the matrix `B = I − L/Λ` is entrywise nonnegative with
//! row sums at most 1, and `e^{−τL} = Σ_k Pois(Λτ; k) B^k`. Every term is
//! nonnegative, the truncation error is bounded by the Poisson tail, and
//! rounding errors stay relative to the magnitude of the result.
//!
//! On a generated (infinite) graph the computation runs on a finite domain
//! `D` with Dirichlet truncation. A walk of length `n` that leaves `D`
//! starting at `x` and ending at `y` has `n ≥ d(x, Dᶜ) + d(y, Dᶜ)`, and
//! `‖L‖_∞ ≤ 2aM`, so the truncation changes `(P_t u)(x)` by at most
//! `2‖u‖_∞ Σ_{n≥K} (2aMt)ⁿ/n!` with `K = d(x, Dᶜ) + min_{y∈supp u} d(y, Dᶜ)`.
//! Domains are grown until this leakage fits the error budget.

use crate::error::{Error, Result};
use crate::graph::{BoundsScope, VertexId, WeightedGraph};
use crate::operator::{EllipticOperator, VertexFunction};
use crate::sparse::CsrMatrix;
use crate::spectral::{DirichletEigenpair, GroundStateApprox};
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet, VecDeque};
use std::sync::Arc;

const MAX_RADIUS: usize = 100_000;
// Poisson mean per uniformization step; keeps e^{−Λτ} far from underflow
const STEP_MEAN: f64 = 32.0;

fn ln_factorial(n: usize) -> f64 {
    (2..=n).map(|i| (i as f64).ln()).sum()
}

fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let m = a.max(b);
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// `ln Σ_{n≥k} qⁿ/n!`, an upper bound accurate to a factor of 2 in the
/// geometric remainder.
pub fn ln_exp_tail(q: f64, k: usize) -> f64 {
    if q <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    let lq = q.ln();
    let mut n = k;
    let mut lt = k as f64 * lq - ln_factorial(k);
    let mut acc = f64::NEG_INFINITY;
    // past n = 2q consecutive terms shrink by at least half
    while (n as f64) < 2.0 * q + 1.0 {
        acc = log_add(acc, lt);
        n += 1;
        lt += lq - (n as f64).ln();
    }
    log_add(acc, lt + std::f64::consts::LN_2)
}

/// `Σ_{n≥k} qⁿ/n!`.
pub fn exp_tail(q: f64, k: usize) -> f64 {
    ln_exp_tail(q, k).exp()
}

/// Off-diagonal kernel bound `p_t(x,y) ≤ (2aMt)^k e^{2aMt} / k!` at
/// distance `k = d(x,y)`.
pub fn kernel_decay_bound(a: f64, max_degree: usize, t: f64, k: usize) -> f64 {
    let q = 2.0 * a * max_degree as f64 * t;
    if q == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    (k as f64 * q.ln() + q - ln_factorial(k)).exp()
}

/// Error bounds accompanying a computed solution, in the sup norm over the
/// evaluation window.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct Certificate {
    /// Truncation of the uniformization series.
    pub series: f64,
    /// Dirichlet truncation of an infinite graph to a finite domain.
    pub leakage: f64,
    /// Initial data beyond the data radius.
    pub data_tail: f64,
    /// Floating point rounding estimate.
    pub rounding: f64,
}

impl Certificate {
    pub fn total(&self) -> f64 {
        self.series + self.leakage + self.data_tail + self.rounding
    }
}

#[derive(Clone, Debug)]
pub struct HeatSolution {
    pub t: f64,
    pub values: VertexFunction,
    pub certificate: Certificate,
    pub domain_size: usize,
    /// Radius of the computational domain beyond the data, generated graphs only.
    pub domain_margin: Option<usize>,
    /// Radius around the origin where initial data was sampled.
    pub data_radius: Option<usize>,
}

struct Evolved {
    values: Vec<f64>,
    series: f64,
    // relative rounding factor: |computed − exact| ≤ gamma · (P_t|u|)
    gamma: f64,
}

/// `e^{−tL} u` by uniformization with absolute series error ≤ `budget`.
fn evolve(l: &CsrMatrix, u: &[f64], t: f64, budget: f64) -> Evolved {
    let n = l.dim();
    let lambda = (0..n).map(|i| l.get(i, i)).fold(0.0, f64::max);
    let norm = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if t == 0.0 || lambda == 0.0 || norm == 0.0 {
        return Evolved { values: u.to_vec(), series: 0.0, gamma: 0.0 };
    }
    let rows: Vec<Vec<(usize, f64)>> = (0..n)
        .map(|i| l.row(i).map(|(j, v)| if i == j { (j, 1.0 - v / lambda) } else { (j, -v / lambda) }).collect())
        .collect();
    let b = CsrMatrix::from_rows(rows);
    let width = (0..n).map(|i| b.row(i).count()).max().unwrap_or(1) as f64;
    let steps = (lambda * t / STEP_MEAN).ceil().max(1.0) as usize;
    let mean = lambda * t / steps as f64;
    let delta = budget / (steps as f64 * norm);
    let mut cur = u.to_vec();
    let mut v = vec![0.0; n];
    let mut next = vec![0.0; n];
    let mut series = 0.0;
    let mut matvecs = 0usize;
    for _ in 0..steps {
        let mut w = (-mean).exp();
        let mut acc: Vec<f64> = cur.iter().map(|x| w * x).collect();
        v.copy_from_slice(&cur);
        let mut k = 0usize;
        let tail = loop {
            k += 1;
            b.matvec_into(&v, &mut next);
            std::mem::swap(&mut v, &mut next);
            matvecs += 1;
            w *= mean / k as f64;
            for (a, x) in acc.iter_mut().zip(&v) {
                *a += w * x;
            }
            if (k + 2) as f64 > mean {
                let bound = w * mean / (k + 1) as f64 / (1.0 - mean / (k + 2) as f64);
                if bound <= delta {
                    break bound;
                }
            }
        };
        series += tail * norm;
        cur = acc;
    }
    let gamma = (matvecs as f64 * (width + 3.0) + 4.0) * f64::EPSILON;
    Evolved { values: cur, series, gamma }
}

struct HeatSetup {
    // bound on ‖L‖_∞ along with W ≥ 0
    rate: f64,
}

fn heat_setup(op: &EllipticOperator, t: f64) -> Result<HeatSetup> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::NegativeTime(t));
    }
    let graph = op.graph();
    if graph.is_finite() {
        let mut sup_w: f64 = 0.0;
        for v in graph.vertices() {
            let w = op.potential().get(v);
            if w < 0.0 {
                return Err(Error::NegativePotential { vertex: v, value: w });
            }
            sup_w = sup_w.max(w);
        }
        let norm = op.operator_norm_bound().map_err(|_| Error::UnboundedOperatorMetadata)?;
        Ok(HeatSetup { rate: norm + sup_w })
    } else {
        if !op.potential().is_zero() {
            return Err(Error::NonzeroPotential);
        }
        if op.bounds().scope != BoundsScope::Global {
            return Err(Error::UnboundedOperatorMetadata);
        }
        Ok(HeatSetup { rate: op.operator_norm_bound()? })
    }
}

/// Truncation leakage bound for data of sup norm `norm` and walk length `k`.
fn leakage(norm: f64, q: f64, k: usize) -> f64 {
    if norm == 0.0 {
        0.0
    } else {
        2.0 * norm * exp_tail(q, k)
    }
}

// Evolves `data` (zero off its domain) and reads the result on `window`.
// Finite graphs use the whole vertex set; generated graphs a neighborhood
// of window ∪ data wide enough for the leakage to fit `leak_budget`.
fn evolve_window(
    op: &mut EllipticOperator,
    data: &VertexFunction,
    window: &[VertexId],
    t: f64,
    series_budget: f64,
    leak_budget: f64,
    extra_k: usize,
) -> Result<(Vec<f64>, Evolved, Certificate, usize, Option<usize>)> {
    let setup = heat_setup(op, t)?;
    let q = setup.rate * t;
    let norm = data.sup_norm();
    let (domain, margin, leak) = if op.graph().is_finite() {
        (op.graph().vertices().collect::<Vec<_>>(), None, 0.0)
    } else {
        let mut sources: Vec<VertexId> = window.to_vec();
        sources.extend(data.domain().iter().copied());
        let mut r = 0;
        while leakage(norm, q, 2 * r + 2 + extra_k) > leak_budget {
            r += 1;
            if r > MAX_RADIUS {
                return Err(Error::TruncationTooLarge(MAX_RADIUS));
            }
        }
        op.graph_mut().materialize_neighborhood(&sources, r)?;
        let d: Vec<VertexId> = op.graph().materialized_neighborhood(&sources, r)?.into_iter().map(|p| p.0).collect();
        (d, Some(r), leakage(norm, q, 2 * r + 2 + extra_k))
    };
    let l = op.compressed_matrix(&domain)?;
    let pos: HashMap<VertexId, usize> = domain.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let u: Vec<f64> = domain.iter().map(|&v| data.value_or_zero(v)).collect();
    let ev = evolve(&l, &u, t, series_budget);
    let mut out = Vec::with_capacity(window.len());
    for &x in window {
        let i = *pos.get(&x).ok_or(Error::UnknownVertex(x))?;
        out.push(ev.values[i]);
    }
    let cert = Certificate { series: ev.series, leakage: leak, data_tail: 0.0, rounding: ev.gamma * norm };
    Ok((out, ev, cert, domain.len(), margin))
}

/// `e^{−tL} u₀` on the domain of `u₀`, with sup-norm error at most `err`.
///
/// Requires `W ≥ 0` on finite graphs and `W ≡ 0` with global bounds on
/// generated ones.
pub fn semigroup_apply(op: &mut EllipticOperator, u0: &VertexFunction, t: f64, err: f64) -> Result<HeatSolution> {
    heat_setup(op, t)?;
    if t == 0.0 {
        return Ok(HeatSolution {
            t,
            values: u0.clone(),
            certificate: Certificate::default(),
            domain_size: u0.len(),
            domain_margin: None,
            data_radius: None,
        });
    }
    let window = u0.domain().to_vec();
    let (vals, _, certificate, domain_size, margin) = evolve_window(op, u0, &window, t, err / 2.0, err / 2.0, 0)?;
    Ok(HeatSolution {
        t,
        values: VertexFunction::new(window, vals)?,
        certificate,
        domain_size,
        domain_margin: margin,
        data_radius: None,
    })
}

/// `p_t(x, ·)` on the ball of radius `radius` around `x`.
#[derive(Clone, Debug)]
pub struct HeatKernelSlice {
    pub source: VertexId,
    pub t: f64,
    pub values: VertexFunction,
    pub distances: Vec<usize>,
    /// Certifies `Σ_{d(x,y)>R} p_t(x,y) ≤ tail_bound`.
    pub tail_bound: f64,
    pub certificate: Certificate,
    /// `max_y p_t(x,y)·d(x,y)!` over the slice.
    pub empirical_constant: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelEntry {
    pub vertex: VertexId,
    pub distance: usize,
    pub value: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct KernelReport {
    pub source: VertexId,
    pub t: f64,
    pub entries: Vec<KernelEntry>,
    pub tail_bound: f64,
    pub error_bound: f64,
    pub empirical_constant: f64,
    pub method: &'static str,
}

impl HeatKernelSlice {
    pub fn report(&self) -> KernelReport {
        KernelReport {
            source: self.source,
            t: self.t,
            entries: self
                .values
                .iter()
                .zip(&self.distances)
                .map(|((vertex, &value), &distance)| KernelEntry { vertex, distance, value })
                .collect(),
            tail_bound: self.tail_bound,
            error_bound: self.certificate.total(),
            empirical_constant: self.empirical_constant,
            method: "uniformization",
        }
    }
}

pub fn heat_kernel(op: &mut EllipticOperator, x: VertexId, t: f64, radius: usize, err: f64) -> Result<HeatKernelSlice> {
    heat_setup(op, t)?;
    let ball = op.graph_mut().ball(x, radius)?;
    let dist: HashMap<VertexId, usize> = op.graph().materialized_distances(x, radius)?.into_iter().collect();
    let u0 = VertexFunction::delta(ball.vertices(), x);
    let sol = semigroup_apply(op, &u0, t, err)?;
    let b = op.bounds();
    let q = 2.0 * b.sup_weight * b.max_degree as f64 * t;
    let tail_bound = if q == 0.0 { 0.0 } else { (q + ln_exp_tail(b.max_degree as f64 * q, radius + 1)).exp() };
    let distances: Vec<usize> = ball.vertices().iter().map(|v| dist[v]).collect();
    let empirical_constant = sol
        .values
        .values()
        .iter()
        .zip(&distances)
        .map(|(&p, &d)| if p > 0.0 { (p.ln() + ln_factorial(d)).exp() } else { 0.0 })
        .fold(0.0, f64::max);
    Ok(HeatKernelSlice {
        source: x,
        t,
        values: sol.values,
        distances,
        tail_bound,
        certificate: sol.certificate,
        empirical_constant,
    })
}

/// Declared growth `|u₀(y)| ≤ c₁ e^{c₂ d(x₀, y)}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Growth {
    pub c1: f64,
    pub c2: f64,
}

pub type DataFn = Arc<dyn Fn(VertexId, usize) -> f64 + Send + Sync>;

/// Initial data for [`solve_ivp`].
#[derive(Clone)]
pub enum InitialData {
    /// Finitely supported values (zero off the domain).
    Values(VertexFunction),
    /// `u₀(y) = f(y, d(origin, y))`, possibly unbounded.
    Function { origin: VertexId, f: DataFn, growth: Option<Growth> },
}

impl std::fmt::Debug for InitialData {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            InitialData::Values(v) => f.debug_tuple("Values").field(&v.len()).finish(),
            InitialData::Function { origin, growth, .. } => {
                f.debug_struct("Function").field("origin", origin).field("growth", growth).finish()
            }
        }
    }
}

// Σ_{j>ρ} M^j c₁ e^{c₂ j} (q^{j−r} e^q/(j−r)!) for ρ ≥ r, in log form
fn ln_data_tail(m: f64, growth: Growth, q: f64, r: usize, rho: usize) -> f64 {
    if q == 0.0 {
        return f64::NEG_INFINITY;
    }
    let base = m.ln() + growth.c2;
    growth.c1.ln() + q + r as f64 * base + ln_exp_tail(base.exp() * q, rho - r + 1)
}

fn window_radius(graph: &mut WeightedGraph, origin: VertexId, window: &[VertexId]) -> Result<usize> {
    let mut r = 1;
    loop {
        graph.materialize_ball(origin, r)?;
        let d: HashMap<VertexId, usize> = graph.materialized_distances(origin, r)?.into_iter().collect();
        if window.iter().all(|w| d.contains_key(w)) {
            return Ok(window.iter().map(|w| d[w]).max().unwrap_or(0));
        }
        if graph.is_finite() && d.len() == graph.num_vertices() || r > MAX_RADIUS {
            return Err(Error::InvalidParameter("window is not reachable from the origin".into()));
        }
        r *= 2;
    }
}

fn sample(
    graph: &WeightedGraph,
    origin: VertexId,
    f: &DataFn,
    growth: Option<Growth>,
    radius: usize,
) -> Result<VertexFunction> {
    let pts = graph.materialized_distances(origin, radius)?;
    let domain: Vec<VertexId> = pts.iter().map(|p| p.0).collect();
    let mut values = Vec::with_capacity(pts.len());
    for &(v, d) in &pts {
        let x = f(v, d);
        if let Some(g) = growth {
            let cap = g.c1 * (g.c2 * d as f64).exp();
            if x.abs() > cap * (1.0 + 1e-12) {
                return Err(Error::InvalidParameter(format!(
                    "initial data |u0({v})| = {} exceeds the declared growth bound {cap}",
                    x.abs()
                )));
            }
        }
        values.push(x);
    }
    VertexFunction::new(domain, values)
}

/// `u(x, t) = Σ_y p_t(x,y) u₀(y)` on `window`, with total error at most
/// `err`. Data that grows exponentially is admitted on generated graphs
/// when its growth is declared.
pub fn solve_ivp(op: &mut EllipticOperator, data: &InitialData, t: f64, window: &[VertexId], err: f64) -> Result<HeatSolution> {
    let setup = heat_setup(op, t)?;
    match data {
        InitialData::Values(v) => {
            let (vals, _, certificate, domain_size, margin) = evolve_window(op, v, window, t, err / 2.0, err / 2.0, 0)?;
            Ok(HeatSolution {
                t,
                values: VertexFunction::new(window.to_vec(), vals)?,
                certificate,
                domain_size,
                domain_margin: margin,
                data_radius: None,
            })
        }
        InitialData::Function { origin, f, growth } => {
            if op.graph().is_finite() {
                let n = op.graph().num_vertices();
                let radius = window_radius(op.graph_mut(), *origin, &[])?.max(n);
                let u0 = sample(op.graph(), *origin, f, *growth, radius)?;
                if u0.len() < n {
                    return Err(Error::InvalidParameter("initial data needs a connected graph".into()));
                }
                return solve_ivp(op, &InitialData::Values(u0), t, window, err);
            }
            let growth = growth.ok_or(Error::GrowthNotDeclared)?;
            let r_w = window_radius(op.graph_mut(), *origin, window)?;
            let m = op.bounds().max_degree as f64;
            let q = setup.rate * t;
            let mut rho = r_w;
            while ln_data_tail(m, growth, q, r_w, rho) > (err / 3.0).ln() {
                rho += 1;
                if rho > MAX_RADIUS {
                    return Err(Error::TruncationTooLarge(MAX_RADIUS));
                }
            }
            solve_ivp_truncated(op, *origin, f, growth, t, window, rho, err)
        }
    }
}

/// [`solve_ivp`] with the data radius fixed to `data_radius`.
pub fn solve_ivp_truncated(
    op: &mut EllipticOperator,
    origin: VertexId,
    f: &DataFn,
    growth: Growth,
    t: f64,
    window: &[VertexId],
    data_radius: usize,
    err: f64,
) -> Result<HeatSolution> {
    let setup = heat_setup(op, t)?;
    let r_w = window_radius(op.graph_mut(), origin, window)?;
    let rho = data_radius.max(r_w);
    op.graph_mut().materialize_ball(origin, rho)?;
    let u0 = sample(op.graph(), origin, f, Some(growth), rho)?;
    let m = op.bounds().max_degree as f64;
    let q = setup.rate * t;
    let data_tail = if op.graph().is_finite() { 0.0 } else { ln_data_tail(m, growth, q, r_w, rho).exp() };
    // every window vertex lies rho − r_w deeper inside than the data support
    let (vals, _, mut certificate, domain_size, margin) =
        evolve_window(op, &u0, window, t, err / 3.0, err / 3.0, rho - r_w)?;
    certificate.data_tail = data_tail;
    Ok(HeatSolution {
        t,
        values: VertexFunction::new(window.to_vec(), vals)?,
        certificate,
        domain_size,
        domain_margin: margin,
        data_radius: Some(rho),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CrosscheckReport {
    pub steps: usize,
    pub step: f64,
    pub stability_limit: f64,
    pub max_deviation: f64,
    /// Richardson estimate of the time-stepping error.
    pub stepper_error: f64,
    pub semigroup_error: f64,
    pub rounding: f64,
    pub combined_certificate: f64,
    pub within_certificate: bool,
}

fn rk4(l: &CsrMatrix, u0: &[f64], t: f64, steps: usize) -> Vec<f64> {
    let h = t / steps as f64;
    let n = u0.len();
    let mut u = u0.to_vec();
    let mut tmp = vec![0.0; n];
    let f = |x: &[f64], out: &mut [f64]| {
        l.matvec_into(x, out);
        out.iter_mut().for_each(|v| *v = -*v);
    };
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for _ in 0..steps {
        f(&u, &mut k1);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * h * k1[i];
        }
        f(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = u[i] + 0.5 * h * k2[i];
        }
        f(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = u[i] + h * k3[i];
        }
        f(&tmp, &mut k4);
        for i in 0..n {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    u
}

/// Integrates `du/dt = −Lu` with classical RK4 on the domain of `u₀`
/// (Dirichlet truncation) and compares with the uniformization result on
/// the same matrix. A step above `2/‖L‖_∞` is an error unless
/// `auto_reduce` is set.
pub fn ivp_timestep_crosscheck(
    op: &EllipticOperator,
    u0: &VertexFunction,
    t: f64,
    steps: usize,
    auto_reduce: bool,
) -> Result<CrosscheckReport> {
    if !(t >= 0.0) {
        return Err(Error::NegativeTime(t));
    }
    let l = op.compressed_matrix(u0.domain())?;
    let norm = l.max_abs_row_sum();
    let limit = if norm > 0.0 { 2.0 / norm } else { f64::INFINITY };
    let mut steps = steps.max(1);
    if t / steps as f64 > limit {
        if !auto_reduce {
            return Err(Error::StepTooLarge { step: t / steps as f64, limit });
        }
        steps = (t / limit).ceil() as usize;
    }
    let u = u0.values();
    let unorm = u0.sup_norm();
    let coarse = rk4(&l, u, t, steps);
    let fine = rk4(&l, u, t, 2 * steps);
    let reference = evolve(&l, u, t, 1e-15 * unorm.max(f64::MIN_POSITIVE));
    let stepper_error = coarse.iter().zip(&fine).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / 15.0;
    let max_deviation = fine.iter().zip(&reference.values).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let width = (0..l.dim()).map(|i| l.row(i).count()).max().unwrap_or(1) as f64;
    let rounding = 8.0 * steps as f64 * (width + 4.0) * f64::EPSILON * unorm + reference.gamma * unorm;
    let semigroup_error = reference.series;
    let combined_certificate = 2.0 * stepper_error + semigroup_error + rounding;
    Ok(CrosscheckReport {
        steps: 2 * steps,
        step: t / (2 * steps) as f64,
        stability_limit: limit,
        max_deviation,
        stepper_error,
        semigroup_error,
        rounding,
        combined_certificate,
        within_certificate: max_deviation <= combined_certificate,
    })
}

/// Positive solution `φ` of `Lφ = λ₀φ` on `interior`, known on a finite
/// set containing the interior and its neighbors.
#[derive(Clone, Debug)]
pub struct GroundState {
    pub phi: VertexFunction,
    pub lambda0: f64,
    /// Where the eigen-equation holds and `φ > 0`.
    pub interior: Vec<VertexId>,
    /// `max_{interior} |Lφ − λ₀φ|`.
    pub residual: f64,
    /// Vertex where `φ` is normalized, when known.
    pub origin: Option<VertexId>,
}

impl GroundState {
    pub fn new(op: &EllipticOperator, phi: VertexFunction, lambda0: f64, interior: Vec<VertexId>, origin: Option<VertexId>) -> Result<Self> {
        for &x in &interior {
            let v = phi.value(x).ok_or(Error::MissingNeighborValue(x))?;
            if v <= 0.0 {
                return Err(Error::NonpositiveGroundState { vertex: x, value: v });
            }
        }
        let lphi = op.apply(&phi, &interior)?;
        let residual = lphi.iter().map(|(x, l)| (l - lambda0 * phi.value_or_zero(x)).abs()).fold(0.0, f64::max);
        Ok(GroundState { phi, lambda0, interior, residual, origin })
    }

    pub fn from_eigenpair(op: &EllipticOperator, pair: &DirichletEigenpair) -> Result<Self> {
        Self::new(op, pair.eigenfunction.clone(), pair.lambda0, pair.matrix.index.clone(), None)
    }

    /// The last exhaustion level, normalized at the origin.
    pub fn from_exhaustion(op: &EllipticOperator, gs: &GroundStateApprox) -> Result<Self> {
        let level = gs.last();
        let interior: Vec<VertexId> = level.phi.iter().filter(|(_, &v)| v > 0.0).map(|(x, _)| x).collect();
        let region = crate::graph::Region::from_vertices(op.graph(), level.phi.domain().iter().copied())?;
        let interior: Vec<VertexId> = interior.into_iter().filter(|&x| region.is_interior(x)).collect();
        Self::new(op, level.phi.clone(), level.lambda, interior, Some(gs.origin))
    }
}

/// Generator of the conjugated semigroup:
/// `Ãu(x) = Σ_{y∼x} a_{x,y} (φ(y)/φ(x)) (u(x) − u(y))`.
#[derive(Clone, Debug)]
pub struct GroundStateTransform {
    pub phi: VertexFunction,
    pub lambda0: f64,
    /// Oriented coefficients `(x, y) ↦ a_{x,y} φ(y)/φ(x)`.
    pub coefficients: BTreeMap<(VertexId, VertexId), f64>,
    /// Vertices where `Ã` is defined: interior vertices whose neighbors all
    /// have `φ > 0`.
    pub support: Vec<VertexId>,
    pub origin: Option<VertexId>,
}

pub fn htransform_generator(op: &EllipticOperator, gs: &GroundState) -> Result<GroundStateTransform> {
    let mut coefficients = BTreeMap::new();
    let mut support = Vec::new();
    for &x in &gs.interior {
        let px = gs.phi.value_or_zero(x);
        if px <= 0.0 {
            return Err(Error::NonpositiveGroundState { vertex: x, value: px });
        }
        let nbrs = op.graph().neighbors(x)?;
        if nbrs.iter().any(|(y, _)| gs.phi.value_or_zero(*y) <= 0.0) {
            continue;
        }
        for &(y, a) in nbrs {
            coefficients.insert((x, y), a * gs.phi.value_or_zero(y) / px);
        }
        support.push(x);
    }
    if support.is_empty() {
        return Err(Error::EmptyInterior);
    }
    Ok(GroundStateTransform { phi: gs.phi.clone(), lambda0: gs.lambda0, coefficients, support, origin: gs.origin })
}

impl GroundStateTransform {
    pub fn coefficient(&self, x: VertexId, y: VertexId) -> Option<f64> {
        self.coefficients.get(&(x, y)).copied()
    }

    /// `Ãu` on the support.
    pub fn apply(&self, u: &VertexFunction) -> Result<VertexFunction> {
        let mut out = Vec::with_capacity(self.support.len());
        let mut iter = self.coefficients.iter().peekable();
        for &x in &self.support {
            let ux = u.value(x).ok_or(Error::MissingNeighborValue(x))?;
            let mut s = 0.0;
            while let Some((&(a, _), _)) = iter.peek() {
                if a < x {
                    iter.next();
                } else {
                    break;
                }
            }
            while let Some((&(a, y), &c)) = iter.peek() {
                if a != x {
                    break;
                }
                let uy = u.value(y).ok_or(Error::MissingNeighborValue(y))?;
                s += c * (ux - uy);
                iter.next();
            }
            out.push(s);
        }
        VertexFunction::new(self.support.clone(), out)
    }
}

/// `P̃_t u₀ = e^{λ₀t} φ⁻¹ P_t(φ u₀)` at the vertices of `u₀`'s domain
/// where `φ > 0`.
///
/// On generated graphs `φ` is known on a finite set only; the certificate
/// then also carries the contribution the true ground state could make
/// beyond it, bounded by the Harnack envelope `φ(y) ≤ κ^{d(x₀,y)} φ(x₀)`.
pub fn htransform_semigroup(
    op: &mut EllipticOperator,
    tr: &GroundStateTransform,
    u0: &VertexFunction,
    t: f64,
    err: f64,
) -> Result<HeatSolution> {
    let setup = heat_setup(op, t)?;
    let window: Vec<VertexId> = u0.domain().iter().copied().filter(|&x| tr.phi.value_or_zero(x) > 0.0).collect();
    let data = VertexFunction::from_fn(tr.phi.domain(), |y| tr.phi.value_or_zero(y) * u0.value_or_zero(y));
    let envelope = if op.graph().is_finite() {
        None
    } else {
        let b = op.bounds();
        if b.scope != BoundsScope::Global || !(b.inf_weight > 0.0) {
            return Err(Error::EnvelopeUnavailable);
        }
        Some(b.max_degree as f64 * b.sup_weight / b.inf_weight)
    };
    let (vals, _, cert, domain_size, margin) = evolve_window(op, &data, &window, t, err / 2.0, err / 2.0, 0)?;
    let scale = (tr.lambda0 * t).exp();
    let phi_min = window.iter().map(|&x| tr.phi.value_or_zero(x)).fold(f64::INFINITY, f64::min);
    let values: Vec<f64> = window.iter().zip(&vals).map(|(&x, v)| scale * v / tr.phi.value_or_zero(x)).collect();
    let factor = if window.is_empty() { 0.0 } else { scale / phi_min };
    let mut certificate = Certificate {
        series: factor * cert.series,
        leakage: factor * cert.leakage,
        data_tail: 0.0,
        rounding: factor * cert.rounding,
    };
    if let (Some(kappa), Some(origin)) = (envelope, tr.origin) {
        // ρ: every vertex within ρ of the origin carries a known positive φ
        let known = |g: &WeightedGraph, r: usize| -> Result<bool> {
            Ok(g.materialized_distances(origin, r)?.iter().all(|(v, _)| tr.phi.value_or_zero(*v) > 0.0))
        };
        let mut rho = 0;
        while known(op.graph(), rho + 1).unwrap_or(false) {
            rho += 1;
        }
        let r_w = window_radius(op.graph_mut(), origin, &window)?;
        if rho >= r_w {
            let m = op.bounds().max_degree as f64;
            let growth = Growth { c1: u0.sup_norm() * tr.phi.value_or_zero(origin), c2: kappa.ln() };
            certificate.data_tail = factor * ln_data_tail(m, growth, setup.rate * t, r_w, rho).exp();
        } else {
            certificate.data_tail = f64::INFINITY;
        }
    }
    Ok(HeatSolution {
        t,
        values: VertexFunction::new(window, values)?,
        certificate,
        domain_size,
        domain_margin: margin,
        data_radius: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessPoint {
    pub t: f64,
    pub max_deviation: f64,
    pub worst_vertex: Option<VertexId>,
    /// Certificate at the vertex with the smallest margin.
    pub certificate: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CompletenessReport {
    pub lambda0: f64,
    pub tolerance: f64,
    pub points: Vec<CompletenessPoint>,
    pub max_deviation: f64,
    pub passed: bool,
}

// distance from x to the nearest vertex outside `set`, if any is reachable
fn distance_to_complement(graph: &WeightedGraph, set: &HashSet<VertexId>, x: VertexId) -> Result<Option<usize>> {
    if !set.contains(&x) {
        return Ok(Some(0));
    }
    let mut seen = HashSet::from([x]);
    let mut queue = VecDeque::from([(x, 0usize)]);
    while let Some((v, d)) = queue.pop_front() {
        for &(y, _) in graph.neighbors(v)? {
            if !set.contains(&y) {
                return Ok(Some(d + 1));
            }
            if seen.insert(y) {
                queue.push_back((y, d + 1));
            }
        }
    }
    Ok(None)
}

/// Checks `P_t φ = e^{−λ₀t} φ` on `window` for each `t` in `times`.
///
/// The deviation `|e^{λ₀t}(P_tφ)(x)/φ(x) − 1|` passes when it is at most
/// `tol` plus a certificate covering the numerical error, the eigen-residual
/// (`t·‖Lφ − λ₀φ‖_∞`) and, when `φ` solves the equation only on part of
/// the graph, the leakage of the semigroup out of that part.
pub fn completeness_check(
    op: &mut EllipticOperator,
    gs: &GroundState,
    times: &[f64],
    window: &[VertexId],
    tol: f64,
) -> Result<CompletenessReport> {
    let interior: HashSet<VertexId> = gs.interior.iter().copied().collect();
    for &x in window {
        if !interior.contains(&x) {
            return Err(Error::NonpositiveGroundState { vertex: x, value: gs.phi.value_or_zero(x) });
        }
    }
    let phi_norm = gs.phi.sup_norm();
    let mut points = Vec::with_capacity(times.len());
    for &t in times {
        let setup = heat_setup(op, t)?;
        let q = setup.rate * t;
        let (vals, ev, cert, _, _) = evolve_window(op, &gs.phi, window, t, 1e-15 * phi_norm, 1e-15 * phi_norm, 0)?;
        let scale = (gs.lambda0 * t).exp();
        let mut point = CompletenessPoint { t, max_deviation: 0.0, worst_vertex: None, certificate: 0.0, passed: true };
        let mut worst_margin = f64::INFINITY;
        for (&x, &u) in window.iter().zip(&vals) {
            let px = gs.phi.value_or_zero(x);
            let dev = (scale * u / px - 1.0).abs();
            let leak = match distance_to_complement(op.graph(), &interior, x)? {
                Some(d) => leakage(phi_norm, q, d + 1),
                None => 0.0,
            };
            let numeric = cert.series + cert.leakage + ev.gamma * u.abs();
            let c = scale / px * (leak + t * gs.residual + numeric) + 4.0 * f64::EPSILON;
            if dev > point.max_deviation || point.worst_vertex.is_none() {
                point.max_deviation = dev.max(point.max_deviation);
            }
            let margin = tol + c - dev;
            if margin < worst_margin {
                worst_margin = margin;
                point.worst_vertex = Some(x);
                point.certificate = c;
            }
        }
        point.passed = worst_margin >= 0.0;
        points.push(point);
    }
    let max_deviation = points.iter().map(|p| p.max_deviation).fold(0.0, f64::max);
    let passed = points.iter().all(|p| p.passed);
    Ok(CompletenessReport { lambda0: gs.lambda0, tolerance: tol, points, max_deviation, passed })
}
