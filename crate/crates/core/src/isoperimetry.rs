//! Isoperimetric constants and the two-sided bounds they give on `λ₀`.
//!
//! `h_A(U) = Σ_{x∈int U, y∈∂U, x∼y} √a_{x,y} / #U` and
//! `β₁(U) = Σ_{x∈U, y∉U, x∼y} a_{x,y} / #U`, each taken literally.
//! In particular `h_A` vanishes on any set with empty interior, so the
//! exhaustive minimum over all subsets is 0; heuristic families only
//! consider sets with nonempty interior, which is where `h_A` carries
//! information.

use crate::error::{Error, Result};
use crate::graph::{Region, VertexId};
use crate::operator::EllipticOperator;
use crate::oracle::MAX_SUBSET_UNIVERSE;
use crate::spectral::{lambda0_dirichlet, SolverOptions};
use rayon::prelude::*;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap, HashSet};

fn normalized(vertices: &[VertexId]) -> Result<Vec<VertexId>> {
    if vertices.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut vs = vertices.to_vec();
    vs.sort_unstable();
    vs.dedup();
    Ok(vs)
}

/// `h_A(U)` with interior and boundary taken in the ambient graph.
pub fn h_constant(op: &EllipticOperator, vertices: &[VertexId]) -> Result<f64> {
    let vs = normalized(vertices)?;
    let region = Region::from_vertices(op.graph(), vs.iter().copied())?;
    let mut num = 0.0;
    for &x in region.interior() {
        for &(y, a) in op.graph().neighbors(x)? {
            if region.contains(y) && !region.is_interior(y) {
                num += a.sqrt();
            }
        }
    }
    Ok(num / vs.len() as f64)
}

/// `Σ_{x∈U, y∉U, x∼y} a_{x,y} / #U`, the Rayleigh quotient of `χ_U`.
pub fn beta1_quotient(op: &EllipticOperator, vertices: &[VertexId]) -> Result<f64> {
    let vs = normalized(vertices)?;
    let set: HashSet<VertexId> = vs.iter().copied().collect();
    let mut num = 0.0;
    for &x in &vs {
        for &(y, a) in op.graph().neighbors(x)? {
            if !set.contains(&y) {
                num += a;
            }
        }
    }
    Ok(num / vs.len() as f64)
}

/// `β²/(2M)`.
pub fn cheeger_lower_bound(beta: f64, max_degree: usize) -> f64 {
    beta * beta / (2.0 * max_degree as f64)
}

/// Which finite sets to minimize over.
#[derive(Clone, Debug, PartialEq)]
pub enum SubsetFamily {
    /// Every nonempty subset of `universe` (at most 20 vertices).
    Exhaustive { universe: Vec<VertexId> },
    /// Balls of radius `0..=max_radius` around `origin`.
    Balls { origin: VertexId, max_radius: usize },
    /// Grow each seed by the neighbor that minimizes `h_A` of the enlarged
    /// set, `steps` times; every intermediate set is examined. While no
    /// enlargement has an interior, the `β₁` quotient decides instead.
    GreedyGrowth { seeds: Vec<VertexId>, steps: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Heuristic,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IsoperimetricReport {
    pub mode: Mode,
    pub subsets_examined: usize,
    /// Minimum of `h_A` over the family: an upper bound on β.
    pub beta_upper: f64,
    pub witness: Vec<VertexId>,
    /// Minimum of the `β₁` quotient over the family: an upper bound on `λ₀`.
    pub beta1_upper: f64,
    pub beta1_witness: Vec<VertexId>,
    /// `beta_upper²/(2M)`.
    pub cheeger_lower_bound: f64,
    pub max_degree: usize,
}

#[derive(Clone, Debug)]
struct Best {
    value: f64,
    witness: Vec<VertexId>,
}

impl Best {
    fn better_than(&self, other: &Best) -> bool {
        match self.value.total_cmp(&other.value) {
            Ordering::Less => true,
            Ordering::Greater => false,
            Ordering::Equal => self.witness < other.witness,
        }
    }

    fn min(a: Option<Best>, b: Option<Best>) -> Option<Best> {
        match (a, b) {
            (Some(a), Some(b)) => Some(if b.better_than(&a) { b } else { a }),
            (a, b) => a.or(b),
        }
    }

    fn offer(slot: &mut Option<Best>, value: f64, witness: impl FnOnce() -> Vec<VertexId>) {
        let replacement = match slot.as_ref() {
            None => Some(witness()),
            Some(b) if value < b.value => Some(witness()),
            Some(b) if value == b.value => {
                let w = witness();
                (w < b.witness).then_some(w)
            }
            _ => None,
        };
        if let Some(witness) = replacement {
            *slot = Some(Best { value, witness });
        }
    }
}

// Precomputed adjacency of a small universe so that subsets are bitmasks.
struct MaskEvaluator {
    vertices: Vec<VertexId>,
    nbr_mask: Vec<u32>,
    has_outside: Vec<bool>,
    // (local index or None, sqrt a, a) in adjacency order
    nbrs: Vec<Vec<(Option<usize>, f64, f64)>>,
}

impl MaskEvaluator {
    fn new(op: &EllipticOperator, universe: &[VertexId]) -> Result<Self> {
        let vertices = normalized(universe)?;
        if vertices.len() > MAX_SUBSET_UNIVERSE {
            return Err(Error::TooLarge { size: vertices.len(), limit: MAX_SUBSET_UNIVERSE });
        }
        let pos: HashMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut nbr_mask = Vec::new();
        let mut has_outside = Vec::new();
        let mut nbrs = Vec::new();
        for &x in &vertices {
            let mut m = 0u32;
            let mut out = false;
            let mut list = Vec::new();
            for &(y, a) in op.graph().neighbors(x)? {
                let j = pos.get(&y).copied();
                match j {
                    Some(j) => m |= 1 << j,
                    None => out = true,
                }
                list.push((j, a.sqrt(), a));
            }
            nbr_mask.push(m);
            has_outside.push(out);
            nbrs.push(list);
        }
        Ok(MaskEvaluator { vertices, nbr_mask, has_outside, nbrs })
    }

    fn interior(&self, mask: u32) -> u32 {
        let mut int = 0;
        for i in 0..self.vertices.len() {
            if mask & (1 << i) != 0 && !self.has_outside[i] && self.nbr_mask[i] & !mask == 0 {
                int |= 1 << i;
            }
        }
        int
    }

    // same summation order as `h_constant`
    fn h(&self, mask: u32) -> f64 {
        let int = self.interior(mask);
        let mut num = 0.0;
        for i in 0..self.vertices.len() {
            if int & (1 << i) == 0 {
                continue;
            }
            for &(j, s, _) in &self.nbrs[i] {
                if let Some(j) = j {
                    if mask & (1 << j) != 0 && int & (1 << j) == 0 {
                        num += s;
                    }
                }
            }
        }
        num / mask.count_ones() as f64
    }

    // same summation order as `beta1_quotient`
    fn beta1(&self, mask: u32) -> f64 {
        let mut num = 0.0;
        for i in 0..self.vertices.len() {
            if mask & (1 << i) == 0 {
                continue;
            }
            for &(j, _, a) in &self.nbrs[i] {
                if j.map_or(true, |j| mask & (1 << j) == 0) {
                    num += a;
                }
            }
        }
        num / mask.count_ones() as f64
    }

    fn subset(&self, mask: u32) -> Vec<VertexId> {
        (0..self.vertices.len()).filter(|i| mask & (1 << i) != 0).map(|i| self.vertices[i]).collect()
    }
}

/// Exhaustive minima of `h_A` and of the `β₁` quotient over the nonempty
/// subsets of `universe`, in parallel with deterministic tie-breaking.
fn exhaustive(op: &EllipticOperator, universe: &[VertexId]) -> Result<(usize, Best, Best)> {
    let ev = MaskEvaluator::new(op, universe)?;
    let total: u32 = 1 << ev.vertices.len();
    let chunk = 1u32 << 12;
    let chunks: Vec<u32> = (0..total.div_ceil(chunk)).collect();
    let (h, b1) = chunks
        .par_iter()
        .map(|&c| {
            let mut h = None;
            let mut b1 = None;
            for mask in (c * chunk).max(1)..((c + 1) * chunk).min(total) {
                Best::offer(&mut h, ev.h(mask), || ev.subset(mask));
                Best::offer(&mut b1, ev.beta1(mask), || ev.subset(mask));
            }
            (h, b1)
        })
        .reduce(|| (None, None), |a, b| (Best::min(a.0, b.0), Best::min(a.1, b.1)));
    match (h, b1) {
        (Some(h), Some(b1)) => Ok(((total - 1) as usize, h, b1)),
        _ => Err(Error::FamilyEmpty),
    }
}

/// Candidate sets produced by a heuristic family, each sorted.
fn heuristic_sets(op: &mut EllipticOperator, family: &SubsetFamily) -> Result<Vec<Vec<VertexId>>> {
    let mut sets = Vec::new();
    match family {
        SubsetFamily::Balls { origin, max_radius } => {
            for r in 0..=*max_radius {
                sets.push(op.graph_mut().ball(*origin, r)?.vertices().to_vec());
            }
        }
        SubsetFamily::GreedyGrowth { seeds, steps } => {
            for &seed in seeds {
                let mut current: BTreeSet<VertexId> = BTreeSet::from([seed]);
                op.graph_mut().expand(seed)?;
                sets.push(vec![seed]);
                for _ in 0..*steps {
                    let mut candidates = BTreeSet::new();
                    for &x in &current {
                        for &(y, _) in op.graph().neighbors(x)? {
                            if !current.contains(&y) {
                                candidates.insert(y);
                            }
                        }
                    }
                    if candidates.is_empty() {
                        break;
                    }
                    // ranked by h_A among enlargements with nonempty
                    // interior, then by the β₁ quotient, then by id
                    let mut best: Option<((bool, f64), VertexId)> = None;
                    for &c in &candidates {
                        op.graph_mut().expand(c)?;
                        let mut trial: Vec<VertexId> = current.iter().copied().collect();
                        trial.push(c);
                        let region = Region::from_vertices(op.graph(), trial.iter().copied())?;
                        let key = if region.interior().is_empty() {
                            (true, beta1_quotient(op, &trial)?)
                        } else {
                            (false, h_constant(op, &trial)?)
                        };
                        if best.map_or(true, |(bk, _)| key < bk) {
                            best = Some((key, c));
                        }
                    }
                    current.insert(best.unwrap().1);
                    sets.push(current.iter().copied().collect());
                }
            }
        }
        SubsetFamily::Exhaustive { .. } => unreachable!("handled separately"),
    }
    Ok(sets)
}

/// Minimizes `h_A` and the `β₁` quotient over a family of finite sets.
pub fn beta_estimate(op: &mut EllipticOperator, family: &SubsetFamily) -> Result<IsoperimetricReport> {
    let (mode, examined, h, b1) = match family {
        SubsetFamily::Exhaustive { universe } => {
            let (examined, h, b1) = exhaustive(op, universe)?;
            let graph = op.graph();
            let u: HashSet<VertexId> = universe.iter().copied().collect();
            let exact = graph.is_finite() && graph.vertices().all(|v| u.contains(&v));
            (if exact { Mode::Exact } else { Mode::Heuristic }, examined, Some(h), Some(b1))
        }
        _ => {
            let sets = heuristic_sets(op, family)?;
            let mut h = None;
            let mut b1 = None;
            for s in &sets {
                let region = Region::from_vertices(op.graph(), s.iter().copied())?;
                if !region.interior().is_empty() {
                    Best::offer(&mut h, h_constant(op, s)?, || s.clone());
                }
                Best::offer(&mut b1, beta1_quotient(op, s)?, || s.clone());
            }
            (Mode::Heuristic, sets.len(), h, b1)
        }
    };
    let (Some(h), Some(b1)) = (h, b1) else {
        return Err(Error::FamilyEmpty);
    };
    let max_degree = op.bounds().max_degree;
    Ok(IsoperimetricReport {
        mode,
        subsets_examined: examined,
        cheeger_lower_bound: cheeger_lower_bound(h.value, max_degree.max(1)),
        beta_upper: h.value,
        witness: h.witness,
        beta1_upper: b1.value,
        beta1_witness: b1.witness,
        max_degree,
    })
}

/// Upper bound on `λ₀` from characteristic functions of the family.
pub fn beta1_upper_bound(op: &mut EllipticOperator, family: &SubsetFamily) -> Result<f64> {
    beta_estimate(op, family).map(|r| r.beta1_upper)
}

/// Greedy family with the first `count` materialized vertices as seeds.
pub fn default_greedy(op: &EllipticOperator, count: usize, steps: usize) -> SubsetFamily {
    SubsetFamily::GreedyGrowth { seeds: op.graph().vertices().take(count).collect(), steps }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LevelSetReport {
    pub lambda0: f64,
    /// Distinct positive values `ν_1 < … < ν_N` of `φ²`.
    pub levels: Vec<f64>,
    /// `h_A(U_i)` for `U_i = {φ² ≥ ν_i}`.
    pub h_values: Vec<f64>,
    pub min_h: f64,
    /// `min_h² / (2M)`, which the Cheeger argument places below `λ₀`.
    pub bound: f64,
    pub max_degree: usize,
}

/// Super-level sets of `φ²` for the Dirichlet ground state of `region`.
///
/// Values of `φ²` within `1e-9` (relative) of each other count as one
/// level, so symmetric eigenfunctions produce the expected level count.
pub fn levelset_beta_oracle(op: &EllipticOperator, region: &Region) -> Result<LevelSetReport> {
    let pair = lambda0_dirichlet(op, region, &SolverOptions::default())?;
    let sq: Vec<(VertexId, f64)> = pair.eigenfunction.iter().map(|(v, &x)| (v, x * x)).collect();
    let mut positive: Vec<f64> = sq.iter().map(|p| p.1).filter(|&x| x > 0.0).collect();
    positive.sort_by(f64::total_cmp);
    let top = positive.last().copied().unwrap_or(0.0);
    let tol = 1e-9 * top;
    let mut levels: Vec<f64> = Vec::new();
    for x in positive {
        if levels.last().map_or(true, |&l| x - l > tol) {
            levels.push(x);
        }
    }
    let mut h_values = Vec::with_capacity(levels.len());
    for &nu in &levels {
        let set: Vec<VertexId> = sq.iter().filter(|p| p.1 >= nu - tol).map(|p| p.0).collect();
        h_values.push(h_constant(op, &set)?);
    }
    let min_h = h_values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_degree = op.bounds().max_degree;
    Ok(LevelSetReport {
        lambda0: pair.lambda0,
        levels,
        bound: cheeger_lower_bound(min_h, max_degree),
        h_values,
        min_h,
        max_degree,
    })
}
