//! The elliptic operator `L = A + W` and the objects it acts on.
//!
//! `Lf(x) = W(x) f(x) + Σ_{y∼x} a_{x,y} (f(x) − f(y))`.

use crate::error::{Error, Result};
use crate::graph::{BoundsScope, Region, VertexId, WeightedGraph};
use crate::sparse::CsrMatrix;
use serde::Serialize;
use std::collections::{BTreeMap, HashMap, HashSet};

/// Values on a fixed, ordered finite vertex set.
///
/// The scalar type is generic so complex data can be carried around, but
/// every numerical routine in this crate works with `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct VertexFunction<T = f64> {
    domain: Vec<VertexId>,
    values: Vec<T>,
    index: HashMap<VertexId, usize>,
}

impl<T: Clone> VertexFunction<T> {
    pub fn new(domain: Vec<VertexId>, values: Vec<T>) -> Result<Self> {
        if domain.len() != values.len() {
            return Err(Error::LengthMismatch { domain: domain.len(), values: values.len() });
        }
        let mut index = HashMap::with_capacity(domain.len());
        for (i, &v) in domain.iter().enumerate() {
            if index.insert(v, i).is_some() {
                return Err(Error::InvalidParameter(format!("vertex {v} listed twice in domain")));
            }
        }
        Ok(VertexFunction { domain, values, index })
    }

    pub fn from_fn(domain: &[VertexId], mut f: impl FnMut(VertexId) -> T) -> Self {
        let values = domain.iter().map(|&v| f(v)).collect();
        Self::new(domain.to_vec(), values).expect("domain with repeated vertex")
    }

    pub fn constant(domain: &[VertexId], c: T) -> Self {
        Self::from_fn(domain, |_| c.clone())
    }

    pub fn domain(&self) -> &[VertexId] {
        &self.domain
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.index.contains_key(&v)
    }

    pub fn get(&self, v: VertexId) -> Option<&T> {
        self.index.get(&v).map(|&i| &self.values[i])
    }

    pub fn position(&self, v: VertexId) -> Option<usize> {
        self.index.get(&v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (VertexId, &T)> + '_ {
        self.domain.iter().copied().zip(self.values.iter())
    }

    pub fn map<U: Clone>(&self, mut f: impl FnMut(VertexId, &T) -> U) -> VertexFunction<U> {
        VertexFunction {
            domain: self.domain.clone(),
            values: self.iter().map(|(v, x)| f(v, x)).collect(),
            index: self.index.clone(),
        }
    }
}

impl VertexFunction<f64> {
    pub fn zeros(domain: &[VertexId]) -> Self {
        Self::constant(domain, 0.0)
    }

    /// Kronecker delta at `x` on the given domain.
    pub fn delta(domain: &[VertexId], x: VertexId) -> Self {
        Self::from_fn(domain, |v| if v == x { 1.0 } else { 0.0 })
    }

    pub fn value(&self, v: VertexId) -> Option<f64> {
        self.get(v).copied()
    }

    /// Value at `v`, treating vertices outside the domain as zero.
    pub fn value_or_zero(&self, v: VertexId) -> f64 {
        self.value(v).unwrap_or(0.0)
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn norm2(&self) -> f64 {
        self.values.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Vertices where the function is nonzero, in domain order.
    pub fn support(&self) -> Vec<VertexId> {
        self.iter().filter(|(_, x)| **x != 0.0).map(|(v, _)| v).collect()
    }

    /// `Σ f(x) g(x)` over the domain of `self`, with `g` zero off its domain.
    pub fn dot(&self, g: &VertexFunction) -> f64 {
        self.iter().map(|(v, x)| x * g.value_or_zero(v)).sum()
    }

    pub fn scaled(&self, c: f64) -> Self {
        self.map(|_, x| c * x)
    }
}

/// Vertex potential W, stored sparsely over a constant background.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Potential {
    base: f64,
    values: BTreeMap<VertexId, f64>,
    declared_lower: Option<f64>,
}

impl Potential {
    /// W ≡ 0.
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn constant(c: f64) -> Self {
        Potential { base: c, ..Self::default() }
    }

    /// Explicit values; unlisted vertices get 0.
    pub fn from_values<I: IntoIterator<Item = (VertexId, f64)>>(values: I) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, w) in values {
            if !w.is_finite() {
                return Err(Error::InvalidParameter(format!("potential at {v} is not finite")));
            }
            if map.insert(v, w).is_some() {
                return Err(Error::InvalidParameter(format!("potential at {v} given twice")));
            }
        }
        Ok(Potential { base: 0.0, values: map, declared_lower: None })
    }

    /// Declares a global lower bound `c ≤ W`, checked against stored values.
    pub fn with_lower_bound(mut self, c: f64) -> Result<Self> {
        if let Some((&v, &w)) = std::iter::once((&VertexId(usize::MAX), &self.base))
            .chain(self.values.iter())
            .find(|(_, &w)| w < c)
        {
            return Err(Error::InvalidParameter(format!(
                "declared lower bound {c} exceeds W = {w} at {}",
                if v.0 == usize::MAX { "unlisted vertices".to_string() } else { v.to_string() }
            )));
        }
        self.declared_lower = Some(c);
        Ok(self)
    }

    pub fn get(&self, v: VertexId) -> f64 {
        self.values.get(&v).copied().unwrap_or(self.base)
    }

    /// Declared lower bound, or the minimum over every stored value and the
    /// background.
    pub fn lower_bound(&self) -> f64 {
        self.declared_lower
            .unwrap_or_else(|| self.values.values().copied().fold(self.base, f64::min))
    }

    pub fn is_zero(&self) -> bool {
        self.base == 0.0 && self.values.values().all(|&w| w == 0.0)
    }

    pub fn explicit_values(&self) -> impl Iterator<Item = (VertexId, f64)> + '_ {
        self.values.iter().map(|(&v, &w)| (v, w))
    }

    /// `W + s`.
    pub fn shifted(&self, s: f64) -> Self {
        Potential {
            base: self.base + s,
            values: self.values.iter().map(|(&v, &w)| (v, w + s)).collect(),
            declared_lower: self.declared_lower.map(|c| c + s),
        }
    }
}

/// Edge function stored once per undirected edge on its canonical
/// orientation `[min, max]`; the reverse orientation reads the negation.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeFunction {
    values: BTreeMap<(VertexId, VertexId), f64>,
}

impl EdgeFunction {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets φ([x, y]) = value, hence φ([y, x]) = −value.
    pub fn set(&mut self, x: VertexId, y: VertexId, value: f64) {
        if x < y {
            self.values.insert((x, y), value);
        } else {
            self.values.insert((y, x), -value);
        }
    }

    pub fn get(&self, x: VertexId, y: VertexId) -> Option<f64> {
        if x < y {
            self.values.get(&(x, y)).copied()
        } else {
            self.values.get(&(y, x)).map(|v| -v)
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Canonically oriented entries.
    pub fn iter(&self) -> impl Iterator<Item = ((VertexId, VertexId), f64)> + '_ {
        self.values.iter().map(|(&e, &v)| (e, v))
    }

    /// ⟨φ, ψ⟩ over undirected edges; edges missing from either side count as 0.
    pub fn inner(&self, other: &EdgeFunction) -> f64 {
        self.values
            .iter()
            .filter_map(|(e, v)| other.values.get(e).map(|w| v * w))
            .sum()
    }
}

/// Bounds entering the estimates: `a`/`Γ` = sup weight, `γ` = inf weight,
/// `M` = max degree, `c` = lower bound of W.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OperatorBounds {
    pub sup_weight: f64,
    pub inf_weight: f64,
    pub max_degree: usize,
    pub potential_lower: f64,
    pub scope: BoundsScope,
}

/// `L = A + W` on a weighted graph.
#[derive(Clone, Debug)]
pub struct EllipticOperator {
    graph: WeightedGraph,
    potential: Potential,
}

/// Dirichlet restriction `L_U` as a matrix indexed by `int U`.
#[derive(Clone, Debug)]
pub struct DirichletMatrix {
    pub index: Vec<VertexId>,
    pub matrix: CsrMatrix,
}

impl EllipticOperator {
    pub fn new(graph: WeightedGraph, potential: Potential) -> Result<Self> {
        for (v, _) in potential.explicit_values() {
            if !graph.contains(v) {
                return Err(Error::UnknownVertex(v));
            }
        }
        Ok(EllipticOperator { graph, potential })
    }

    /// The weighted Laplacian A (W ≡ 0).
    pub fn without_potential(graph: WeightedGraph) -> Self {
        EllipticOperator { graph, potential: Potential::zero() }
    }

    pub fn graph(&self) -> &WeightedGraph {
        &self.graph
    }

    /// Mutable access for lazy growth of generated graphs.
    pub fn graph_mut(&mut self) -> &mut WeightedGraph {
        &mut self.graph
    }

    pub fn potential(&self) -> &Potential {
        &self.potential
    }

    pub fn with_potential(&self, potential: Potential) -> Result<Self> {
        Self::new(self.graph.clone(), potential)
    }

    pub fn bounds(&self) -> OperatorBounds {
        let b = self.graph.bounds();
        OperatorBounds {
            sup_weight: b.sup_weight,
            inf_weight: b.inf_weight,
            max_degree: b.max_degree,
            potential_lower: self.potential.lower_bound(),
            scope: b.scope,
        }
    }

    /// `Lf(x)`. Needs `f` at `x` and at every neighbor of `x`.
    pub fn apply_at(&self, f: &VertexFunction, x: VertexId) -> Result<f64> {
        let fx = f.value(x).ok_or(Error::MissingNeighborValue(x))?;
        let mut s = self.potential.get(x) * fx;
        for &(y, a) in self.graph.neighbors(x)? {
            let fy = f.value(y).ok_or(Error::MissingNeighborValue(y))?;
            s += a * (fx - fy);
        }
        Ok(s)
    }

    /// `Lf` restricted to `at`.
    pub fn apply(&self, f: &VertexFunction, at: &[VertexId]) -> Result<VertexFunction> {
        let values = at.iter().map(|&x| self.apply_at(f, x)).collect::<Result<Vec<_>>>()?;
        VertexFunction::new(at.to_vec(), values)
    }

    /// `Lf` on the vertices of `f`'s domain whose neighbors all carry values.
    pub fn apply_where_defined(&self, f: &VertexFunction) -> Result<VertexFunction> {
        let mut at = Vec::new();
        for &x in f.domain() {
            if self.graph.is_expanded(x) && self.graph.neighbors(x)?.iter().all(|(y, _)| f.contains(*y)) {
                at.push(x);
            }
        }
        self.apply(f, &at)
    }

    /// `d_A f([x,y]) = √a_{x,y} (f(x) − f(y))` on every edge with both
    /// endpoints in the domain of `f`.
    pub fn edge_derivative(&self, f: &VertexFunction) -> Result<EdgeFunction> {
        let mut out = EdgeFunction::new();
        for (x, &fx) in f.iter() {
            for &(y, a) in self.graph.neighbors(x)? {
                if x < y {
                    if let Some(fy) = f.value(y) {
                        out.set(x, y, a.sqrt() * (fx - fy));
                    }
                }
            }
        }
        Ok(out)
    }

    /// `d_A f` on an explicit list of oriented edges.
    pub fn edge_derivative_on(&self, f: &VertexFunction, edges: &[(VertexId, VertexId)]) -> Result<EdgeFunction> {
        let mut out = EdgeFunction::new();
        for &(x, y) in edges {
            let a = self.graph.weight(x, y).ok_or(Error::UnknownEdge(x, y))?;
            let fx = f.value(x).ok_or(Error::MissingEndpointValue(x))?;
            let fy = f.value(y).ok_or(Error::MissingEndpointValue(y))?;
            out.set(x, y, a.sqrt() * (fx - fy));
        }
        Ok(out)
    }

    /// `Σ_{{x,y}∈E} a_{x,y} (f(x)−f(y)) (g(x)−g(y))`, i.e. `(Af, g)`.
    ///
    /// One of the two functions must vanish except at vertices whose
    /// neighbors all lie in both domains; that function's support then
    /// carries every nonzero term.
    pub fn quadratic_form(&self, f: &VertexFunction, g: &VertexFunction) -> Result<f64> {
        let (s, offending) = match self.interior_support(f, g) {
            Ok(s) => (s, None),
            Err(v) => match self.interior_support(g, f) {
                Ok(s) => (s, None),
                Err(_) => (Vec::new(), Some(v)),
            },
        };
        if let Some(v) = offending {
            return Err(Error::SupportTouchesBoundary(v));
        }
        let in_support: HashSet<VertexId> = s.iter().copied().collect();
        let mut total = 0.0;
        for &x in &s {
            let (fx, gx) = (f.value_or_zero(x), g.value_or_zero(x));
            for &(y, a) in self.graph.neighbors(x)? {
                if in_support.contains(&y) && y < x {
                    continue;
                }
                total += a * (fx - f.value_or_zero(y)) * (gx - g.value_or_zero(y));
            }
        }
        Ok(total)
    }

    // support of `h`, provided every support vertex has all neighbors inside
    // both domains; otherwise the first offending vertex
    fn interior_support(&self, h: &VertexFunction, other: &VertexFunction) -> std::result::Result<Vec<VertexId>, VertexId> {
        let s = h.support();
        for &x in &s {
            if !other.contains(x) {
                return Err(x);
            }
            let Ok(nbrs) = self.graph.neighbors(x) else { return Err(x) };
            if nbrs.iter().any(|(y, _)| !h.contains(*y) || !other.contains(*y)) {
                return Err(x);
            }
        }
        Ok(s)
    }

    /// `(Lf, f)` for finitely supported `f` (values off the domain are 0).
    pub fn energy(&self, f: &VertexFunction) -> Result<f64> {
        let mut total = 0.0;
        let s = f.support();
        let in_support: HashSet<VertexId> = s.iter().copied().collect();
        for &x in &s {
            let fx = f.value_or_zero(x);
            total += self.potential.get(x) * fx * fx;
            for &(y, a) in self.graph.neighbors(x)? {
                if in_support.contains(&y) && y < x {
                    continue;
                }
                let d = fx - f.value_or_zero(y);
                total += a * d * d;
            }
        }
        Ok(total)
    }

    /// Matrix of `L` compressed to `vertices`: full diagonal
    /// `W(x) + Σ_{y∼x} a_{x,y}` and `−a_{x,y}` between listed neighbors.
    pub fn compressed_matrix(&self, vertices: &[VertexId]) -> Result<CsrMatrix> {
        let pos: HashMap<VertexId, usize> = vertices.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let mut rows = Vec::with_capacity(vertices.len());
        for (i, &x) in vertices.iter().enumerate() {
            let nbrs = self.graph.neighbors(x)?;
            let mut row = Vec::with_capacity(nbrs.len() + 1);
            let mut diag = self.potential.get(x);
            for &(y, a) in nbrs {
                diag += a;
                if let Some(&j) = pos.get(&y) {
                    row.push((j, -a));
                }
            }
            row.push((i, diag));
            rows.push(row);
        }
        Ok(CsrMatrix::from_rows(rows))
    }

    /// `L_U` on `C₀(U)`, indexed by the interior of `region`.
    pub fn dirichlet_restrict(&self, region: &Region) -> Result<DirichletMatrix> {
        if region.interior().is_empty() {
            return Err(Error::EmptyInterior);
        }
        if !region.interior_connected(&self.graph) {
            return Err(Error::DisconnectedInterior);
        }
        let index = region.interior().to_vec();
        let matrix = self.compressed_matrix(&index)?;
        Ok(DirichletMatrix { index, matrix })
    }

    /// `‖A‖ ≤ 2aM`.
    pub fn operator_norm_bound(&self) -> Result<f64> {
        let b = self.bounds();
        if b.scope != BoundsScope::Global {
            return Err(Error::UnboundedMetadata("global weight and degree bounds"));
        }
        Ok(2.0 * b.sup_weight * b.max_degree as f64)
    }
}
