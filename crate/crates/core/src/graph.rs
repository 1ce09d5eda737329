//! Weighted graphs, finite or lazily generated.
//!
//! A [`WeightedGraph`] is either built from an explicit edge list or driven
//! by a generator ([`Family`] plus [`WeightRule`]) that describes an infinite
//! graph. Generated graphs only ever hold finitely many vertices: a vertex
//! becomes *materialized* when it is first discovered and *expanded* once its
//! full neighbor list has been generated. Queries that need a vertex's
//! neighbors fail with [`Error::NotMaterialized`] until it is expanded;
//! [`WeightedGraph::ball`] and friends expand on demand and need `&mut self`,
//! which makes growth single-writer while reads stay shareable.
//!
//! Vertex ids of generated graphs are assigned in discovery order starting
//! from the generator's root, so a fixed sequence of calls always produces
//! the same numbering.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt;
use std::sync::Arc;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VertexId(pub usize);

impl VertexId {
    #[inline]
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<usize> for VertexId {
    fn from(v: usize) -> Self {
        VertexId(v)
    }
}

/// Structural label of a generated vertex: lattice coordinates, or the
/// child-index path from the root of a tree.
pub type Site = Vec<i64>;

pub type NeighborFn = Arc<dyn Fn(&[i64]) -> Vec<Site> + Send + Sync>;
pub type WeightFn = Arc<dyn Fn(&[i64], &[i64]) -> f64 + Send + Sync>;

/// Shape of a generated infinite graph.
#[derive(Clone)]
pub enum Family {
    /// The integer lattice Z^dim with nearest-neighbor edges.
    Lattice { dim: usize },
    /// The regular tree in which every vertex has `degree` neighbors.
    RegularTree { degree: usize },
    /// User-supplied neighbor enumeration. Must be symmetric and loop free.
    Custom {
        name: String,
        root: Site,
        neighbors: NeighborFn,
        max_degree: Option<usize>,
    },
}

impl Family {
    fn root(&self) -> Site {
        match self {
            Family::Lattice { dim } => vec![0; *dim],
            Family::RegularTree { .. } => Vec::new(),
            Family::Custom { root, .. } => root.clone(),
        }
    }

    fn neighbors(&self, site: &[i64]) -> Vec<Site> {
        match self {
            Family::Lattice { dim } => {
                let mut out = Vec::with_capacity(2 * dim);
                for axis in 0..*dim {
                    for step in [-1, 1] {
                        let mut s = site.to_vec();
                        s[axis] += step;
                        out.push(s);
                    }
                }
                out
            }
            Family::RegularTree { degree } => {
                let mut out = Vec::with_capacity(*degree);
                let children = if site.is_empty() {
                    *degree
                } else {
                    out.push(site[..site.len() - 1].to_vec());
                    degree - 1
                };
                for c in 0..children {
                    let mut s = site.to_vec();
                    s.push(c as i64);
                    out.push(s);
                }
                out
            }
            Family::Custom { neighbors, .. } => neighbors(site),
        }
    }

    fn declared_max_degree(&self) -> Option<usize> {
        match self {
            Family::Lattice { dim } => Some(2 * dim),
            Family::RegularTree { degree } => Some(*degree),
            Family::Custom { max_degree, .. } => *max_degree,
        }
    }

    fn descriptor(&self) -> String {
        match self {
            Family::Lattice { dim } => format!("lattice:{dim}"),
            Family::RegularTree { degree } => format!("tree:{degree}"),
            Family::Custom { name, .. } => format!("custom:{name}"),
        }
    }
}

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

/// Edge weights of a generated graph.
#[derive(Clone)]
pub enum WeightRule {
    Constant(f64),
    /// Called once per undirected edge with the two sites in ascending order.
    /// `range`, when given, declares global bounds `(inf, sup)` on the weights.
    Custom { rule: WeightFn, range: Option<(f64, f64)> },
}

impl WeightRule {
    fn weight(&self, a: &[i64], b: &[i64]) -> f64 {
        match self {
            WeightRule::Constant(w) => *w,
            WeightRule::Custom { rule, .. } => {
                if a <= b {
                    rule(a, b)
                } else {
                    rule(b, a)
                }
            }
        }
    }

    fn declared_range(&self) -> Option<(f64, f64)> {
        match self {
            WeightRule::Constant(w) => Some((*w, *w)),
            WeightRule::Custom { range, .. } => *range,
        }
    }

    fn descriptor(&self) -> String {
        match self {
            WeightRule::Constant(w) => format!("const:{w}"),
            WeightRule::Custom { .. } => "custom".to_string(),
        }
    }
}

impl fmt::Debug for WeightRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.descriptor())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Finite,
    Generated { family: String, weights: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundsScope {
    /// Valid on the whole (possibly infinite) graph.
    Global,
    /// Observed on the materialized portion only.
    Materialized,
}

/// Degree and weight bounds: M = sup m(x), gamma = inf a, Gamma = sup a.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GraphBounds {
    pub max_degree: usize,
    pub inf_weight: f64,
    pub sup_weight: f64,
    pub scope: BoundsScope,
}

#[derive(Clone)]
struct Generator {
    family: Family,
    weights: WeightRule,
    sites: Vec<Site>,
    index: HashMap<Site, VertexId>,
}

/// Simple undirected graph with strictly positive symmetric edge weights.
#[derive(Clone)]
pub struct WeightedGraph {
    adjacency: Vec<Vec<(VertexId, f64)>>,
    expanded: Vec<bool>,
    generator: Option<Generator>,
}

impl fmt::Debug for WeightedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightedGraph")
            .field("provenance", &self.provenance())
            .field("materialized", &self.num_vertices())
            .finish()
    }
}

fn check_weight(x: VertexId, y: VertexId, weight: f64) -> Result<()> {
    if !(weight > 0.0 && weight.is_finite()) {
        return Err(Error::NonpositiveWeight { x, y, weight });
    }
    Ok(())
}

impl WeightedGraph {
    /// Builds a finite graph on vertices `0..=max id` from undirected edges.
    pub fn from_edges<I>(edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        Self::from_edges_with_vertices(0, edges)
    }

    /// Like [`from_edges`](Self::from_edges) but guarantees at least
    /// `min_vertices` vertices, so isolated vertices can be represented.
    pub fn from_edges_with_vertices<I>(min_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut adjacency: Vec<Vec<(VertexId, f64)>> = vec![Vec::new(); min_vertices];
        let mut seen = HashSet::new();
        for (x, y, w) in edges {
            let (vx, vy) = (VertexId(x), VertexId(y));
            if x == y {
                return Err(Error::LoopEdge(vx));
            }
            check_weight(vx, vy, w)?;
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(Error::DuplicateEdge(vx, vy));
            }
            let need = x.max(y) + 1;
            if adjacency.len() < need {
                adjacency.resize(need, Vec::new());
            }
            adjacency[x].push((vy, w));
            adjacency[y].push((vx, w));
        }
        let n = adjacency.len();
        Ok(WeightedGraph { adjacency, expanded: vec![true; n], generator: None })
    }

    /// Starts a generated graph holding only the root vertex (id 0).
    pub fn generated(family: Family, weights: WeightRule) -> Result<Self> {
        if let WeightRule::Constant(w) = weights {
            check_weight(VertexId(0), VertexId(0), w)?;
        }
        match &family {
            Family::Lattice { dim } if *dim == 0 => {
                return Err(Error::InvalidParameter("lattice dimension must be positive".into()))
            }
            Family::RegularTree { degree } if *degree < 2 => {
                return Err(Error::InvalidParameter("tree degree must be at least 2".into()))
            }
            _ => {}
        }
        let root = family.root();
        let mut index = HashMap::new();
        index.insert(root.clone(), VertexId(0));
        Ok(WeightedGraph {
            adjacency: vec![Vec::new()],
            expanded: vec![false],
            generator: Some(Generator { family, weights, sites: vec![root], index }),
        })
    }

    pub fn lattice(dim: usize) -> Result<Self> {
        Self::generated(Family::Lattice { dim }, WeightRule::Constant(1.0))
    }

    pub fn regular_tree(degree: usize) -> Result<Self> {
        Self::generated(Family::RegularTree { degree }, WeightRule::Constant(1.0))
    }

    /// Replaces the weights of existing edges of a finite graph.
    pub fn with_weight_overrides<I>(mut self, overrides: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        if self.generator.is_some() {
            return Err(Error::InvalidParameter(
                "weight overrides apply to finite graphs only".into(),
            ));
        }
        for (x, y, w) in overrides {
            let (vx, vy) = (VertexId(x), VertexId(y));
            check_weight(vx, vy, w)?;
            let mut found = false;
            for (a, b) in [(vx, vy), (vy, vx)] {
                if let Some(list) = self.adjacency.get_mut(a.0) {
                    if let Some(e) = list.iter_mut().find(|e| e.0 == b) {
                        e.1 = w;
                        found = true;
                    }
                }
            }
            if !found {
                return Err(Error::UnknownEdge(vx, vy));
            }
        }
        Ok(self)
    }

    pub fn is_finite(&self) -> bool {
        self.generator.is_none()
    }

    pub fn provenance(&self) -> Provenance {
        match &self.generator {
            None => Provenance::Finite,
            Some(g) => Provenance::Generated {
                family: g.family.descriptor(),
                weights: g.weights.descriptor(),
            },
        }
    }

    /// Canonical origin: the generator root, or vertex 0 of a finite graph.
    pub fn origin(&self) -> VertexId {
        VertexId(0)
    }

    /// Number of vertices currently held in memory.
    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> + '_ {
        (0..self.adjacency.len()).map(VertexId)
    }

    pub fn contains(&self, v: VertexId) -> bool {
        v.0 < self.adjacency.len()
    }

    pub fn is_expanded(&self, v: VertexId) -> bool {
        self.expanded.get(v.0).copied().unwrap_or(false)
    }

    pub fn site(&self, v: VertexId) -> Option<&[i64]> {
        self.generator.as_ref()?.sites.get(v.0).map(|s| s.as_slice())
    }

    pub fn vertex_at(&self, site: &[i64]) -> Option<VertexId> {
        self.generator.as_ref()?.index.get(site).copied()
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.contains(v) {
            Ok(())
        } else {
            Err(Error::UnknownVertex(v))
        }
    }

    /// Full neighbor list with weights. Requires `v` to be expanded.
    pub fn neighbors(&self, v: VertexId) -> Result<&[(VertexId, f64)]> {
        self.check(v)?;
        if !self.expanded[v.0] {
            return Err(Error::NotMaterialized(v));
        }
        Ok(&self.adjacency[v.0])
    }

    /// Valence m(x).
    pub fn degree(&self, v: VertexId) -> Result<usize> {
        self.neighbors(v).map(|n| n.len())
    }

    /// Sum of the weights at `v`.
    pub fn weighted_degree(&self, v: VertexId) -> Result<f64> {
        self.neighbors(v).map(|n| n.iter().map(|e| e.1).sum())
    }

    pub fn weight(&self, x: VertexId, y: VertexId) -> Option<f64> {
        self.adjacency.get(x.0)?.iter().find(|e| e.0 == y).map(|e| e.1)
    }

    /// Materialized undirected edges `(x, y, a)` with `x < y`.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId, f64)> + '_ {
        self.adjacency.iter().enumerate().flat_map(|(x, list)| {
            list.iter()
                .filter(move |(y, _)| x < y.0)
                .map(move |&(y, w)| (VertexId(x), y, w))
        })
    }

    /// Generates the neighbors of `v` if that has not happened yet.
    pub fn expand(&mut self, v: VertexId) -> Result<()> {
        self.check(v)?;
        if self.expanded[v.0] {
            return Ok(());
        }
        let gen = self.generator.as_mut().expect("unexpanded vertices only exist in generated graphs");
        let site = gen.sites[v.0].clone();
        let neighbor_sites = gen.family.neighbors(&site);
        let mut listed = HashSet::with_capacity(neighbor_sites.len());
        for s in neighbor_sites {
            let y = match gen.index.get(&s) {
                Some(&y) => y,
                None => {
                    let y = VertexId(gen.sites.len());
                    gen.index.insert(s.clone(), y);
                    gen.sites.push(s.clone());
                    self.adjacency.push(Vec::new());
                    self.expanded.push(false);
                    y
                }
            };
            if y == v {
                return Err(Error::LoopEdge(v));
            }
            if !listed.insert(y) {
                return Err(Error::DuplicateEdge(v, y));
            }
            if self.adjacency[v.0].iter().any(|e| e.0 == y) {
                continue;
            }
            if self.expanded[y.0] {
                return Err(Error::InvalidParameter(format!(
                    "neighbor enumeration is not symmetric between {v} and {y}"
                )));
            }
            let w = gen.weights.weight(&site, &s);
            check_weight(v, y, w)?;
            self.adjacency[v.0].push((y, w));
            self.adjacency[y.0].push((v, w));
        }
        if self.adjacency[v.0].len() != listed.len() {
            return Err(Error::InvalidParameter(format!(
                "neighbor enumeration is not symmetric at {v}"
            )));
        }
        self.expanded[v.0] = true;
        Ok(())
    }

    /// Expands every vertex within `radius` of `center`.
    pub fn materialize_ball(&mut self, center: VertexId, radius: usize) -> Result<()> {
        self.materialize_neighborhood(&[center], radius)
    }

    /// Expands every vertex within `radius` of some source.
    pub fn materialize_neighborhood(&mut self, sources: &[VertexId], radius: usize) -> Result<()> {
        for &s in sources {
            self.check(s)?;
        }
        if self.generator.is_none() {
            return Ok(());
        }
        let mut dist = HashMap::new();
        let mut queue = VecDeque::new();
        for &s in sources {
            if dist.insert(s, 0usize).is_none() {
                queue.push_back(s);
            }
        }
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            self.expand(v)?;
            if d == radius {
                continue;
            }
            for i in 0..self.adjacency[v.0].len() {
                let y = self.adjacency[v.0][i].0;
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(y) {
                    e.insert(d + 1);
                    queue.push_back(y);
                }
            }
        }
        Ok(())
    }

    /// Breadth-first distances from `center` up to `radius`, in discovery
    /// order. Every listed vertex is expanded.
    pub fn materialized_distances(&self, center: VertexId, radius: usize) -> Result<Vec<(VertexId, usize)>> {
        self.materialized_neighborhood(&[center], radius)
    }

    /// Distances to the nearest source, up to `radius`, in discovery order.
    pub fn materialized_neighborhood(&self, sources: &[VertexId], radius: usize) -> Result<Vec<(VertexId, usize)>> {
        let mut seen = HashSet::new();
        let mut out = Vec::new();
        for &s in sources {
            self.check(s)?;
            if seen.insert(s) {
                out.push((s, 0));
            }
        }
        let mut head = 0;
        while head < out.len() {
            let (v, d) = out[head];
            head += 1;
            let nbrs = self.neighbors(v)?;
            if d == radius {
                continue;
            }
            for &(y, _) in nbrs {
                if seen.insert(y) {
                    out.push((y, d + 1));
                }
            }
        }
        Ok(out)
    }

    /// The ball of the given radius, assuming it is already materialized.
    pub fn materialized_ball(&self, center: VertexId, radius: usize) -> Result<Region> {
        let members = self.materialized_distances(center, radius)?;
        Region::from_vertices(self, members.into_iter().map(|(v, _)| v))
    }

    /// `{x : d(center, x) <= radius}` with its interior and boundary,
    /// materializing the graph as needed.
    pub fn ball(&mut self, center: VertexId, radius: usize) -> Result<Region> {
        self.materialize_ball(center, radius)?;
        self.materialized_ball(center, radius)
    }

    /// Region spanned by an arbitrary vertex set, expanding its members.
    pub fn region<I: IntoIterator<Item = VertexId>>(&mut self, vertices: I) -> Result<Region> {
        let vs: Vec<VertexId> = vertices.into_iter().collect();
        for &v in &vs {
            self.expand(v)?;
        }
        Region::from_vertices(self, vs)
    }

    /// Combinatorial distance, or `None` when it exceeds `cap`.
    pub fn distance(&mut self, x: VertexId, y: VertexId, cap: usize) -> Result<Option<usize>> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(Some(0));
        }
        if cap > 0 {
            self.materialize_ball(x, cap - 1)?;
        }
        self.materialized_distance(x, y, cap)
    }

    /// Like [`distance`](Self::distance) but never grows the graph.
    pub fn materialized_distance(&self, x: VertexId, y: VertexId, cap: usize) -> Result<Option<usize>> {
        self.check(x)?;
        self.check(y)?;
        if x == y {
            return Ok(Some(0));
        }
        let mut dist = HashMap::new();
        let mut queue = VecDeque::new();
        dist.insert(x, 0usize);
        queue.push_back(x);
        while let Some(v) = queue.pop_front() {
            let d = dist[&v];
            if d == cap {
                continue;
            }
            for &(w, _) in self.neighbors(v)? {
                if w == y {
                    return Ok(Some(d + 1));
                }
                if let std::collections::hash_map::Entry::Vacant(e) = dist.entry(w) {
                    e.insert(d + 1);
                    queue.push_back(w);
                }
            }
        }
        Ok(None)
    }

    /// Nested balls around `origin` for radius 1, 2, ...
    pub fn exhaustion(&mut self, origin: VertexId) -> Exhaustion<'_> {
        Exhaustion { graph: self, origin, next_radius: 1, restricted: false }
    }

    /// Vertices of the connected component of `v` within the expanded part.
    pub fn component(&self, v: VertexId) -> Result<Vec<VertexId>> {
        let mut out: Vec<VertexId> = self
            .materialized_distances(v, usize::MAX)?
            .into_iter()
            .map(|(x, _)| x)
            .collect();
        out.sort_unstable();
        Ok(out)
    }

    /// Connectivity of a finite graph (or of the expanded part of a
    /// generated one).
    pub fn is_connected(&self) -> bool {
        if self.adjacency.is_empty() {
            return true;
        }
        match self.generator {
            None => self.component(VertexId(0)).map(|c| c.len() == self.num_vertices()).unwrap_or(false),
            // generated graphs grow from the root by construction
            Some(_) => true,
        }
    }

    /// Degree and weight bounds. Generator families declare global bounds;
    /// anything undeclared falls back to the expanded portion.
    pub fn bounds(&self) -> GraphBounds {
        let mut max_degree = 0;
        let mut inf_weight = f64::INFINITY;
        let mut sup_weight: f64 = 0.0;
        for (v, list) in self.adjacency.iter().enumerate() {
            if self.expanded[v] {
                max_degree = max_degree.max(list.len());
            }
            for &(_, w) in list {
                inf_weight = inf_weight.min(w);
                sup_weight = sup_weight.max(w);
            }
        }
        let scope = match &self.generator {
            None => BoundsScope::Global,
            Some(g) => {
                let mut global = true;
                match g.family.declared_max_degree() {
                    Some(m) => max_degree = m,
                    None => global = false,
                }
                match g.weights.declared_range() {
                    Some((lo, hi)) => {
                        inf_weight = lo;
                        sup_weight = hi;
                    }
                    None => global = false,
                }
                if global {
                    BoundsScope::Global
                } else {
                    BoundsScope::Materialized
                }
            }
        };
        GraphBounds { max_degree, inf_weight, sup_weight, scope }
    }
}

/// Iterator over the exhaustion `V_1 ⊂ V_2 ⊂ ...` of a connected graph.
///
/// On a finite graph the balls stop growing once they cover the component
/// of the origin; if that component is not the whole graph,
/// [`restricted_to_component`](Self::restricted_to_component) reports it.
pub struct Exhaustion<'g> {
    graph: &'g mut WeightedGraph,
    origin: VertexId,
    next_radius: usize,
    restricted: bool,
}

impl Exhaustion<'_> {
    pub fn restricted_to_component(&self) -> bool {
        self.restricted
    }

    pub fn graph(&self) -> &WeightedGraph {
        self.graph
    }
}

impl Iterator for Exhaustion<'_> {
    type Item = Result<Region>;

    fn next(&mut self) -> Option<Self::Item> {
        let n = self.next_radius;
        self.next_radius += 1;
        let region = match self.graph.ball(self.origin, n) {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        if self.graph.is_finite() && region.boundary().is_empty() && region.len() < self.graph.num_vertices() {
            self.restricted = true;
        }
        if !region.interior_connected(self.graph) {
            return Some(Err(Error::DisconnectedInterior));
        }
        Some(Ok(region))
    }
}

/// Finite vertex set U with `int U` (all neighbors inside U) and `∂U`.
#[derive(Clone, Debug)]
pub struct Region {
    vertices: Vec<VertexId>,
    interior: Vec<VertexId>,
    boundary: Vec<VertexId>,
    interior_flag: HashMap<VertexId, bool>,
}

impl PartialEq for Region {
    fn eq(&self, other: &Self) -> bool {
        self.vertices == other.vertices && self.interior == other.interior
    }
}

impl Region {
    /// Interior and boundary are taken relative to the ambient graph, so
    /// every member must be expanded.
    pub fn from_vertices<I: IntoIterator<Item = VertexId>>(g: &WeightedGraph, vertices: I) -> Result<Region> {
        let mut vs: Vec<VertexId> = vertices.into_iter().collect();
        vs.sort_unstable();
        vs.dedup();
        let set: HashSet<VertexId> = vs.iter().copied().collect();
        let mut interior = Vec::new();
        let mut boundary = Vec::new();
        let mut interior_flag = HashMap::with_capacity(vs.len());
        for &v in &vs {
            let inside = g.neighbors(v)?.iter().all(|(y, _)| set.contains(y));
            interior_flag.insert(v, inside);
            if inside {
                interior.push(v);
            } else {
                boundary.push(v);
            }
        }
        Ok(Region { vertices: vs, interior, boundary, interior_flag })
    }

    /// All vertices, ascending.
    pub fn vertices(&self) -> &[VertexId] {
        &self.vertices
    }

    pub fn interior(&self) -> &[VertexId] {
        &self.interior
    }

    pub fn boundary(&self) -> &[VertexId] {
        &self.boundary
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn contains(&self, v: VertexId) -> bool {
        self.interior_flag.contains_key(&v)
    }

    pub fn is_interior(&self, v: VertexId) -> bool {
        self.interior_flag.get(&v).copied().unwrap_or(false)
    }

    /// Whether any two interior vertices are joined by a path through the
    /// interior. An empty interior counts as disconnected.
    pub fn interior_connected(&self, g: &WeightedGraph) -> bool {
        let Some(&start) = self.interior.first() else {
            return false;
        };
        let mut seen = HashSet::new();
        seen.insert(start);
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            let Ok(nbrs) = g.neighbors(v) else { return false };
            for &(y, _) in nbrs {
                if self.is_interior(y) && seen.insert(y) {
                    stack.push(y);
                }
            }
        }
        seen.len() == self.interior.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> WeightedGraph {
        WeightedGraph::from_edges((0..n - 1).map(|i| (i, i + 1, 1.0))).unwrap()
    }

    fn coords(g: &WeightedGraph, vs: &[VertexId]) -> Vec<i64> {
        let mut c: Vec<i64> = vs.iter().map(|&v| g.site(v).unwrap()[0]).collect();
        c.sort();
        c
    }

    #[test]
    fn single_edge_degrees() {
        let g = WeightedGraph::from_edges([(0, 1, 1.0)]).unwrap();
        assert_eq!(g.degree(VertexId(0)).unwrap(), 1);
        assert_eq!(g.degree(VertexId(1)).unwrap(), 1);
    }

    #[test]
    fn duplicate_edge_rejected() {
        let err = WeightedGraph::from_edges([(0, 1, 1.0), (1, 0, 2.0)]).unwrap_err();
        assert!(matches!(err, Error::DuplicateEdge(..)));
    }

    #[test]
    fn loop_and_weight_rejected() {
        assert!(matches!(WeightedGraph::from_edges([(2, 2, 1.0)]), Err(Error::LoopEdge(_))));
        assert!(matches!(
            WeightedGraph::from_edges([(0, 1, 0.0)]),
            Err(Error::NonpositiveWeight { .. })
        ));
        assert!(matches!(
            WeightedGraph::from_edges([(0, 1, -1.0)]),
            Err(Error::NonpositiveWeight { .. })
        ));
    }

    #[test]
    fn path_degrees() {
        let g = path(3);
        assert_eq!(g.degree(VertexId(1)).unwrap(), 2);
        assert_eq!(g.degree(VertexId(0)).unwrap(), 1);
        assert_eq!(g.degree(VertexId(2)).unwrap(), 1);
    }

    #[test]
    fn lattice_ball_radius_two() {
        let mut g = WeightedGraph::lattice(1).unwrap();
        let r = g.ball(g.origin(), 2).unwrap();
        assert_eq!(coords(&g, r.vertices()), vec![-2, -1, 0, 1, 2]);
        assert_eq!(coords(&g, r.interior()), vec![-1, 0, 1]);
        assert_eq!(coords(&g, r.boundary()), vec![-2, 2]);
    }

    #[test]
    fn radius_zero_ball() {
        let mut g = WeightedGraph::lattice(2).unwrap();
        let r = g.ball(VertexId(0), 0).unwrap();
        assert_eq!(r.vertices(), &[VertexId(0)]);
        assert!(r.interior().is_empty());
        assert_eq!(r.boundary(), &[VertexId(0)]);
    }

    #[test]
    fn tree_ball_radius_one() {
        let mut g = WeightedGraph::regular_tree(3).unwrap();
        let r = g.ball(VertexId(0), 1).unwrap();
        assert_eq!(r.len(), 4);
        assert_eq!(r.interior(), &[VertexId(0)]);
    }

    #[test]
    fn finite_ball_uses_ambient_neighbors() {
        // in a path 0-1-2, the ball of radius 1 around 1 is everything,
        // so the endpoints are interior even though they sit at the radius
        let mut g = path(3);
        let r = g.ball(VertexId(1), 1).unwrap();
        assert_eq!(r.interior().len(), 3);
        assert!(r.boundary().is_empty());
    }

    #[test]
    fn distances() {
        let mut z = WeightedGraph::lattice(1).unwrap();
        let o = z.origin();
        assert_eq!(z.distance(o, o, 0).unwrap(), Some(0));
        z.materialize_ball(o, 5).unwrap();
        let five = z.vertex_at(&[5]).unwrap();
        assert_eq!(z.distance(o, five, 10).unwrap(), Some(5));
        let mut p = path(3);
        assert_eq!(p.distance(VertexId(0), VertexId(2), 1).unwrap(), None);
        assert!(matches!(p.distance(VertexId(0), VertexId(7), 3), Err(Error::UnknownVertex(_))));
    }

    #[test]
    fn exhaustion_counts() {
        let mut z = WeightedGraph::lattice(1).unwrap();
        let o = z.origin();
        for (n, r) in z.exhaustion(o).take(6).enumerate() {
            assert_eq!(r.unwrap().len(), 2 * (n + 1) + 1);
        }
        let mut t = WeightedGraph::regular_tree(3).unwrap();
        for (n, r) in t.exhaustion(VertexId(0)).take(7).enumerate() {
            let n = n as u32 + 1;
            assert_eq!(r.unwrap().len(), 1 + 3 * (2usize.pow(n) - 1));
        }
    }

    #[test]
    fn exhaustion_stabilizes_on_finite_graphs() {
        let mut g = path(5);
        let sizes: Vec<usize> = g.exhaustion(VertexId(0)).take(7).map(|r| r.unwrap().len()).collect();
        assert_eq!(sizes, vec![2, 3, 4, 5, 5, 5, 5]);
    }

    #[test]
    fn exhaustion_flags_disconnected_input() {
        let mut g = WeightedGraph::from_edges([(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        let mut ex = g.exhaustion(VertexId(0));
        let r = ex.nth(2).unwrap().unwrap();
        assert_eq!(r.len(), 2);
        assert!(ex.restricted_to_component());
    }

    #[test]
    fn generated_ids_are_deterministic() {
        let mut a = WeightedGraph::regular_tree(3).unwrap();
        let mut b = WeightedGraph::regular_tree(3).unwrap();
        a.materialize_ball(VertexId(0), 4).unwrap();
        b.materialize_ball(VertexId(0), 4).unwrap();
        for v in a.vertices() {
            assert_eq!(a.site(v), b.site(v));
        }
    }

    #[test]
    fn custom_weights_are_symmetric() {
        let rule: WeightFn = Arc::new(|a, b| 1.0 + 0.1 * (a[0] * a[0] + 3 * b[0]).rem_euclid(7) as f64);
        let mut g = WeightedGraph::generated(
            Family::Lattice { dim: 1 },
            WeightRule::Custom { rule, range: None },
        )
        .unwrap();
        g.materialize_ball(VertexId(0), 6).unwrap();
        for (x, y, w) in g.edges() {
            assert_eq!(g.weight(y, x).unwrap().to_bits(), w.to_bits());
        }
        assert_eq!(g.bounds().scope, BoundsScope::Materialized);
    }

    #[test]
    fn declared_bounds() {
        let z = WeightedGraph::lattice(1).unwrap();
        let b = z.bounds();
        assert_eq!((b.max_degree, b.sup_weight, b.inf_weight), (2, 1.0, 1.0));
        assert_eq!(b.scope, BoundsScope::Global);
        let t = WeightedGraph::regular_tree(3).unwrap();
        assert_eq!(t.bounds().max_degree, 3);
    }

    #[test]
    fn unexpanded_neighbors_are_reported() {
        let mut z = WeightedGraph::lattice(1).unwrap();
        z.ball(VertexId(0), 1).unwrap();
        let outer = z.vertex_at(&[2]).unwrap();
        assert!(matches!(z.neighbors(outer), Err(Error::NotMaterialized(_))));
    }

    #[test]
    fn weight_overrides() {
        let g = path(3).with_weight_overrides([(2, 1, 4.0)]).unwrap();
        assert_eq!(g.weight(VertexId(1), VertexId(2)), Some(4.0));
        assert_eq!(g.weight(VertexId(2), VertexId(1)), Some(4.0));
        assert!(matches!(path(3).with_weight_overrides([(0, 2, 1.0)]), Err(Error::UnknownEdge(..))));
        assert!(matches!(
            path(3).with_weight_overrides([(0, 1, -2.0)]),
            Err(Error::NonpositiveWeight { .. })
        ));
    }
}
