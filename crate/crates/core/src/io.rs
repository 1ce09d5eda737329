//! Text formats: edge lists, potentials, weight overrides and coordinate
//! matrices. Blank lines and lines starting with `#` are ignored; errors
//! carry the 1-based line number.

use crate::error::{Error, Result};
use crate::graph::{VertexId, WeightedGraph};
use crate::operator::Potential;
use crate::oracle::DenseMatrix;
use std::collections::HashSet;
use std::path::Path;

fn data_lines(text: &str) -> impl Iterator<Item = (usize, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.trim();
        if l.is_empty() || l.starts_with('#') {
            None
        } else {
            Some((i + 1, l.split_whitespace().collect()))
        }
    })
}

fn field<T: std::str::FromStr>(tok: &str, what: &str) -> Result<T> {
    tok.parse().map_err(|_| Error::Parse(format!("invalid {what} `{tok}`")))
}

fn expect_fields<'a>(f: &'a [&'a str], n: usize, shape: &str) -> Result<&'a [&'a str]> {
    if f.len() != n {
        return Err(Error::Parse(format!("expected `{shape}`, found {} fields", f.len())));
    }
    Ok(f)
}

/// Triples `<x> <y> <a>` with distinct endpoints, positive finite weight and
/// no repeated edge.
pub fn parse_edge_triples(text: &str) -> Result<Vec<(usize, usize, f64)>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for (line, f) in data_lines(text) {
        let triple = (|| {
            let f = expect_fields(&f, 3, "<x> <y> <weight>")?;
            let (x, y): (usize, usize) = (field(f[0], "vertex id")?, field(f[1], "vertex id")?);
            let a: f64 = field(f[2], "weight")?;
            if x == y {
                return Err(Error::LoopEdge(VertexId(x)));
            }
            if !(a > 0.0) || !a.is_finite() {
                return Err(Error::NonpositiveWeight { x: VertexId(x), y: VertexId(y), weight: a });
            }
            if !seen.insert((x.min(y), x.max(y))) {
                return Err(Error::DuplicateEdge(VertexId(x.min(y)), VertexId(x.max(y))));
            }
            Ok((x, y, a))
        })()
        .map_err(|e| e.at_line(line))?;
        out.push(triple);
    }
    Ok(out)
}

pub fn parse_edge_list(text: &str) -> Result<WeightedGraph> {
    WeightedGraph::from_edges(parse_edge_triples(text)?)
}

pub fn read_edge_list(path: impl AsRef<Path>) -> Result<WeightedGraph> {
    parse_edge_list(&std::fs::read_to_string(path)?)
}

/// Replaces the weights of existing edges of a finite graph.
pub fn apply_weight_file(graph: WeightedGraph, text: &str) -> Result<WeightedGraph> {
    graph.with_weight_overrides(parse_edge_triples(text)?)
}

/// Lines `<x> <W_x>`; unlisted vertices have `W = 0`.
pub fn parse_potential(text: &str) -> Result<Potential> {
    let mut seen = HashSet::new();
    let mut values = Vec::new();
    for (line, f) in data_lines(text) {
        let entry = (|| {
            let f = expect_fields(&f, 2, "<x> <W_x>")?;
            let x: usize = field(f[0], "vertex id")?;
            let w: f64 = field(f[1], "potential value")?;
            if !w.is_finite() {
                return Err(Error::Parse(format!("potential value `{}` is not finite", f[1])));
            }
            if !seen.insert(x) {
                return Err(Error::Parse(format!("vertex {x} listed twice")));
            }
            Ok((VertexId(x), w))
        })()
        .map_err(|e| e.at_line(line))?;
        values.push(entry);
    }
    Potential::from_values(values)
}

pub fn read_potential(path: impl AsRef<Path>) -> Result<Potential> {
    parse_potential(&std::fs::read_to_string(path)?)
}

/// Coordinate entries `<i> <j> <value>` of a square matrix whose size is
/// the largest index plus one. Repeated entries are summed.
pub fn parse_coordinate(text: &str) -> Result<DenseMatrix> {
    let mut entries = Vec::new();
    let mut n = 0;
    for (line, f) in data_lines(text) {
        let e = (|| {
            let f = expect_fields(&f, 3, "<i> <j> <value>")?;
            let (i, j): (usize, usize) = (field(f[0], "row index")?, field(f[1], "column index")?);
            let v: f64 = field(f[2], "value")?;
            Ok((i, j, v))
        })()
        .map_err(|e: Error| e.at_line(line))?;
        n = n.max(e.0 + 1).max(e.1 + 1);
        entries.push(e);
    }
    if n > crate::oracle::MAX_DENSE {
        return Err(Error::TooLarge { size: n, limit: crate::oracle::MAX_DENSE });
    }
    let mut m = DenseMatrix::zeros(n);
    for (i, j, v) in entries {
        m.add(i, j, v);
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_list_with_comments() {
        let g = parse_edge_list("# path\n0 1 1.0\n\n1 2 2.5\n").unwrap();
        assert_eq!(g.num_vertices(), 3);
        assert_eq!(g.weight(VertexId(1), VertexId(2)), Some(2.5));
    }

    #[test]
    fn edge_list_errors_carry_lines() {
        let e = parse_edge_list("0 1 1\n# c\n0 0 1.0\n").unwrap_err();
        assert!(matches!(e, Error::AtLine { line: 3, ref source } if matches!(**source, Error::LoopEdge(_))));
        assert!(e.to_string().contains("LoopEdge"));
        let e = parse_edge_list("0 1 -1\n").unwrap_err();
        assert!(matches!(e, Error::AtLine { line: 1, ref source } if matches!(**source, Error::NonpositiveWeight { .. })));
        let e = parse_edge_list("0 1 1\n1 0 2\n").unwrap_err();
        assert!(matches!(e, Error::AtLine { line: 2, ref source } if matches!(**source, Error::DuplicateEdge(..))));
        assert!(matches!(parse_edge_list("0 1\n").unwrap_err(), Error::AtLine { line: 1, .. }));
    }

    #[test]
    fn potential_file() {
        let p = parse_potential("0 1.5\n# x\n3 0.25\n").unwrap();
        assert_eq!(p.get(VertexId(3)), 0.25);
        assert_eq!(p.get(VertexId(1)), 0.0);
        assert!(parse_potential("0 1\n0 2\n").is_err());
    }

    #[test]
    fn coordinate_round_trip() {
        let g = parse_edge_list("0 1 1.0\n1 2 0.5\n").unwrap();
        let op = crate::operator::EllipticOperator::without_potential(g);
        let m = op.compressed_matrix(&[VertexId(0), VertexId(1), VertexId(2)]).unwrap();
        let mut buf = Vec::new();
        m.write_coordinate(&mut buf).unwrap();
        let d = parse_coordinate(std::str::from_utf8(&buf).unwrap()).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), m.get(i, j));
            }
        }
    }
}
