//! Compressed sparse row matrices and a sparse LDLᵀ factorization.

use crate::error::{Error, Result};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

/// Square matrix in CSR form. Column indices within a row are ascending.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from per-row `(column, value)` lists; duplicates are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            let start = cols.len();
            for (j, v) in row {
                assert!(j < n, "column index out of range");
                if cols.len() > start && *cols.last().unwrap() == j {
                    *vals.last_mut().unwrap() += v;
                } else {
                    cols.push(j);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.n);
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k]];
            }
            *yi = s;
        }
    }

    /// Exact structural and numerical symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| self.row(i).all(|(j, v)| self.get(j, i).to_bits() == v.to_bits()))
    }

    /// Largest absolute row sum, an upper bound on the spectral radius.
    pub fn max_abs_row_sum(&self) -> f64 {
        (0..self.n).map(|i| self.row(i).map(|(_, v)| v.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn to_dense_rows(&self) -> Vec<Vec<f64>> {
        let mut out = vec![vec![0.0; self.n]; self.n];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in self.row(i) {
                row[j] = v;
            }
        }
        out
    }

    /// Writes `<i> <j> <value>` lines, zero-based, row-major.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "# {} x {} matrix, {} entries", self.n, self.n, self.nnz())?;
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                writeln!(w, "{i} {j} {v:e}")?;
            }
        }
        Ok(())
    }

    /// LDLᵀ factorization of `self - shift * I`, which must be positive
    /// definite.
    pub fn ldl_shifted(&self, shift: f64) -> Result<Ldl> {
        Ldl::factor(self, shift)
    }
}

/// Sparse LDLᵀ factorization with minimum-degree elimination order.
///
/// Elimination never fills in on trees and paths, which covers the balls of
/// Z and of regular trees; general graphs pay the usual fill.
#[derive(Clone, Debug)]
pub struct Ldl {
    order: Vec<usize>,
    // column k of L (k-th eliminated vertex), as (original index, entry)
    lower: Vec<Vec<(usize, f64)>>,
    d: Vec<f64>,
}

impl Ldl {
    fn factor(m: &CsrMatrix, shift: f64) -> Result<Ldl> {
        let n = m.dim();
        let mut diag: Vec<f64> = vec![-shift; n];
        let mut rows: Vec<BTreeMap<usize, f64>> = vec![BTreeMap::new(); n];
        for (i, row) in rows.iter_mut().enumerate() {
            for (j, v) in m.row(i) {
                if i == j {
                    diag[i] += v;
                } else if v != 0.0 {
                    row.insert(j, v);
                }
            }
        }
        let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (rows[i].len(), i)).collect();
        let mut order = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut d = Vec::with_capacity(n);
        while let Some((_, i)) = queue.pop_first() {
            let pivot = diag[i];
            if !(pivot > 0.0 && pivot.is_finite()) {
                return Err(Error::NotPositiveDefinite(pivot));
            }
            let row = std::mem::take(&mut rows[i]);
            let nbrs: Vec<(usize, f64)> = row.into_iter().collect();
            for &(j, _) in &nbrs {
                queue.remove(&(rows[j].len(), j));
                rows[j].remove(&i);
            }
            for (p, &(j, aji)) in nbrs.iter().enumerate() {
                diag[j] -= aji * aji / pivot;
                for &(k, aki) in &nbrs[p + 1..] {
                    let delta = aji * aki / pivot;
                    *rows[j].entry(k).or_insert(0.0) -= delta;
                    *rows[k].entry(j).or_insert(0.0) -= delta;
                }
            }
            for &(j, _) in &nbrs {
                queue.insert((rows[j].len(), j));
            }
            order.push(i);
            lower.push(nbrs.into_iter().map(|(j, a)| (j, a / pivot)).collect());
            d.push(pivot);
        }
        Ok(Ldl { order, lower, d })
    }

    pub fn dim(&self) -> usize {
        self.order.len()
    }

    /// Smallest pivot; positive for a successful factorization.
    pub fn min_pivot(&self) -> f64 {
        self.d.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut z = b.to_vec();
        self.solve_in_place(&mut z);
        z
    }

    pub fn solve_in_place(&self, z: &mut [f64]) {
        assert_eq!(z.len(), self.dim());
        for (k, &i) in self.order.iter().enumerate() {
            let zi = z[i];
            for &(j, l) in &self.lower[k] {
                z[j] -= l * zi;
            }
        }
        for (k, &i) in self.order.iter().enumerate() {
            z[i] /= self.d[k];
        }
        for (k, &i) in self.order.iter().enumerate().rev() {
            let mut s = z[i];
            for &(j, l) in &self.lower[k] {
                s -= l * z[j];
            }
            z[i] = s;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tridiag(n: usize) -> CsrMatrix {
        CsrMatrix::from_rows(
            (0..n)
                .map(|i| {
                    let mut r = vec![(i, 2.0)];
                    if i > 0 {
                        r.push((i - 1, -1.0));
                    }
                    if i + 1 < n {
                        r.push((i + 1, -1.0));
                    }
                    r
                })
                .collect(),
        )
    }

    #[test]
    fn matvec_and_lookup() {
        let m = tridiag(3);
        assert_eq!(m.matvec(&[1.0, 1.0, 1.0]), vec![1.0, 0.0, 1.0]);
        assert_eq!(m.get(0, 2), 0.0);
        assert_eq!(m.get(2, 1), -1.0);
        assert!(m.is_symmetric());
    }

    #[test]
    fn solve_tridiagonal() {
        let m = tridiag(50);
        let x: Vec<f64> = (0..50).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = m.matvec(&x);
        let y = m.ldl_shifted(0.0).unwrap().solve(&b);
        for (a, b) in x.iter().zip(&y) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn indefinite_is_rejected() {
        // eigenvalues of the 3x3 tridiagonal are 2 - sqrt(2), 2, 2 + sqrt(2)
        assert!(matches!(tridiag(3).ldl_shifted(1.0), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn coordinate_export() {
        let mut out = Vec::new();
        tridiag(2).write_coordinate(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
    }

    proptest! {
        #[test]
        fn ldl_solves_random_diagonally_dominant(
            n in 1usize..25,
            entries in proptest::collection::vec((0usize..25, 0usize..25, -1.0f64..1.0), 0..80),
            x in proptest::collection::vec(-5.0f64..5.0, 25),
        ) {
            let mut rows = vec![Vec::new(); n];
            let mut rowsum = vec![0.0; n];
            for (i, j, v) in entries {
                let (i, j) = (i % n, j % n);
                if i == j { continue; }
                rows[i].push((j, v));
                rows[j].push((i, v));
                rowsum[i] += v.abs();
                rowsum[j] += v.abs();
            }
            for i in 0..n {
                rows[i].push((i, rowsum[i] + 0.5));
            }
            let m = CsrMatrix::from_rows(rows);
            let x = &x[..n];
            let b = m.matvec(x);
            let y = m.ldl_shifted(0.0).unwrap().solve(&b);
            for (a, c) in x.iter().zip(&y) {
                prop_assert!((a - c).abs() < 1e-9);
            }
        }
    }
}
