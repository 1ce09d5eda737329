//! Brute-force reference implementations.
//!
//! Nothing here shares numerical code with the main modules: the dense
//! eigensolver is a plain cyclic Jacobi iteration, the matrix exponential
//! goes through that eigendecomposition, and subset minimization is a
//! straight loop over bitmasks. They are slow on purpose and capped in size.

use crate::error::{Error, Result};

pub const MAX_DENSE: usize = 500;
pub const MAX_SUBSET_UNIVERSE: usize = 20;

/// Row-major square matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(n: usize) -> Self {
        DenseMatrix { n, data: vec![0.0; n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return Err(Error::InvalidParameter(format!(
                    "row {i} has {} entries, expected {n}",
                    r.len()
                )));
            }
            data.extend(r);
        }
        Ok(DenseMatrix { n, data })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] += v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.symmetry_defect(tol).is_none()
    }

    fn symmetry_defect(&self, tol: f64) -> Option<(usize, usize, f64)> {
        for i in 0..self.n {
            for j in i + 1..self.n {
                let diff = (self.get(i, j) - self.get(j, i)).abs();
                if diff > tol || diff.is_nan() {
                    return Some((i, j, diff));
                }
            }
        }
        None
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        let n = self.n;
        let mut out = DenseMatrix::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a != 0.0 {
                    for j in 0..n {
                        out.data[i * n + j] += a * other.get(k, j);
                    }
                }
            }
        }
        out
    }
}

/// Eigenvalues in ascending order with matching orthonormal eigenvectors;
/// `vectors[k]` belongs to `values[k]`. Each vector is signed so that its
/// entries sum to a nonnegative number.
#[derive(Clone, Debug)]
pub struct Eigh {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
}

/// Cyclic Jacobi rotations until the off-diagonal Frobenius norm is below
/// `1e-12 · max(1, ‖M‖_F)`.
pub fn dense_eigh(m: &DenseMatrix) -> Result<Eigh> {
    let n = m.dim();
    if n > MAX_DENSE {
        return Err(Error::TooLarge { size: n, limit: MAX_DENSE });
    }
    let scale = m.frobenius().max(1.0);
    if let Some((i, j, diff)) = m.symmetry_defect(1e-14 * scale) {
        return Err(Error::NotSymmetric { i, j, diff });
    }
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    let off = |a: &Vec<Vec<f64>>| {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i][j] * a[i][j];
                }
            }
        }
        s.sqrt()
    };
    let target = 1e-12 * scale;
    let mut sweeps = 0;
    while off(&a) > target {
        sweeps += 1;
        if sweeps > 100 {
            return Err(Error::NoConvergence(sweeps));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[p][k] = a[k][p];
                    a[k][q] = s * akp + c * akq;
                    a[q][k] = a[k][q];
                }
                a[p][p] -= t * apq;
                a[q][q] += t * apq;
                a[p][q] = 0.0;
                a[q][p] = 0.0;
                for row in v.iter_mut() {
                    let vkp = row[p];
                    let vkq = row[q];
                    row[p] = c * vkp - s * vkq;
                    row[q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let values = order.iter().map(|&k| a[k][k]).collect();
    let vectors = order
        .iter()
        .map(|&k| {
            let mut col: Vec<f64> = (0..n).map(|i| v[i][k]).collect();
            if col.iter().sum::<f64>() < 0.0 {
                col.iter_mut().for_each(|x| *x = -*x);
            }
            col
        })
        .collect();
    Ok(Eigh { values, vectors })
}

/// `e^{−tM} v` through the eigendecomposition of `M`.
pub fn dense_expm_action(m: &DenseMatrix, v: &[f64], t: f64) -> Result<Vec<f64>> {
    if v.len() != m.dim() {
        return Err(Error::LengthMismatch { domain: m.dim(), values: v.len() });
    }
    if t == 0.0 {
        return Ok(v.to_vec());
    }
    let e = dense_eigh(m)?;
    let mut out = vec![0.0; v.len()];
    for (lambda, q) in e.values.iter().zip(&e.vectors) {
        let coeff = (-t * lambda).exp() * q.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        for (o, qi) in out.iter_mut().zip(q) {
            *o += coeff * qi;
        }
    }
    Ok(out)
}

/// Minimum of `evaluator` over the nonempty subsets of `items` accepted by
/// `predicate`. Subsets are passed in the order of `items`; ties go to the
/// lexicographically smallest subset. `None` when no subset is accepted.
pub fn enumerate_subsets<T, P, E>(items: &[T], predicate: P, evaluator: E) -> Result<Option<(f64, Vec<T>)>>
where
    T: Clone + Ord,
    P: Fn(&[T]) -> bool,
    E: Fn(&[T]) -> f64,
{
    let n = items.len();
    if n > MAX_SUBSET_UNIVERSE {
        return Err(Error::TooLarge { size: n, limit: MAX_SUBSET_UNIVERSE });
    }
    let mut best: Option<(f64, Vec<T>)> = None;
    let mut subset = Vec::with_capacity(n);
    for mask in 1u32..(1u32 << n) {
        subset.clear();
        for (i, item) in items.iter().enumerate() {
            if mask & (1 << i) != 0 {
                subset.push(item.clone());
            }
        }
        if !predicate(&subset) {
            continue;
        }
        let value = evaluator(&subset);
        let better = match &best {
            None => true,
            Some((b, w)) => value < *b || (value == *b && sorted(&subset) < sorted(w)),
        };
        if better {
            best = Some((value, subset.clone()));
        }
    }
    Ok(best)
}

fn sorted<T: Clone + Ord>(s: &[T]) -> Vec<T> {
    let mut v = s.to_vec();
    v.sort();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn diagonal() {
        let m = DenseMatrix::from_rows(vec![vec![3.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 2.0]]).unwrap();
        assert_eq!(dense_eigh(&m).unwrap().values, vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn two_by_two() {
        let m = DenseMatrix::from_rows(vec![vec![2.0, -1.0], vec![-1.0, 2.0]]).unwrap();
        let e = dense_eigh(&m).unwrap();
        assert!((e.values[0] - 1.0).abs() < 1e-14);
        assert!((e.values[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_and_large() {
        let m = DenseMatrix::from_rows(vec![vec![1.0, 2.0], vec![2.1, 1.0]]).unwrap();
        assert!(matches!(dense_eigh(&m), Err(Error::NotSymmetric { .. })));
        assert!(matches!(dense_eigh(&DenseMatrix::zeros(501)), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn expm_two_vertex() {
        let a = 1.7;
        let m = DenseMatrix::from_rows(vec![vec![a, -a], vec![-a, a]]).unwrap();
        assert_eq!(dense_expm_action(&m, &[1.0, 0.0], 0.0).unwrap(), vec![1.0, 0.0]);
        for t in [0.1, 1.0, 3.0] {
            let u = dense_expm_action(&m, &[1.0, 0.0], t).unwrap();
            let e = (-2.0 * a * t).exp();
            assert!((u[0] - (1.0 + e) / 2.0).abs() < 1e-14);
            assert!((u[1] - (1.0 - e) / 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn subsets() {
        assert_eq!(enumerate_subsets(&[7], |_| true, |_| 3.0).unwrap(), Some((3.0, vec![7])));
        assert_eq!(enumerate_subsets(&[1, 2, 3], |_| true, |_| 1.0).unwrap(), Some((1.0, vec![1])));
        let best = enumerate_subsets(&[1, 2, 3], |s| s.len() == 2, |s| s.iter().sum::<i32>() as f64).unwrap();
        assert_eq!(best, Some((3.0, vec![1, 2])));
        assert_eq!(enumerate_subsets(&[1, 2], |_| false, |_| 0.0).unwrap(), None);
        let big: Vec<u8> = (0..21).collect();
        assert!(matches!(enumerate_subsets(&big, |_| true, |_| 0.0), Err(Error::TooLarge { .. })));
    }

    proptest! {
        #[test]
        fn reconstruction(n in 1usize..12, entries in proptest::collection::vec(-3.0f64..3.0, 144)) {
            let mut m = DenseMatrix::zeros(n);
            for i in 0..n {
                for j in i..n {
                    let x = entries[i * 12 + j];
                    m.set(i, j, x);
                    m.set(j, i, x);
                }
            }
            let e = dense_eigh(&m).unwrap();
            for w in e.values.windows(2) {
                prop_assert!(w[0] <= w[1]);
            }
            for i in 0..n {
                for j in 0..n {
                    let r: f64 = (0..n).map(|k| e.vectors[k][i] * e.values[k] * e.vectors[k][j]).sum();
                    prop_assert!((r - m.get(i, j)).abs() < 1e-10);
                    let o: f64 = (0..n).map(|k| e.vectors[i][k] * e.vectors[j][k]).sum();
                    let id = if i == j { 1.0 } else { 0.0 };
                    prop_assert!((o - id).abs() < 1e-10);
                }
            }
        }
    }
}
