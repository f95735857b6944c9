//! Compressed sparse row matrices with the few operations the solvers need.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    pub nrows: usize,
    pub ncols: usize,
    pub indptr: Vec<usize>,
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl Csr {
    /// Build from triplets; duplicates are summed and exact zeros dropped.
    pub fn from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, f64)]) -> Csr {
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); nrows];
        for &(i, j, v) in trip {
            assert!(i < nrows && j < ncols, "triplet ({i},{j}) out of bounds");
            rows[i].push((j, v));
        }
        let mut indptr = vec![0];
        let mut indices = Vec::new();
        let mut values = Vec::new();
        for mut r in rows {
            r.sort_by_key(|x| x.0);
            let mut k = 0;
            while k < r.len() {
                let j = r[k].0;
                let mut s = 0.0;
                while k < r.len() && r[k].0 == j {
                    s += r[k].1;
                    k += 1;
                }
                if s != 0.0 {
                    indices.push(j);
                    values.push(s);
                }
            }
            indptr.push(indices.len());
        }
        Csr { nrows, ncols, indptr, indices, values }
    }

    pub fn identity(n: usize) -> Csr {
        Csr::from_triplets(n, n, &(0..n).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Csr {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Csr::from_triplets(m.nrows(), m.ncols(), &t)
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.indptr[i]..self.indptr[i + 1]).map(move |k| (self.indices[k], self.values[k]))
    }

    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.nrows).flat_map(|i| self.row(i).map(move |(j, v)| (i, j, v))).collect()
    }

    pub fn transpose(&self) -> Csr {
        let t: Vec<_> = self.triplets().into_iter().map(|(i, j, v)| (j, i, v)).collect();
        Csr::from_triplets(self.ncols, self.nrows, &t)
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.ncols);
        (0..self.nrows).map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    pub fn mul_dvec(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_vec(self.mul_vec(x.as_slice()))
    }

    pub fn mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.nrows, x.ncols());
        for c in 0..x.ncols() {
            let y = self.mul_vec(x.column(c).as_slice());
            out.column_mut(c).copy_from_slice(&y);
        }
        out
    }

    pub fn matmul(&self, other: &Csr) -> Csr {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Vec::new();
        let mut acc = vec![0.0; other.ncols];
        let mut mark = vec![usize::MAX; other.ncols];
        let mut touched = Vec::new();
        for i in 0..self.nrows {
            touched.clear();
            for (k, a) in self.row(i) {
                for (j, b) in other.row(k) {
                    if mark[j] != i {
                        mark[j] = i;
                        acc[j] = 0.0;
                        touched.push(j);
                    }
                    acc[j] += a * b;
                }
            }
            for &j in &touched {
                t.push((i, j, acc[j]));
            }
        }
        Csr::from_triplets(self.nrows, other.ncols, &t)
    }

    pub fn scale(&self, s: f64) -> Csr {
        let mut c = self.clone();
        c.values.iter_mut().for_each(|v| *v *= s);
        c
    }

    pub fn add(&self, other: &Csr) -> Csr {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.triplets();
        t.extend(other.triplets());
        Csr::from_triplets(self.nrows, self.ncols, &t)
    }

    /// Scale rows by `l` and columns by `r`.
    pub fn scale_rows_cols(&self, l: &[f64], r: &[f64]) -> Csr {
        let mut c = self.clone();
        for i in 0..c.nrows {
            for k in c.indptr[i]..c.indptr[i + 1] {
                c.values[k] *= l[i] * r[c.indices[k]];
            }
        }
        c
    }

    /// Keep the rows listed in `rows`, in that order.
    pub fn select_rows(&self, rows: &[usize]) -> Csr {
        let mut t = Vec::new();
        for (ni, &i) in rows.iter().enumerate() {
            for (j, v) in self.row(i) {
                t.push((ni, j, v));
            }
        }
        Csr::from_triplets(rows.len(), self.ncols, &t)
    }

    /// Principal submatrix on `idx`.
    pub fn submatrix(&self, idx: &[usize]) -> Csr {
        let mut map = vec![usize::MAX; self.ncols];
        for (k, &i) in idx.iter().enumerate() {
            map[i] = k;
        }
        let mut t = Vec::new();
        for (ni, &i) in idx.iter().enumerate() {
            for (j, v) in self.row(i) {
                if map[j] != usize::MAX {
                    t.push((ni, map[j], v));
                }
            }
        }
        Csr::from_triplets(idx.len(), idx.len(), &t)
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows, self.ncols);
        for (i, j, v) in self.triplets() {
            m[(i, j)] += v;
        }
        m
    }

    /// Maximum absolute column sum.
    pub fn norm1(&self) -> f64 {
        let mut cols = vec![0.0; self.ncols];
        for (_, j, v) in self.triplets() {
            cols[j] += v.abs();
        }
        cols.into_iter().fold(0.0, f64::max)
    }

    pub fn asymmetry(&self) -> f64 {
        let d = self.add(&self.transpose().scale(-1.0));
        d.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.row(i).filter(|(j, _)| *j == i).map(|x| x.1).sum()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn products_match_dense() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 2.0, -1.0, 0.0, 3.0]);
        let b = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 4.0, 2.0, 0.0, -1.0]);
        let (sa, sb) = (Csr::from_dense(&a), Csr::from_dense(&b));
        assert_eq!(sa.matmul(&sb).to_dense(), &a * &b);
        assert_eq!(sa.transpose().to_dense(), a.transpose());
        assert_eq!(sa.norm1(), 4.0);
        let x = DVector::from_vec(vec![1.0, 2.0]);
        assert_eq!(sa.mul_dvec(&x), &a * &x);
    }
}
