//! Envelope (skyline) Cholesky factorization under a reverse
//! Cuthill–McKee ordering.

use std::collections::VecDeque;

use super::sparse::Csr;

/// Reverse Cuthill–McKee permutation of a structurally symmetric matrix.
/// `perm[new] = old`.
pub fn reverse_cuthill_mckee(a: &Csr) -> Vec<usize> {
    let n = a.nrows;
    let adj: Vec<Vec<usize>> = (0..n).map(|i| a.row(i).map(|(j, _)| j).filter(|&j| j != i).collect()).collect();
    let deg: Vec<usize> = adj.iter().map(|v| v.len()).collect();
    let mut seen = vec![false; n];
    let mut order = Vec::with_capacity(n);
    let bfs_far = |s: usize| -> (usize, usize) {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        let mut last = s;
        while let Some(u) = q.pop_front() {
            last = u;
            for &w in &adj[u] {
                if dist[w] == usize::MAX {
                    dist[w] = dist[u] + 1;
                    q.push_back(w);
                }
            }
        }
        let far = (0..n).filter(|&i| dist[i] == dist[last]).min_by_key(|&i| deg[i]).unwrap_or(last);
        (far, dist[last])
    };
    for s0 in 0..n {
        if seen[s0] {
            continue;
        }
        let mut start = s0;
        let mut ecc = 0;
        for _ in 0..4 {
            let (f, e) = bfs_far(start);
            if e <= ecc && start != s0 {
                break;
            }
            ecc = e;
            start = f;
        }
        seen[start] = true;
        let mut q = VecDeque::from([start]);
        while let Some(u) = q.pop_front() {
            order.push(u);
            let mut nb: Vec<usize> = adj[u].iter().copied().filter(|&w| !seen[w]).collect();
            nb.sort_by_key(|&w| (deg[w], w));
            for w in nb {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    order.reverse();
    order
}

/// `L Lᵀ = P (A + τI) Pᵀ` in row-envelope storage.
#[derive(Debug, Clone)]
pub struct SkylineCholesky {
    n: usize,
    perm: Vec<usize>,
    first: Vec<usize>,
    start: Vec<usize>,
    vals: Vec<f64>,
    pub shift: f64,
}

impl SkylineCholesky {
    /// Factor `A + shift·I`; returns `None` at a non-positive pivot.
    pub fn factor(a: &Csr, shift: f64) -> Option<Self> {
        let n = a.nrows;
        let perm = reverse_cuthill_mckee(a);
        let mut inv = vec![0; n];
        for (k, &p) in perm.iter().enumerate() {
            inv[p] = k;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for i in 0..n {
            for (j, _) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pj < pi {
                    first[pi] = first[pi].min(pj);
                }
            }
        }
        let mut start = vec![0usize; n + 1];
        for i in 0..n {
            start[i + 1] = start[i] + (i - first[i] + 1);
        }
        let mut vals = vec![0.0; start[n]];
        for i in 0..n {
            for (j, v) in a.row(i) {
                let (pi, pj) = (inv[i], inv[j]);
                if pj <= pi {
                    vals[start[pi] + pj - first[pi]] += v;
                }
            }
            let pi = inv[i];
            vals[start[pi] + pi - first[pi]] += shift;
        }
        for i in 0..n {
            let fi = first[i];
            for j in fi..=i {
                let fj = first[j];
                let lo = fi.max(fj);
                let mut s = vals[start[i] + j - fi];
                let ri = &vals[start[i] + lo - fi..start[i] + j - fi];
                let rj = &vals[start[j] + lo - fj..start[j] + j - fj];
                s -= ri.iter().zip(rj).map(|(x, y)| x * y).sum::<f64>();
                if j < i {
                    vals[start[i] + j - fi] = s / vals[start[j] + j - fj];
                } else {
                    if !(s > 0.0) || !s.is_finite() {
                        return None;
                    }
                    vals[start[i] + i - fi] = s.sqrt();
                }
            }
        }
        Some(SkylineCholesky { n, perm, first, start, vals, shift })
    }

    pub fn envelope_size(&self) -> usize {
        self.vals.len()
    }

    /// Solve `(A + shift·I) x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = (0..n).map(|k| b[self.perm[k]]).collect();
        for i in 0..n {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            let s: f64 = row[..i - fi].iter().zip(&y[fi..i]).map(|(a, b)| a * b).sum();
            y[i] = (y[i] - s) / row[i - fi];
        }
        for i in (0..n).rev() {
            let fi = self.first[i];
            let row = &self.vals[self.start[i]..self.start[i + 1]];
            y[i] /= row[i - fi];
            let yi = y[i];
            for (k, a) in row[..i - fi].iter().enumerate() {
                y[fi + k] -= a * yi;
            }
        }
        let mut x = vec![0.0; n];
        for k in 0..n {
            x[self.perm[k]] = y[k];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    #[test]
    fn solves_laplacian_plus_shift() {
        let n = 30;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        let a = Csr::from_triplets(n, n, &t);
        let f = SkylineCholesky::factor(&a, 0.1).unwrap();
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let x = f.solve(&b);
        let r: Vec<f64> = a.mul_vec(&x).iter().zip(&x).map(|(ax, xi)| ax + 0.1 * xi).collect();
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-10);
        }
        let p = reverse_cuthill_mckee(&a);
        let mut s = p.clone();
        s.sort();
        assert_eq!(s, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn rejects_indefinite() {
        let a = Csr::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 1.0]));
        assert!(SkylineCholesky::factor(&a, 0.0).is_none());
    }
}
