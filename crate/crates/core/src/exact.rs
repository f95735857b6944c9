//! Dense matrices over the rationals with exact rank and null spaces.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

#[derive(Debug, Clone, PartialEq)]
pub struct QMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub rows: Vec<Vec<BigRational>>,
}

pub fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl QMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        QMatrix { nrows, ncols, rows: vec![vec![BigRational::zero(); ncols]; nrows] }
    }

    pub fn from_rows(ncols: usize, rows: Vec<Vec<BigRational>>) -> Self {
        assert!(rows.iter().all(|r| r.len() == ncols));
        QMatrix { nrows: rows.len(), ncols, rows }
    }

    pub fn from_i64(rows: &[Vec<i64>], ncols: usize) -> Self {
        Self::from_rows(ncols, rows.iter().map(|r| r.iter().map(|&x| BigRational::from_integer(x.into())).collect()).collect())
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.rows[i][j]
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.ncols, self.nrows);
        for i in 0..self.nrows {
            for j in 0..self.ncols {
                t.rows[j][i] = self.rows[i][j].clone();
            }
        }
        t
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().all(|r| r.iter().all(|x| x.is_zero()))
    }

    /// Exact rank by fraction-free (Bareiss) elimination on integer-scaled rows.
    pub fn rank(&self) -> usize {
        let mut a: Vec<Vec<BigInt>> = self
            .rows
            .iter()
            .map(|r| {
                let l = r.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
                r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
            })
            .collect();
        let (m, n) = (self.nrows, self.ncols);
        let mut prev = BigInt::one();
        let mut rank = 0;
        for col in 0..n {
            if rank == m {
                break;
            }
            let Some(p) = (rank..m).find(|&i| !a[i][col].is_zero()) else { continue };
            a.swap(rank, p);
            for i in rank + 1..m {
                for j in col + 1..n {
                    let v = &a[rank][col] * &a[i][j] - &a[i][col] * &a[rank][j];
                    a[i][j] = v / &prev;
                }
                a[i][col] = BigInt::zero();
            }
            prev = a[rank][col].clone();
            rank += 1;
        }
        rank
    }

    /// Reduced row echelon form and the pivot columns.
    pub fn rref(&self) -> (QMatrix, Vec<usize>) {
        let mut a = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..a.ncols {
            if r == a.nrows {
                break;
            }
            let Some(p) = (r..a.nrows).find(|&i| !a.rows[i][c].is_zero()) else { continue };
            a.rows.swap(r, p);
            let inv = a.rows[r][c].recip();
            for x in a.rows[r].iter_mut() {
                *x *= &inv;
            }
            for i in 0..a.nrows {
                if i != r && !a.rows[i][c].is_zero() {
                    let f = a.rows[i][c].clone();
                    for j in 0..a.ncols {
                        let v = &f * &a.rows[r][j];
                        a.rows[i][j] -= v;
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        (a, pivots)
    }

    /// Null space basis read off the reduced echelon form: one vector per
    /// free column, with a 1 in that column.
    pub fn kernel_basis(&self) -> Vec<Vec<BigRational>> {
        let (rr, piv) = self.rref();
        let free: Vec<usize> = (0..self.ncols).filter(|c| !piv.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![BigRational::zero(); self.ncols];
                v[f] = BigRational::one();
                for (row, &pc) in piv.iter().enumerate() {
                    v[pc] = -rr.rows[row][f].clone();
                }
                v
            })
            .collect()
    }

    pub fn mul_vec(&self, v: &[BigRational]) -> Vec<BigRational> {
        self.rows.iter().map(|r| r.iter().zip(v).fold(BigRational::zero(), |acc, (a, b)| acc + a * b)).collect()
    }

    pub fn to_f64(&self) -> nalgebra::DMatrix<f64> {
        nalgebra::DMatrix::from_fn(self.nrows, self.ncols, |i, j| rat_to_f64(&self.rows[i][j]))
    }
}

pub fn rat_to_f64(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap_or(f64::NAN)
}

/// Integer pair `[numerator, denominator]` form used by scene files.
pub fn rat_to_pair(x: &BigRational) -> (String, String) {
    (x.numer().to_string(), x.denom().to_string())
}

pub fn abs_max(v: &[BigRational]) -> BigRational {
    v.iter().map(|x| x.abs()).fold(BigRational::zero(), |a, b| if b > a { b } else { a })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_and_kernel() {
        let m = QMatrix::from_i64(&[vec![1, 2, 3], vec![2, 4, 6], vec![1, 0, 1]], 3);
        assert_eq!(m.rank(), 2);
        let k = m.kernel_basis();
        assert_eq!(k.len(), 1);
        assert!(m.mul_vec(&k[0]).iter().all(|x| x.is_zero()));
        assert_eq!(k[0], vec![q(-1, 1), q(-1, 1), q(1, 1)]);
    }

    #[test]
    fn rational_entries() {
        let m = QMatrix::from_rows(2, vec![vec![q(1, 3), q(1, 2)], vec![q(2, 3), q(1, 1)]]);
        assert_eq!(m.rank(), 1);
        assert_eq!(QMatrix::zeros(3, 4).rank(), 0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn rank_nullity(entries in proptest::collection::vec(-3i64..4, 20)) {
                let rows: Vec<Vec<i64>> = entries.chunks(5).map(|c| c.to_vec()).collect();
                let m = QMatrix::from_i64(&rows, 5);
                let k = m.kernel_basis();
                prop_assert_eq!(m.rank() + k.len(), 5);
                prop_assert_eq!(m.rank(), m.transpose().rank());
                for v in &k {
                    prop_assert!(m.mul_vec(v).iter().all(|x| x.is_zero()));
                }
            }
        }
    }
}
