//! Circle cross-sections: the discrete operator `D_e` on the uniform
//! `N`-cycle, the doubled operator `D̂_e = σ (D_e ⊕ D_e)`, its spectrum and
//! Weyl counting.
//!
//! Coordinates are mass-orthonormal. A cochain on the circle is a pair
//! `(f, α)` of node values and edge values, edge `i` running from node `i`
//! to node `i+1`. With spacing `δθ = L/N` the symmetrized coboundary is
//! `d̃ = (shift − I)/δθ` and `D_e = [[0, d̃ᵀ], [d̃, 0]]`. The doubled space
//! is `(a, b)` with `a, b` circle cochains, `G = diag(+1, −1)` the degree
//! grading, `σ = [[0, −G], [G, 0]]` and `D̂ = [[0, −G D_e], [G D_e, 0]]`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct CrossSectionSpectrum {
    pub id: String,
    pub circumference: f64,
    pub n_theta: usize,
    pub dtheta: f64,
    /// Eigenvalues of `D_e`: two kernel entries, then `(+s_m, −s_m)` pairs.
    pub de_values: Vec<f64>,
    /// Matching orthonormal eigenvectors of `D_e` as columns (length `2N`).
    pub de_vectors: DMatrix<f64>,
}

/// Apply the grading `G` to a circle cochain `(f, α)`.
pub fn grade(v: &DVector<f64>) -> DVector<f64> {
    let n = v.len() / 2;
    let mut out = v.clone();
    for i in n..2 * n {
        out[i] = -out[i];
    }
    out
}

impl CrossSectionSpectrum {
    pub fn new(id: &str, circumference: f64, n_theta: usize) -> Result<Self> {
        if n_theta < 8 {
            return Err(Error::BadResolution(format!("n_theta = {n_theta} < 8")));
        }
        if !(circumference > 0.0) {
            return Err(Error::BadResolution(format!("circumference = {circumference}")));
        }
        let n = n_theta;
        let dt = circumference / n as f64;
        let dtil = Self::coboundary(n, dt);
        let lap = dtil.transpose() * &dtil;
        let eig = SymmetricEigen::new(lap);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut values = vec![0.0, 0.0];
        let mut vecs = DMatrix::zeros(2 * n, 2 * n);
        let c = 1.0 / (n as f64).sqrt();
        for i in 0..n {
            vecs[(i, 0)] = c;
            vecs[(n + i, 1)] = c;
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        for (m, &k) in order.iter().enumerate().skip(1) {
            let mut f = eig.eigenvectors.column(k).into_owned();
            let mean = f.sum() / n as f64;
            f.add_scalar_mut(-mean);
            f /= f.norm();
            let df = &dtil * &f;
            let s = df.norm();
            let g = df / s;
            let (cp, cm) = (2 * m, 2 * m + 1);
            for i in 0..n {
                vecs[(i, cp)] = f[i] / sqrt2;
                vecs[(n + i, cp)] = g[i] / sqrt2;
                vecs[(i, cm)] = f[i] / sqrt2;
                vecs[(n + i, cm)] = -g[i] / sqrt2;
            }
            values.push(s);
            values.push(-s);
        }
        Ok(CrossSectionSpectrum { id: id.to_string(), circumference, n_theta: n, dtheta: dt, de_values: values, de_vectors: vecs })
    }

    /// `d̃ = (shift − I)/δθ`, rows are edges, columns nodes.
    pub fn coboundary(n: usize, dt: f64) -> DMatrix<f64> {
        let mut d = DMatrix::zeros(n, n);
        for i in 0..n {
            d[(i, i)] -= 1.0 / dt;
            d[(i, (i + 1) % n)] += 1.0 / dt;
        }
        d
    }

    pub fn de_matrix(&self) -> DMatrix<f64> {
        let n = self.n_theta;
        let d = Self::coboundary(n, self.dtheta);
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        m.view_mut((n, 0), (n, n)).copy_from(&d);
        m.view_mut((0, n), (n, n)).copy_from(&d.transpose());
        m
    }

    pub fn grading_matrix(&self) -> DMatrix<f64> {
        let n = self.n_theta;
        DMatrix::from_fn(2 * n, 2 * n, |i, j| {
            if i != j {
                0.0
            } else if i < n {
                1.0
            } else {
                -1.0
            }
        })
    }

    /// `σ = [[0, −G], [G, 0]]` on the doubled space.
    pub fn sigma_matrix(&self) -> DMatrix<f64> {
        let g = self.grading_matrix();
        let m = g.nrows();
        let mut s = DMatrix::zeros(2 * m, 2 * m);
        s.view_mut((0, m), (m, m)).copy_from(&(-&g));
        s.view_mut((m, 0), (m, m)).copy_from(&g);
        s
    }

    /// `D̂ = σ · diag(D_e, D_e)`.
    pub fn hat_matrix(&self) -> DMatrix<f64> {
        let de = self.de_matrix();
        let m = de.nrows();
        let mut blk = DMatrix::zeros(2 * m, 2 * m);
        blk.view_mut((0, 0), (m, m)).copy_from(&de);
        blk.view_mut((m, m), (m, m)).copy_from(&de);
        self.sigma_matrix() * blk
    }

    /// Eigenpairs of `D̂`. Each `D_e` eigenvector `ψ` with eigenvalue `s`
    /// gives `(ψ, ±Gψ)/√2` with eigenvalue `±s`. Sorted ascending.
    pub fn hat_eigenpairs(&self) -> (Vec<f64>, DMatrix<f64>) {
        let m = 2 * self.n_theta;
        let mut pairs: Vec<(f64, usize, f64)> = Vec::with_capacity(2 * m);
        for (k, &s) in self.de_values.iter().enumerate() {
            pairs.push((s, k, 1.0));
            pairs.push((-s, k, -1.0));
        }
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let mut vecs = DMatrix::zeros(2 * m, 2 * m);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (c, &(_, k, sg)) in pairs.iter().enumerate() {
            let psi = self.de_vectors.column(k).into_owned();
            let gpsi = grade(&psi);
            for i in 0..m {
                vecs[(i, c)] = h * psi[i];
                vecs[(m + i, c)] = sg * h * gpsi[i];
            }
        }
        (pairs.iter().map(|p| if p.0 == 0.0 { 0.0 } else { p.0 }).collect(), vecs)
    }

    pub fn hat_eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.de_values.iter().flat_map(|&s| [s, -s]).map(|x| if x == 0.0 { 0.0 } else { x }).collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn kernel_dim(&self) -> usize {
        4 * self.de_values.iter().filter(|&&s| s == 0.0).count() / 2
    }

    /// Smallest nonzero `|λ|`.
    pub fn gap(&self) -> f64 {
        self.de_values.iter().filter(|&&s| s > 0.0).fold(f64::INFINITY, |a, &b| a.min(b))
    }

    /// Closed-form `D_e` singular values `(2/δθ)|sin(πk/N)|`, `k = 0..N`.
    pub fn fourier_values(&self) -> Vec<f64> {
        let n = self.n_theta;
        (0..n).map(|k| 2.0 / self.dtheta * (std::f64::consts::PI * k as f64 / n as f64).sin().abs()).collect()
    }

    /// `N⁺(λ)`: non-negative eigenvalues of `D̂` not exceeding `λ`.
    pub fn weyl_counting(&self, lambda: f64) -> usize {
        self.hat_eigenvalues().iter().filter(|&&x| x >= 0.0 && x <= lambda).count()
    }

    /// Power-law fit `λ ≈ (k/c)^p` over the first `k_modes` positive
    /// eigenvalues. Each distinct eigenvalue enters once, indexed by the
    /// counting function `k = #{0 < λ_j ≤ λ}` so multiplicities do not bias
    /// the slope. Only the lower quarter of the band is admissible.
    pub fn weyl_fit(&self, k_modes: usize) -> Result<WeylFit> {
        let pos: Vec<f64> = self.hat_eigenvalues().into_iter().filter(|&x| x > 0.0).collect();
        let admissible = 4 * (self.n_theta / 4);
        if k_modes > admissible.min(pos.len()) || k_modes < 2 {
            return Err(Error::InsufficientModes { requested: k_modes, available: admissible.min(pos.len()) });
        }
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut i = 0;
        while i < k_modes {
            let v = pos[i];
            let mut j = i;
            while j < pos.len() && (pos[j] - v).abs() <= 1e-9 * v {
                j += 1;
            }
            if j <= k_modes {
                xs.push((j as f64).ln());
                ys.push(v.ln());
            }
            i = j;
        }
        if xs.len() < 2 {
            return Err(Error::InsufficientModes { requested: k_modes, available: xs.len() });
        }
        let (slope, intercept) = linear_fit(&xs, &ys);
        Ok(WeylFit { exponent: slope, intercept, counting_constant: (-intercept / slope).exp(), clusters: xs.len() })
    }

    /// Counting constant of the Fourier oracle: `N⁺(λ) ≈ (2L/π) λ`.
    pub fn fourier_counting_constant(&self) -> f64 {
        2.0 * self.circumference / std::f64::consts::PI
    }

    pub fn boundary_condition(&self, side: i32, with_kernel: bool) -> BoundaryConditionSpace {
        let vals = self.hat_eigenvalues();
        let mut bc = BoundaryConditionSpace { side, with_kernel, ..Default::default() };
        for (i, &l) in vals.iter().enumerate() {
            if l == 0.0 {
                bc.kernel.push(i);
            } else if side as f64 * l > 0.0 {
                bc.positive.push(i);
            } else {
                bc.negative.push(i);
            }
        }
        bc.selected = bc.positive.clone();
        if with_kernel {
            bc.selected.extend(&bc.kernel);
            bc.selected.sort();
        }
        bc
    }

    /// `(k, λ_k)` rows for the non-negative half of the spectrum.
    pub fn spectrum_csv(&self) -> String {
        let mut s = String::from("k,lambda_k\n");
        for (k, v) in self.hat_eigenvalues().iter().filter(|&&x| x >= 0.0).enumerate() {
            s.push_str(&format!("{k},{v:.12e}\n"));
        }
        s
    }
}

/// Index partition of the `D̂` spectrum relative to a half-edge sign:
/// `positive` holds `side·λ > 0`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BoundaryConditionSpace {
    pub side: i32,
    pub with_kernel: bool,
    pub positive: Vec<usize>,
    pub negative: Vec<usize>,
    pub kernel: Vec<usize>,
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeylFit {
    pub exponent: f64,
    pub intercept: f64,
    pub counting_constant: f64,
    pub clusters: usize,
}

/// Smallest nonzero `|λ|` over all edges.
pub fn spectral_gap(spectra: &[CrossSectionSpectrum]) -> Result<f64> {
    if spectra.is_empty() {
        return Err(Error::EmptySpectrum);
    }
    Ok(spectra.iter().map(|s| s.gap()).fold(f64::INFINITY, f64::min))
}

/// Least-squares line `y ≈ slope·x + intercept`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(n: usize) -> CrossSectionSpectrum {
        CrossSectionSpectrum::new("y", 2.0 * PI, n).unwrap()
    }

    #[test]
    fn bad_resolution() {
        assert!(matches!(CrossSectionSpectrum::new("y", 1.0, 7), Err(Error::BadResolution(_))));
        assert_eq!(spectral_gap(&[]), Err(Error::EmptySpectrum));
    }

    #[test]
    fn sigma_identities() {
        let s = spec(16);
        let sig = s.sigma_matrix();
        let n = sig.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        assert!((&sig * &sig + &id).amax() <= 1e-12);
        assert!((sig.transpose() + &sig).amax() <= 1e-12);
        let dh = s.hat_matrix();
        assert!((&sig * &dh + &dh * &sig).amax() <= 1e-12);
        assert!((dh.transpose() - &dh).amax() <= 1e-12);
    }

    #[test]
    fn sigma_on_constant() {
        let s = spec(16);
        let n = s.n_theta;
        let mut v = DVector::zeros(4 * n);
        for i in 0..n {
            v[i] = 1.0;
        }
        let w = s.sigma_matrix() * v;
        assert!((0..n).all(|i| w[2 * n + i] == 1.0));
        assert_eq!(w.rows(0, 2 * n).amax(), 0.0);
    }

    #[test]
    fn closed_form_eigenvalues() {
        let s = spec(32);
        let mut got: Vec<f64> = s.de_values.iter().map(|x| x.abs()).collect();
        got.sort_by(f64::total_cmp);
        let mut want: Vec<f64> = s.fourier_values().into_iter().flat_map(|x| [x, x]).collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&want) {
            assert!((a - b).abs() <= 1e-10 * (1.0 + b));
        }
        let g = spec(64).gap();
        assert!((g - 1.0).abs() < 5e-4);
        assert_eq!(s.kernel_dim(), 4);
    }

    #[test]
    fn dense_oracle_and_pairing() {
        let s = spec(16);
        let dh = s.hat_matrix();
        let mut dense: Vec<f64> = SymmetricEigen::new(dh.clone()).eigenvalues.iter().copied().collect();
        dense.sort_by(f64::total_cmp);
        let (vals, vecs) = s.hat_eigenpairs();
        for (a, b) in vals.iter().zip(&dense) {
            assert!((a - b).abs() < 1e-10);
        }
        let gram = vecs.transpose() * &vecs;
        assert!((gram - DMatrix::identity(vals.len(), vals.len())).amax() < 1e-10);
        let sig = s.sigma_matrix();
        for (k, &l) in vals.iter().enumerate() {
            let phi = vecs.column(k);
            assert!((&dh * phi - l * phi).norm() < 1e-10);
            let sp = &sig * phi;
            assert!((&dh * &sp + l * &sp).norm() <= 1e-10);
        }
        let mut a: Vec<u64> = vals.iter().map(|x| x.to_bits()).collect();
        let mut b: Vec<u64> = vals.iter().map(|x| (-x + 0.0).to_bits()).collect();
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }

    #[test]
    fn counting() {
        let s = spec(16);
        assert_eq!(s.weyl_counting(0.0), 4);
        assert_eq!(s.weyl_counting(1.5), 8);
        let mut prev = 0;
        for i in 0..200 {
            let c = s.weyl_counting(i as f64 * 0.05);
            assert!(c >= prev);
            prev = c;
        }
    }

    #[test]
    fn boundary_conditions() {
        let s = spec(16);
        let p = s.boundary_condition(1, false);
        let vals = s.hat_eigenvalues();
        assert!(p.selected.iter().all(|&i| vals[i] > 0.0));
        let q = s.boundary_condition(-1, true);
        assert!(q.selected.iter().all(|&i| vals[i] <= 0.0));
        assert_eq!(q.selected.len(), q.negative.len() + 4);
        let f = s.boundary_condition(-1, false);
        assert_eq!(f.positive, p.negative);
        assert_eq!(p.positive.len() + p.negative.len() + p.kernel.len(), vals.len());
    }

    #[test]
    fn weyl_small() {
        let s = spec(64);
        let fit = s.weyl_fit(40).unwrap();
        assert!((fit.exponent - 1.0).abs() < 0.05);
        assert!(matches!(s.weyl_fit(65), Err(Error::InsufficientModes { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(16))]
            #[test]
            fn doubled_spectrum_symmetric(n in 8usize..40, l in 0.5f64..20.0) {
                let s = CrossSectionSpectrum::new("y", l, n).unwrap();
                let v = s.hat_eigenvalues();
                let m = v.len();
                for i in 0..m {
                    prop_assert_eq!(v[i], -v[m - 1 - i] + 0.0);
                }
                let mut abs_hat: Vec<f64> = v.iter().map(|x| x.abs()).collect();
                abs_hat.sort_by(f64::total_cmp);
                let mut abs_de: Vec<f64> = s.de_values.iter().flat_map(|x| [x.abs(), x.abs()]).collect();
                abs_de.sort_by(f64::total_cmp);
                prop_assert_eq!(abs_hat, abs_de);
                prop_assert!(s.gap() > 0.0);
                prop_assert_eq!(s.kernel_dim(), 4);
            }
        }
    }
}
