//! Sparse symmetric eigensolver, kernel detection, spectral projections and
//! the gap between subspaces.
//!
//! Smallest-magnitude eigenpairs are found by block Lanczos on the inverse
//! of `B + τI`, where `B = A` for positive semidefinite operators and
//! `B = A²` otherwise. Signed eigenvalues are then recovered by a
//! Rayleigh–Ritz step with `A` on the converged `B`-eigenspace, which is
//! `A`-invariant once degenerate clusters are completed.

pub mod cholesky;
pub mod sparse;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use cholesky::SkylineCholesky;
pub use sparse::Csr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Definiteness {
    PositiveSemidefinite,
    Indefinite,
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub tol: f64,
    pub seed: u64,
    pub block: usize,
    pub max_restarts: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, seed: 7, block: 8, max_restarts: 60 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: String,
    pub shift: f64,
    pub restarts: usize,
    pub reorthogonalizations: usize,
    pub breakdowns: usize,
    pub operator_applications: usize,
}

/// Eigenpairs sorted by `|μ|`; vectors are orthonormal columns.
#[derive(Debug, Clone, Serialize)]
pub struct EigenResult {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub vectors: DMatrix<f64>,
    pub residuals: Vec<f64>,
    pub diagnostics: Diagnostics,
    pub seed: u64,
    pub operator_norm: f64,
}

impl EigenResult {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Largest `|μ|` below which the result is complete.
    pub fn resolved_up_to(&self) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    fn check_residuals(&self, tol: f64) -> Result<()> {
        for (i, r) in self.residuals.iter().enumerate() {
            if !(*r <= tol * self.operator_norm.max(f64::MIN_POSITIVE)) {
                return Err(Error::NoConvergence(format!("pair {i}: residual {r:.3e} exceeds {:.3e}", tol * self.operator_norm)));
            }
        }
        Ok(())
    }
}

fn random_block(rng: &mut ChaCha8Rng, n: usize, b: usize) -> Vec<DVector<f64>> {
    (0..b).map(|_| DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0))).collect()
}

/// Orthogonalize `v` against `basis` twice; returns the remaining norm ratio.
fn orthogonalize(v: &mut DVector<f64>, basis: &[DVector<f64>], diag: &mut Diagnostics) -> f64 {
    let n0 = v.norm();
    for _ in 0..2 {
        for q in basis {
            let c = q.dot(v);
            v.axpy(-c, q, 1.0);
        }
        diag.reorthogonalizations += 1;
    }
    if n0 == 0.0 {
        0.0
    } else {
        v.norm() / n0
    }
}

/// Block Lanczos with full reorthogonalization for the `want` largest
/// eigenpairs of the symmetric operator `op`. Converged pairs are locked and
/// deflated; the rest seed the next restart.
fn block_lanczos_largest(
    op: &dyn Fn(&DVector<f64>) -> DVector<f64>,
    n: usize,
    want: usize,
    opts: &SolverOptions,
    accept: &dyn Fn(f64, f64) -> bool,
    rng: &mut ChaCha8Rng,
    diag: &mut Diagnostics,
) -> Result<(Vec<f64>, Vec<DVector<f64>>)> {
    let want = want.min(n);
    let b = opts.block.max(1).min(n);
    let mut locked: Vec<DVector<f64>> = Vec::new();
    let mut locked_vals: Vec<f64> = Vec::new();
    // Thick restart: retained Ritz vectors with their images, plus the block
    // from which the Krylov space is extended.
    let mut kept_q: Vec<DVector<f64>> = Vec::new();
    let mut kept_w: Vec<DVector<f64>> = Vec::new();
    let mut start = random_block(rng, n, b);
    for restart in 0..=opts.max_restarts {
        diag.restarts = restart;
        let need = want - locked.len();
        let max_basis = (n - locked.len()).min((3 * need + 4 * b).max(60));
        let mut q = std::mem::take(&mut kept_q);
        let mut w = std::mem::take(&mut kept_w);
        let mut block = start;
        while q.len() < max_basis {
            let mut accepted: Vec<DVector<f64>> = Vec::new();
            for mut v in block {
                if locked.len() + q.len() + accepted.len() >= n {
                    break;
                }
                let mut tries = 0;
                loop {
                    let mut all = locked.clone();
                    all.extend(q.iter().cloned());
                    all.extend(accepted.iter().cloned());
                    if orthogonalize(&mut v, &all, diag) >= 1e-8 {
                        break;
                    }
                    // Breakdown: the block is (nearly) invariant; continue
                    // from a fresh random direction.
                    diag.breakdowns += 1;
                    tries += 1;
                    if tries > 3 {
                        break;
                    }
                    v = random_block(rng, n, 1).pop().unwrap();
                }
                if tries > 3 {
                    continue;
                }
                let nv = v.norm();
                accepted.push(v / nv);
            }
            if accepted.is_empty() {
                break;
            }
            let mut next = Vec::new();
            for v in accepted {
                if q.len() >= max_basis {
                    break;
                }
                // Deflate locked directions after the solve so their
                // amplified roundoff does not pollute the Krylov space.
                let mut y = op(&v);
                for l in &locked {
                    let c = l.dot(&y);
                    y.axpy(-c, l, 1.0);
                }
                diag.operator_applications += 1;
                next.push(y.clone());
                q.push(v);
                w.push(y);
            }
            block = next;
        }
        let k = q.len();
        if k == 0 {
            start = random_block(rng, n, b);
            continue;
        }
        let qm = DMatrix::from_columns(&q);
        let wm = DMatrix::from_columns(&w);
        let h = qm.transpose() * &wm;
        let h = (&h + h.transpose()) * 0.5;
        let eig = SymmetricEigen::new(h);
        let mut idx: Vec<usize> = (0..k).collect();
        idx.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]).then(i.cmp(&j)));
        let mut progressing = true;
        let exhausted = k + locked.len() >= n;
        let keep = (need + b).min(k / 2).max(1);
        let mut residuals = Vec::new();
        for &i in &idx {
            let z = eig.eigenvectors.column(i);
            let theta = eig.eigenvalues[i];
            let y = &qm * z;
            let wy = &wm * z;
            let res = (&wy - theta * &y).norm();
            if progressing && locked.len() < want && (exhausted || accept(theta, res)) {
                locked.push(y);
                locked_vals.push(theta);
            } else {
                progressing = false;
                if kept_q.len() < keep {
                    if residuals.len() < b {
                        residuals.push(&wy - theta * &y);
                    }
                    kept_q.push(y);
                    kept_w.push(wy);
                }
            }
        }
        if locked.len() >= want {
            return Ok((locked_vals, locked));
        }
        // Retained vectors must stay orthogonal to the newly locked ones.
        let mut clean_q = Vec::new();
        let mut clean_w = Vec::new();
        for (y, mut wy) in kept_q.drain(..).zip(kept_w.drain(..)) {
            let mut v = y.clone();
            if orthogonalize(&mut v, &locked, diag) > 1.0 - 1e-6 && orthogonalize(&mut v.clone(), &clean_q, diag) > 1.0 - 1e-6 {
                for l in &locked {
                    let c = l.dot(&wy);
                    wy.axpy(-c, l, 1.0);
                }
                clean_q.push(y);
                clean_w.push(wy);
            }
        }
        kept_q = clean_q;
        kept_w = clean_w;
        residuals.extend(random_block(rng, n, 1));
        start = residuals;
    }
    Err(Error::NoConvergence(format!("{} of {want} pairs after {} restarts", locked.len(), opts.max_restarts)))
}

fn dense_pairs(a: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let eig = SymmetricEigen::new(a.clone());
    let mut idx: Vec<usize> = (0..a.nrows()).collect();
    idx.sort_by(|&i, &j| {
        let (x, y) = (eig.eigenvalues[i], eig.eigenvalues[j]);
        x.abs().total_cmp(&y.abs()).then(x.total_cmp(&y))
    });
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_columns(&idx.iter().map(|&i| eig.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
    (vals, vecs)
}

/// Dense oracle: all eigenpairs sorted by `|μ|`.
pub fn dense_eigenpairs(a: &Csr) -> (Vec<f64>, DMatrix<f64>) {
    dense_pairs(&a.to_dense())
}

/// The `m` eigenpairs of `a` of smallest magnitude.
pub fn smallest_eigenpairs(a: &Csr, m: usize, def: Definiteness, opts: &SolverOptions) -> Result<EigenResult> {
    let mut res = low_spectrum(a, m, def, opts)?;
    res.values.truncate(m);
    res.residuals.truncate(m);
    res.vectors = res.vectors.columns(0, m.min(res.vectors.ncols())).into_owned();
    Ok(res)
}

/// At least `m` smallest-magnitude eigenpairs, extended so that no
/// degenerate cluster is cut.
pub fn low_spectrum(a: &Csr, m: usize, def: Definiteness, opts: &SolverOptions) -> Result<EigenResult> {
    let n = a.nrows;
    if m == 0 || m > n {
        return Err(Error::Validation(format!("requested {m} eigenpairs of a {n}x{n} operator")));
    }
    let norm = a.norm1();
    let mut diag = Diagnostics::default();
    if n <= 64 {
        diag.method = "dense".into();
        let (vals, vecs) = dense_pairs(&a.to_dense());
        let cut = n.min(complete_cluster(&vals_sorted_abs(&vals), m));
        return finish(a, vals, vecs, cut, norm, diag, opts);
    }
    let b = match def {
        Definiteness::PositiveSemidefinite => a.clone(),
        Definiteness::Indefinite => a.matmul(a),
    };
    let bnorm = b.norm1().max(f64::MIN_POSITIVE);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut shift = 1e-8 * bnorm;
    let mut fact = None;
    for _ in 0..5 {
        if let Some(f) = SkylineCholesky::factor(&b, shift) {
            fact = Some(f);
            break;
        }
        shift *= 100.0;
    }
    let mut want = (m + opts.block).min(n);
    loop {
        let vs = match &fact {
            Some(f) => {
                diag.method = "shift-invert block Lanczos".into();
                diag.shift = f.shift;
                let op = |x: &DVector<f64>| DVector::from_vec(f.solve(x.as_slice()));
                let acc = |t: f64, res: f64| res <= 1e-10 * t;
                let (_, mut vs) = block_lanczos_largest(&op, n, want, opts, &acc, &mut rng, &mut diag)?;
                // Inverse subspace iteration damps the residual left in
                // directions where B is large.
                for _ in 0..2 {
                    let y = DMatrix::from_columns(&vs.iter().map(&op).collect::<Vec<_>>());
                    diag.operator_applications += vs.len();
                    let y = orthonormalize_columns(&y);
                    vs = (0..y.ncols()).map(|c| y.column(c).into_owned()).collect();
                }
                vs
            }
            None => {
                diag.method = "block Lanczos on the reflected operator".into();
                let c = bnorm;
                let op = |x: &DVector<f64>| c * x - b.mul_dvec(x);
                let acc = |_t: f64, res: f64| res <= 1e-12 * bnorm;
                block_lanczos_largest(&op, n, want, opts, &acc, &mut rng, &mut diag)?.1
            }
        };
        // Rayleigh–Ritz with B on the converged space for accurate values.
        let vm = DMatrix::from_columns(&vs);
        let bv = b.mul_dense(&vm);
        let hb = vm.transpose() * &bv;
        let hb = (&hb + hb.transpose()) * 0.5;
        let eb = SymmetricEigen::new(hb);
        let mut idx: Vec<usize> = (0..vs.len()).collect();
        idx.sort_by(|&i, &j| eb.eigenvalues[i].total_cmp(&eb.eigenvalues[j]));
        let nu: Vec<f64> = idx.iter().map(|&i| eb.eigenvalues[i]).collect();
        let cut = complete_cluster(&nu, m);
        if cut >= nu.len() && want < n {
            want = (want * 2).min(n);
            continue;
        }
        let zb = DMatrix::from_columns(&idx[..cut].iter().map(|&i| eb.eigenvectors.column(i).into_owned()).collect::<Vec<_>>());
        let basis = &vm * zb;
        let basis = orthonormalize_columns(&basis);
        let av = a.mul_dense(&basis);
        let ha = basis.transpose() * &av;
        let ha = (&ha + ha.transpose()) * 0.5;
        let (vals, z) = dense_pairs(&ha);
        let vecs = &basis * z;
        match finish(a, vals, vecs, cut, norm, diag.clone(), opts) {
            // A missed copy of a degenerate pair leaves the space not
            // invariant under `A`; widen the locked set and retry.
            Err(Error::NoConvergence(_)) if want < n => want = (want * 2).min(n),
            other => return other,
        }
    }
}

fn vals_sorted_abs(v: &[f64]) -> Vec<f64> {
    let mut s: Vec<f64> = v.iter().map(|x| x * x).collect();
    s.sort_by(f64::total_cmp);
    s
}

/// Smallest `cut ≥ m` with a clear relative gap between `nu[cut-1]` and `nu[cut]`.
fn complete_cluster(nu: &[f64], m: usize) -> usize {
    let scale = nu.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let mut cut = m.min(nu.len());
    while cut < nu.len() {
        let gap = nu[cut] - nu[cut - 1];
        if gap > 1e-7 * nu[cut].abs().max(1e-9 * scale) {
            break;
        }
        cut += 1;
    }
    cut
}

fn finish(
    a: &Csr,
    vals: Vec<f64>,
    vecs: DMatrix<f64>,
    cut: usize,
    norm: f64,
    diag: Diagnostics,
    opts: &SolverOptions,
) -> Result<EigenResult> {
    let vecs = vecs.columns(0, cut).into_owned();
    let vals: Vec<f64> = vals[..cut].to_vec();
    let av = a.mul_dense(&vecs);
    let residuals = (0..cut).map(|i| (av.column(i) - vals[i] * vecs.column(i)).norm()).collect();
    let res = EigenResult { values: vals, vectors: vecs, residuals, diagnostics: diag, seed: opts.seed, operator_norm: norm };
    res.check_residuals(opts.tol.max(1e-12))?;
    Ok(res)
}

/// Modified Gram–Schmidt twice; columns that vanish are dropped.
pub fn orthonormalize_columns(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out: Vec<DVector<f64>> = Vec::new();
    let mut scratch = Diagnostics::default();
    for c in 0..m.ncols() {
        let mut v = m.column(c).into_owned();
        let n0 = v.norm();
        if n0 == 0.0 {
            continue;
        }
        if orthogonalize(&mut v, &out, &mut scratch) < 1e-10 {
            continue;
        }
        let nv = v.norm();
        out.push(v / nv);
    }
    if out.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&out)
    }
}

/// Default absolute kernel threshold `max(1e-9, 100·eps·‖A‖₁)`.
pub fn default_tol_abs(norm1: f64) -> f64 {
    1e-9f64.max(100.0 * f64::EPSILON * norm1)
}

pub const DEFAULT_GAP_RATIO: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReport {
    pub dim: usize,
    pub last_accepted: f64,
    pub first_rejected: f64,
    pub gap_ratio: f64,
    pub tol_abs: f64,
}

/// Count eigenvalue magnitudes below `tol_abs`, accepted only when the first
/// rejected one exceeds the last accepted (floored at `tol_abs`) by `gap_ratio`.
pub fn kernel_dimension(values: &[f64], tol_abs: f64, gap_ratio: f64) -> Result<KernelReport> {
    let mut mags: Vec<f64> = values.iter().map(|v| v.abs()).collect();
    mags.sort_by(f64::total_cmp);
    let dim = mags.iter().take_while(|&&v| v < tol_abs).count();
    let Some(&first_rejected) = mags.get(dim) else {
        return Err(Error::AmbiguousKernel(format!("all {} computed eigenvalues are below {tol_abs:.1e}; compute more", mags.len())));
    };
    let last = if dim == 0 { 0.0 } else { mags[dim - 1] };
    let ratio = first_rejected / last.max(tol_abs);
    if ratio < gap_ratio {
        return Err(Error::AmbiguousKernel(format!(
            "gap ratio {ratio:.3e} below {gap_ratio:.1e} (last accepted {last:.3e}, first rejected {first_rejected:.3e})"
        )));
    }
    Ok(KernelReport { dim, last_accepted: last, first_rejected, gap_ratio: ratio, tol_abs })
}

/// Kernel of a symmetric operator with enough pairs computed to see a gap.
pub fn kernel_of(a: &Csr, def: Definiteness, expected: usize, opts: &SolverOptions) -> Result<(KernelReport, EigenResult)> {
    let tol_abs = match def {
        Definiteness::PositiveSemidefinite => default_tol_abs(a.norm1()),
        Definiteness::Indefinite => default_tol_abs(a.norm1()).sqrt().min(1e-6),
    };
    let mut m = (expected + 4).min(a.nrows);
    loop {
        let res = low_spectrum(a, m, def, opts)?;
        match kernel_dimension(&res.values, tol_abs, DEFAULT_GAP_RATIO) {
            Err(Error::AmbiguousKernel(_)) if res.len() < a.nrows && res.values.iter().all(|v| v.abs() < tol_abs) => {
                m = (2 * m).min(a.nrows);
            }
            Err(e) => return Err(e),
            Ok(rep) => return Ok((rep, res)),
        }
    }
}

/// Orthonormal columns spanning a subspace of a fixed ambient space.
#[derive(Debug, Clone)]
pub struct SubspaceBasis {
    pub vectors: DMatrix<f64>,
}

impl SubspaceBasis {
    pub fn from_columns(m: &DMatrix<f64>) -> Self {
        SubspaceBasis { vectors: orthonormalize_columns(m) }
    }

    pub fn dim(&self) -> usize {
        self.vectors.ncols()
    }

    pub fn ambient(&self) -> usize {
        self.vectors.nrows()
    }

    pub fn project(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        if u.len() != self.ambient() {
            return Err(Error::AmbientMismatch(u.len(), self.ambient()));
        }
        Ok(&self.vectors * (self.vectors.transpose() * u))
    }

    pub fn gram_defect(&self) -> f64 {
        let k = self.dim();
        (self.vectors.transpose() * &self.vectors - DMatrix::identity(k, k)).amax()
    }
}

/// `δ(A, B) = sup_{a ∈ A, |a| = 1} dist(a, B)`, i.e. `√(1 − s_min²)` for
/// the singular values of `Q_Bᵀ Q_A`, evaluated as the norm of the
/// component of `Q_A` orthogonal to `B` to keep small gaps accurate.
pub fn kato_gap(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<f64> {
    if a.ambient() != b.ambient() {
        return Err(Error::AmbientMismatch(a.ambient(), b.ambient()));
    }
    if a.dim() == 0 {
        return Ok(0.0);
    }
    if b.dim() < a.dim() {
        return Ok(1.0);
    }
    let resid = &a.vectors - &b.vectors * (b.vectors.transpose() * &a.vectors);
    let s = resid.singular_values();
    Ok(s.iter().fold(0.0f64, |x, &y| x.max(y)).min(1.0))
}

/// Eigenpairs of `a` with `|μ| ≤ cutoff`, computed until the spectrum is
/// resolved past the cutoff.
pub fn spectrum_below(a: &Csr, cutoff: f64, start: usize, def: Definiteness, opts: &SolverOptions) -> Result<(EigenResult, SubspaceBasis)> {
    let mut m = start.max(1).min(a.nrows);
    loop {
        let res = low_spectrum(a, m, def, opts)?;
        if res.resolved_up_to() > cutoff || res.len() >= a.nrows {
            let cols: Vec<DVector<f64>> =
                (0..res.len()).filter(|&i| res.values[i].abs() <= cutoff).map(|i| res.vectors.column(i).into_owned()).collect();
            let basis = if cols.is_empty() {
                SubspaceBasis { vectors: DMatrix::zeros(a.nrows, 0) }
            } else {
                SubspaceBasis::from_columns(&DMatrix::from_columns(&cols))
            };
            return Ok((res, basis));
        }
        if m == a.nrows {
            return Err(Error::UnresolvedSpectrum(cutoff));
        }
        m = (2 * m).min(a.nrows);
    }
}

/// Orthogonal projection onto the span of eigenvectors with `|μ| ≤ cutoff`.
pub fn spectral_projection(res: &EigenResult, cutoff: f64, u: &DVector<f64>) -> Result<DVector<f64>> {
    if cutoff >= res.resolved_up_to() && res.len() < u.len() {
        return Err(Error::UnresolvedSpectrum(cutoff));
    }
    if res.vectors.nrows() != u.len() {
        return Err(Error::AmbientMismatch(u.len(), res.vectors.nrows()));
    }
    let mut out = DVector::zeros(u.len());
    for i in 0..res.len() {
        if res.values[i].abs() <= cutoff {
            let v = res.vectors.column(i);
            out.axpy(v.dot(u), &v, 1.0);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle_laplacian(n: usize) -> Csr {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            t.push((i, (i + 1) % n, -1.0));
            t.push(((i + 1) % n, i, -1.0));
        }
        Csr::from_triplets(n, n, &t)
    }

    #[test]
    fn cycle_laplacian_closed_form() {
        let a = cycle_laplacian(100);
        let res = smallest_eigenpairs(&a, 5, Definiteness::PositiveSemidefinite, &SolverOptions::default()).unwrap();
        let want = 2.0 - 2.0 * (2.0 * std::f64::consts::PI / 100.0).cos();
        assert!(res.values[0].abs() < 1e-10);
        for v in &res.values[1..3] {
            assert!(((v - want) / want).abs() < 1e-8, "{v} vs {want}");
        }
        let g = res.vectors.transpose() * &res.vectors;
        assert!((g - DMatrix::identity(5, 5)).amax() < 1e-10);
    }

    #[test]
    fn identity_operator() {
        let res = smallest_eigenpairs(&Csr::identity(200), 3, Definiteness::PositiveSemidefinite, &SolverOptions::default()).unwrap();
        assert_eq!(res.values.len(), 3);
        assert!(res.values.iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn indefinite_matches_dense() {
        let n = 150;
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, ((i * 37) % 11) as f64 - 5.0));
            t.push((i, (i + 3) % n, 1.0));
            t.push(((i + 3) % n, i, 1.0));
        }
        let a = Csr::from_triplets(n, n, &t);
        let (dv, _) = dense_eigenpairs(&a);
        let res = smallest_eigenpairs(&a, 10, Definiteness::Indefinite, &SolverOptions::default()).unwrap();
        for (x, y) in res.values.iter().zip(&dv) {
            assert!((x.abs() - y.abs()).abs() <= 1e-8 * y.abs().max(1e-8), "{x} vs {y}");
            assert!(dv.iter().any(|d| (d - x).abs() <= 1e-8 * x.abs().max(1e-8)));
        }
        let again = smallest_eigenpairs(&a, 10, Definiteness::Indefinite, &SolverOptions::default()).unwrap();
        assert_eq!(
            res.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            again.values.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn kernel_dimension_cases() {
        let r = kernel_dimension(&[0.0, 0.0, 1.0], 1e-9, 1e3).unwrap();
        assert_eq!(r.dim, 2);
        assert!(matches!(kernel_dimension(&[0.0, 1e-8, 1e-6], 1e-7, 1e3), Err(Error::AmbiguousKernel(_))));
        let (rep, _) = kernel_of(&cycle_laplacian(120), Definiteness::PositiveSemidefinite, 1, &SolverOptions::default()).unwrap();
        assert_eq!(rep.dim, 1);
    }

    #[test]
    fn kato_gap_cases() {
        let e1 = SubspaceBasis::from_columns(&DMatrix::from_column_slice(2, 1, &[1.0, 0.0]));
        let e2 = SubspaceBasis::from_columns(&DMatrix::from_column_slice(2, 1, &[0.0, 1.0]));
        assert!(kato_gap(&e1, &e1).unwrap() < 1e-15);
        assert!((kato_gap(&e1, &e2).unwrap() - 1.0).abs() < 1e-15);
        let plane = SubspaceBasis::from_columns(&DMatrix::identity(3, 2));
        let line = SubspaceBasis::from_columns(&DMatrix::from_column_slice(3, 1, &[1.0, 1.0, 0.0]));
        assert!(kato_gap(&line, &plane).unwrap() < 1e-12);
        assert_eq!(kato_gap(&plane, &line).unwrap(), 1.0);
        let other = SubspaceBasis::from_columns(&DMatrix::identity(4, 1));
        assert!(matches!(kato_gap(&line, &other), Err(Error::AmbientMismatch(3, 4))));
    }

    #[test]
    fn projection_properties() {
        let a = cycle_laplacian(90);
        let (res, basis) = spectrum_below(&a, 0.02, 4, Definiteness::PositiveSemidefinite, &SolverOptions::default()).unwrap();
        assert_eq!(basis.dim(), 5);
        let u = res.vectors.column(1).into_owned();
        assert!((spectral_projection(&res, 0.02, &u).unwrap() - &u).norm() < 1e-10);
        let w = res.vectors.column(res.len() - 1).into_owned();
        if res.values[res.len() - 1] > 0.02 {
            assert!(spectral_projection(&res, 0.02, &w).unwrap().norm() < 1e-10);
        }
        assert!(matches!(spectral_projection(&res, 10.0, &u), Err(Error::UnresolvedSpectrum(_))));
    }

    mod props {
        use super::*;
        use proptest::prelude::{prop_assert, proptest, ProptestConfig};

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn projection_self_adjoint_and_contracting(seed in 0u64..1000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let cols = DMatrix::from_fn(30, 4, |_, _| rng.gen_range(-1.0..1.0));
                let b = SubspaceBasis::from_columns(&cols);
                prop_assert!(b.gram_defect() < 1e-10);
                let u = DVector::from_fn(30, |_, _| rng.gen_range(-1.0..1.0));
                let w = DVector::from_fn(30, |_, _| rng.gen_range(-1.0..1.0));
                let pu = b.project(&u).unwrap();
                let pw = b.project(&w).unwrap();
                prop_assert!((pu.dot(&w) - u.dot(&pw)).abs() < 1e-10);
                prop_assert!(pu.norm() <= u.norm() + 1e-12);
                let sub = SubspaceBasis::from_columns(&cols.columns(0, 2).into_owned());
                prop_assert!(kato_gap(&sub, &b).unwrap() < 1e-8);
                let g = kato_gap(&b, &sub).unwrap();
                prop_assert!(g > 0.999);
            }
        }
    }
}
