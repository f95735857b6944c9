//! Modal analysis on cylinders: slab traces, expansion in the cross-section
//! eigenbasis, low-mode fits, limiting values and the symplectic structure.
//!
//! On a product cylinder the raw cochain restricted to level `j` gives a
//! circle cochain `a_j = (F, A)` (nodes and `θ`-edges) and the slab between
//! levels `j` and `j+1` gives `b_{j+½} = (P, Q)` (`t`-edges and faces, i.e.
//! the form `u¹ ∧ dt`). Both are written in mass-orthonormal circle
//! coordinates. Expanding `a_j = Σ p_k(j) ψ_k` and `b_{j+½} = Σ q_k(j+½) Gψ_k`
//! over the eigenvectors `ψ_k` of `D_e` (eigenvalue `s_k`), the equation
//! `D u = μ u` on the cylinder interior becomes, per mode,
//!
//! ```text
//! q_{j+½} = q_{j−½} + δt (s − μ) p_j
//! p_{j+1} = p_j + δt (s + μ) q_{j+½}
//! ```
//!
//! which is the discrete form of `p' = (s + μ) q`, `q' = (s − μ) p`.

pub mod aps;
pub mod matching;

use nalgebra::{DMatrix, DVector, Matrix2, Vector2};
use serde::Serialize;

use crate::complex::{CellComplex, CylinderIndex};
use crate::cross_section::CrossSectionSpectrum;
use crate::error::{Error, Result};
use crate::graph::Side;

/// Sparse linear functionals reading the circle trace of a level or slab
/// from a raw cochain: `(global cell index, coefficient)` per entry.
#[derive(Debug, Clone)]
pub struct CylinderTrace {
    pub a: Vec<Vec<Vec<(usize, f64)>>>,
    pub b: Vec<Vec<Vec<(usize, f64)>>>,
}

impl CylinderTrace {
    pub fn new(cx: &CellComplex, cyl: &CylinderIndex) -> Self {
        let n = cyl.n_theta;
        let (o1, o2) = (cx.offset(1), cx.offset(2));
        let sdt = cyl.dtheta.sqrt();
        let a = (0..=cyl.slabs())
            .map(|j| {
                let mut rows: Vec<Vec<(usize, f64)>> = (0..n).map(|i| vec![(cyl.nodes[j][i], sdt)]).collect();
                rows.extend((0..n).map(|i| {
                    let (e, s) = cyl.theta_edges[j][i];
                    vec![(o1 + e, s / sdt)]
                }));
                rows
            })
            .collect();
        let b = (0..cyl.slabs())
            .map(|j| {
                let mut rows: Vec<Vec<(usize, f64)>> = (0..n)
                    .map(|i| {
                        let (e, s) = cyl.t_edges[j][i];
                        vec![(o1 + e, s * sdt / cyl.dt)]
                    })
                    .collect();
                rows.extend((0..n).map(|i| {
                    let (f, s) = cyl.faces[j][i];
                    vec![(o2 + f, s / (cyl.dt * sdt))]
                }));
                rows
            })
            .collect();
        CylinderTrace { a, b }
    }

    fn apply(rows: &[Vec<(usize, f64)>], u: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(rows.len(), rows.iter().map(|r| r.iter().map(|&(g, c)| c * u[g]).sum::<f64>()))
    }

    pub fn level(&self, j: usize, u: &DVector<f64>) -> DVector<f64> {
        Self::apply(&self.a[j], u)
    }

    pub fn slab(&self, j: usize, u: &DVector<f64>) -> DVector<f64> {
        Self::apply(&self.b[j], u)
    }

    /// Functional `x ↦ wᵀ a_j` (or `b_{j+½}`) expressed on raw cochains.
    pub fn functional(rows: &[Vec<(usize, f64)>], w: &DVector<f64>) -> Vec<(usize, f64)> {
        rows.iter().zip(w.iter()).flat_map(|(r, &c)| r.iter().map(move |&(g, v)| (g, c * v))).filter(|x| x.1 != 0.0).collect()
    }
}

/// Per-mode profiles of a form on one cylinder.
#[derive(Debug, Clone)]
pub struct ModalProfile {
    pub edge: usize,
    pub side: Option<Side>,
    pub dt: f64,
    /// `t` of each level and of each slab midpoint.
    pub t_levels: Vec<f64>,
    pub t_slabs: Vec<f64>,
    /// `p[(k, j)]`: coefficient of `ψ_k` in `a_j`.
    pub p: DMatrix<f64>,
    /// `q[(k, j)]`: coefficient of `Gψ_k` in `b_{j+½}`.
    pub q: DMatrix<f64>,
    pub s: Vec<f64>,
}

/// Expand `u` (raw cochain) on the cylinder of `edge` (and star side, if
/// the complex is a star) in the `D_e` eigenbasis.
pub fn modal_transform(
    u: &DVector<f64>,
    cx: &CellComplex,
    edge: usize,
    side: Option<Side>,
    spec: &CrossSectionSpectrum,
) -> Result<ModalProfile> {
    let cyl = cx.cylinder(edge, side).ok_or_else(|| Error::EdgeNotCylindrical(format!("{edge}")))?;
    if cyl.n_theta != spec.n_theta {
        return Err(Error::ResolutionMismatch(format!("cylinder N = {}, spectrum N = {}", cyl.n_theta, spec.n_theta)));
    }
    let tr = CylinderTrace::new(cx, cyl);
    let psi = &spec.de_vectors;
    let gpsi = graded_columns(psi);
    let levels = cyl.slabs() + 1;
    let mut p = DMatrix::zeros(psi.ncols(), levels);
    for j in 0..levels {
        p.set_column(j, &(psi.transpose() * tr.level(j, u)));
    }
    let mut q = DMatrix::zeros(psi.ncols(), levels - 1);
    for j in 0..levels - 1 {
        q.set_column(j, &(gpsi.transpose() * tr.slab(j, u)));
    }
    Ok(ModalProfile {
        edge,
        side,
        dt: cyl.dt,
        t_levels: cyl.t_levels.clone(),
        t_slabs: cyl.t_levels.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect(),
        p,
        q,
        s: spec.de_values.clone(),
    })
}

/// `Gψ` for every column `ψ`.
pub fn graded_columns(psi: &DMatrix<f64>) -> DMatrix<f64> {
    let n = psi.nrows() / 2;
    let mut g = psi.clone();
    for i in n..2 * n {
        for c in 0..g.ncols() {
            g[(i, c)] = -g[(i, c)];
        }
    }
    g
}

impl ModalProfile {
    /// Level trace rebuilt from the profile.
    pub fn reconstruct_level(&self, spec: &CrossSectionSpectrum, j: usize) -> DVector<f64> {
        &spec.de_vectors * self.p.column(j)
    }

    pub fn reconstruct_slab(&self, spec: &CrossSectionSpectrum, j: usize) -> DVector<f64> {
        graded_columns(&spec.de_vectors) * self.q.column(j)
    }

    pub fn norm(&self) -> f64 {
        (self.p.norm_squared() + self.q.norm_squared()).sqrt()
    }
}

/// Discrete transfer matrix on states `(p_j, q_{j−½})`.
pub fn transfer(s: f64, mu: f64, dt: f64) -> Matrix2<f64> {
    Matrix2::new(1.0 + dt * dt * (s * s - mu * mu), dt * (s + mu), dt * (s - mu), 1.0)
}

/// Discrete transfer matrix on states `(p_j, q_{j+½})`.
pub fn transfer_shifted(s: f64, mu: f64, dt: f64) -> Matrix2<f64> {
    Matrix2::new(1.0, dt * (s + mu), dt * (s - mu), 1.0 + dt * dt * (s * s - mu * mu))
}

/// Real eigenpairs `(ρ₊, v₊), (ρ₋, v₋)` with `|ρ₊| > 1 > |ρ₋|` of a transfer
/// matrix for a non-kernel mode below the gap.
pub fn growth_split(m: &Matrix2<f64>) -> ((f64, Vector2<f64>), (f64, Vector2<f64>)) {
    let tr = m.trace();
    let det = m.determinant();
    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
    let (rp, rm) = (tr / 2.0 + disc, tr / 2.0 - disc);
    let vec_for = |rho: f64| {
        let a = Vector2::new(m[(0, 1)], rho - m[(0, 0)]);
        let b = Vector2::new(rho - m[(1, 1)], m[(1, 0)]);
        let v = if a.norm() >= b.norm() { a } else { b };
        v / v.norm()
    };
    ((rp, vec_for(rp)), (rm, vec_for(rm)))
}

#[derive(Debug, Clone, Serialize)]
pub struct LowModeFit {
    pub mu: f64,
    pub edge: usize,
    /// Kernel modes: `(mode index, a_k, b_k)`, the state at the window start
    /// (for `μ = 0` the constant values of `p` and `q`).
    pub kernel: Vec<(usize, f64, f64)>,
    /// Non-kernel modes: `(mode index, c⁺, c⁻, α_k, discrete rate)`, with
    /// `c^±` referred to `t = 0` of the edge frame.
    pub modes: Vec<(usize, f64, f64, f64, f64)>,
    pub residual: f64,
    pub relative_residual: f64,
    pub window: (usize, usize),
}

/// Fit every mode of `prof` in the mid-cylinder window (first and last 20%
/// of levels excluded) to the exact discrete solutions at frequency `μ`.
pub fn fit_low_mode(prof: &ModalProfile, mu: f64, gap: f64) -> Result<LowModeFit> {
    if mu.abs() >= gap {
        return Err(Error::MuTooLarge { mu, gap });
    }
    let levels = prof.t_levels.len();
    let j0 = ((0.2 * (levels - 1) as f64).ceil() as usize).max(1);
    let j1 = (0.8 * (levels - 1) as f64).floor() as usize;
    if j1 < j0 + 6 {
        return Err(Error::IllConditionedFit(format!("window [{j0}, {j1}] has fewer than 6 slabs")));
    }
    let dt = prof.dt;
    let mut kernel = Vec::new();
    let mut modes = Vec::new();
    let mut res2 = 0.0;
    let mut obs2 = 0.0;
    for (k, &s) in prof.s.iter().enumerate() {
        let m = transfer(s, mu, dt);
        let obs: Vec<Vector2<f64>> = (j0..=j1).map(|j| Vector2::new(prof.p[(k, j)], prof.q[(k, j - 1)])).collect();
        obs2 += obs.iter().map(|v| v.norm_squared()).sum::<f64>();
        // Two basis solutions propagated from the window start.
        let mut basis: Vec<[Vector2<f64>; 2]> = Vec::with_capacity(obs.len());
        let mut cur = [Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)];
        let (split, scale) = if s == 0.0 {
            (None, 1.0)
        } else {
            let sp = growth_split(&m);
            cur = [sp.0 .1, sp.1 .1];
            (Some(sp), 1.0)
        };
        for _ in &obs {
            basis.push(cur);
            cur = [m * cur[0], m * cur[1]];
        }
        let mut a = DMatrix::zeros(2 * obs.len(), 2);
        let mut y = DVector::zeros(2 * obs.len());
        for (r, (bv, o)) in basis.iter().zip(&obs).enumerate() {
            for c in 0..2 {
                a[(2 * r, c)] = bv[c][0] * scale;
                a[(2 * r + 1, c)] = bv[c][1] * scale;
            }
            y[2 * r] = o[0];
            y[2 * r + 1] = o[1];
        }
        let svd = a.clone().svd(true, true);
        let coef = svd.solve(&y, 1e-14).map_err(|e| Error::IllConditionedFit(e.to_string()))?;
        res2 += (&a * &coef - &y).norm_squared();
        match split {
            None => kernel.push((k, coef[0], coef[1])),
            Some(((rp, _), (rm, _))) => {
                let steps = prof.t_levels[j0] / dt;
                let cp = coef[0] * rp.powf(-steps);
                let cm = coef[1] * rm.powf(-steps);
                let alpha = (s * s - mu * mu).sqrt();
                modes.push((k, cp, cm, alpha, rp.ln() / dt));
            }
        }
    }
    let residual = res2.sqrt();
    Ok(LowModeFit {
        mu,
        edge: prof.edge,
        kernel,
        modes,
        residual,
        relative_residual: if obs2 > 0.0 { residual / obs2.sqrt() } else { 0.0 },
        window: (j0, j1),
    })
}

/// Limiting value in `ker D̂_e`: `(a_f, a_α, b_f, b_α)` are the coefficients
/// of the normalized constant function, `dθ`, `dt` and `dθ ∧ dt`. The first
/// two form the absolute part, the last two the relative part.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitingValue(pub [f64; 4]);

impl LimitingValue {
    pub fn absolute(&self) -> [f64; 2] {
        [self.0[0], self.0[1]]
    }

    pub fn relative(&self) -> [f64; 2] {
        [self.0[2], self.0[3]]
    }

    /// `σ` on limiting values.
    pub fn sigma(&self) -> LimitingValue {
        let [af, aa, bf, ba] = self.0;
        LimitingValue([-bf, ba, af, -aa])
    }

    /// Hodge star on the kernel modes: `1 ↦ dθ∧dt`, `dθ ↦ dt`, `dt ↦ −dθ`,
    /// `dθ∧dt ↦ 1`.
    pub fn star(&self) -> LimitingValue {
        let [af, aa, bf, ba] = self.0;
        LimitingValue([ba, -bf, aa, af])
    }

    pub fn dot(&self, o: &LimitingValue) -> f64 {
        self.0.iter().zip(&o.0).map(|(a, b)| a * b).sum()
    }
}

/// Limiting value from a `μ = 0` fit.
pub fn limiting_value(fit: &LowModeFit, tol: f64) -> Result<LimitingValue> {
    if fit.mu != 0.0 {
        return Err(Error::Validation("limiting values need a μ = 0 fit".into()));
    }
    if fit.relative_residual > tol {
        return Err(Error::ResidualTooLarge { residual: fit.relative_residual, tol });
    }
    let get = |k: usize| fit.kernel.iter().find(|x| x.0 == k).map(|x| (x.1, x.2)).unwrap_or((0.0, 0.0));
    let (pf, qf) = get(0);
    let (pa, qa) = get(1);
    Ok(LimitingValue([pf, pa, qf, -qa]))
}

/// `{u, w}_v = Σ_e •_{(v,e)} ⟨u_e, σ w_e⟩` over the half-edges at a vertex.
pub fn symplectic_product(u: &[LimitingValue], w: &[LimitingValue], signs: &[i32]) -> f64 {
    u.iter().zip(w).zip(signs).map(|((a, b), &s)| s as f64 * a.dot(&b.sigma())).sum()
}

/// Raw cochain of the `t`-independent form with the given limiting value on
/// level `j` / slab `j` of a cylinder (used as the splicing bridge).
pub fn kernel_mode_values(lv: &LimitingValue, cyl: &CylinderIndex) -> ([f64; 4], f64) {
    let n = cyl.n_theta as f64;
    let sdt = cyl.dtheta.sqrt();
    let [af, aa, bf, ba] = lv.0;
    // node, θ-edge, t-edge (per unit δt) and face (per unit δt) values
    ([af / (sdt * n.sqrt()), aa * sdt / n.sqrt(), bf / (sdt * n.sqrt()), ba * sdt / n.sqrt()], cyl.dt)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::assemble::tests::scene;
    use crate::spectral::{kernel_of, Definiteness, SolverOptions};
    use std::f64::consts::PI;

    fn spec8() -> CrossSectionSpectrum {
        CrossSectionSpectrum::new("y", 2.0 * PI, 8).unwrap()
    }

    fn synthetic(spec: &CrossSectionSpectrum, levels: usize, dt: f64, f: impl Fn(usize, usize) -> (f64, f64)) -> ModalProfile {
        let m = spec.de_values.len();
        let mut p = DMatrix::zeros(m, levels);
        let mut q = DMatrix::zeros(m, levels - 1);
        for k in 0..m {
            for j in 0..levels {
                let (a, b) = f(k, j);
                p[(k, j)] = a;
                if j > 0 {
                    q[(k, j - 1)] = b;
                }
            }
        }
        ModalProfile {
            edge: 0,
            side: None,
            dt,
            t_levels: (0..levels).map(|j| j as f64 * dt).collect(),
            t_slabs: (0..levels - 1).map(|j| (j as f64 + 0.5) * dt).collect(),
            p,
            q,
            s: spec.de_values.clone(),
        }
    }

    #[test]
    fn exact_decaying_mode_is_fitted() {
        let spec = spec8();
        let dt = 0.25;
        let k = 2;
        let s = spec.de_values[k];
        let m = transfer(s, 0.0, dt);
        let (_, (rm, vm)) = growth_split(&m);
        let prof = synthetic(&spec, 30, dt, |kk, j| {
            if kk == k {
                let c = rm.powi(j as i32);
                (c * vm[0], c * vm[1])
            } else {
                (0.0, 0.0)
            }
        });
        let fit = fit_low_mode(&prof, 0.0, spec.gap()).unwrap();
        assert!(fit.relative_residual < 1e-10);
        let mode = fit.modes.iter().find(|x| x.0 == k).unwrap();
        assert!(mode.1.abs() < 1e-10 && (mode.2 - 1.0).abs() < 1e-10);
        let lv = limiting_value(&fit, 1e-6).unwrap();
        assert!(lv.0.iter().all(|x| x.abs() < 1e-12));
        assert!((mode.4 - s).abs() < 0.05 * s);
    }

    #[test]
    fn fit_rejects_large_mu_and_short_windows() {
        let spec = spec8();
        let prof = synthetic(&spec, 30, 0.2, |_, _| (0.0, 0.0));
        assert!(matches!(fit_low_mode(&prof, 2.0, spec.gap()), Err(Error::MuTooLarge { .. })));
        let short = synthetic(&spec, 8, 0.2, |_, _| (0.0, 0.0));
        assert!(matches!(fit_low_mode(&short, 0.0, spec.gap()), Err(Error::IllConditionedFit(_))));
    }

    #[test]
    fn sigma_and_star_on_limits() {
        let u = LimitingValue([0.3, -1.2, 0.7, 2.0]);
        let w = LimitingValue([1.1, 0.4, -0.5, 0.9]);
        assert!(u.dot(&u.sigma()).abs() < 1e-15);
        let uw = symplectic_product(&[u], &[w], &[1]);
        let wu = symplectic_product(&[w], &[u], &[1]);
        assert!((uw + wu).abs() < 1e-12);
        let ss = u.sigma().sigma();
        assert!(ss.0.iter().zip(&u.0).all(|(a, b)| (a + b).abs() < 1e-15));
        let st = u.star().star();
        assert_eq!(st.0, [u.0[0], -u.0[1], -u.0[2], u.0[3]]);
    }

    #[test]
    fn modal_transform_reconstructs_and_reads_constants() {
        let g = scene("torus");
        let cx = g.assemble(4.0).unwrap();
        let spec = spec8();
        let u = DVector::from_fn(cx.total(), |i, _| ((i * 31 % 17) as f64).cos());
        let prof = modal_transform(&u, &cx, 0, None, &spec).unwrap();
        let cyl = &cx.cylinders[0];
        let tr = CylinderTrace::new(&cx, cyl);
        for j in [0, 3, cyl.slabs()] {
            assert!((prof.reconstruct_level(&spec, j) - tr.level(j, &u)).norm() < 1e-10);
        }
        assert!((prof.reconstruct_slab(&spec, 2) - tr.slab(2, &u)).norm() < 1e-10);
        let zero = modal_transform(&DVector::zeros(cx.total()), &cx, 0, None, &spec).unwrap();
        assert_eq!(zero.norm(), 0.0);
        assert!(matches!(modal_transform(&u, &cx, 5, None, &spec), Err(Error::EdgeNotCylindrical(_))));
        // Constant function: only the f0 mode, constant in t.
        let mut one = DVector::zeros(cx.total());
        for i in 0..cx.n0 {
            one[i] = 1.0;
        }
        let prof = modal_transform(&one, &cx, 0, None, &spec).unwrap();
        let lv = limiting_value(&fit_low_mode(&prof, 0.0, spec.gap()).unwrap(), 1e-8).unwrap();
        assert!((lv.0[0] - (2.0 * PI).sqrt()).abs() < 1e-10);
        assert!(lv.0[1..].iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn torus_harmonic_forms_have_pure_limits() {
        let g = scene("torus");
        let cx = g.assemble(3.0).unwrap();
        let ops = cx.operators();
        let (rep, res) = kernel_of(&ops.laplacian, Definiteness::PositiveSemidefinite, 4, &SolverOptions::default()).unwrap();
        assert_eq!(rep.dim, 4);
        let spec = spec8();
        let mut lvs = Vec::new();
        for c in 0..4 {
            let u = cx.unsymmetrize(&res.vectors.column(c).into_owned());
            let prof = modal_transform(&u, &cx, 0, None, &spec).unwrap();
            let fit = fit_low_mode(&prof, 0.0, spec.gap()).unwrap();
            assert!(fit.relative_residual < 1e-6, "{}", fit.relative_residual);
            lvs.push(limiting_value(&fit, 1e-6).unwrap());
        }
        // The four limits span all of ker D̂_e.
        let m = DMatrix::from_fn(4, 4, |i, j| lvs[j].0[i]);
        assert_eq!(m.rank(1e-8 * m.amax()), 4);
    }
}
