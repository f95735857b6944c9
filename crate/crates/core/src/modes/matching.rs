//! Matching sets: tuples of extended solutions, one per vertex, whose
//! limiting values agree across every edge.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::aps::{column_space, null_space, rank_abs, ApsKernel, MATCH_TOL};
use super::{fit_low_mode, limiting_value, modal_transform, LimitingValue};
use crate::complex::CellComplex;
use crate::cross_section::CrossSectionSpectrum;
use crate::error::{Error, Result};
use crate::graph::{Graph, Side};
use crate::spectral::{kato_gap, SubspaceBasis};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MatchingTag {
    /// Vanishing limiting values.
    L2,
    /// Purely absolute limiting values.
    Absolute,
    /// Purely relative limiting values.
    Relative,
}

/// One element of `𝒲`.
#[derive(Debug, Clone, Serialize)]
pub struct MatchingSet {
    /// Coefficients in the concatenated per-vertex `P̄` bases.
    pub coefficients: Vec<f64>,
    /// Per-vertex raw cochains on the stars.
    #[serde(skip)]
    pub parts: Vec<DVector<f64>>,
    /// Shared limiting value per edge.
    pub limits: Vec<LimitingValue>,
    pub tag: MatchingTag,
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchingSpace {
    pub dim_w: usize,
    /// Elements with zero limiting values (`ker 𝒟(∞)`).
    pub dim_l2: usize,
    pub dim_l: usize,
    pub dim_la: usize,
    pub dim_lr: usize,
    /// Largest `|ρ_ex|` over the returned basis.
    pub mismatch: f64,
    pub elements: Vec<MatchingSet>,
    /// Orthonormal basis of `ℒ ⊂ ⊕_e ker D̂_e` (stacked per edge).
    #[serde(skip)]
    pub limit_space: DMatrix<f64>,
}

impl MatchingSpace {
    /// Linear combination `Σ c_i w_i` of the basis elements.
    pub fn combine(&self, coef: &[f64]) -> MatchingSet {
        let first = &self.elements[0];
        let mut out = MatchingSet {
            coefficients: vec![0.0; first.coefficients.len()],
            parts: first.parts.iter().map(|p| DVector::zeros(p.len())).collect(),
            limits: vec![LimitingValue([0.0; 4]); first.limits.len()],
            tag: first.tag,
        };
        for (w, &c) in self.elements.iter().zip(coef) {
            out.coefficients.iter_mut().zip(&w.coefficients).for_each(|(a, b)| *a += c * b);
            out.parts.iter_mut().zip(&w.parts).for_each(|(a, b)| a.axpy(c, b, 1.0));
            for (a, b) in out.limits.iter_mut().zip(&w.limits) {
                for q in 0..4 {
                    a.0[q] += c * b.0[q];
                }
            }
        }
        out
    }

    /// Element whose limiting values best match `target` (stacked per edge).
    pub fn with_limits(&self, target: &DVector<f64>) -> Result<MatchingSet> {
        let ne = self.elements.first().map(|w| w.limits.len()).unwrap_or(0);
        let m = DMatrix::from_fn(4 * ne, self.elements.len(), |i, j| self.elements[j].limits[i / 4].0[i % 4]);
        let c = m.svd(true, true).solve(target, 1e-10).map_err(|e| Error::RankDeficientInput(e.to_string()))?;
        Ok(self.combine(c.as_slice()))
    }
}

/// Position of half-edge `(edge, side)` among a kernel's limits.
fn slot(k: &ApsKernel, edge: usize, side: Side) -> Result<usize> {
    k.half_edges()
        .iter()
        .position(|&(e, s)| e == edge && s == side)
        .ok_or_else(|| Error::RankDeficientInput(format!("vertex {} has no limit on edge {edge}", k.vertex)))
}

/// Solve `ρ_ex = 0` over the per-vertex `P̄` bases.
pub fn matching_assembly(kernels: &[ApsKernel], g: &Graph) -> Result<MatchingSpace> {
    if kernels.len() != g.vertices.len() {
        return Err(Error::RankDeficientInput(format!("{} kernels for {} vertices", kernels.len(), g.vertices.len())));
    }
    let offsets: Vec<usize> = kernels
        .iter()
        .scan(0, |acc, k| {
            let o = *acc;
            *acc += k.dim();
            Some(o)
        })
        .collect();
    let total: usize = kernels.iter().map(|k| k.dim()).sum();
    let ne = g.edges.len();
    // Limiting value per edge from its tail vertex, and the mismatch rows.
    let mut tail_lv = DMatrix::zeros(4 * ne, total);
    let mut rho = DMatrix::zeros(4 * ne, total);
    for (e, edge) in g.edges.iter().enumerate() {
        for (v, side, sign) in [(edge.tail, Side::Tail, 1.0), (edge.head, Side::Head, -1.0)] {
            let k = &kernels[v];
            if k.dim() == 0 {
                continue;
            }
            let h = slot(k, e, side)?;
            for (i, sol) in k.solutions.iter().enumerate() {
                for q in 0..4 {
                    rho[(4 * e + q, offsets[v] + i)] += sign * sol.limits[h].2 .0[q];
                    if side == Side::Tail {
                        tail_lv[(4 * e + q, offsets[v] + i)] = sol.limits[h].2 .0[q];
                    }
                }
            }
        }
    }
    let w = if ne == 0 { DMatrix::identity(total, total) } else { null_space(&rho, MATCH_TOL) };
    let lam = &tail_lv * &w;
    let abs_rows: Vec<usize> = (0..ne).flat_map(|e| [4 * e, 4 * e + 1]).collect();
    let rel_rows: Vec<usize> = (0..ne).flat_map(|e| [4 * e + 2, 4 * e + 3]).collect();
    let l2 = null_space(&lam, MATCH_TOL);
    let abs_null = null_space(&lam.select_rows(&rel_rows), MATCH_TOL);
    let rel_null = null_space(&lam.select_rows(&abs_rows), MATCH_TOL);
    let dim_l = rank_abs(&lam, MATCH_TOL);

    // Basis of 𝒲 adapted to ker 𝒟(∞) ⊕ ℒᵃ ⊕ ℒʳ, in W-coordinates.
    let mut tagged: Vec<(DVector<f64>, MatchingTag)> = l2.column_iter().map(|c| (c.into_owned(), MatchingTag::L2)).collect();
    for (space, tag) in [(&abs_null, MatchingTag::Absolute), (&rel_null, MatchingTag::Relative)] {
        let mut rest = (*space).clone();
        if l2.ncols() > 0 {
            rest -= &l2 * (l2.transpose() * &rest);
        }
        tagged.extend(column_space(&rest, 1e-8).column_iter().map(|c| (c.into_owned(), tag)));
    }
    let mut elements = Vec::with_capacity(tagged.len());
    let mut mismatch: f64 = 0.0;
    for (x, tag) in tagged {
        let coefficients = &w * &x;
        mismatch = mismatch.max((&rho * &coefficients).amax());
        let parts = kernels
            .iter()
            .enumerate()
            .map(|(v, k)| {
                let mut u = DVector::zeros(k.solutions.first().map(|s| s.form.len()).unwrap_or(0));
                for (i, s) in k.solutions.iter().enumerate() {
                    u.axpy(coefficients[offsets[v] + i], &s.form, 1.0);
                }
                u
            })
            .collect();
        let lv = &tail_lv * &coefficients;
        let limits = (0..ne).map(|e| LimitingValue([lv[4 * e], lv[4 * e + 1], lv[4 * e + 2], lv[4 * e + 3]])).collect();
        elements.push(MatchingSet { coefficients: coefficients.iter().copied().collect(), parts, limits, tag });
    }
    Ok(MatchingSpace {
        dim_w: w.ncols(),
        dim_l2: l2.ncols(),
        dim_l,
        dim_la: abs_null.ncols() - l2.ncols(),
        dim_lr: rel_null.ncols() - l2.ncols(),
        mismatch,
        elements,
        limit_space: column_space(&lam, MATCH_TOL),
    })
}

/// Limiting values of global forms on `X(R)`, read by mid-cylinder fits.
#[derive(Debug, Clone, Serialize)]
pub struct ReferenceSet {
    pub r: f64,
    /// Per form, one limiting value per edge.
    pub limits: Vec<Vec<LimitingValue>>,
    pub max_relative_residual: f64,
    #[serde(skip)]
    pub limit_space: DMatrix<f64>,
}

/// Extract matching data from a harmonic basis (raw cochains) on `X(R)`.
pub fn reference_extraction(
    cx: &CellComplex,
    forms: &[DVector<f64>],
    spectrum: &dyn Fn(usize) -> Result<CrossSectionSpectrum>,
    tol: f64,
) -> Result<ReferenceSet> {
    let r = cx.r.ok_or_else(|| Error::Validation("reference extraction needs an assembled X(r)".into()))?;
    let ne = cx.cylinders.len();
    let mut limits = Vec::with_capacity(forms.len());
    let mut worst: f64 = 0.0;
    for u in forms {
        let mut per_edge = Vec::with_capacity(ne);
        for cyl in &cx.cylinders {
            let spec = spectrum(cyl.edge)?;
            let prof = modal_transform(u, cx, cyl.edge, None, &spec)?;
            let fit = fit_low_mode(&prof, 0.0, spec.gap())?;
            worst = worst.max(fit.relative_residual);
            per_edge.push(limiting_value(&fit, tol)?);
        }
        limits.push(per_edge);
    }
    let m = DMatrix::from_fn(4 * ne, forms.len(), |i, j| limits[j][i / 4].0[i % 4]);
    let scale = m.amax().max(f64::MIN_POSITIVE);
    Ok(ReferenceSet { r, limits, max_relative_residual: worst, limit_space: column_space(&m, 1e-6 * scale) })
}

/// Symmetric gap between two limit spaces.
pub fn limit_space_gap(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    let (a, b) = (SubspaceBasis::from_columns(a), SubspaceBasis::from_columns(b));
    if a.dim() == 0 && b.dim() == 0 {
        return Ok(0.0);
    }
    Ok(kato_gap(&a, &b)?.max(kato_gap(&b, &a)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cech::CochainSystem;
    use crate::complex::assemble::tests::scene;
    use crate::modes::aps::{aps_kernel, ApsCondition};
    use crate::spectral::{kernel_of, Definiteness, SolverOptions};
    use std::f64::consts::PI;

    fn spec(_: usize) -> Result<CrossSectionSpectrum> {
        CrossSectionSpectrum::new("y", 2.0 * PI, 8)
    }

    fn space(name: &str) -> (MatchingSpace, crate::complex::assemble::Geometry) {
        let g = scene(name);
        let kernels: Vec<ApsKernel> = (0..g.graph.vertices.len())
            .map(|v| aps_kernel(&g.star(v, 6.0).unwrap(), v, &spec, ApsCondition::PBar, &SolverOptions::default()).unwrap())
            .collect();
        (matching_assembly(&kernels, &g.graph).unwrap(), g)
    }

    #[test]
    fn matching_dimensions_follow_graph_cohomology() {
        for name in ["sphere", "torus", "theta"] {
            let (w, g) = space(name);
            let coh = CochainSystem::from_presets(&g.graph, &g.kinds).unwrap().cohomology();
            let h0: usize = coh.h0.iter().sum();
            let h1: usize = coh.h1.iter().sum();
            assert_eq!(w.dim_w, h0 + h1, "{name}");
            assert_eq!(w.dim_l2 + w.dim_la, h0, "{name}");
            assert_eq!(w.dim_lr, h1, "{name}");
            assert_eq!(w.elements.len(), w.dim_w);
            assert!(w.mismatch < MATCH_TOL);
        }
    }

    #[test]
    fn reference_route_agrees_with_star_route() {
        let (w, g) = space("sphere");
        let cx = g.assemble(6.0).unwrap();
        let (rep, res) = kernel_of(&cx.operators().laplacian, Definiteness::PositiveSemidefinite, 2, &SolverOptions::default()).unwrap();
        let forms: Vec<DVector<f64>> = (0..rep.dim).map(|c| cx.unsymmetrize(&res.vectors.column(c).into_owned())).collect();
        let refs = reference_extraction(&cx, &forms, &spec, 1e-6).unwrap();
        assert_eq!(refs.limit_space.ncols(), w.limit_space.ncols());
        assert!(limit_space_gap(&refs.limit_space, &w.limit_space).unwrap() < 1e-4);
    }

    #[test]
    fn constant_function_has_equal_absolute_limits() {
        let g = scene("theta");
        let cx = g.assemble(4.0).unwrap();
        let mut one = DVector::zeros(cx.total());
        for i in 0..cx.n0 {
            one[i] = 1.0;
        }
        let refs = reference_extraction(&cx, &[one], &spec, 1e-8).unwrap();
        let l = &refs.limits[0];
        assert!(l.iter().all(|x| (x.0[0] - l[0].0[0]).abs() < 1e-12 && x.0[1..].iter().all(|y| y.abs() < 1e-12)));
    }
}
