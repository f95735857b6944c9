//! Extended harmonic forms on truncated stars via spectral boundary
//! conditions at the truncation circles.
//!
//! On a star `X_v(T)` the equations of `D u = 0` at the outermost level of
//! each half-cylinder couple to cells beyond the truncation, so they are
//! dropped; the truncation state of every circle mode is then free. The
//! boundary condition keeps only the mode that decays away from the vertex
//! piece (and, for `P̄`, the `t`-independent kernel modes). Both are imposed
//! by a quadratic penalty: `A = D_iᵀ D_i + c BᵀB` with `c = ‖D‖₁`, whose
//! kernel is the solution space.

use nalgebra::{DMatrix, DVector, Vector2};
use serde::Serialize;

use super::{fit_low_mode, graded_columns, growth_split, limiting_value, modal_transform, transfer, transfer_shifted};
use super::{CylinderTrace, LimitingValue};
use crate::complex::CellComplex;
use crate::cross_section::CrossSectionSpectrum;
use crate::error::{Error, Result};
use crate::graph::Side;
use crate::spectral::{kernel_of, Csr, Definiteness, KernelReport, SolverOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ApsCondition {
    /// Decaying modes only.
    P,
    /// Decaying modes and the `t`-independent kernel modes.
    PBar,
}

/// Fit tolerance for limiting values of computed solutions.
pub const LIMIT_FIT_TOL: f64 = 1e-6;

/// Minimal half-cylinder length in units of `1/λ̂₀`.
pub const MIN_DECAY_LENGTHS: f64 = 3.0;

/// Default truncation `T = max(4/λ̂₀, 4)`.
pub fn default_truncation(gap: f64) -> f64 {
    (4.0 / gap).max(4.0)
}

/// A solution on the truncated star together with its limiting values.
#[derive(Debug, Clone, Serialize)]
pub struct ExtendedSolution {
    pub vertex: usize,
    /// Raw cochain on the star, unit `M`-norm.
    #[serde(skip)]
    pub form: DVector<f64>,
    /// `(edge, side, limiting value)` per half-edge of the star.
    pub limits: Vec<(usize, Side, LimitingValue)>,
    /// The limiting value vanishes: the solution is `L²` on the infinite star.
    pub l2: bool,
}

impl ExtendedSolution {
    pub fn limit_vector(&self) -> DVector<f64> {
        DVector::from_iterator(4 * self.limits.len(), self.limits.iter().flat_map(|(_, _, lv)| lv.0))
    }

    pub fn absolute(&self) -> Vec<[f64; 2]> {
        self.limits.iter().map(|l| l.2.absolute()).collect()
    }

    pub fn relative(&self) -> Vec<[f64; 2]> {
        self.limits.iter().map(|l| l.2.relative()).collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ApsKernel {
    pub vertex: usize,
    pub condition: ApsCondition,
    pub report: KernelReport,
    pub solutions: Vec<ExtendedSolution>,
    /// `max ‖D_i x‖` over the basis (symmetrized coordinates).
    pub interior_residual: f64,
    /// `max ‖B x‖` over the basis.
    pub constraint_residual: f64,
    pub truncation: f64,
}

impl ApsKernel {
    pub fn dim(&self) -> usize {
        self.solutions.len()
    }

    /// Number of solutions with vanishing limiting value.
    pub fn l2_dim(&self) -> usize {
        self.solutions.iter().filter(|s| s.l2).count()
    }

    /// Limiting values as columns.
    pub fn limit_matrix(&self) -> DMatrix<f64> {
        let cols: Vec<DVector<f64>> = self.solutions.iter().map(|s| s.limit_vector()).collect();
        if cols.is_empty() {
            DMatrix::zeros(0, 0)
        } else {
            DMatrix::from_columns(&cols)
        }
    }

    /// Half-edges of the star in the order used by `limits`.
    pub fn half_edges(&self) -> Vec<(usize, Side)> {
        self.solutions.first().map(|s| s.limits.iter().map(|l| (l.0, l.1)).collect()).unwrap_or_default()
    }
}

/// Unit-norm functionals in symmetrized coordinates, one per forbidden
/// truncation mode.
fn boundary_rows(
    star: &CellComplex,
    spectrum: &dyn Fn(usize) -> Result<CrossSectionSpectrum>,
    cond: ApsCondition,
) -> Result<Vec<Vec<(usize, f64)>>> {
    let mass = star.masses();
    let mut rows = Vec::new();
    for cyl in &star.cylinders {
        let side = cyl.star_side.ok_or_else(|| Error::Validation("complex is not a star".into()))?;
        let spec = spectrum(cyl.edge)?;
        let tr = CylinderTrace::new(star, cyl);
        let psi = &spec.de_vectors;
        let gpsi = graded_columns(psi);
        // Truncation state: tail (p_J, q_{J−½}), head (p_0, q_{½}).
        let (level, slab) = match side {
            Side::Tail => (cyl.slabs(), cyl.slabs() - 1),
            Side::Head => (0, 0),
        };
        for (k, &s) in spec.de_values.iter().enumerate() {
            let pk = CylinderTrace::functional(&tr.a[level], &psi.column(k).into_owned());
            let qk = CylinderTrace::functional(&tr.b[slab], &gpsi.column(k).into_owned());
            let weights: Vec<Vector2<f64>> = if s == 0.0 {
                match cond {
                    ApsCondition::P => vec![Vector2::new(1.0, 0.0), Vector2::new(0.0, 1.0)],
                    ApsCondition::PBar => vec![],
                }
            } else {
                let v = match side {
                    Side::Tail => growth_split(&transfer(s, 0.0, cyl.dt)).1 .1,
                    Side::Head => growth_split(&transfer_shifted(s, 0.0, cyl.dt)).0 .1,
                };
                vec![Vector2::new(-v[1], v[0])]
            };
            for w in weights {
                let mut row: Vec<(usize, f64)> = pk
                    .iter()
                    .map(|&(g, c)| (g, w[0] * c))
                    .chain(qk.iter().map(|&(g, c)| (g, w[1] * c)))
                    .map(|(g, c)| (g, c / mass[g].sqrt()))
                    .collect();
                let norm = row.iter().map(|x| x.1 * x.1).sum::<f64>().sqrt();
                if norm > 0.0 {
                    row.iter_mut().for_each(|x| x.1 /= norm);
                    rows.push(row);
                }
            }
        }
    }
    Ok(rows)
}

/// Rows of `D` that do not couple past a truncation circle.
fn interior_rows(star: &CellComplex) -> Vec<usize> {
    let mut drop = vec![false; star.total()];
    for cyl in &star.cylinders {
        let level = match cyl.star_side {
            Some(Side::Head) => 0,
            _ => cyl.slabs(),
        };
        for i in 0..cyl.n_theta {
            drop[cyl.nodes[level][i]] = true;
            drop[star.offset(1) + cyl.theta_edges[level][i].0] = true;
        }
    }
    (0..star.total()).filter(|&g| !drop[g]).collect()
}

/// Limiting values of a raw star cochain on every half-cylinder.
pub fn star_limits(
    star: &CellComplex,
    u: &DVector<f64>,
    spectrum: &dyn Fn(usize) -> Result<CrossSectionSpectrum>,
    tol: f64,
) -> Result<Vec<(usize, Side, LimitingValue)>> {
    let mut out = Vec::new();
    for cyl in &star.cylinders {
        let spec = spectrum(cyl.edge)?;
        let prof = modal_transform(u, star, cyl.edge, cyl.star_side, &spec)?;
        let fit = fit_low_mode(&prof, 0.0, spec.gap())?;
        out.push((cyl.edge, cyl.star_side.unwrap(), limiting_value(&fit, tol)?));
    }
    Ok(out)
}

/// Kernel of the boundary-constrained problem on a truncated star.
pub fn aps_kernel(
    star: &CellComplex,
    vertex: usize,
    spectrum: &dyn Fn(usize) -> Result<CrossSectionSpectrum>,
    cond: ApsCondition,
    opts: &SolverOptions,
) -> Result<ApsKernel> {
    let mut truncation = f64::INFINITY;
    let mut expected = 0;
    for cyl in &star.cylinders {
        let gap = spectrum(cyl.edge)?.gap();
        let needed = MIN_DECAY_LENGTHS / gap;
        if cyl.length() < needed {
            return Err(Error::CylinderTooShort { length: cyl.length(), needed });
        }
        truncation = truncation.min(cyl.length());
        expected += 2;
    }
    if cond == ApsCondition::P {
        expected = 0;
    }
    let ops = star.operators();
    let di = ops.d.select_rows(&interior_rows(star));
    let brows = boundary_rows(star, spectrum, cond)?;
    let trip: Vec<(usize, usize, f64)> = brows.iter().enumerate().flat_map(|(i, r)| r.iter().map(move |&(g, c)| (i, g, c))).collect();
    let b = Csr::from_triplets(brows.len(), star.total(), &trip);
    let c = ops.d.norm1();
    let a = di.transpose().matmul(&di).add(&b.transpose().matmul(&b).scale(c));
    let (report, res) = kernel_of(&a, Definiteness::PositiveSemidefinite, expected, opts)?;
    let basis = res.vectors.columns(0, report.dim).into_owned();

    let mut interior_residual: f64 = 0.0;
    let mut constraint_residual: f64 = 0.0;
    let mut raw = Vec::with_capacity(report.dim);
    let mut limits = Vec::with_capacity(report.dim);
    for x in basis.column_iter() {
        let x = x.into_owned();
        interior_residual = interior_residual.max(di.mul_dvec(&x).norm());
        constraint_residual = constraint_residual.max(b.mul_dvec(&x).norm());
        let u = star.unsymmetrize(&x);
        limits.push(star_limits(star, &u, spectrum, LIMIT_FIT_TOL)?);
        raw.push(x);
    }

    // Rotate so that the solutions with vanishing limits come first.
    let mut solutions = Vec::with_capacity(report.dim);
    if report.dim > 0 {
        let lam = DMatrix::from_fn(4 * star.cylinders.len(), report.dim, |i, j| limits[j][i / 4].2 .0[i % 4]);
        let padded = if lam.nrows() < lam.ncols() {
            let mut m = DMatrix::zeros(lam.ncols(), lam.ncols());
            m.view_mut((0, 0), lam.shape()).copy_from(&lam);
            m
        } else {
            lam.clone()
        };
        let svd = padded.svd(false, true);
        let vt = svd.v_t.unwrap();
        let mut order: Vec<usize> = (0..report.dim).collect();
        order.sort_by(|&i, &j| svd.singular_values[i].total_cmp(&svd.singular_values[j]));
        for i in order {
            let coef = vt.row(i).transpose();
            let x = DMatrix::from_columns(&raw) * &coef;
            let u = star.unsymmetrize(&x);
            let lv = star_limits(star, &u, spectrum, LIMIT_FIT_TOL)?;
            let l2 = svd.singular_values[i] <= MATCH_TOL;
            solutions.push(ExtendedSolution { vertex, form: u, limits: lv, l2 });
        }
    }
    Ok(ApsKernel { vertex, condition: cond, report, solutions, interior_residual, constraint_residual, truncation })
}

/// Absolute tolerance on limiting values of unit-norm solutions.
pub const MATCH_TOL: f64 = 1e-6;

/// Numerical rank with an absolute singular-value threshold.
pub fn rank_abs(m: &DMatrix<f64>, tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    m.singular_values().iter().filter(|&&s| s > tol).count()
}

/// Orthonormal basis of the null space of `m` (singular values `≤ tol`).
pub fn null_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    let n = m.ncols();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let mut padded = DMatrix::zeros(m.nrows().max(n), n);
    padded.view_mut((0, 0), m.shape()).copy_from(m);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.unwrap();
    let cols: Vec<DVector<f64>> = (0..n).filter(|&i| svd.singular_values[i] <= tol).map(|i| vt.row(i).transpose()).collect();
    if cols.is_empty() {
        DMatrix::zeros(n, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Orthonormal basis of the column space of `m` (singular values `> tol`).
pub fn column_space(m: &DMatrix<f64>, tol: f64) -> DMatrix<f64> {
    if m.ncols() == 0 {
        return DMatrix::zeros(m.nrows(), 0);
    }
    let svd = m.clone().svd(true, false);
    let u = svd.u.unwrap();
    let cols: Vec<DVector<f64>> =
        (0..svd.singular_values.len()).filter(|&i| svd.singular_values[i] > tol).map(|i| u.column(i).into_owned()).collect();
    if cols.is_empty() {
        DMatrix::zeros(m.nrows(), 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Lagrangian data of one star: `L_v`, its split and the Hodge-star exchange.
#[derive(Debug, Clone, Serialize)]
pub struct LagrangianReport {
    pub vertex: usize,
    pub dim_kernel_hat: usize,
    pub dim_lv: usize,
    pub dim_lva: usize,
    pub dim_lvr: usize,
    /// `max |{u, w}_v|` over unit-normalized basis pairs of `L_v`.
    pub max_pairing: f64,
    /// Gap between `∗L_vᵃ` and `L_vʳ` (symmetric).
    pub star_exchange_gap: f64,
}

/// Coordinates of the absolute (`a`) or relative (`b`) part of a stacked
/// limiting-value vector.
pub fn part_rows(n_half_edges: usize, relative: bool) -> Vec<usize> {
    (0..n_half_edges).flat_map(|h| if relative { [4 * h + 2, 4 * h + 3] } else { [4 * h, 4 * h + 1] }).collect()
}

/// Subspace of `span(l)` whose `relative` (or absolute) part vanishes.
pub fn split_part(l: &DMatrix<f64>, vanishing_relative: bool, tol: f64) -> DMatrix<f64> {
    let hes = l.nrows() / 4;
    let rows = part_rows(hes, vanishing_relative);
    let sub = l.select_rows(&rows);
    let null = null_space(&sub, tol);
    column_space(&(l * null), tol)
}

pub fn lagrangian_report(k: &ApsKernel) -> Result<LagrangianReport> {
    let hes = k.half_edges();
    let signs: Vec<i32> = hes.iter().map(|h| h.1.sign()).collect();
    let lam = k.limit_matrix();
    let lv = column_space(&lam, MATCH_TOL);
    let mut max_pairing: f64 = 0.0;
    let as_lv = |c: DVector<f64>| -> Vec<LimitingValue> {
        (0..hes.len()).map(|h| LimitingValue([c[4 * h], c[4 * h + 1], c[4 * h + 2], c[4 * h + 3]])).collect()
    };
    for i in 0..lv.ncols() {
        for j in 0..lv.ncols() {
            let u = as_lv(lv.column(i).into_owned());
            let w = as_lv(lv.column(j).into_owned());
            max_pairing = max_pairing.max(super::symplectic_product(&u, &w, &signs).abs());
        }
    }
    let la = split_part(&lv, true, MATCH_TOL);
    let lr = split_part(&lv, false, MATCH_TOL);
    let star_cols = |m: &DMatrix<f64>| -> DMatrix<f64> {
        let mut out = m.clone();
        for c in 0..m.ncols() {
            for h in 0..hes.len() {
                let s = LimitingValue([m[(4 * h, c)], m[(4 * h + 1, c)], m[(4 * h + 2, c)], m[(4 * h + 3, c)]]).star();
                for q in 0..4 {
                    out[(4 * h + q, c)] = s.0[q];
                }
            }
        }
        out
    };
    let sa = crate::spectral::SubspaceBasis::from_columns(&star_cols(&la));
    let sr = crate::spectral::SubspaceBasis::from_columns(&lr);
    let gap = if sa.dim() == 0 && sr.dim() == 0 {
        0.0
    } else if sa.dim() == 0 || sr.dim() == 0 {
        1.0
    } else {
        crate::spectral::kato_gap(&sa, &sr)?.max(crate::spectral::kato_gap(&sr, &sa)?)
    };
    Ok(LagrangianReport {
        vertex: k.vertex,
        dim_kernel_hat: 4 * hes.len(),
        dim_lv: lv.ncols(),
        dim_lva: la.ncols(),
        dim_lvr: lr.ncols(),
        max_pairing,
        star_exchange_gap: gap,
    })
}
