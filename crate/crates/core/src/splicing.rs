//! Splicing matching sets into forms on `X(r)`, projected splicing, the
//! small-eigenvalue scan and the gap experiment.
//!
//! Stars are built on the slab grid of the target `X(r)`, so every cylinder
//! cell of `X(r)` at distance `ϑ` from a vertex piece has a counterpart on
//! the corresponding half-cylinder of that vertex's star.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::Serialize;

use crate::complex::assemble::Geometry;
use crate::complex::{CellComplex, CylinderIndex};
use crate::cross_section::CrossSectionSpectrum;
use crate::error::{Error, Result};
use crate::graph::Side;
use crate::modes::aps::{aps_kernel, default_truncation, ApsCondition, ApsKernel};
use crate::modes::kernel_mode_values;
use crate::modes::matching::{matching_assembly, MatchingSet, MatchingSpace};
use crate::spectral::{
    default_tol_abs, kato_gap, kernel_dimension, low_spectrum, orthonormalize_columns, spectrum_below, Definiteness, SolverOptions,
    SubspaceBasis, DEFAULT_GAP_RATIO,
};

/// Quintic smoothstep cutoff: 1 for `ϑ ≤ r − ¾`, 0 for `ϑ ≥ r − ¼`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CutoffProfile {
    pub r: f64,
}

impl CutoffProfile {
    pub const WIDTH: f64 = 0.5;

    pub fn new(r: f64) -> Self {
        CutoffProfile { r }
    }

    pub fn value(&self, dist: f64) -> f64 {
        let x = ((self.r - 0.25 - dist) / Self::WIDTH).clamp(0.0, 1.0);
        x * x * x * (10.0 - 15.0 * x + 6.0 * x * x)
    }

    /// `sup |∂_ϑ g| = 15/8 / width`.
    pub fn max_slope(&self) -> f64 {
        15.0 / 8.0 / Self::WIDTH
    }

    /// Profile values at the given distances.
    pub fn sample(&self, dists: &[f64]) -> Vec<f64> {
        dists.iter().map(|&d| self.value(d)).collect()
    }
}

/// Edge spectra as the closure expected by the modal routines.
pub fn spectrum_fn(spectra: &[CrossSectionSpectrum]) -> impl Fn(usize) -> Result<CrossSectionSpectrum> + '_ {
    move |e| spectra.get(e).cloned().ok_or_else(|| Error::EdgeNotCylindrical(format!("{e}")))
}

pub const MIN_STAR_SLABS: usize = 12;

/// `X(r)`, the stars on its slab grid and the matching space built on them.
#[derive(Debug, Clone)]
pub struct SpliceSetup {
    pub r: f64,
    pub target: CellComplex,
    pub stars: Vec<CellComplex>,
    pub kernels: Vec<ApsKernel>,
    pub space: MatchingSpace,
    pub gap: f64,
}

/// Assemble `X(r)` and compute matching sets on stars with truncation
/// `T ≥ max(r, 4/λ̂₀, 4)` sharing the slab width of `X(r)`, with at least
/// `MIN_STAR_SLABS` slabs so the limit fits have a full window.
pub fn splice_setup(geom: &Geometry, spectra: &[CrossSectionSpectrum], r: f64, opts: &SolverOptions) -> Result<SpliceSetup> {
    if !(r >= 2.0) {
        return Err(Error::ROutOfRange(r));
    }
    let gap = crate::cross_section::spectral_gap(spectra)?;
    let target = geom.assemble(r)?;
    let dt = geom.slab_width(r);
    let length = default_truncation(gap).max(r);
    let slabs = ((length / dt - 1e-9).ceil() as usize).max(MIN_STAR_SLABS);
    let sf = spectrum_fn(spectra);
    let mut stars = Vec::new();
    let mut kernels = Vec::new();
    for v in 0..geom.graph.vertices.len() {
        let star = geom.star_grid(v, slabs, dt)?;
        kernels.push(aps_kernel(&star, v, &sf, ApsCondition::PBar, opts)?);
        stars.push(star);
    }
    let space = matching_assembly(&kernels, &geom.graph)?;
    Ok(SpliceSetup { r, target, stars, kernels, space, gap })
}

fn frame_value(u: &DVector<f64>, g: usize, sign: f64) -> f64 {
    sign * u[g]
}

/// `S_r w` as a raw cochain on `target`.
pub fn splice(w: &MatchingSet, geom: &Geometry, stars: &[CellComplex], target: &CellComplex) -> Result<DVector<f64>> {
    let r = target.r.ok_or_else(|| Error::Validation("splice target must be an assembled X(r)".into()))?;
    if !(r >= 2.0) {
        return Err(Error::ROutOfRange(r));
    }
    let cut = CutoffProfile::new(r);
    let mut out = DVector::zeros(target.total());
    for pc in &target.pieces {
        let v = pc.vertex;
        let star = &stars[v];
        let sp = star.pieces.iter().find(|p| p.vertex == v).ok_or_else(|| Error::GluingMismatch(format!("star {v} has no piece")))?;
        for k in 0..3 {
            if pc.ranges[k].len() != sp.ranges[k].len() {
                return Err(Error::GluingMismatch(format!("piece {v} differs between star and X(r)")));
            }
            for (i, j) in pc.ranges[k].clone().zip(sp.ranges[k].clone()) {
                out[target.offset(k) + i] = w.parts[v][star.offset(k) + j];
            }
        }
    }
    let (o1, o2) = (target.offset(1), target.offset(2));
    for cyl in &target.cylinders {
        let e = cyl.edge;
        let big_j = cyl.slabs();
        let tail = geom.vertex_of(e, Side::Tail);
        let head = geom.vertex_of(e, Side::Head);
        let stail = stars[tail].cylinder(e, Some(Side::Tail)).ok_or_else(|| Error::EdgeNotCylindrical(format!("{e}")))?;
        let shead = stars[head].cylinder(e, Some(Side::Head)).ok_or_else(|| Error::EdgeNotCylindrical(format!("{e}")))?;
        for s in [stail, shead] {
            if (s.dt - cyl.dt).abs() > 1e-12 * cyl.dt || s.n_theta != cyl.n_theta {
                return Err(Error::ResolutionMismatch(format!("star grid differs from X(r) on edge {e}")));
            }
            if s.length() < r - 1e-9 {
                return Err(Error::TruncationTooShort { t: s.length(), r });
            }
        }
        let (bridge, _) = kernel_mode_values(&w.limits[e], cyl);
        // Star source for target level j: (star cylinder, star level, vertex, distance).
        let level_src = |j: usize| -> (&CylinderIndex, usize, usize, f64) {
            if 2 * j <= big_j {
                (stail, j, tail, j as f64 * cyl.dt)
            } else {
                (shead, shead.slabs() - (big_j - j), head, (big_j - j) as f64 * cyl.dt)
            }
        };
        for j in 1..big_j {
            let (sc, sj, v, dist) = level_src(j);
            let g = cut.value(dist);
            let u = &w.parts[v];
            let s1 = stars[v].offset(1);
            for i in 0..cyl.n_theta {
                let node = g * u[sc.nodes[sj][i]] + (1.0 - g) * bridge[0];
                out[cyl.nodes[j][i]] = node;
                let (se, ss) = sc.theta_edges[sj][i];
                let (te, ts) = cyl.theta_edges[j][i];
                let val = g * frame_value(u, s1 + se, ss) + (1.0 - g) * bridge[1];
                out[o1 + te] = ts * val;
            }
        }
        for j in 0..big_j {
            let (sc, sj, v, dist) = if 2 * j < big_j {
                (stail, j, tail, (j as f64 + 0.5) * cyl.dt)
            } else {
                (shead, shead.slabs() - (big_j - j), head, (big_j - j) as f64 * cyl.dt - 0.5 * cyl.dt)
            };
            let g = cut.value(dist);
            let u = &w.parts[v];
            let (s1, s2) = (stars[v].offset(1), stars[v].offset(2));
            for i in 0..cyl.n_theta {
                let (se, ss) = sc.t_edges[sj][i];
                let (te, ts) = cyl.t_edges[j][i];
                out[o1 + te] = ts * (g * frame_value(u, s1 + se, ss) + (1.0 - g) * bridge[2] * cyl.dt);
                let (sf, fs) = sc.faces[sj][i];
                let (tf, tfs) = cyl.faces[j][i];
                out[o2 + tf] = tfs * (g * frame_value(u, s2 + sf, fs) + (1.0 - g) * bridge[3] * cyl.dt);
            }
        }
    }
    Ok(out)
}

/// Low spectrum of `D(r)` resolved past the projection cutoff.
#[derive(Debug, Clone)]
pub struct Projector {
    pub cutoff: f64,
    pub basis: SubspaceBasis,
    pub values: Vec<f64>,
}

/// `Π_r`: projection onto eigenvalues `|μ| ≤ max(e^{−λ̂₀r/4}, 10·tol_abs)`.
pub fn projector(target: &CellComplex, gap: f64, start: usize, opts: &SolverOptions) -> Result<Projector> {
    let r = target.r.ok_or_else(|| Error::Validation("projection needs an assembled X(r)".into()))?;
    let d = target.operators().d;
    let tol_abs = default_tol_abs(d.norm1()).sqrt().min(1e-6);
    let cutoff = (-gap * r / 4.0).exp().max(10.0 * tol_abs);
    let (res, basis) = spectrum_below(&d, cutoff, start, Definiteness::Indefinite, opts)?;
    Ok(Projector { cutoff, basis, values: res.values })
}

/// `(Π_r S_r w, ‖Π_r S_r w − S_r w‖ / ‖S_r w‖)` in symmetrized coordinates.
pub fn projected_splice(spliced: &DVector<f64>, target: &CellComplex, proj: &Projector) -> Result<(DVector<f64>, f64)> {
    let x = target.symmetrize(spliced);
    let px = proj.basis.project(&x)?;
    let n = x.norm();
    let ratio = if n == 0.0 { 0.0 } else { (&px - &x).norm() / n };
    Ok((px, ratio))
}

#[derive(Debug, Clone, Serialize)]
pub struct SpliceRow {
    pub r: f64,
    pub basis_index: usize,
    pub ratio: f64,
    pub bound: f64,
    /// `‖D S_r w‖ / ‖S_r w‖`.
    pub defect: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpliceReport {
    pub gap: f64,
    pub floor: f64,
    pub rows: Vec<SpliceRow>,
    /// Per `r`: smallest singular value of the Gram matrix of the projected,
    /// orthonormalized spliced basis.
    pub gram_min_sv: Vec<(f64, f64)>,
    pub dim_w: Vec<(f64, usize)>,
    /// Decay rate of the largest ratio fitted over `r` (points above `floor`).
    pub fitted_rate: Option<f64>,
}

impl SpliceReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("r,basis_index,ratio,bound,defect\n");
        for row in &self.rows {
            s.push_str(&format!("{},{},{:.6e},{:.6e},{:.6e}\n", row.r, row.basis_index, row.ratio, row.bound, row.defect));
        }
        s
    }
}

/// Splice the matching basis at every `r` and measure closeness to the
/// projection and injectivity of the projected splice.
pub fn splice_report(geom: &Geometry, spectra: &[CrossSectionSpectrum], r_grid: &[f64], opts: &SolverOptions) -> Result<SpliceReport> {
    let gap = crate::cross_section::spectral_gap(spectra)?;
    let floor = geom.params.h * geom.params.h;
    let per_r: Vec<(Vec<SpliceRow>, f64, usize)> =
        r_grid.par_iter().map(|&r| splice_at(geom, spectra, r, gap, opts)).collect::<Result<_>>()?;
    let mut rows = Vec::new();
    let mut gram = Vec::new();
    let mut dims = Vec::new();
    for (&r, (rs, sv, dim)) in r_grid.iter().zip(per_r) {
        rows.extend(rs);
        gram.push((r, sv));
        dims.push((r, dim));
    }
    let fitted_rate = fit_decay(&rows, floor);
    Ok(SpliceReport { gap, floor, rows, gram_min_sv: gram, dim_w: dims, fitted_rate })
}

/// Rows, Gram certificate and `dim 𝒲` at one `r`.
fn splice_at(
    geom: &Geometry,
    spectra: &[CrossSectionSpectrum],
    r: f64,
    gap: f64,
    opts: &SolverOptions,
) -> Result<(Vec<SpliceRow>, f64, usize)> {
    let setup = splice_setup(geom, spectra, r, opts)?;
    let proj = projector(&setup.target, gap, setup.space.dim_w + 4, opts)?;
    let d = setup.target.operators();
    let bound = 1.5 * (-gap * r / 4.0).exp();
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    for (i, w) in setup.space.elements.iter().enumerate() {
        let s = splice(w, geom, &setup.stars, &setup.target)?;
        let x = setup.target.symmetrize(&s);
        let (_, ratio) = projected_splice(&s, &setup.target, &proj)?;
        let defect = d.d.mul_dvec(&x).norm() / x.norm();
        rows.push(SpliceRow { r, basis_index: i, ratio, bound, defect });
        cols.push(x);
    }
    let sv = if cols.is_empty() {
        1.0
    } else {
        let q = orthonormalize_columns(&DMatrix::from_columns(&cols));
        if q.ncols() < cols.len() {
            0.0
        } else {
            let pq = &proj.basis.vectors * (proj.basis.vectors.transpose() * &q);
            let g = pq.transpose() * &pq;
            g.singular_values().min()
        }
    };
    Ok((rows, sv, setup.space.dim_w))
}

/// `−slope` of `ln max_i ratio_i(r)` against `r` over points above `floor`.
pub fn fit_decay(rows: &[SpliceRow], floor: f64) -> Option<f64> {
    let mut rs: Vec<f64> = rows.iter().map(|x| x.r).collect();
    rs.dedup();
    let pts: Vec<(f64, f64)> = rs
        .iter()
        .filter_map(|&r| {
            let m = rows.iter().filter(|x| x.r == r).map(|x| x.ratio).fold(0.0, f64::max);
            (m > floor).then(|| (r, m.ln()))
        })
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(-crate::cross_section::linear_fit(&xs, &ys).0)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanRow {
    pub r: f64,
    pub mu1: f64,
    pub mu1_scaled: f64,
    pub kernel_dim: usize,
    pub violation: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanReport {
    pub epsilon: f64,
    pub rows: Vec<ScanRow>,
    pub violations: usize,
    /// Log–log slope of `μ₁` against `r`.
    pub slope: Option<f64>,
}

impl ScanReport {
    pub fn csv(&self) -> String {
        let mut s = String::from("r,mu1,mu1_scaled,kernel_dim\n");
        for row in &self.rows {
            s.push_str(&format!("{},{:.10e},{:.10e},{}\n", row.r, row.mu1, row.mu1_scaled, row.kernel_dim));
        }
        s
    }
}

/// Smallest nonzero `|μ|` of `D(r)` with the kernel removed.
pub fn first_nonzero(target: &CellComplex, expected_kernel: usize, opts: &SolverOptions) -> Result<(usize, f64)> {
    let d = target.operators().d;
    let tol_abs = default_tol_abs(d.norm1()).sqrt().min(1e-6);
    let mut m = (expected_kernel + 4).min(d.nrows);
    loop {
        let res = low_spectrum(&d, m, Definiteness::Indefinite, opts)?;
        match kernel_dimension(&res.values, tol_abs, DEFAULT_GAP_RATIO) {
            Ok(rep) => return Ok((rep.dim, rep.first_rejected)),
            Err(Error::AmbiguousKernel(_)) if m < d.nrows && res.values.iter().all(|v| v.abs() < tol_abs) => {
                m = (2 * m).min(d.nrows);
            }
            Err(e) => return Err(e),
        }
    }
}

pub fn small_eigenvalue_scan(
    geom: &Geometry,
    r_grid: &[f64],
    epsilon: f64,
    expected_kernel: usize,
    opts: &SolverOptions,
) -> Result<ScanReport> {
    if r_grid.is_empty() {
        return Err(Error::Validation("empty r grid".into()));
    }
    let rows: Vec<ScanRow> = r_grid
        .par_iter()
        .map(|&r| {
            let cx = geom.assemble(r)?;
            let (kernel_dim, mu1) = first_nonzero(&cx, expected_kernel, opts)?;
            let scale = r.powf(1.0 + epsilon);
            Ok(ScanRow { r, mu1, mu1_scaled: mu1 * scale, kernel_dim, violation: mu1 < 1.0 / scale })
        })
        .collect::<Result<_>>()?;
    let violations = rows.iter().filter(|x| x.violation).count();
    let slope = (rows.len() >= 2).then(|| {
        let xs: Vec<f64> = rows.iter().map(|x| x.r.ln()).collect();
        let ys: Vec<f64> = rows.iter().map(|x| x.mu1.ln()).collect();
        crate::cross_section::linear_fit(&xs, &ys).0
    });
    Ok(ScanReport { epsilon, rows, violations, slope })
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRow {
    pub r: f64,
    pub delta: f64,
    pub m: usize,
}

/// Restriction of symmetrized columns to `X⁰(s)`.
pub fn restrict_columns(cx: &CellComplex, geom: &Geometry, s: f64, cols: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let comps = cx.restrict(s, &|e, side| geom.vertex_of(e, side), geom.graph.vertices.len())?;
    let cells: Vec<usize> = comps.iter().flat_map(|c| c.cells.iter().copied()).collect();
    Ok(cols.select_rows(&cells))
}

/// `δ(ℛ_s E^m(r), ℛ_s S_r 𝒲)` with `m = dim 𝒲`.
pub fn gap_experiment(
    geom: &Geometry,
    spectra: &[CrossSectionSpectrum],
    r_grid: &[f64],
    s: f64,
    opts: &SolverOptions,
) -> Result<Vec<GapRow>> {
    if let Some(&r) = r_grid.iter().find(|&&r| s > r) {
        return Err(Error::SOutOfRange { s, r });
    }
    r_grid.par_iter().map(|&r| gap_at(geom, spectra, r, s, opts)).collect()
}

fn gap_at(geom: &Geometry, spectra: &[CrossSectionSpectrum], r: f64, s: f64, opts: &SolverOptions) -> Result<GapRow> {
    let setup = splice_setup(geom, spectra, r, opts)?;
    let m = setup.space.dim_w;
    let d = setup.target.operators().d;
    let res = low_spectrum(&d, m, Definiteness::Indefinite, opts)?;
    let e = res.vectors.columns(0, m).into_owned();
    let cols: Vec<DVector<f64>> = setup
        .space
        .elements
        .iter()
        .map(|w| splice(w, geom, &setup.stars, &setup.target).map(|u| setup.target.symmetrize(&u)))
        .collect::<Result<_>>()?;
    let wmat = DMatrix::from_columns(&cols);
    let re = SubspaceBasis::from_columns(&restrict_columns(&setup.target, geom, s, &e)?);
    let rw = SubspaceBasis::from_columns(&restrict_columns(&setup.target, geom, s, &wmat)?);
    Ok(GapRow { r, delta: kato_gap(&re, &rw)?, m })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::assemble::tests::scene;
    use crate::complex::pieces::PieceParams;
    use crate::modes::matching::MatchingTag;
    use std::f64::consts::PI;

    fn spectra(n: usize) -> Vec<CrossSectionSpectrum> {
        (0..n).map(|_| CrossSectionSpectrum::new("y", 2.0 * PI, 8).unwrap()).collect()
    }

    #[test]
    fn cutoff_profile() {
        let c = CutoffProfile::new(3.0);
        assert_eq!(c.value(2.25), 1.0);
        assert_eq!(c.value(0.0), 1.0);
        assert_eq!(c.value(2.75), 0.0);
        assert!((c.value(2.5) - 0.5).abs() < 1e-15);
        assert!(c.max_slope() <= 4.0);
        let h = 1e-6;
        let worst = (0..1000)
            .map(|i| 2.2 + 0.6 * i as f64 / 1000.0)
            .map(|x| ((c.value(x + h) - c.value(x - h)) / (2.0 * h)).abs())
            .fold(0.0, f64::max);
        assert!(worst <= c.max_slope() + 1e-6);
    }

    #[test]
    fn partition_identity_on_sphere() {
        let mut g = scene("sphere");
        g.params = PieceParams { h: 0.6, collar_length: 0.6, tube_length: 1.2 };
        let sp = spectra(1);
        let setup = splice_setup(&g, &sp, 3.0, &SolverOptions::default()).unwrap();
        assert_eq!(setup.space.dim_w, 2);
        let cut = CutoffProfile::new(3.0);
        for w in &setup.space.elements {
            assert_ne!(w.tag, MatchingTag::L2);
            let s = splice(w, &g, &setup.stars, &setup.target).unwrap();
            // Exact harmonic on the sphere: 1 and the area form.
            let d = setup.target.operators();
            let x = setup.target.symmetrize(&s);
            assert!(d.d.mul_dvec(&x).norm() < 1e-6 * x.norm());
            // Where g = 0 the form equals the bridge; where g = 1 the star.
            let cyl = &setup.target.cylinders[0];
            let (bridge, _) = kernel_mode_values(&w.limits[0], cyl);
            let mid = cyl.slabs() / 2;
            assert_eq!(cut.value(setup.target.dist(cyl.nodes[mid][0])), 0.0);
            assert!((s[cyl.nodes[mid][0]] - bridge[0]).abs() < 1e-14);
            let stail = setup.stars[0].cylinder(0, Some(Side::Tail)).unwrap();
            assert_eq!(s[cyl.nodes[1][3]], w.parts[0][stail.nodes[1][3]]);
        }
    }

    #[test]
    fn constant_splices_to_constant_and_projects_to_itself() {
        let g = scene("theta");
        let sp = spectra(3);
        let setup = splice_setup(&g, &sp, 2.0, &SolverOptions::default()).unwrap();
        let ne = 3;
        let target = DVector::from_fn(4 * ne, |i, _| if i % 4 == 0 { 1.0 } else { 0.0 });
        let one = setup.space.with_limits(&target).unwrap();
        assert!(one.limits.iter().all(|l| (l.0[0] - 1.0).abs() < 1e-8));
        let s = splice(&one, &g, &setup.stars, &setup.target).unwrap();
        let c = s[0];
        assert!((0..setup.target.n0).all(|i| (s[i] - c).abs() < 1e-6 * c.abs()));
        assert!(s.rows(setup.target.n0, setup.target.n1 + setup.target.n2).amax() < 1e-6 * c.abs());
        let proj = projector(&setup.target, sp[0].gap(), 10, &SolverOptions::default()).unwrap();
        let (_, ratio) = projected_splice(&s, &setup.target, &proj).unwrap();
        assert!(ratio < 1e-6);
    }

    #[test]
    fn rejects_small_r() {
        let g = scene("sphere");
        assert!(matches!(splice_setup(&g, &spectra(1), 1.5, &SolverOptions::default()), Err(Error::ROutOfRange(_))));
        assert!(matches!(small_eigenvalue_scan(&g, &[], 0.5, 2, &SolverOptions::default()), Err(Error::Validation(_))));
    }
}
