//! Cell complexes modelling `X(r)`, truncated stars and their operators.
//!
//! Cochains are stored raw (one value per oriented cell). The operators
//! are built in mass-symmetrized coordinates `x = M^{1/2} u`, in which the
//! `M`-inner product is the Euclidean one and `D = d + δ` is a symmetric
//! matrix on `C⁰ ⊕ C¹ ⊕ C²`.

pub mod assemble;
pub mod pieces;

use std::collections::HashMap;

use nalgebra::DVector;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::Side;
use crate::spectral::Csr;

/// Which part of the fibration a cell lies over.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum FiberLabel {
    Vertex(usize),
    Cylinder {
        edge: usize,
        slab: usize,
        /// Cylinder coordinate in the edge frame (`[−r, r]` on `X(r)`).
        t: f64,
        /// Half-edge whose vertex is nearer.
        side: Side,
        /// Distance `ϑ` from that vertex piece.
        dist: f64,
    },
}

/// Product-structure bookkeeping for one cylinder (or half-cylinder).
/// Level `j` sits at `t_levels[j]`; `i` runs over the circle in the edge
/// frame. Signs relate stored cell orientation to `+θ`, `+t`, `dθ∧dt`.
#[derive(Debug, Clone)]
pub struct CylinderIndex {
    pub edge: usize,
    pub n_theta: usize,
    pub dtheta: f64,
    pub dt: f64,
    pub t_levels: Vec<f64>,
    pub nodes: Vec<Vec<usize>>,
    pub theta_edges: Vec<Vec<(usize, f64)>>,
    pub t_edges: Vec<Vec<(usize, f64)>>,
    pub faces: Vec<Vec<(usize, f64)>>,
    /// For a star: the side of the vertex piece it hangs off.
    pub star_side: Option<Side>,
}

impl CylinderIndex {
    pub fn slabs(&self) -> usize {
        self.t_levels.len() - 1
    }

    pub fn length(&self) -> f64 {
        self.t_levels.last().unwrap() - self.t_levels[0]
    }
}

/// A boundary circle of an open complex, nodes in tail-compatible order.
#[derive(Debug, Clone)]
pub struct BoundaryCircle {
    pub nodes: Vec<usize>,
    pub length: f64,
}

#[derive(Debug, Clone)]
pub struct CellComplex {
    pub n0: usize,
    pub n1: usize,
    pub n2: usize,
    /// Edge `k` runs from `edges[k][0]` to `edges[k][1]`.
    pub edges: Vec<[usize; 2]>,
    /// Signed boundary edges of each face.
    pub faces: Vec<Vec<(usize, i8)>>,
    pub m0: Vec<f64>,
    pub m1: Vec<f64>,
    pub m2: Vec<f64>,
    /// Dual-cell measures: dual area of nodes, dual length of edges, and 1 for faces.
    pub dual0: Vec<f64>,
    pub dual1: Vec<f64>,
    pub area: Vec<f64>,
    pub primal_len: Vec<f64>,
    pub labels0: Vec<FiberLabel>,
    pub labels1: Vec<FiberLabel>,
    pub labels2: Vec<FiberLabel>,
    pub boundary: Vec<BoundaryCircle>,
    pub cylinders: Vec<CylinderIndex>,
    /// Stretch parameter for an assembled `X(r)`.
    pub r: Option<f64>,
    /// Cell ranges of each instantiated vertex piece, per degree.
    pub pieces: Vec<PieceCells>,
}

/// Contiguous cell ranges occupied by the piece of `vertex`.
#[derive(Debug, Clone, PartialEq)]
pub struct PieceCells {
    pub vertex: usize,
    pub ranges: [std::ops::Range<usize>; 3],
}

/// Degree and index of a cell in the total cochain ordering `C⁰ ⊕ C¹ ⊕ C²`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cell {
    pub degree: usize,
    pub index: usize,
}

impl CellComplex {
    pub fn euler(&self) -> i64 {
        self.n0 as i64 - self.n1 as i64 + self.n2 as i64
    }

    pub fn total(&self) -> usize {
        self.n0 + self.n1 + self.n2
    }

    pub fn offset(&self, degree: usize) -> usize {
        match degree {
            0 => 0,
            1 => self.n0,
            _ => self.n0 + self.n1,
        }
    }

    pub fn global(&self, c: Cell) -> usize {
        self.offset(c.degree) + c.index
    }

    pub fn is_closed(&self) -> bool {
        self.boundary.is_empty()
    }

    pub fn label(&self, g: usize) -> FiberLabel {
        if g < self.n0 {
            self.labels0[g]
        } else if g < self.n0 + self.n1 {
            self.labels1[g - self.n0]
        } else {
            self.labels2[g - self.n0 - self.n1]
        }
    }

    /// Mass of every cell in the total ordering.
    pub fn masses(&self) -> Vec<f64> {
        self.m0.iter().chain(&self.m1).chain(&self.m2).copied().collect()
    }

    /// Integer coboundary `d0` as triplets `(edge, node, ±1)`.
    pub fn d0_triplets(&self) -> Vec<(usize, usize, i64)> {
        self.edges.iter().enumerate().flat_map(|(k, &[a, b])| [(k, a, -1), (k, b, 1)]).collect()
    }

    pub fn d1_triplets(&self) -> Vec<(usize, usize, i64)> {
        self.faces.iter().enumerate().flat_map(|(f, es)| es.iter().map(move |&(e, s)| (f, e, s as i64))).collect()
    }

    /// `d1 · d0` computed in exact integer arithmetic; returns the number of
    /// nonzero entries.
    pub fn dd_nonzeros(&self) -> usize {
        let mut acc: HashMap<(usize, usize), i64> = HashMap::new();
        let mut by_edge: Vec<Vec<(usize, i64)>> = vec![Vec::new(); self.n1];
        for (k, v, s) in self.d0_triplets() {
            by_edge[k].push((v, s));
        }
        for (f, e, s) in self.d1_triplets() {
            for &(v, t) in &by_edge[e] {
                *acc.entry((f, v)).or_insert(0) += s * t;
            }
        }
        acc.values().filter(|&&x| x != 0).count()
    }

    fn d_float(&self, k: usize) -> Csr {
        match k {
            0 => {
                Csr::from_triplets(self.n1, self.n0, &self.d0_triplets().into_iter().map(|(i, j, v)| (i, j, v as f64)).collect::<Vec<_>>())
            }
            _ => {
                Csr::from_triplets(self.n2, self.n1, &self.d1_triplets().into_iter().map(|(i, j, v)| (i, j, v as f64)).collect::<Vec<_>>())
            }
        }
    }

    /// `D = S + Sᵀ` and `Δ = D²` in symmetrized coordinates.
    pub fn operators(&self) -> GaussBonnetOperator {
        let sq = |v: &[f64]| v.iter().map(|x| x.sqrt()).collect::<Vec<_>>();
        let isq = |v: &[f64]| v.iter().map(|x| 1.0 / x.sqrt()).collect::<Vec<_>>();
        let d0 = self.d_float(0).scale_rows_cols(&sq(&self.m1), &isq(&self.m0));
        let d1 = self.d_float(1).scale_rows_cols(&sq(&self.m2), &isq(&self.m1));
        let n = self.total();
        let mut t = Vec::with_capacity(2 * (d0.nnz() + d1.nnz()));
        for (i, j, v) in d0.triplets() {
            t.push((self.n0 + i, j, v));
            t.push((j, self.n0 + i, v));
        }
        for (i, j, v) in d1.triplets() {
            t.push((self.n0 + self.n1 + i, self.n0 + j, v));
            t.push((self.n0 + j, self.n0 + self.n1 + i, v));
        }
        let d = Csr::from_triplets(n, n, &t);
        let lap = d.matmul(&d);
        GaussBonnetOperator { d, laplacian: lap, sqrt_mass: sq(&self.masses()) }
    }

    /// Raw cochain from symmetrized coordinates.
    pub fn unsymmetrize(&self, x: &DVector<f64>) -> DVector<f64> {
        let m = self.masses();
        DVector::from_fn(x.len(), |i, _| x[i] / m[i].sqrt())
    }

    pub fn symmetrize(&self, u: &DVector<f64>) -> DVector<f64> {
        let m = self.masses();
        DVector::from_fn(u.len(), |i, _| u[i] * m[i].sqrt())
    }

    /// `ϑ` of a cell: 0 on vertex pieces, distance from the piece on cylinders.
    pub fn dist(&self, g: usize) -> f64 {
        match self.label(g) {
            FiberLabel::Vertex(_) => 0.0,
            FiberLabel::Cylinder { dist, .. } => dist,
        }
    }

    /// Vertex whose component of `X⁰(s)` contains the cell, if any. On an
    /// assembled `X(r)` a cylinder cell belongs to the nearer end.
    pub fn owner(&self, g: usize, vertex_of: &dyn Fn(usize, Side) -> usize) -> Option<usize> {
        match self.label(g) {
            FiberLabel::Vertex(v) => Some(v),
            FiberLabel::Cylinder { edge, side, .. } => Some(vertex_of(edge, side)),
        }
    }

    /// `X⁰(s)`: per-vertex lists of kept cells with their masses. A cell
    /// midway along a cylinder belongs to both ends when `s = r`.
    pub fn restrict(&self, s: f64, vertex_of: &dyn Fn(usize, Side) -> usize, n_vertices: usize) -> Result<Vec<RestrictedComponent>> {
        let r = self.r.unwrap_or(f64::INFINITY);
        if !(0.0..=r + 1e-12).contains(&s) {
            return Err(Error::SOutOfRange { s, r });
        }
        let m = self.masses();
        let mut comps: Vec<RestrictedComponent> =
            (0..n_vertices).map(|v| RestrictedComponent { vertex: v, cells: Vec::new(), masses: Vec::new() }).collect();
        for g in 0..self.total() {
            match self.label(g) {
                FiberLabel::Vertex(v) => {
                    comps[v].cells.push(g);
                    comps[v].masses.push(m[g]);
                }
                FiberLabel::Cylinder { edge, side, dist, .. } => {
                    if dist <= s + 1e-9 {
                        let v = vertex_of(edge, side);
                        comps[v].cells.push(g);
                        comps[v].masses.push(m[g]);
                        if (dist - r).abs() < 1e-9 {
                            let other = match side {
                                Side::Tail => Side::Head,
                                Side::Head => Side::Tail,
                            };
                            let w = vertex_of(edge, other);
                            comps[w].cells.push(g);
                            comps[w].masses.push(m[g]);
                        }
                    }
                }
            }
        }
        Ok(comps)
    }

    /// Diagonal Hodge star `C^k → C^{2−k}` onto the dual complex: the value
    /// on the dual cell of `σ` is `(|σ*|/|σ|)·u(σ)`, i.e. `M_k u`.
    pub fn hodge_star(&self, k: usize, u: &[f64]) -> Vec<f64> {
        let m = match k {
            0 => &self.m0,
            1 => &self.m1,
            _ => &self.m2,
        };
        u.iter().zip(m).map(|(a, b)| a * b).collect()
    }

    /// Inverse star from dual `(2−k)`-cochains back to primal `k`-cochains,
    /// including the sign `(−1)^{k(2−k)}`.
    pub fn hodge_star_dual(&self, k: usize, w: &[f64]) -> Vec<f64> {
        let m = match k {
            0 => &self.m0,
            1 => &self.m1,
            _ => &self.m2,
        };
        let sgn = if k == 1 { -1.0 } else { 1.0 };
        w.iter().zip(m).map(|(a, b)| sgn * a / b).collect()
    }

    /// Mass norm of a primal `k`-cochain and the dual norm of a dual one.
    pub fn norm_primal(&self, k: usize, u: &[f64]) -> f64 {
        let m = match k {
            0 => &self.m0,
            1 => &self.m1,
            _ => &self.m2,
        };
        u.iter().zip(m).map(|(a, b)| a * a * b).sum::<f64>().sqrt()
    }

    pub fn norm_dual(&self, k: usize, w: &[f64]) -> f64 {
        let m = match k {
            0 => &self.m0,
            1 => &self.m1,
            _ => &self.m2,
        };
        w.iter().zip(m).map(|(a, b)| a * a / b).sum::<f64>().sqrt()
    }

    pub fn cylinder(&self, edge: usize, side: Option<Side>) -> Option<&CylinderIndex> {
        self.cylinders.iter().find(|c| c.edge == edge && (side.is_none() || c.star_side == side))
    }

    /// Edge lengths in the chart of each edge.
    pub fn edge_lengths(&self) -> &[f64] {
        &self.primal_len
    }

    pub fn stats(&self) -> ComplexStats {
        ComplexStats {
            nodes: self.n0,
            edges: self.n1,
            faces: self.n2,
            euler: self.euler(),
            closed: self.is_closed(),
            cylinders: self.cylinders.len(),
            total_area: self.area.iter().sum(),
            min_mass: self.masses().into_iter().fold(f64::INFINITY, f64::min),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ComplexStats {
    pub nodes: usize,
    pub edges: usize,
    pub faces: usize,
    pub euler: i64,
    pub closed: bool,
    pub cylinders: usize,
    pub total_area: f64,
    pub min_mass: f64,
}

#[derive(Debug, Clone)]
pub struct RestrictedComponent {
    pub vertex: usize,
    pub cells: Vec<usize>,
    pub masses: Vec<f64>,
}

impl RestrictedComponent {
    /// Mass norm of a raw cochain over the kept cells.
    pub fn norm(&self, u: &DVector<f64>) -> f64 {
        self.cells.iter().zip(&self.masses).map(|(&g, m)| u[g] * u[g] * m).sum::<f64>().sqrt()
    }
}

/// Symmetrized Gauss–Bonnet operator and Hodge Laplacian.
#[derive(Debug, Clone)]
pub struct GaussBonnetOperator {
    pub d: Csr,
    pub laplacian: Csr,
    pub sqrt_mass: Vec<f64>,
}

impl GaussBonnetOperator {
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.d.mul_dvec(x)
    }

    /// `⟨u, w⟩_M` for raw cochains.
    pub fn inner(&self, u: &DVector<f64>, w: &DVector<f64>) -> f64 {
        u.iter().zip(w.iter()).zip(&self.sqrt_mass).map(|((a, b), m)| a * b * m * m).sum()
    }
}

/// Incremental builder: nodes, then faces as node cycles with chart
/// coordinates. Edges are created on first use.
#[derive(Debug, Default)]
pub struct MeshBuilder {
    pub labels0: Vec<FiberLabel>,
    edge_map: HashMap<(usize, usize), usize>,
    pub edges: Vec<[usize; 2]>,
    pub labels1: Vec<FiberLabel>,
    pub faces: Vec<Vec<(usize, i8)>>,
    pub labels2: Vec<FiberLabel>,
    face_nodes: Vec<Vec<usize>>,
    face_chart: Vec<Vec<[f64; 2]>>,
    pub cylinders: Vec<CylinderIndex>,
    pub pieces: Vec<PieceCells>,
}

impl MeshBuilder {
    pub fn counts(&self) -> [usize; 3] {
        [self.labels0.len(), self.edges.len(), self.faces.len()]
    }

    pub fn node(&mut self, label: FiberLabel) -> usize {
        self.labels0.push(label);
        self.labels0.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.labels0.len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<(usize, f64)> {
        let key = (a.min(b), a.max(b));
        self.edge_map.get(&key).map(|&k| (k, if self.edges[k] == [a, b] { 1.0 } else { -1.0 }))
    }

    fn edge(&mut self, a: usize, b: usize, label: FiberLabel) -> (usize, i8) {
        let key = (a.min(b), a.max(b));
        let k = *self.edge_map.entry(key).or_insert_with(|| {
            self.edges.push([key.0, key.1]);
            self.labels1.push(label);
            self.edges.len() - 1
        });
        (k, if a < b { 1 } else { -1 })
    }

    /// Add a face bounded by the node cycle; `edge_labels[k]` labels the edge
    /// `cycle[k] → cycle[k+1]` if it is new.
    pub fn face(&mut self, cycle: &[usize], chart: &[[f64; 2]], label: FiberLabel, edge_labels: &[FiberLabel]) -> usize {
        assert_eq!(cycle.len(), chart.len());
        let n = cycle.len();
        let es: Vec<(usize, i8)> =
            (0..n).map(|k| self.edge(cycle[k], cycle[(k + 1) % n], edge_labels[k.min(edge_labels.len() - 1)])).collect();
        self.faces.push(es);
        self.labels2.push(label);
        self.face_nodes.push(cycle.to_vec());
        self.face_chart.push(chart.to_vec());
        self.faces.len() - 1
    }

    /// Check every edge lies in one or two faces with opposite orientations.
    pub fn orientation_defects(&self) -> (usize, Vec<usize>) {
        let mut uses: Vec<Vec<i8>> = vec![Vec::new(); self.edges.len()];
        for f in &self.faces {
            for &(e, s) in f {
                uses[e].push(s);
            }
        }
        let mut bad = 0;
        let mut boundary = Vec::new();
        for (e, u) in uses.iter().enumerate() {
            match u.len() {
                1 => boundary.push(e),
                2 if u[0] + u[1] == 0 => {}
                _ => bad += 1,
            }
        }
        (bad, boundary)
    }

    pub fn finish(self, boundary: Vec<BoundaryCircle>, r: Option<f64>) -> Result<CellComplex> {
        let (bad, open_edges) = self.orientation_defects();
        if bad > 0 {
            return Err(Error::BadTopology(format!("{bad} edges with inconsistent face incidence")));
        }
        let n_boundary_edges: usize = boundary.iter().map(|c| c.nodes.len()).sum();
        if open_edges.len() != n_boundary_edges {
            return Err(Error::OpenBoundaryLeft(format!("{} open edges, {} declared boundary edges", open_edges.len(), n_boundary_edges)));
        }
        let n0 = self.labels0.len();
        let n1 = self.edges.len();
        let n2 = self.faces.len();
        let mut dual0 = vec![0.0; n0];
        let mut dual1 = vec![0.0; n1];
        let mut len_sum = vec![0.0; n1];
        let mut len_cnt = vec![0.0; n1];
        let mut area = vec![0.0; n2];
        for f in 0..n2 {
            let p = &self.face_chart[f];
            let nodes = &self.face_nodes[f];
            let k = p.len();
            let mut a = 0.0;
            let (mut cx, mut cy) = (0.0, 0.0);
            for i in 0..k {
                let (x0, y0) = (p[i][0], p[i][1]);
                let (x1, y1) = (p[(i + 1) % k][0], p[(i + 1) % k][1]);
                let cr = x0 * y1 - x1 * y0;
                a += cr;
                cx += (x0 + x1) * cr;
                cy += (y0 + y1) * cr;
            }
            let a2 = a;
            let ar = (a / 2.0).abs();
            if !(ar > 0.0) {
                return Err(Error::BadTopology(format!("face {f} has zero area")));
            }
            let (cx, cy) = (cx / (3.0 * a2), cy / (3.0 * a2));
            area[f] = ar;
            for &v in nodes {
                dual0[v] += ar / k as f64;
            }
            for (i, &(e, _)) in self.faces[f].iter().enumerate() {
                let (p0, p1) = (p[i], p[(i + 1) % k]);
                let l = ((p1[0] - p0[0]).powi(2) + (p1[1] - p0[1]).powi(2)).sqrt();
                let (mx, my) = ((p0[0] + p1[0]) / 2.0, (p0[1] + p1[1]) / 2.0);
                dual1[e] += ((mx - cx).powi(2) + (my - cy).powi(2)).sqrt();
                len_sum[e] += l;
                len_cnt[e] += 1.0;
            }
        }
        let primal_len: Vec<f64> = len_sum.iter().zip(&len_cnt).map(|(s, c)| s / c).collect();
        let m0 = dual0.clone();
        let m1: Vec<f64> = dual1.iter().zip(&primal_len).map(|(d, l)| d / l).collect();
        let m2: Vec<f64> = area.iter().map(|a| 1.0 / a).collect();
        Ok(CellComplex {
            n0,
            n1,
            n2,
            edges: self.edges,
            faces: self.faces,
            m0,
            m1,
            m2,
            dual0,
            dual1,
            area,
            primal_len,
            labels0: self.labels0,
            labels1: self.labels1,
            labels2: self.labels2,
            boundary,
            cylinders: self.cylinders,
            r,
            pieces: self.pieces,
        })
    }
}

/// Optional JSON mesh export: `{vertices, edges, faces}` with signed edge ids.
#[derive(Debug, Clone, Serialize)]
pub struct MeshExport {
    pub vertices: usize,
    pub edges: Vec<[usize; 2]>,
    pub faces: Vec<Vec<i64>>,
}

impl From<&CellComplex> for MeshExport {
    fn from(c: &CellComplex) -> Self {
        MeshExport {
            vertices: c.n0,
            edges: c.edges.clone(),
            faces: c.faces.iter().map(|f| f.iter().map(|&(e, s)| s as i64 * (e as i64 + 1)).collect()).collect(),
        }
    }
}
