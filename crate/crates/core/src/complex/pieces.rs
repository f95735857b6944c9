//! Mesh generators for vertex pieces: caps (disks), tubes (annuli) and
//! pants (three-holed spheres), each ending in product collars.
//!
//! A piece is produced as a local template: node count, oriented faces with
//! flat chart coordinates, and boundary circles listed in tail-compatible
//! order. In that order a boundary edge `c_i → c_{i+1}` runs against the
//! orientation induced by its adjacent face, which is what a cylinder
//! oriented by `dθ ∧ dt` with `t` pointing away from the piece expects.

use std::f64::consts::PI;

use super::{BoundaryCircle, CellComplex, FiberLabel, MeshBuilder, PieceCells};
use crate::cech::PieceKind;
use crate::error::{Error, Result};

/// Boundary circle request: circumference and node count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSpec {
    pub length: f64,
    pub n_theta: usize,
}

/// Mesh parameters shared by all pieces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PieceParams {
    pub h: f64,
    pub collar_length: f64,
    pub tube_length: f64,
}

impl PieceParams {
    pub fn new(h: f64) -> Self {
        PieceParams { h, collar_length: 0.5, tube_length: 1.0 }
    }
}

#[derive(Debug, Clone)]
pub struct PieceTemplate {
    pub kind: PieceKind,
    pub n_nodes: usize,
    pub faces: Vec<(Vec<usize>, Vec<[f64; 2]>)>,
    pub circles: Vec<Vec<usize>>,
    pub circle_specs: Vec<CircleSpec>,
}

impl PieceTemplate {
    pub fn new(kind: PieceKind, circles: &[CircleSpec], p: &PieceParams) -> Result<Self> {
        if circles.len() != kind.boundary_count() {
            return Err(Error::ResolutionMismatch(format!(
                "{kind:?} needs {} boundary circles, got {}",
                kind.boundary_count(),
                circles.len()
            )));
        }
        if !(p.h > 0.0) {
            return Err(Error::BadResolution(format!("h = {}", p.h)));
        }
        for c in circles {
            if c.n_theta < 8 || !(c.length > 0.0) {
                return Err(Error::ResolutionMismatch(format!("circle with N = {}, L = {}", c.n_theta, c.length)));
            }
        }
        let mut t = PieceTemplate { kind, n_nodes: 0, faces: Vec::new(), circles: Vec::new(), circle_specs: circles.to_vec() };
        let cores = match kind {
            PieceKind::Cap => vec![t.cap_core(circles[0], p.h)],
            PieceKind::Tube => t.tube_core(circles, p)?,
            PieceKind::Pants => t.pants_core(circles, p.h)?,
        };
        for (i, core) in cores.into_iter().enumerate() {
            let core = t.orient(core);
            let outer = if kind == PieceKind::Tube { core } else { t.collar(&core, circles[i], p) };
            t.circles.push(outer);
        }
        Ok(t)
    }

    fn new_nodes(&mut self, k: usize) -> Vec<usize> {
        let v: Vec<usize> = (self.n_nodes..self.n_nodes + k).collect();
        self.n_nodes += k;
        v
    }

    /// Reverse a circle (keeping its first node) unless its first edge runs
    /// against the adjacent face.
    fn orient(&self, c: Vec<usize>) -> Vec<usize> {
        let (a, b) = (c[0], c[1]);
        for (cyc, _) in &self.faces {
            let k = cyc.len();
            for i in 0..k {
                let (x, y) = (cyc[i], cyc[(i + 1) % k]);
                if (x, y) == (b, a) {
                    return c;
                }
                if (x, y) == (a, b) {
                    let mut r = vec![c[0]];
                    r.extend(c[1..].iter().rev());
                    return r;
                }
            }
        }
        c
    }

    /// Product annulus attached to `inner`, returning the outer circle.
    /// Faces `(i,k) → (i+1,k) → (i+1,k+1) → (i,k+1)` in the `(θ, s)` chart.
    fn collar(&mut self, inner: &[usize], c: CircleSpec, p: &PieceParams) -> Vec<usize> {
        let slabs = (p.collar_length / p.h).ceil().max(1.0) as usize;
        self.product(inner, c, p.collar_length, slabs)
    }

    fn product(&mut self, inner: &[usize], c: CircleSpec, length: f64, slabs: usize) -> Vec<usize> {
        let n = c.n_theta;
        let dth = c.length / n as f64;
        let ds = length / slabs as f64;
        let mut levels = vec![inner.to_vec()];
        for _ in 0..slabs {
            levels.push(self.new_nodes(n));
        }
        for k in 0..slabs {
            for i in 0..n {
                let j = (i + 1) % n;
                let (x0, x1) = (i as f64 * dth, (i + 1) as f64 * dth);
                let (s0, s1) = (k as f64 * ds, (k + 1) as f64 * ds);
                self.faces.push((
                    vec![levels[k][i], levels[k][j], levels[k + 1][j], levels[k + 1][i]],
                    vec![[x0, s0], [x1, s0], [x1, s1], [x0, s1]],
                ));
            }
        }
        levels.pop().unwrap()
    }

    fn cap_core(&mut self, c: CircleSpec, h: f64) -> Vec<usize> {
        let n = c.n_theta;
        let rho = c.length / (2.0 * PI);
        let pts: Vec<[f64; 2]> = (0..n)
            .map(|i| {
                let a = 2.0 * PI * i as f64 / n as f64;
                [rho * a.cos(), rho * a.sin()]
            })
            .collect();
        let ids = self.new_nodes(n);
        self.fill_polygon(&ids, &pts, [0.0, 0.0], h, false);
        ids
    }

    fn tube_core(&mut self, circles: &[CircleSpec], p: &PieceParams) -> Result<Vec<Vec<usize>>> {
        let (a, b) = (circles[0], circles[1]);
        if a.n_theta != b.n_theta || (a.length - b.length).abs() > 1e-12 * a.length {
            return Err(Error::ResolutionMismatch("tube boundaries must share N and L".into()));
        }
        let slabs = (p.tube_length / p.h).ceil().max(1.0) as usize;
        let bottom = self.new_nodes(a.n_theta);
        let top = self.product(&bottom, a, p.tube_length, slabs);
        // Circle 0 is the far end, where the product orientation already
        // matches; circle 1 is the near end.
        Ok(vec![top, bottom])
    }

    /// Two equiangular hexagons glued along alternate sides (seams). The
    /// remaining sides are half-circles of the three boundaries.
    fn pants_core(&mut self, circles: &[CircleSpec], h: f64) -> Result<Vec<Vec<usize>>> {
        for c in circles {
            if c.n_theta % 2 != 0 {
                return Err(Error::ResolutionMismatch(format!("pants boundary needs even N, got {}", c.n_theta)));
            }
        }
        let half: Vec<f64> = circles.iter().map(|c| c.length / 2.0).collect();
        let x = half.iter().cloned().fold(f64::INFINITY, f64::min) / 2.0;
        // Side order: b0, s0, b1, s1, b2, s2 with directions k·60°.
        // Closure of an equiangular hexagon: b0 − s1 = b2 − s0 = b1 − s2.
        let seams = [half[2] - x, half[0] - x, half[1] - x];
        let mean_dth: f64 = circles.iter().map(|c| c.length / c.n_theta as f64).sum::<f64>() / 3.0;
        let mut corner = [0.0f64, 0.0];
        let mut corners = Vec::new();
        let mut sides: Vec<(f64, usize, bool)> = Vec::new();
        for i in 0..3 {
            sides.push((half[i], circles[i].n_theta / 2, true));
            let ns = (seams[i] / mean_dth).round().max(1.0) as usize;
            sides.push((seams[i], ns, false));
        }
        let mut pts: Vec<[f64; 2]> = Vec::new();
        let mut kinds: Vec<(usize, usize, usize)> = Vec::new();
        for (k, &(len, segs, _)) in sides.iter().enumerate() {
            corners.push(corner);
            let ang = k as f64 * PI / 3.0;
            let (dx, dy) = (ang.cos(), ang.sin());
            for s in 0..segs {
                let f = len * s as f64 / segs as f64;
                pts.push([corner[0] + f * dx, corner[1] + f * dy]);
                kinds.push((k, s, segs));
            }
            corner = [corner[0] + len * dx, corner[1] + len * dy];
        }
        debug_assert!(corner[0].abs() < 1e-9 && corner[1].abs() < 1e-9);
        let m = pts.len();
        // Shared nodes: corners and seam interiors.
        let mut plus = vec![usize::MAX; m];
        let mut minus = vec![usize::MAX; m];
        for i in 0..m {
            let (k, s, _) = kinds[i];
            let seam = k % 2 == 1;
            if s == 0 || seam {
                let id = self.new_nodes(1)[0];
                plus[i] = id;
                minus[i] = id;
            }
        }
        for i in 0..m {
            if plus[i] == usize::MAX {
                plus[i] = self.new_nodes(1)[0];
                minus[i] = self.new_nodes(1)[0];
            }
        }
        let cx = pts.iter().map(|p| p[0]).sum::<f64>() / m as f64;
        let cy = pts.iter().map(|p| p[1]).sum::<f64>() / m as f64;
        self.fill_polygon(&plus, &pts, [cx, cy], h, false);
        self.fill_polygon(&minus, &pts, [cx, cy], h, true);
        let mut out = Vec::new();
        for b in 0..3 {
            let start = kinds.iter().position(|&(k, s, _)| k == 2 * b && s == 0).unwrap();
            let segs = sides[2 * b].1;
            let end = (start + segs) % m;
            let mut circ: Vec<usize> = (0..segs).map(|s| plus[start + s]).collect();
            circ.push(plus[end]);
            for s in (1..segs).rev() {
                circ.push(minus[start + s]);
            }
            out.push(circ);
        }
        Ok(out)
    }

    /// Fill a star-shaped polygon with rings of quads and triangles around
    /// `center`, ending in a triangle fan. The boundary must run
    /// counterclockwise in the chart; `reverse` flips every face.
    fn fill_polygon(&mut self, ids: &[usize], pts: &[[f64; 2]], center: [f64; 2], h: f64, reverse: bool) {
        let dist = |p: &[f64; 2]| ((p[0] - center[0]).powi(2) + (p[1] - center[1]).powi(2)).sqrt();
        let rho0 = pts.iter().map(dist).sum::<f64>() / pts.len() as f64;
        let steps = (rho0 / h).round().max(1.0) as usize;
        let mut ring_ids = ids.to_vec();
        let mut ring_pts = pts.to_vec();
        let push = |faces: &mut Vec<(Vec<usize>, Vec<[f64; 2]>)>, mut c: Vec<usize>, mut q: Vec<[f64; 2]>| {
            if reverse {
                c.reverse();
                q.reverse();
            }
            faces.push((c, q));
        };
        for k in 1..steps {
            let lam = (steps - k) as f64 / (steps - k + 1) as f64;
            let n = ring_ids.len();
            let perim: f64 = (0..n)
                .map(|i| {
                    let (a, b) = (ring_pts[i], ring_pts[(i + 1) % n]);
                    ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt()
                })
                .sum::<f64>()
                * lam;
            let m = ((perim / h).round() as usize).clamp(3, n);
            let new_pts: Vec<[f64; 2]> = (0..m)
                .map(|j| {
                    let x = j as f64 * n as f64 / m as f64;
                    let i0 = x.floor() as usize % n;
                    let fr = x - x.floor();
                    let (a, b) = (ring_pts[i0], ring_pts[(i0 + 1) % n]);
                    let p = [a[0] + fr * (b[0] - a[0]), a[1] + fr * (b[1] - a[1])];
                    [center[0] + lam * (p[0] - center[0]), center[1] + lam * (p[1] - center[1])]
                })
                .collect();
            let new_ids = self.new_nodes(m);
            let phi = |i: usize| (i * m).div_ceil(n) % m;
            for i in 0..n {
                let i1 = (i + 1) % n;
                let (a, b) = (phi(i), phi(i1));
                if a == b {
                    push(&mut self.faces, vec![ring_ids[i], ring_ids[i1], new_ids[a]], vec![ring_pts[i], ring_pts[i1], new_pts[a]]);
                } else {
                    push(
                        &mut self.faces,
                        vec![ring_ids[i], ring_ids[i1], new_ids[b], new_ids[a]],
                        vec![ring_pts[i], ring_pts[i1], new_pts[b], new_pts[a]],
                    );
                }
            }
            ring_ids = new_ids;
            ring_pts = new_pts;
        }
        let c = self.new_nodes(1)[0];
        let n = ring_ids.len();
        for i in 0..n {
            let i1 = (i + 1) % n;
            push(&mut self.faces, vec![ring_ids[i], ring_ids[i1], c], vec![ring_pts[i], ring_pts[i1], center]);
        }
    }

    /// Add the piece to `b` with every cell labelled by vertex `v`; returns
    /// the global node ids of each boundary circle.
    pub fn instantiate(&self, b: &mut MeshBuilder, v: usize) -> Vec<Vec<usize>> {
        let base = b.n_nodes();
        let before = b.counts();
        for _ in 0..self.n_nodes {
            b.node(FiberLabel::Vertex(v));
        }
        for (cyc, chart) in &self.faces {
            let g: Vec<usize> = cyc.iter().map(|&i| base + i).collect();
            b.face(&g, chart, FiberLabel::Vertex(v), &[FiberLabel::Vertex(v)]);
        }
        let after = b.counts();
        b.pieces.push(PieceCells { vertex: v, ranges: [before[0]..after[0], before[1]..after[1], before[2]..after[2]] });
        self.circles.iter().map(|c| c.iter().map(|&i| base + i).collect()).collect()
    }

    pub fn euler(&self) -> i64 {
        let mut b = MeshBuilder::default();
        self.instantiate(&mut b, 0);
        b.n_nodes() as i64 - b.edges.len() as i64 + b.faces.len() as i64
    }
}

/// A single open piece as a complex with tagged boundary circles.
pub fn make_piece(kind: PieceKind, circles: &[CircleSpec], params: &PieceParams) -> Result<CellComplex> {
    let t = PieceTemplate::new(kind, circles, params)?;
    let mut b = MeshBuilder::default();
    let circs = t.instantiate(&mut b, 0);
    let boundary = circs.into_iter().zip(circles).map(|(nodes, c)| BoundaryCircle { nodes, length: c.length }).collect();
    let cx = b.finish(boundary, None)?;
    if cx.euler() != kind.euler() {
        return Err(Error::BadTopology(format!("{kind:?} mesh has χ = {}", cx.euler())));
    }
    Ok(cx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circ(n: usize) -> CircleSpec {
        CircleSpec { length: 2.0 * PI, n_theta: n }
    }

    fn interior_edges(c: &CellComplex) -> Vec<usize> {
        let mut uses = vec![0; c.n1];
        for f in &c.faces {
            for &(e, _) in f {
                uses[e] += 1;
            }
        }
        (0..c.n1).filter(|&e| uses[e] == 2).collect()
    }

    #[test]
    fn piece_topology() {
        let p = PieceParams::new(0.3);
        let cap = make_piece(PieceKind::Cap, &[circ(16)], &p).unwrap();
        assert_eq!(cap.euler(), 1);
        assert_eq!(cap.boundary.len(), 1);
        assert_eq!(cap.boundary[0].nodes.len(), 16);
        let pants = make_piece(PieceKind::Pants, &[circ(16), circ(16), circ(16)], &p).unwrap();
        assert_eq!(pants.euler(), -1);
        assert!(pants.boundary.iter().all(|b| b.nodes.len() == 16));
        assert_eq!(pants.dd_nonzeros(), 0);
        assert!(pants.masses().iter().all(|&m| m > 0.0));
    }

    #[test]
    fn tube_slabs() {
        let p = PieceParams { h: 0.25, collar_length: 0.5, tube_length: 1.0 };
        let tube = make_piece(PieceKind::Tube, &[circ(16), circ(16)], &p).unwrap();
        assert_eq!(tube.euler(), 0);
        assert_eq!(tube.n2, 4 * 16);
        assert!(tube.faces.iter().all(|f| f.len() == 4));
    }

    #[test]
    fn interior_edge_lengths() {
        let h = 0.3;
        let p = PieceParams::new(h);
        for (kind, k) in [(PieceKind::Cap, 1), (PieceKind::Tube, 2), (PieceKind::Pants, 3)] {
            let c = make_piece(kind, &vec![circ(16); k], &p).unwrap();
            for e in interior_edges(&c) {
                let l = c.primal_len[e];
                assert!(l >= h / 2.0 && l <= 2.0 * h, "{kind:?}: edge {e} length {l}");
            }
        }
    }

    #[test]
    fn mismatched_resolution() {
        let p = PieceParams::new(0.3);
        assert!(matches!(make_piece(PieceKind::Pants, &[circ(16), circ(15), circ(16)], &p), Err(Error::ResolutionMismatch(_))));
        assert!(matches!(make_piece(PieceKind::Tube, &[circ(16), circ(32)], &p), Err(Error::ResolutionMismatch(_))));
        assert!(matches!(make_piece(PieceKind::Cap, &[circ(16), circ(16)], &p), Err(Error::ResolutionMismatch(_))));
    }
}
