//! Gluing vertex pieces and cylinders into `X(r)` and truncated stars.
//!
//! The cylinder of edge `e` carries the edge frame `(θ, t)`, oriented by
//! `dθ ∧ dt`. On `X(r)` it spans `t ∈ [−r, r]`; level `−r` is the tail
//! circle and level `r` the head circle, the latter entered with reversed
//! `θ` (node `i` of the cylinder meets node `N − i + offset` of the head
//! circle). A star `X_v(T)` attaches a half-cylinder of length `T` to each
//! half-edge at `v`, in the same edge frame.

use super::pieces::{CircleSpec, PieceParams, PieceTemplate};
use super::{BoundaryCircle, CellComplex, CylinderIndex, FiberLabel, MeshBuilder};
use crate::cech::PieceKind;
use crate::error::{Error, Result};
use crate::graph::{Graph, Side};

/// Cross-section data of an edge as far as meshing is concerned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub length: f64,
    pub n_theta: usize,
    /// Rotational offset applied at the head gluing.
    pub offset: usize,
}

#[derive(Debug, Clone)]
pub struct Geometry {
    pub graph: Graph,
    pub kinds: Vec<PieceKind>,
    pub edges: Vec<EdgeGeometry>,
    pub params: PieceParams,
    templates: Vec<PieceTemplate>,
}

impl Geometry {
    pub fn new(graph: Graph, kinds: Vec<PieceKind>, edges: Vec<EdgeGeometry>, params: PieceParams) -> Result<Self> {
        if kinds.len() != graph.vertices.len() || edges.len() != graph.edges.len() {
            return Err(Error::Validation("one piece per vertex and one cross-section per edge required".into()));
        }
        let mut templates = Vec::new();
        for (v, &kind) in kinds.iter().enumerate() {
            let hes = graph.half_edges_at(v);
            if hes.len() != kind.boundary_count() {
                return Err(Error::GluingMismatch(format!(
                    "vertex `{}` has {} half-edges but a {kind:?} piece has {} boundary circles",
                    graph.vertices[v],
                    hes.len(),
                    kind.boundary_count()
                )));
            }
            let circles: Vec<CircleSpec> =
                hes.iter().map(|h| CircleSpec { length: edges[h.edge].length, n_theta: edges[h.edge].n_theta }).collect();
            templates.push(PieceTemplate::new(kind, &circles, &params)?);
        }
        Ok(Geometry { graph, kinds, edges, params, templates })
    }

    pub fn vertex_of(&self, edge: usize, side: Side) -> usize {
        match side {
            Side::Tail => self.graph.edges[edge].tail,
            Side::Head => self.graph.edges[edge].head,
        }
    }

    /// Predicted Euler characteristic `Σ_v χ(piece_v)`.
    pub fn euler(&self) -> i64 {
        self.kinds.iter().map(|k| k.euler()).sum()
    }

    fn circle_of(&self, circles: &[Vec<Vec<usize>>], edge: usize, side: Side) -> Vec<usize> {
        let v = self.vertex_of(edge, side);
        let k = self.graph.half_edges_at(v).iter().position(|h| h.edge == edge && h.side == side).unwrap();
        circles[v][k].clone()
    }

    fn head_order(&self, edge: usize, circle: &[usize]) -> Vec<usize> {
        let n = circle.len();
        let off = self.edges[edge].offset;
        (0..n).map(|i| circle[(n - i + off) % n]).collect()
    }

    /// Closed complex `X(r)` with `⌈2r/h⌉` slabs per cylinder.
    pub fn assemble(&self, r: f64) -> Result<CellComplex> {
        if !(r >= 1.0) || !r.is_finite() {
            return Err(Error::ROutOfRange(r));
        }
        let mut b = MeshBuilder::default();
        let circles: Vec<Vec<Vec<usize>>> = self.templates.iter().enumerate().map(|(v, t)| t.instantiate(&mut b, v)).collect();
        for e in 0..self.edges.len() {
            let tail = self.circle_of(&circles, e, Side::Tail);
            let head = self.circle_of(&circles, e, Side::Head);
            let n = self.edges[e].n_theta;
            if tail.len() != n || head.len() != n {
                return Err(Error::GluingMismatch(format!("edge `{}` circles do not have {n} nodes", self.graph.edges[e].id)));
            }
            let dt = self.slab_width(r);
            let slabs = (2.0 * r / dt).round() as usize;
            let levels: Vec<f64> = (0..=slabs).map(|j| -r + j as f64 * dt).collect();
            let top = self.head_order(e, &head);
            let label = move |t: f64| if t <= 0.0 { (Side::Tail, t + r) } else { (Side::Head, r - t) };
            let cyl = add_cylinder(&mut b, e, self.edges[e], levels, Some(tail), Some(top), &label, None);
            b.cylinders.push(cyl);
        }
        let cx = b.finish(Vec::new(), Some(r))?;
        if cx.euler() != self.euler() {
            return Err(Error::BadTopology(format!("assembled χ = {}, expected {}", cx.euler(), self.euler())));
        }
        Ok(cx)
    }

    /// Truncated star `X_v(T)`: piece `v` with a half-cylinder of length `T`
    /// on every half-edge at `v`.
    pub fn star(&self, v: usize, length: f64) -> Result<CellComplex> {
        if !(length > 0.0) {
            return Err(Error::CylinderTooShort { length, needed: self.params.h });
        }
        let slabs = (length / self.params.h - 1e-9).ceil().max(1.0) as usize;
        self.star_grid(v, slabs, length / slabs as f64)
    }

    /// Slab width used on the cylinders of `X(r)`.
    pub fn slab_width(&self, r: f64) -> f64 {
        let slabs = (2.0 * r / self.params.h - 1e-9).ceil().max(1.0);
        2.0 * r / slabs
    }

    /// Star whose half-cylinders have `slabs` slabs of width `dt`.
    pub fn star_grid(&self, v: usize, slabs: usize, dt: f64) -> Result<CellComplex> {
        if slabs == 0 || !(dt > 0.0) {
            return Err(Error::CylinderTooShort { length: slabs as f64 * dt, needed: self.params.h });
        }
        let length = slabs as f64 * dt;
        let mut b = MeshBuilder::default();
        let circles = self.templates[v].instantiate(&mut b, v);
        let mut boundary = Vec::new();
        for (k, he) in self.graph.half_edges_at(v).into_iter().enumerate() {
            let eg = self.edges[he.edge];
            let cyl = match he.side {
                Side::Tail => {
                    let levels: Vec<f64> = (0..=slabs).map(|j| j as f64 * dt).collect();
                    let label = |t: f64| (Side::Tail, t);
                    add_cylinder(&mut b, he.edge, eg, levels, Some(circles[k].clone()), None, &label, Some(Side::Tail))
                }
                Side::Head => {
                    let levels: Vec<f64> = (0..=slabs).map(|j| -length + j as f64 * dt).collect();
                    let label = |t: f64| (Side::Head, -t);
                    let top = self.head_order(he.edge, &circles[k]);
                    add_cylinder(&mut b, he.edge, eg, levels, None, Some(top), &label, Some(Side::Head))
                }
            };
            let end = match he.side {
                Side::Tail => cyl.nodes.last().unwrap().clone(),
                Side::Head => cyl.nodes[0].clone(),
            };
            boundary.push(BoundaryCircle { nodes: end, length: eg.length });
            b.cylinders.push(cyl);
        }
        b.finish(boundary, None)
    }

    /// The open vertex piece alone (`X_v` at `s = 0`).
    pub fn piece(&self, v: usize) -> Result<CellComplex> {
        let mut b = MeshBuilder::default();
        let circles = self.templates[v].instantiate(&mut b, v);
        let boundary =
            circles.into_iter().zip(&self.templates[v].circle_specs).map(|(nodes, c)| BoundaryCircle { nodes, length: c.length }).collect();
        b.finish(boundary, None)
    }
}

/// Product cylinder over `levels`. End levels reuse `bottom`/`top` when
/// given (in the edge frame's `θ` order); all other cells are labelled by
/// `label(t) = (nearer side, distance)`.
#[allow(clippy::too_many_arguments)]
pub(crate) fn add_cylinder(
    b: &mut MeshBuilder,
    edge: usize,
    eg: EdgeGeometry,
    levels: Vec<f64>,
    bottom: Option<Vec<usize>>,
    top: Option<Vec<usize>>,
    label: &dyn Fn(f64) -> (Side, f64),
    star_side: Option<Side>,
) -> CylinderIndex {
    let n = eg.n_theta;
    let dth = eg.length / n as f64;
    let slabs = levels.len() - 1;
    let dt = (levels[slabs] - levels[0]) / slabs as f64;
    let lab = |slab: usize, t: f64| {
        let (side, dist) = label(t);
        FiberLabel::Cylinder { edge, slab, t, side, dist }
    };
    let mut nodes: Vec<Vec<usize>> = Vec::with_capacity(slabs + 1);
    for (j, &t) in levels.iter().enumerate() {
        let given = if j == 0 {
            bottom.clone()
        } else if j == slabs {
            top.clone()
        } else {
            None
        };
        nodes.push(given.unwrap_or_else(|| (0..n).map(|_| b.node(lab(j, t))).collect()));
    }
    let mut faces = vec![Vec::with_capacity(n); slabs];
    for j in 0..slabs {
        let tm = 0.5 * (levels[j] + levels[j + 1]);
        let (t0, t1) = (j as f64 * dt, (j + 1) as f64 * dt);
        for i in 0..n {
            let i1 = (i + 1) % n;
            let (x0, x1) = (i as f64 * dth, (i + 1) as f64 * dth);
            let cyc = [nodes[j][i], nodes[j][i1], nodes[j + 1][i1], nodes[j + 1][i]];
            let el = [lab(j, levels[j]), lab(j, tm), lab(j + 1, levels[j + 1]), lab(j, tm)];
            let f = b.face(&cyc, &[[x0, t0], [x1, t0], [x1, t1], [x0, t1]], lab(j, tm), &el);
            faces[j].push((f, 1.0));
        }
    }
    let theta_edges = nodes.iter().map(|lv| (0..n).map(|i| b.edge_between(lv[i], lv[(i + 1) % n]).unwrap()).collect()).collect();
    let t_edges = (0..slabs).map(|j| (0..n).map(|i| b.edge_between(nodes[j][i], nodes[j + 1][i]).unwrap()).collect()).collect();
    CylinderIndex { edge, n_theta: n, dtheta: dth, dt, t_levels: levels, nodes, theta_edges, t_edges, faces, star_side }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};
    use crate::spectral::{dense_eigenpairs, Csr};
    use std::f64::consts::PI;

    pub(crate) fn scene(kind: &str) -> Geometry {
        let (vs, es, kinds): (Vec<&str>, Vec<(&str, &str, &str)>, Vec<PieceKind>) = match kind {
            "sphere" => (vec!["a", "b"], vec![("e", "a", "b")], vec![PieceKind::Cap, PieceKind::Cap]),
            "torus" => (vec!["a"], vec![("e", "a", "a")], vec![PieceKind::Tube]),
            _ => (vec!["a", "b"], vec![("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")], vec![PieceKind::Pants, PieceKind::Pants]),
        };
        let spec = GraphSpec {
            vertices: vs.iter().map(|v| VertexSpec { id: v.to_string() }).collect(),
            edges: es
                .iter()
                .map(|(id, t, h)| EdgeSpec { id: id.to_string(), tail: t.to_string(), head: h.to_string(), cross_section: "y".into() })
                .collect(),
        };
        let g = Graph::build(&spec).unwrap();
        let ne = g.edges.len();
        let eg = EdgeGeometry { length: 2.0 * PI, n_theta: 8, offset: 0 };
        Geometry::new(g, kinds, vec![eg; ne], PieceParams { h: 0.6, collar_length: 0.6, tube_length: 1.2 }).unwrap()
    }

    fn dense_kernel(a: &Csr) -> usize {
        let (vals, _) = dense_eigenpairs(a);
        vals.iter().filter(|v| v.abs() < 1e-8).count()
    }

    #[test]
    fn euler_characteristics() {
        for (name, chi) in [("sphere", 2), ("torus", 0), ("theta", -2)] {
            let g = scene(name);
            for r in [1.0, 2.5] {
                let c = g.assemble(r).unwrap();
                assert_eq!(c.euler(), chi, "{name}");
                assert!(c.is_closed());
                assert_eq!(c.dd_nonzeros(), 0);
                assert!(c.masses().iter().all(|&m| m > 0.0));
                assert_eq!(c.labels0.len() + c.labels1.len() + c.labels2.len(), c.total());
            }
        }
    }

    #[test]
    fn kernel_dims_dense_oracle() {
        for (name, k) in [("sphere", 2), ("torus", 4), ("theta", 6)] {
            let c = scene(name).assemble(1.0).unwrap();
            let ops = c.operators();
            assert!(ops.d.asymmetry() < 1e-12);
            assert_eq!(dense_kernel(&ops.laplacian), k, "{name} Δ");
            let (vals, _) = dense_eigenpairs(&ops.d);
            let kd = vals.iter().filter(|v| v.abs() < 1e-6).count();
            assert_eq!(kd, k, "{name} D");
        }
    }

    #[test]
    fn cylinder_labels_and_slabs() {
        let g = scene("sphere");
        let c = g.assemble(1.5).unwrap();
        let cyl = &c.cylinders[0];
        assert_eq!(cyl.slabs(), (3.0f64 / 0.6).ceil() as usize);
        assert!((cyl.length() - 3.0).abs() < 1e-12);
        for l in c.labels2.iter() {
            if let FiberLabel::Cylinder { t, dist, .. } = *l {
                assert!(t.abs() <= 1.5 && (0.0..=1.5).contains(&dist));
            }
        }
        let pieces = c.restrict(0.0, &|e, s| g.vertex_of(e, s), 2).unwrap();
        let n_vertex_cells = (0..c.total()).filter(|&i| matches!(c.label(i), FiberLabel::Vertex(_))).count();
        assert_eq!(pieces.iter().map(|p| p.cells.len()).sum::<usize>(), n_vertex_cells);
        let full = c.restrict(1.5, &|e, s| g.vertex_of(e, s), 2).unwrap();
        assert!(full.iter().map(|p| p.cells.len()).sum::<usize>() >= c.total());
        assert!(matches!(c.restrict(2.0, &|e, s| g.vertex_of(e, s), 2), Err(Error::SOutOfRange { .. })));
    }

    #[test]
    fn restriction_norm_is_additive() {
        let g = scene("torus");
        let c = g.assemble(1.0).unwrap();
        let u = nalgebra::DVector::from_fn(c.total(), |i, _| ((i * 7 % 11) as f64) - 5.0);
        let parts = c.restrict(0.5, &|e, s| g.vertex_of(e, s), 1).unwrap();
        let m = c.masses();
        let direct: f64 = parts[0].cells.iter().map(|&i| u[i] * u[i] * m[i]).sum::<f64>().sqrt();
        assert!((parts[0].norm(&u) - direct).abs() < 1e-12);
    }

    #[test]
    fn hodge_star_properties() {
        let c = scene("theta").assemble(1.0).unwrap();
        let one = vec![1.0; c.n0];
        let s1 = c.hodge_star(0, &one);
        for (a, b) in s1.iter().zip(&c.dual0) {
            assert!((a - b).abs() < 1e-14);
        }
        for k in 0..3 {
            let n = [c.n0, c.n1, c.n2][k];
            let u: Vec<f64> = (0..n).map(|i| ((i * 13 % 17) as f64).sin()).collect();
            let su = c.hodge_star(k, &u);
            assert!((c.norm_dual(k, &su) - c.norm_primal(k, &u)).abs() < 1e-10 * c.norm_primal(k, &u));
            let back = c.hodge_star_dual(k, &su);
            let sgn = if k == 1 { -1.0 } else { 1.0 };
            for (x, y) in back.iter().zip(&u) {
                assert!((x - sgn * y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn stars_are_open_with_half_cylinders() {
        let g = scene("theta");
        let s = g.star(0, 3.0).unwrap();
        assert_eq!(s.cylinders.len(), 3);
        assert_eq!(s.boundary.len(), 3);
        assert_eq!(s.euler(), -1);
        let t = scene("torus").star(0, 2.0).unwrap();
        assert_eq!(t.cylinders.len(), 2);
        assert!(t.cylinders.iter().any(|c| c.star_side == Some(Side::Head) && c.t_levels[0] < 0.0));
    }

    #[test]
    fn rejects_short_stretch() {
        assert!(matches!(scene("sphere").assemble(0.5), Err(Error::ROutOfRange(_))));
    }
}
