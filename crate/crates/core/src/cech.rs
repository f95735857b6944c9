//! Vector-valued cohomology of a graph with coefficients in graded
//! vertex/edge cohomology, and the Betti numbers it predicts for `X(r)`.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::QMatrix;
use crate::graph::{Graph, Side};

/// Graded spaces `A_v`, `B_e` and restriction matrices per half-edge.
#[derive(Debug, Clone)]
pub struct CochainSystem {
    pub graph: Graph,
    /// Top grade `n`; grades run over `0..=n`.
    pub max_grade: usize,
    pub a_dims: Vec<Vec<usize>>,
    pub b_dims: Vec<Vec<usize>>,
    /// `(edge, side) -> matrix per grade`, shape `b_dims[e][q] x a_dims[v][q]`.
    pub restrictions: BTreeMap<(usize, Side), Vec<QMatrix>>,
}

/// Piece kinds with known cohomology and circle restriction presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PieceKind {
    Cap,
    Tube,
    Pants,
}

impl PieceKind {
    pub fn boundary_count(self) -> usize {
        match self {
            PieceKind::Cap => 1,
            PieceKind::Tube => 2,
            PieceKind::Pants => 3,
        }
    }

    pub fn euler(self) -> i64 {
        2 - self.boundary_count() as i64
    }

    /// Dimensions of `H^0, H^1, H^2` of the piece.
    pub fn cohomology_dims(self) -> [usize; 3] {
        [1, self.boundary_count() - 1, 0]
    }

    /// Restriction `H^q(piece) -> H^q(circle i)` for the circle parametrized
    /// so that the piece orientation is `dθ ∧ dn_out`.
    pub fn circle_restriction(self, circle: usize, grade: usize) -> Vec<Vec<i64>> {
        match grade {
            0 => vec![vec![1]],
            1 => {
                let k = self.boundary_count() - 1;
                let row = match (self, circle) {
                    (PieceKind::Cap, _) => vec![],
                    (PieceKind::Tube, 0) => vec![1],
                    (PieceKind::Tube, _) => vec![-1],
                    (PieceKind::Pants, 0) => vec![1, 0],
                    (PieceKind::Pants, 1) => vec![0, 1],
                    (PieceKind::Pants, _) => vec![-1, -1],
                };
                debug_assert_eq!(row.len(), k);
                vec![row]
            }
            _ => vec![],
        }
    }
}

impl CochainSystem {
    /// System built from piece presets. Half-edges at a vertex are attached to
    /// the piece's boundary circles in canonical order. At a head the edge
    /// frame reverses the circle, which negates grade-1 restrictions.
    pub fn from_presets(graph: &Graph, kinds: &[PieceKind]) -> Result<Self> {
        let max_grade = 2;
        let a_dims: Vec<Vec<usize>> = kinds.iter().map(|k| k.cohomology_dims().to_vec()).collect();
        let b_dims = vec![vec![1, 1, 0]; graph.edges.len()];
        let mut restrictions = BTreeMap::new();
        for (v, kind) in kinds.iter().enumerate() {
            let hs = graph.half_edges_at(v);
            if hs.len() != kind.boundary_count() {
                return Err(Error::Validation(format!(
                    "vertex `{}` has {} half-edges but a {:?} piece has {} boundary circles",
                    graph.vertices[v],
                    hs.len(),
                    kind,
                    kind.boundary_count()
                )));
            }
            for (c, h) in hs.iter().enumerate() {
                let mats = (0..=max_grade)
                    .map(|q| {
                        let rows = kind.circle_restriction(c, q);
                        let sgn = if q == 1 && h.side == Side::Head { -1 } else { 1 };
                        let rows: Vec<Vec<i64>> = rows.iter().map(|r| r.iter().map(|x| sgn * x).collect()).collect();
                        let mut m = QMatrix::from_i64(&rows, a_dims[v][q]);
                        m.nrows = b_dims[h.edge][q];
                        if m.nrows == 0 {
                            m.rows.clear();
                        }
                        m
                    })
                    .collect();
                restrictions.insert((h.edge, h.side), mats);
            }
        }
        let sys = CochainSystem { graph: graph.clone(), max_grade, a_dims, b_dims, restrictions };
        sys.validate()?;
        Ok(sys)
    }

    pub fn validate(&self) -> Result<()> {
        if self.a_dims.len() != self.graph.vertices.len() || self.b_dims.len() != self.graph.edges.len() {
            return Err(Error::Validation("graded dimension lists do not match the graph".into()));
        }
        for d in self.a_dims.iter().chain(self.b_dims.iter()) {
            if d.len() != self.max_grade + 1 {
                return Err(Error::Validation("graded dimension list has wrong length".into()));
            }
        }
        for h in self.graph.half_edges() {
            let Some(mats) = self.restrictions.get(&(h.edge, h.side)) else {
                return Err(Error::Validation(format!("missing restriction for edge `{}` ({:?})", self.graph.edges[h.edge].id, h.side)));
            };
            if mats.len() != self.max_grade + 1 {
                return Err(Error::Validation("one restriction matrix per grade required".into()));
            }
            for (q, m) in mats.iter().enumerate() {
                if m.nrows != self.b_dims[h.edge][q] || m.ncols != self.a_dims[h.vertex][q] {
                    return Err(Error::Validation(format!(
                        "restriction for edge `{}` grade {q} has shape {}x{}, expected {}x{}",
                        self.graph.edges[h.edge].id, m.nrows, m.ncols, self.b_dims[h.edge][q], self.a_dims[h.vertex][q]
                    )));
                }
            }
        }
        Ok(())
    }

    fn offsets(dims: &[Vec<usize>], q: usize) -> Vec<usize> {
        let mut off = vec![0];
        for d in dims {
            off.push(off.last().unwrap() + d[q]);
        }
        off
    }

    /// `(ρ f)(e) = l_{head,e} f(head) − l_{tail,e} f(tail)` in grade `q`.
    pub fn rho_matrix(&self, q: usize) -> Result<QMatrix> {
        if q > self.max_grade {
            return Err(Error::GradeMissing(q));
        }
        let co = Self::offsets(&self.a_dims, q);
        let ro = Self::offsets(&self.b_dims, q);
        let mut m = QMatrix::zeros(*ro.last().unwrap(), *co.last().unwrap());
        for h in self.graph.half_edges() {
            let l = &self.restrictions[&(h.edge, h.side)][q];
            let sgn = BigRational::from_integer((-h.sign()).into());
            for i in 0..l.nrows {
                for j in 0..l.ncols {
                    let v = &sgn * &l.rows[i][j];
                    m.rows[ro[h.edge] + i][co[h.vertex] + j] += v;
                }
            }
        }
        Ok(m)
    }

    pub fn cohomology(&self) -> GradedCohomology {
        let mut out = GradedCohomology::default();
        for q in 0..=self.max_grade {
            let rho = self.rho_matrix(q).expect("grade in range");
            let rank = rho.rank();
            let kernel = rho.kernel_basis();
            let coker = rho.transpose().kernel_basis();
            debug_assert_eq!(kernel.len(), rho.ncols - rank);
            debug_assert_eq!(coker.len(), rho.nrows - rank);
            out.rank.push(rank);
            out.c0.push(rho.ncols);
            out.c1.push(rho.nrows);
            out.h0.push(kernel.len());
            out.h1.push(coker.len());
            out.h0_basis.push(kernel);
            out.h1_reps.push(coker);
        }
        out
    }
}

/// `H^0 = ker ρ` and `H^1 = coker ρ` per grade. Cokernel representatives
/// are taken orthogonal to the image.
#[derive(Debug, Clone, Default)]
pub struct GradedCohomology {
    pub h0: Vec<usize>,
    pub h1: Vec<usize>,
    pub rank: Vec<usize>,
    pub c0: Vec<usize>,
    pub c1: Vec<usize>,
    pub h0_basis: Vec<Vec<Vec<BigRational>>>,
    pub h1_reps: Vec<Vec<Vec<BigRational>>>,
}

impl GradedCohomology {
    pub fn max_grade(&self) -> usize {
        self.h0.len() - 1
    }

    /// Predicted `dim H^k(X(r)) = h0(k) + h1(k-1)`.
    pub fn predicted_betti(&self, k: usize) -> Result<usize> {
        if k > self.max_grade() {
            return Err(Error::DegreeOutOfRange(k));
        }
        Ok(self.h0[k] + if k > 0 { self.h1[k - 1] } else { 0 })
    }

    pub fn predicted_betti_all(&self) -> Vec<usize> {
        (0..=self.max_grade()).map(|k| self.predicted_betti(k).unwrap()).collect()
    }

    pub fn total(&self) -> usize {
        self.h0.iter().sum::<usize>() + self.h1.iter().sum::<usize>()
    }

    pub fn spectral_sequence(&self) -> SpectralSequenceTerms {
        let n = self.max_grade();
        let converged = (0..=n).map(|k| self.h0[k] + if k > 0 { self.h1[k - 1] } else { 0 }).collect();
        SpectralSequenceTerms { e1: vec![self.c0.clone(), self.c1.clone()], e2: vec![self.h0.clone(), self.h1.clone()], converged }
    }
}

/// `e1[p][q]`, `e2[p][q]` for `p ∈ {0,1}`, and `Σ_{p+q=k} E_2^{p,q}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSequenceTerms {
    pub e1: Vec<Vec<usize>>,
    pub e2: Vec<Vec<usize>>,
    pub converged: Vec<usize>,
}

/// Scene-file form of a cochain system; rationals are `[num, den]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CochainSystemSpec {
    pub max_grade: usize,
    pub vertex_dims: BTreeMap<String, Vec<usize>>,
    pub edge_dims: BTreeMap<String, Vec<usize>>,
    pub restrictions: Vec<RestrictionSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RestrictionSpec {
    pub edge: String,
    pub side: Side,
    pub grade: usize,
    pub matrix: Vec<Vec<[i64; 2]>>,
}

impl CochainSystemSpec {
    pub fn build(&self, graph: &Graph) -> Result<CochainSystem> {
        let dims = |m: &BTreeMap<String, Vec<usize>>, ids: Vec<&String>| -> Result<Vec<Vec<usize>>> {
            ids.iter().map(|id| m.get(*id).cloned().ok_or_else(|| Error::Validation(format!("no graded dimensions for `{id}`")))).collect()
        };
        let a_dims = dims(&self.vertex_dims, graph.vertices.iter().collect())?;
        let b_dims = dims(&self.edge_dims, graph.edges.iter().map(|e| &e.id).collect())?;
        let mut restrictions: BTreeMap<(usize, Side), Vec<Option<QMatrix>>> = BTreeMap::new();
        for h in graph.half_edges() {
            restrictions.insert((h.edge, h.side), vec![None; self.max_grade + 1]);
        }
        for r in &self.restrictions {
            let e = graph.edge_index(&r.edge).ok_or_else(|| Error::Validation(format!("unknown edge `{}`", r.edge)))?;
            if r.grade > self.max_grade {
                return Err(Error::GradeMissing(r.grade));
            }
            let v = match r.side {
                Side::Tail => graph.edges[e].tail,
                Side::Head => graph.edges[e].head,
            };
            let ncols = a_dims[v][r.grade];
            let mut rows = Vec::new();
            for row in &r.matrix {
                if row.len() != ncols {
                    return Err(Error::Validation(format!("row length mismatch in `{}`", r.edge)));
                }
                let mut out = Vec::new();
                for &[n, d] in row {
                    if d == 0 {
                        return Err(Error::Parse("zero denominator".into()));
                    }
                    out.push(crate::exact::q(n, d));
                }
                rows.push(out);
            }
            let slot = &mut restrictions.get_mut(&(e, r.side)).unwrap()[r.grade];
            if slot.is_some() {
                return Err(Error::Validation(format!("duplicate restriction for `{}` grade {}", r.edge, r.grade)));
            }
            *slot = Some(QMatrix::from_rows(ncols, rows));
        }
        let mut full = BTreeMap::new();
        for ((e, side), mats) in restrictions {
            let v = match side {
                Side::Tail => graph.edges[e].tail,
                Side::Head => graph.edges[e].head,
            };
            let mut out = Vec::new();
            for (qd, m) in mats.into_iter().enumerate() {
                let (br, ac) = (b_dims[e][qd], a_dims[v][qd]);
                out.push(match m {
                    Some(m) => m,
                    None if br == 0 || ac == 0 => QMatrix::zeros(br, ac),
                    None => {
                        return Err(Error::Validation(format!("missing restriction for `{}` ({side:?}) grade {qd}", graph.edges[e].id)))
                    }
                });
            }
            full.insert((e, side), out);
        }
        let sys = CochainSystem { graph: graph.clone(), max_grade: self.max_grade, a_dims, b_dims, restrictions: full };
        sys.validate()?;
        Ok(sys)
    }

    pub fn from_system(sys: &CochainSystem) -> Self {
        let g = &sys.graph;
        let restrictions = sys
            .restrictions
            .iter()
            .flat_map(|((e, side), mats)| {
                mats.iter().enumerate().map(move |(grade, m)| RestrictionSpec {
                    edge: g.edges[*e].id.clone(),
                    side: *side,
                    grade,
                    matrix: m
                        .rows
                        .iter()
                        .map(|r| {
                            r.iter()
                                .map(|x| {
                                    use num_traits::ToPrimitive;
                                    [x.numer().to_i64().unwrap(), x.denom().to_i64().unwrap()]
                                })
                                .collect()
                        })
                        .collect(),
                })
            })
            .collect();
        CochainSystemSpec {
            max_grade: sys.max_grade,
            vertex_dims: g.vertices.iter().cloned().zip(sys.a_dims.iter().cloned()).collect(),
            edge_dims: g.edges.iter().map(|e| e.id.clone()).zip(sys.b_dims.iter().cloned()).collect(),
            restrictions,
        }
    }
}

/// Rank of the stacked restrictions at a vertex, i.e. the dimension of the
/// image of `H*(X_v)` in `⊕_e H*(Y_e)`.
pub fn restriction_image_dim(sys: &CochainSystem, v: usize) -> usize {
    let hs = sys.graph.half_edges_at(v);
    let mut total = 0;
    for q in 0..=sys.max_grade {
        let mut rows = Vec::new();
        for h in &hs {
            rows.extend(sys.restrictions[&(h.edge, h.side)][q].rows.iter().cloned());
        }
        total += QMatrix::from_rows(sys.a_dims[v][q], rows).rank();
    }
    total
}

pub fn zero_vector(n: usize) -> Vec<BigRational> {
    vec![BigRational::zero(); n]
}

pub fn unit_vector(n: usize, i: usize) -> Vec<BigRational> {
    let mut v = zero_vector(n);
    v[i] = BigRational::one();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{EdgeSpec, GraphSpec, VertexSpec};

    pub(crate) fn graph(vs: &[&str], es: &[(&str, &str, &str)]) -> Graph {
        Graph::build(&GraphSpec {
            vertices: vs.iter().map(|v| VertexSpec { id: v.to_string() }).collect(),
            edges: es
                .iter()
                .map(|(i, t, h)| EdgeSpec { id: i.to_string(), tail: t.to_string(), head: h.to_string(), cross_section: "y".into() })
                .collect(),
        })
        .unwrap()
    }

    fn sphere() -> CochainSystem {
        let g = graph(&["a", "b"], &[("e", "a", "b")]);
        CochainSystem::from_presets(&g, &[PieceKind::Cap, PieceKind::Cap]).unwrap()
    }

    fn torus() -> CochainSystem {
        let g = graph(&["a"], &[("e", "a", "a")]);
        CochainSystem::from_presets(&g, &[PieceKind::Tube]).unwrap()
    }

    fn theta() -> CochainSystem {
        let g = graph(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")]);
        CochainSystem::from_presets(&g, &[PieceKind::Pants, PieceKind::Pants]).unwrap()
    }

    #[test]
    fn sphere_cohomology() {
        let s = sphere();
        let r = s.rho_matrix(0).unwrap();
        assert_eq!(r, QMatrix::from_i64(&[vec![-1, 1]], 2));
        let c = s.cohomology();
        assert_eq!(c.h0, vec![1, 0, 0]);
        assert_eq!(c.h1, vec![0, 1, 0]);
        assert_eq!(c.predicted_betti_all(), vec![1, 0, 1]);
        let ss = c.spectral_sequence();
        assert_eq!(ss.e2, vec![vec![1, 0, 0], vec![0, 1, 0]]);
        assert_eq!(ss.converged, vec![1, 0, 1]);
    }

    #[test]
    fn torus_cohomology() {
        let t = torus();
        assert!(t.rho_matrix(0).unwrap().is_zero());
        assert!(t.rho_matrix(1).unwrap().is_zero());
        let c = t.cohomology();
        assert_eq!(&c.h0[..2], &[1, 1]);
        assert_eq!(&c.h1[..2], &[1, 1]);
        assert_eq!(c.predicted_betti(1).unwrap(), 2);
        assert_eq!(c.predicted_betti_all().iter().sum::<usize>(), 4);
        assert_eq!(t.rho_matrix(3), Err(Error::GradeMissing(3)));
        assert_eq!(c.predicted_betti(3), Err(Error::DegreeOutOfRange(3)));
    }

    #[test]
    fn theta_cohomology() {
        let c = theta().cohomology();
        assert_eq!(&c.h0[..2], &[1, 2]);
        assert_eq!(&c.h1[..2], &[2, 1]);
        assert_eq!(c.predicted_betti_all(), vec![1, 4, 1]);
    }

    #[test]
    fn zero_maps() {
        let mut s = theta();
        for mats in s.restrictions.values_mut() {
            for m in mats.iter_mut() {
                *m = QMatrix::zeros(m.nrows, m.ncols);
            }
        }
        let c = s.cohomology();
        assert_eq!(c.h0, vec![2, 4, 0]);
        let ss = c.spectral_sequence();
        assert_eq!(ss.e1, ss.e2);
    }

    #[test]
    fn image_dims_match_star_lagrangians() {
        assert_eq!(restriction_image_dim(&sphere(), 0), 1);
        assert_eq!(restriction_image_dim(&torus(), 0), 2);
        assert_eq!(restriction_image_dim(&theta(), 0), 3);
    }

    #[test]
    fn spec_round_trip() {
        let s = theta();
        let spec = CochainSystemSpec::from_system(&s);
        let json = serde_json::to_string(&spec).unwrap();
        let back: CochainSystemSpec = serde_json::from_str(&json).unwrap();
        let t = back.build(&s.graph).unwrap();
        assert_eq!(t.cohomology().h0, s.cohomology().h0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn random_system(seed: Vec<i64>, flips: Vec<bool>) -> (CochainSystem, CochainSystem) {
            let g = graph(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a"), ("e4", "a", "a")]);
            let mut s = CochainSystem::from_presets(
                &graph(&["a", "b", "c"], &[("e1", "a", "b"), ("e2", "b", "c"), ("e3", "c", "a")]),
                &[PieceKind::Tube, PieceKind::Tube, PieceKind::Tube],
            )
            .unwrap();
            s.graph = g.clone();
            s.a_dims = vec![vec![2, 1, 0], vec![1, 2, 0], vec![1, 1, 0]];
            s.b_dims = vec![vec![1, 2, 0]; 4];
            s.restrictions.clear();
            let mut it = seed.into_iter().cycle();
            for h in g.half_edges() {
                let mats = (0..3)
                    .map(|qd| {
                        let (r, c) = (s.b_dims[h.edge][qd], s.a_dims[h.vertex][qd]);
                        let rows = (0..r).map(|_| (0..c).map(|_| it.next().unwrap()).collect()).collect::<Vec<_>>();
                        QMatrix::from_i64(&rows, c)
                    })
                    .collect();
                s.restrictions.insert((h.edge, h.side), mats);
            }
            s.validate().unwrap();
            let mut flipped = s.clone();
            for (e, f) in flipped.graph.edges.iter_mut().zip(flips) {
                if f {
                    std::mem::swap(&mut e.tail, &mut e.head);
                }
            }
            let mut rs = BTreeMap::new();
            for ((e, side), m) in &s.restrictions {
                let ed = &s.graph.edges[*e];
                let fl = &flipped.graph.edges[*e];
                let ns = if ed.tail == ed.head || fl.tail == ed.tail {
                    *side
                } else {
                    match side {
                        Side::Tail => Side::Head,
                        Side::Head => Side::Tail,
                    }
                };
                rs.insert((*e, ns), m.clone());
            }
            flipped.restrictions = rs;
            (s, flipped)
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]
            #[test]
            fn invariants(seed in proptest::collection::vec(-2i64..3, 7..20),
                          flips in proptest::collection::vec(any::<bool>(), 4)) {
                let (s, f) = random_system(seed, flips);
                let c = s.cohomology();
                for qd in 0..=2 {
                    prop_assert_eq!(c.h0[qd] + c.rank[qd], s.a_dims.iter().map(|d| d[qd]).sum::<usize>());
                }
                prop_assert_eq!(c.predicted_betti_all().iter().sum::<usize>(), c.total());
                let cf = f.cohomology();
                prop_assert_eq!(cf.predicted_betti_all(), c.predicted_betti_all());
            }
        }
    }
}
