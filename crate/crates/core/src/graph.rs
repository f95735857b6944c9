//! Finite oriented graphs with half-edges and the simplicial boundary map.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Edge record as it appears in a scene file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeSpec {
    pub id: String,
    pub tail: String,
    pub head: String,
    #[serde(default)]
    pub cross_section: String,
}

/// Vertex record as it appears in a scene file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VertexSpec {
    pub id: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub vertices: Vec<VertexSpec>,
    pub edges: Vec<EdgeSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub id: String,
    pub tail: usize,
    pub head: usize,
    pub cross_section: String,
}

/// Orientation side of a half-edge. `Tail` carries sign +1, `Head` sign -1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Side {
    Tail,
    Head,
}

impl Side {
    pub fn sign(self) -> i32 {
        match self {
            Side::Tail => 1,
            Side::Head => -1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HalfEdge {
    pub vertex: usize,
    pub edge: usize,
    pub side: Side,
}

impl HalfEdge {
    pub fn sign(&self) -> i32 {
        self.side.sign()
    }
}

/// Oriented graph with vertices and edges sorted by id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    pub vertices: Vec<String>,
    pub edges: Vec<Edge>,
}

impl Graph {
    pub fn build(spec: &GraphSpec) -> Result<Graph> {
        let mut vids: Vec<String> = Vec::new();
        let mut seen = BTreeSet::new();
        for v in &spec.vertices {
            if !seen.insert(v.id.clone()) {
                return Err(Error::DuplicateId(v.id.clone()));
            }
            vids.push(v.id.clone());
        }
        vids.sort();
        let index: BTreeMap<&str, usize> = vids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut eseen = BTreeSet::new();
        let mut edges = Vec::new();
        for e in &spec.edges {
            if !eseen.insert(e.id.clone()) {
                return Err(Error::DuplicateId(e.id.clone()));
            }
            let look = |v: &str| index.get(v).copied().ok_or_else(|| Error::DanglingEndpoint { edge: e.id.clone(), vertex: v.to_string() });
            edges.push(Edge { id: e.id.clone(), tail: look(&e.tail)?, head: look(&e.head)?, cross_section: e.cross_section.clone() });
        }
        edges.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Graph { vertices: vids, edges })
    }

    pub fn vertex_index(&self, id: &str) -> Option<usize> {
        self.vertices.iter().position(|v| v == id)
    }

    pub fn edge_index(&self, id: &str) -> Option<usize> {
        self.edges.iter().position(|e| e.id == id)
    }

    /// All half-edges, ordered by edge then tail before head.
    pub fn half_edges(&self) -> Vec<HalfEdge> {
        let mut out = Vec::with_capacity(2 * self.edges.len());
        for (i, e) in self.edges.iter().enumerate() {
            out.push(HalfEdge { vertex: e.tail, edge: i, side: Side::Tail });
            out.push(HalfEdge { vertex: e.head, edge: i, side: Side::Head });
        }
        out
    }

    /// Half-edges at `v` in canonical order. This order also fixes which
    /// boundary circle of the vertex piece is glued to which edge.
    pub fn half_edges_at(&self, v: usize) -> Vec<HalfEdge> {
        self.half_edges().into_iter().filter(|h| h.vertex == v).collect()
    }

    /// Simplicial boundary `C_1 -> C_0`; column of `(v, v')` is `e_{v'} - e_v`.
    pub fn boundary_matrix(&self) -> DMatrix<i64> {
        let mut m = DMatrix::zeros(self.vertices.len(), self.edges.len());
        for (j, e) in self.edges.iter().enumerate() {
            m[(e.head, j)] += 1;
            m[(e.tail, j)] -= 1;
        }
        m
    }

    pub fn boundary_rank(&self) -> usize {
        integer_rank(&self.boundary_matrix())
    }

    pub fn components(&self) -> usize {
        let n = self.vertices.len();
        let mut adj = vec![Vec::new(); n];
        for e in &self.edges {
            adj[e.tail].push(e.head);
            adj[e.head].push(e.tail);
        }
        let mut seen = vec![false; n];
        let mut count = 0;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            count += 1;
            seen[s] = true;
            let mut q = VecDeque::from([s]);
            while let Some(u) = q.pop_front() {
                for &w in &adj[u] {
                    if !seen[w] {
                        seen[w] = true;
                        q.push_back(w);
                    }
                }
            }
        }
        count
    }

    pub fn is_connected(&self) -> bool {
        self.components() <= 1
    }

    /// `(b0, b1)` of the graph from the exact boundary rank.
    pub fn betti(&self) -> (usize, usize) {
        let rk = self.boundary_rank();
        (self.vertices.len() - rk, self.edges.len() - rk)
    }
}

/// Exact rank of an integer matrix by fraction-free elimination.
pub fn integer_rank(m: &DMatrix<i64>) -> usize {
    let rows: Vec<Vec<num_rational::BigRational>> =
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| num_rational::BigRational::from_integer(m[(i, j)].into())).collect()).collect();
    crate::exact::QMatrix::from_rows(m.ncols(), rows).rank()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(vs: &[&str], es: &[(&str, &str, &str)]) -> GraphSpec {
        GraphSpec {
            vertices: vs.iter().map(|v| VertexSpec { id: v.to_string() }).collect(),
            edges: es
                .iter()
                .map(|(i, t, h)| EdgeSpec { id: i.to_string(), tail: t.to_string(), head: h.to_string(), cross_section: "y".into() })
                .collect(),
        }
    }

    #[test]
    fn single_edge_half_edges() {
        let g = Graph::build(&spec(&["a", "b"], &[("e", "a", "b")])).unwrap();
        let hs = g.half_edges();
        assert_eq!(hs[0], HalfEdge { vertex: 0, edge: 0, side: Side::Tail });
        assert_eq!(hs[0].sign(), 1);
        assert_eq!(hs[1], HalfEdge { vertex: 1, edge: 0, side: Side::Head });
        assert_eq!(hs[1].sign(), -1);
        let d = g.boundary_matrix();
        assert_eq!((d[(0, 0)], d[(1, 0)]), (-1, 1));
    }

    #[test]
    fn empty_and_loop() {
        let g = Graph::build(&spec(&["a"], &[])).unwrap();
        assert!(g.half_edges().is_empty());
        assert_eq!(g.betti(), (1, 0));
        let g = Graph::build(&spec(&["a"], &[("e", "a", "a")])).unwrap();
        let hs = g.half_edges_at(0);
        assert_eq!(hs.len(), 2);
        assert_eq!(hs[0].sign() + hs[1].sign(), 0);
        assert_eq!(g.boundary_matrix()[(0, 0)], 0);
        assert_eq!(g.betti(), (1, 1));
    }

    #[test]
    fn theta_betti() {
        let g = Graph::build(&spec(&["a", "b"], &[("e1", "a", "b"), ("e2", "a", "b"), ("e3", "a", "b")])).unwrap();
        assert_eq!(g.boundary_rank(), 1);
        assert_eq!(g.betti(), (1, 2));
    }

    #[test]
    fn errors() {
        assert_eq!(Graph::build(&spec(&["a", "a"], &[])), Err(Error::DuplicateId("a".into())));
        assert!(matches!(Graph::build(&spec(&["a"], &[("e", "a", "z")])), Err(Error::DanglingEndpoint { .. })));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_graph() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
            (1usize..7).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 0..10)))
        }

        fn make(n: usize, es: &[(usize, usize)], rev: bool) -> Graph {
            let mut vs: Vec<VertexSpec> = (0..n).map(|i| VertexSpec { id: format!("v{i}") }).collect();
            let mut ed: Vec<EdgeSpec> = es
                .iter()
                .enumerate()
                .map(|(k, (t, h))| EdgeSpec {
                    id: format!("e{k:02}"),
                    tail: format!("v{t}"),
                    head: format!("v{h}"),
                    cross_section: String::new(),
                })
                .collect();
            if rev {
                vs.reverse();
                ed.reverse();
            }
            Graph::build(&GraphSpec { vertices: vs, edges: ed }).unwrap()
        }

        proptest! {
            #[test]
            fn rank_nullity_and_components((n, es) in arb_graph()) {
                let g = make(n, &es, false);
                let rk = g.boundary_rank();
                let (b0, b1) = g.betti();
                prop_assert_eq!(rk + b1, g.edges.len());
                prop_assert_eq!(b0, g.components());
                let h = make(n, &es, true);
                prop_assert_eq!(h.boundary_matrix(), g.boundary_matrix());
            }
        }
    }
}
