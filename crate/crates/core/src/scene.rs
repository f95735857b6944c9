//! Scene files: graph, cross-sections, piece assignments, an optional
//! explicit cochain system and numeric parameters.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cech::{CochainSystem, CochainSystemSpec, PieceKind};
use crate::complex::assemble::{EdgeGeometry, Geometry};
use crate::complex::pieces::PieceParams;
use crate::cross_section::CrossSectionSpectrum;
use crate::error::{Error, Result};
use crate::graph::{Graph, GraphSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossSectionSpec {
    pub id: String,
    pub circumference: f64,
    pub n_theta: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneParams {
    pub h: f64,
    /// Stretch used by single-`r` commands.
    pub r: f64,
    pub r_grid: Vec<f64>,
    pub r_ref: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub tol: f64,
    /// Restriction length of the gap experiment.
    #[serde(default = "default_gap_s")]
    pub gap_s: f64,
}

fn default_gap_s() -> f64 {
    1.0
}

impl Default for SceneParams {
    fn default() -> Self {
        SceneParams { h: 0.3, r: 3.0, r_grid: vec![2.0, 3.0, 4.0, 5.0, 6.0], r_ref: 6.0, epsilon: 0.5, seed: 7, tol: 1e-10, gap_s: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scene {
    pub name: String,
    pub graph: GraphSpec,
    pub cross_sections: Vec<CrossSectionSpec>,
    /// Piece kind per vertex id.
    pub pieces: BTreeMap<String, PieceKind>,
    /// Rotational offset of the head gluing per edge id (default 0).
    #[serde(default)]
    pub offsets: BTreeMap<String, usize>,
    #[serde(default)]
    pub cochain_system: Option<CochainSystemSpec>,
    #[serde(default)]
    pub params: SceneParams,
}

/// Names of the scenes bundled with the library.
pub const SHIPPED: [&str; 3] = ["sphere", "torus", "theta"];

/// A bundled scene by name.
pub fn shipped(name: &str) -> Result<Scene> {
    let text = match name {
        "sphere" => include_str!("../../../scenes/sphere.json"),
        "torus" => include_str!("../../../scenes/torus.json"),
        "theta" => include_str!("../../../scenes/theta.json"),
        _ => return Err(Error::Validation(format!("no shipped scene `{name}`"))),
    };
    Scene::from_json(text)
}

/// Flag overrides applied on top of a scene's parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol: Option<f64>,
    pub r_grid: Option<Vec<f64>>,
    pub epsilon: Option<f64>,
    pub h: Option<f64>,
}

/// Parse `a:b:step` into an ascending grid including `b` when reached.
pub fn parse_r_grid(s: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(Error::Parse(format!("r grid `{s}` is not of the form a:b:step")));
    }
    let num = |x: &str| x.trim().parse::<f64>().map_err(|e| Error::Parse(format!("r grid `{s}`: {e}")));
    let (a, b, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
    if !(step > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Validation(format!("r grid `{s}` needs a positive step")));
    }
    let n = ((b - a) / step + 1e-9).floor();
    if n < 0.0 {
        return Ok(Vec::new());
    }
    Ok((0..=n as usize).map(|i| a + i as f64 * step).collect())
}

impl Scene {
    pub fn from_json(text: &str) -> Result<Scene> {
        let scene: Scene = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn load(path: &Path) -> Result<Scene> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        Scene::from_json(&text)
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<()> {
        if let Some(x) = o.seed {
            self.params.seed = x;
        }
        if let Some(x) = o.tol {
            self.params.tol = x;
        }
        if let Some(x) = &o.r_grid {
            self.params.r_grid = x.clone();
        }
        if let Some(x) = o.epsilon {
            self.params.epsilon = x;
        }
        if let Some(x) = o.h {
            self.params.h = x;
        }
        self.validate()
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.build_graph()?;
        for e in &self.graph.edges {
            if !self.cross_sections.iter().any(|c| c.id == e.cross_section) {
                return Err(Error::Validation(format!("edge `{}` references unknown cross-section `{}`", e.id, e.cross_section)));
            }
        }
        for v in &g.vertices {
            if !self.pieces.contains_key(v) {
                return Err(Error::Validation(format!("vertex `{v}` has no piece kind")));
            }
        }
        for k in self.pieces.keys().chain(self.offsets.keys()) {
            if g.vertex_index(k).is_none() && g.edge_index(k).is_none() {
                return Err(Error::Validation(format!("unknown id `{k}`")));
            }
        }
        for c in &self.cross_sections {
            if !(c.circumference > 0.0) || c.n_theta < 8 {
                return Err(Error::Validation(format!("cross-section `{}` needs circumference > 0 and n_theta ≥ 8", c.id)));
            }
        }
        let p = &self.params;
        if p.r_grid.is_empty() {
            return Err(Error::Validation("empty r grid".into()));
        }
        if p.r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Validation("r grid must be strictly ascending".into()));
        }
        for (name, x) in [("h", p.h), ("tol", p.tol), ("r", p.r), ("r_ref", p.r_ref), ("epsilon", p.epsilon), ("gap_s", p.gap_s)] {
            if !(x > 0.0) || !x.is_finite() {
                return Err(Error::Validation(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }

    pub fn build_graph(&self) -> Result<Graph> {
        Graph::build(&self.graph)
    }

    /// SHA-256 of the canonical JSON encoding (keys sorted).
    pub fn hash(&self) -> String {
        let value = serde_json::to_value(self).expect("scene serializes");
        let bytes = serde_json::to_vec(&value).expect("value serializes");
        hex::encode(Sha256::digest(&bytes))
    }

    fn cross_section(&self, id: &str) -> &CrossSectionSpec {
        self.cross_sections.iter().find(|c| c.id == id).expect("validated")
    }

    pub fn kinds(&self, g: &Graph) -> Vec<PieceKind> {
        g.vertices.iter().map(|v| self.pieces[v]).collect()
    }

    pub fn geometry(&self) -> Result<Geometry> {
        let g = self.build_graph()?;
        let kinds = self.kinds(&g);
        let edges = g
            .edges
            .iter()
            .map(|e| {
                let c = self.cross_section(&e.cross_section);
                EdgeGeometry { length: c.circumference, n_theta: c.n_theta, offset: self.offsets.get(&e.id).copied().unwrap_or(0) }
            })
            .collect();
        Geometry::new(g, kinds, edges, PieceParams::new(self.params.h))
    }

    /// Cross-section spectrum of every edge, in graph edge order.
    pub fn spectra(&self) -> Result<Vec<CrossSectionSpectrum>> {
        let g = self.build_graph()?;
        g.edges
            .iter()
            .map(|e| {
                let c = self.cross_section(&e.cross_section);
                CrossSectionSpectrum::new(&c.id, c.circumference, c.n_theta)
            })
            .collect()
    }

    /// Spectrum of every declared cross-section, in declaration order.
    pub fn spectra_by_id(&self) -> Result<Vec<CrossSectionSpectrum>> {
        self.cross_sections.iter().map(|c| CrossSectionSpectrum::new(&c.id, c.circumference, c.n_theta)).collect()
    }

    /// Explicit cochain system if given, otherwise the piece presets.
    pub fn cochain_system(&self) -> Result<CochainSystem> {
        let g = self.build_graph()?;
        match &self.cochain_system {
            Some(spec) => spec.build(&g),
            None => CochainSystem::from_presets(&g, &self.kinds(&g)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SPHERE: &str = r#"{
        "name": "sphere",
        "graph": {"vertices": [{"id": "a"}, {"id": "b"}], "edges": [{"id": "e", "tail": "a", "head": "b", "cross_section": "y"}]},
        "cross_sections": [{"id": "y", "circumference": 6.283185307179586, "n_theta": 16}],
        "pieces": {"a": "cap", "b": "cap"}
    }"#;

    #[test]
    fn parses_and_hashes_canonically() {
        let s = Scene::from_json(SPHERE).unwrap();
        assert_eq!(s.params, SceneParams::default());
        let compact: String = SPHERE.split_whitespace().collect::<Vec<_>>().join("");
        assert_eq!(Scene::from_json(&compact).unwrap().hash(), s.hash());
        assert_eq!(s.geometry().unwrap().euler(), 2);
        assert_eq!(s.cochain_system().unwrap().cohomology().predicted_betti_all(), vec![1, 0, 1]);
    }

    #[test]
    fn rejects_bad_scenes() {
        let mut s = Scene::from_json(SPHERE).unwrap();
        let err = s.apply(&Overrides { r_grid: Some(vec![]), ..Default::default() });
        assert!(matches!(err, Err(Error::Validation(_))));
        let bad = SPHERE.replace("\"b\": \"cap\"", "\"c\": \"cap\"");
        assert!(matches!(Scene::from_json(&bad), Err(Error::Validation(_))));
        let bad = SPHERE.replace("\"cross_section\": \"y\"", "\"cross_section\": \"z\"");
        assert!(matches!(Scene::from_json(&bad), Err(Error::Validation(_))));
        assert!(matches!(Scene::from_json("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn shipped_scenes_load() {
        for (name, chi) in SHIPPED.iter().zip([2, 0, -2]) {
            let s = shipped(name).unwrap();
            assert_eq!(&s.name, name);
            assert_eq!(s.geometry().unwrap().euler(), chi);
        }
        assert!(shipped("klein").is_err());
    }

    #[test]
    fn r_grid_parsing() {
        assert_eq!(parse_r_grid("2:8:1").unwrap(), vec![2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        assert_eq!(parse_r_grid("2:3:0.5").unwrap(), vec![2.0, 2.5, 3.0]);
        assert!(parse_r_grid("3:2:1").unwrap().is_empty());
        assert!(matches!(parse_r_grid("2:8"), Err(Error::Parse(_))));
        assert!(matches!(parse_r_grid("2:8:0"), Err(Error::Validation(_))));
    }
}
