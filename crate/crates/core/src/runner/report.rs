//! Artifact writers. Every artifact carries the scene hash, the seed and the
//! tool version; files are written to a temporary name and renamed.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::Result;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Meta {
    pub scene: String,
    pub scene_hash: String,
    pub seed: u64,
    pub version: String,
}

impl Meta {
    pub fn new(scene: &str, scene_hash: &str, seed: u64) -> Self {
        Meta { scene: scene.into(), scene_hash: scene_hash.into(), seed, version: VERSION.into() }
    }

    pub fn csv_header(&self) -> String {
        format!("# scene_hash={} seed={} version={}\n", self.scene_hash, self.seed, self.version)
    }
}

/// Write `bytes` to `dir/name` through a temporary file in the same directory.
pub fn write_atomic(dir: &Path, name: &str, bytes: &[u8]) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let path = dir.join(name);
    let tmp = dir.join(format!(".{name}.tmp"));
    std::fs::write(&tmp, bytes)?;
    std::fs::rename(&tmp, &path)?;
    Ok(path)
}

/// CSV body prefixed with the metadata comment line.
pub fn write_csv(dir: &Path, name: &str, meta: &Meta, body: &str) -> Result<PathBuf> {
    let text = format!("{}{body}", meta.csv_header());
    write_atomic(dir, name, text.as_bytes())
}

/// `{meta, command, result}` as pretty JSON.
pub fn write_json(dir: &Path, name: &str, meta: &Meta, command: &str, result: Value) -> Result<PathBuf> {
    let doc = json!({ "meta": meta, "command": command, "result": result });
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_atomic(dir, name, text.as_bytes())
}

/// Serialize any report into a JSON value.
pub fn to_value<T: Serialize>(x: &T) -> Result<Value> {
    Ok(serde_json::to_value(x)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_carry_metadata() {
        let dir = tempfile::tempdir().unwrap();
        let meta = Meta::new("s", "abc", 3);
        let p = write_csv(dir.path(), "x.csv", &meta, "a,b\n1,2\n").unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        assert_eq!(text, format!("# scene_hash=abc seed=3 version={VERSION}\na,b\n1,2\n"));
        let p = write_json(dir.path(), "x.json", &meta, "c", json!({"k": 1})).unwrap();
        let v: Value = serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap();
        assert_eq!(v["meta"]["scene_hash"], "abc");
        assert_eq!(v["result"]["k"], 1);
        let left: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(left.len(), 2, "no temporary files remain");
    }
}
