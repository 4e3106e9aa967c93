use std::collections::BTreeMap;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const MANIFEST_FILE: &str = "manifest.json";

/// Provenance of one output directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub stage: String,
    pub inputs: Vec<String>,
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    /// Relative path -> hex SHA-256, for every file under the directory except this manifest.
    pub outputs: BTreeMap<String, String>,
}

impl RunManifest {
    pub fn new(stage: &str, inputs: Vec<String>, params: serde_json::Value, seed: Option<u64>) -> Self {
        Self {
            tool: "gridscope".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            stage: stage.into(),
            inputs,
            params,
            seed,
            outputs: BTreeMap::new(),
        }
    }

    /// Checksums `dir` and writes `dir/manifest.json`.
    pub fn write(mut self, dir: &Path) -> Result<Self, PipelineError> {
        self.outputs = checksum_tree(dir)?;
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        fs::write(&path, text).map_err(|source| PipelineError::Io { path, source })?;
        Ok(self)
    }

    pub fn read(dir: &Path) -> Result<Self, PipelineError> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|source| PipelineError::Io {
            path: path.clone(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| PipelineError::BadInput(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let io = |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut f = fs::File::open(path).map_err(io)?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(io)?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

fn walk(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<(), PipelineError> {
    let io = |source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    };
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        if path.is_dir() {
            walk(root, &path, out)?;
        } else if path != root.join(MANIFEST_FILE) {
            out.push(path);
        }
    }
    Ok(())
}

/// Relative path (with `/` separators) -> SHA-256 of every file below `dir`,
/// excluding `dir/manifest.json`.
pub fn checksum_tree(dir: &Path) -> Result<BTreeMap<String, String>, PipelineError> {
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files
        .into_iter()
        .map(|p| {
            let rel = p
                .strip_prefix(dir)
                .expect("walked below dir")
                .components()
                .map(|c| c.as_os_str().to_string_lossy())
                .collect::<Vec<_>>()
                .join("/");
            Ok((rel, sha256_file(&p)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checksums_are_relative_and_skip_own_manifest() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir(dir.path().join("sub")).unwrap();
        fs::write(dir.path().join("a.txt"), "abc").unwrap();
        fs::write(dir.path().join("sub/b.txt"), "").unwrap();
        let m = RunManifest::new("test", vec![], serde_json::json!({}), Some(1))
            .write(dir.path())
            .unwrap();
        assert_eq!(
            m.outputs["a.txt"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert!(m.outputs.contains_key("sub/b.txt"));
        let again = RunManifest::new("test", vec![], serde_json::json!({}), Some(1))
            .write(dir.path())
            .unwrap();
        assert_eq!(again.outputs.len(), 2);
        assert_eq!(RunManifest::read(dir.path()).unwrap(), again);
    }
}
