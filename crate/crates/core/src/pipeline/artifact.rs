//! JSON-lines artifacts, content hashes and the stage manifest.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PipelineError;

pub const ARTIFACT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

/// First line of every JSON-lines artifact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactHeader {
    pub artifact: String,
    pub version: u32,
    pub stage: String,
    pub records: usize,
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Data(format!("{}: {e}", path.display()))
}

/// Write via a temporary sibling so readers never see half a file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(|e| io_err(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

pub fn write_jsonl<T: Serialize>(
    path: &Path,
    artifact: &str,
    stage: &str,
    records: &[T],
) -> Result<(), PipelineError> {
    let header = ArtifactHeader {
        artifact: artifact.to_string(),
        version: ARTIFACT_VERSION,
        stage: stage.to_string(),
        records: records.len(),
    };
    let mut buf = BufWriter::new(Vec::new());
    serde_json::to_writer(&mut buf, &header).map_err(|e| io_err(path, e))?;
    buf.write_all(b"\n").map_err(|e| io_err(path, e))?;
    for r in records {
        serde_json::to_writer(&mut buf, r).map_err(|e| io_err(path, e))?;
        buf.write_all(b"\n").map_err(|e| io_err(path, e))?;
    }
    let bytes = buf.into_inner().map_err(|e| io_err(path, e))?;
    write_atomic(path, &bytes)
}

/// Reads records after checking the header names the expected artifact.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path, artifact: &str) -> Result<Vec<T>, PipelineError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let first = lines
        .next()
        .ok_or_else(|| io_err(path, "empty artifact"))?
        .map_err(|e| io_err(path, e))?;
    let header: ArtifactHeader =
        serde_json::from_str(&first).map_err(|e| io_err(path, format!("bad header: {e}")))?;
    if header.artifact != artifact || header.version != ARTIFACT_VERSION {
        return Err(io_err(
            path,
            format!(
                "expected {artifact} v{ARTIFACT_VERSION}, found {} v{}",
                header.artifact, header.version
            ),
        ));
    }
    let mut out = Vec::with_capacity(header.records);
    for (i, line) in lines.enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        out.push(serde_json::from_str(&line).map_err(|e| io_err(path, format!("record {}: {e}", i + 1)))?);
    }
    if out.len() != header.records {
        return Err(io_err(
            path,
            format!("header promises {} records, found {}", header.records, out.len()),
        ));
    }
    Ok(out)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

pub fn hash_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Digest over the sorted relative paths and contents of every file below
/// `dir`.
pub fn hash_tree(dir: &Path) -> Result<String, PipelineError> {
    fn walk(root: &Path, dir: &Path, out: &mut Vec<(String, PathBuf)>) -> Result<(), PipelineError> {
        for entry in std::fs::read_dir(dir).map_err(|e| io_err(dir, e))? {
            let path = entry.map_err(|e| io_err(dir, e))?.path();
            if path.is_dir() {
                walk(root, &path, out)?;
            } else {
                let rel = path.strip_prefix(root).unwrap_or(&path);
                out.push((rel.to_string_lossy().replace('\\', "/"), path));
            }
        }
        Ok(())
    }
    let mut files = Vec::new();
    walk(dir, dir, &mut files)?;
    files.sort();
    let mut h = Sha256::new();
    for (rel, path) in files {
        h.update(rel.as_bytes());
        h.update([0]);
        h.update(hash_file(&path)?.as_bytes());
        h.update([0]);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

pub fn hash_path(path: &Path) -> Result<String, PipelineError> {
    if path.is_dir() {
        hash_tree(path)
    } else {
        hash_file(path)
    }
}

/// What a stage saw and produced the last time it ran.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageEntry {
    pub params: String,
    pub inputs: BTreeMap<String, String>,
    pub outputs: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub stages: BTreeMap<String, StageEntry>,
}

impl Default for Manifest {
    fn default() -> Self {
        Manifest {
            version: ARTIFACT_VERSION,
            stages: BTreeMap::new(),
        }
    }
}

impl Manifest {
    pub fn load(output_dir: &Path) -> Result<Self, PipelineError> {
        let path = output_dir.join(MANIFEST_FILE);
        if !path.exists() {
            return Ok(Manifest::default());
        }
        let text = std::fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
        serde_json::from_str(&text).map_err(|e| io_err(&path, e))
    }

    pub fn save(&self, output_dir: &Path) -> Result<(), PipelineError> {
        write_json(&output_dir.join(MANIFEST_FILE), self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    struct Rec {
        n: u32,
    }

    #[test]
    fn jsonl_round_trip_checks_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        let recs = vec![Rec { n: 1 }, Rec { n: 2 }];
        write_jsonl(&p, "recs", "test", &recs).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("{\"artifact\":\"recs\",\"version\":1,\"stage\":\"test\",\"records\":2}\n"));
        assert_eq!(read_jsonl::<Rec>(&p, "recs").unwrap(), recs);
        assert!(read_jsonl::<Rec>(&p, "other").is_err());
    }

    #[test]
    fn truncated_artifact_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.jsonl");
        write_jsonl(&p, "recs", "test", &[Rec { n: 1 }, Rec { n: 2 }]).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let cut: Vec<&str> = text.lines().take(2).collect();
        std::fs::write(&p, cut.join("\n")).unwrap();
        assert!(read_jsonl::<Rec>(&p, "recs").is_err());
    }

    #[test]
    fn tree_hash_sees_renames_and_edits() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::create_dir(dir.path().join("x")).unwrap();
        std::fs::write(dir.path().join("x/A.java"), "class A {}").unwrap();
        let h1 = hash_tree(dir.path()).unwrap();
        std::fs::write(dir.path().join("x/A.java"), "class A { }").unwrap();
        let h2 = hash_tree(dir.path()).unwrap();
        std::fs::rename(dir.path().join("x/A.java"), dir.path().join("x/B.java")).unwrap();
        let h3 = hash_tree(dir.path()).unwrap();
        assert_ne!(h1, h2);
        assert_ne!(h2, h3);
        assert_eq!(h3, hash_tree(dir.path()).unwrap());
    }

    #[test]
    fn sha256_known_vector() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
