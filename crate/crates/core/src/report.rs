//! Artifact writing: hashing, JSON/CSV emitters and per-directory manifests.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// Pretty JSON with a trailing newline. Field order follows declaration order,
/// so output is byte-stable.
pub fn json_bytes<T: Serialize + ?Sized>(value: &T) -> Result<Vec<u8>> {
    let mut v = serde_json::to_vec_pretty(value)?;
    v.push(b'\n');
    Ok(v)
}

pub fn write_bytes(path: impl AsRef<Path>, bytes: &[u8]) -> Result<()> {
    let path = path.as_ref();
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize + ?Sized>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    write_bytes(path, &json_bytes(value)?)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<T> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_slice(&bytes).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Serializes `rows` as CSV with a header row.
pub fn csv_bytes<R: Serialize>(rows: &[R]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Csv(e.into_error().into()))
}

pub fn write_csv<R: Serialize>(path: impl AsRef<Path>, rows: &[R]) -> Result<()> {
    write_bytes(path, &csv_bytes(rows)?)
}

pub fn read_csv<R: for<'de> Deserialize<'de>>(path: impl AsRef<Path>) -> Result<Vec<R>> {
    let path = path.as_ref();
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Provenance block embedded in reports.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    /// Input file name to SHA-256 of its bytes.
    #[serde(default)]
    pub inputs: BTreeMap<String, String>,
}

impl Provenance {
    pub fn new(config_digest: Option<String>) -> Self {
        Provenance {
            tool_version: crate::TOOL_VERSION.to_string(),
            config_digest,
            inputs: BTreeMap::new(),
        }
    }

    pub fn add_input(&mut self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let name = path
            .file_name()
            .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned());
        let mut key = name.clone();
        let mut i = 1;
        while self.inputs.contains_key(&key) {
            i += 1;
            key = format!("{name}#{i}");
        }
        self.inputs.insert(key, file_sha256(path)?);
        Ok(())
    }
}

/// Returns the single config digest shared by all inputs. Inputs without a
/// digest are ignored. Differing digests are an error unless `allow_mixed`.
pub fn common_config_digest<'a>(
    digests: impl IntoIterator<Item = (&'a str, Option<&'a str>)>,
    allow_mixed: bool,
) -> Result<Option<String>> {
    let mut seen: Option<(&str, &str)> = None;
    let mut mixed = false;
    for (name, d) in digests {
        let Some(d) = d else { continue };
        match seen {
            None => seen = Some((name, d)),
            Some((first, prev)) if prev != d => {
                if !allow_mixed {
                    return Err(Error::Plan(format!(
                        "config digest mismatch: `{first}` has {prev}, `{name}` has {d}"
                    )));
                }
                mixed = true;
            }
            Some(_) => {}
        }
    }
    Ok(if mixed { None } else { seen.map(|(_, d)| d.to_string()) })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

/// Listing of every artifact in an output directory with its hash.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config_digest: Option<String>,
    pub seed: Option<u64>,
    pub artifacts: Vec<ManifestEntry>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

impl Manifest {
    /// Loads the directory's manifest, or starts an empty one.
    pub fn open(dir: impl AsRef<Path>, config_digest: Option<String>, seed: Option<u64>) -> Result<Self> {
        let path = dir.as_ref().join(MANIFEST_FILE);
        let mut m = if path.exists() {
            read_json::<Manifest>(&path)?
        } else {
            Manifest {
                tool_version: crate::TOOL_VERSION.to_string(),
                config_digest: None,
                seed: None,
                artifacts: Vec::new(),
            }
        };
        if config_digest.is_some() {
            m.config_digest = config_digest;
        }
        if seed.is_some() {
            m.seed = seed;
        }
        m.tool_version = crate::TOOL_VERSION.to_string();
        Ok(m)
    }

    /// Records (or refreshes) the entry for a file inside `dir`.
    pub fn record(&mut self, dir: impl AsRef<Path>, file: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        let file = file.as_ref();
        let full: PathBuf = if file.is_absolute() { file.to_path_buf() } else { dir.join(file) };
        let rel = full
            .strip_prefix(dir)
            .unwrap_or(&full)
            .to_string_lossy()
            .replace('\\', "/");
        let bytes = fs::read(&full).map_err(|e| Error::io(&full, e))?;
        let entry = ManifestEntry {
            path: rel,
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        };
        match self.artifacts.iter_mut().find(|a| a.path == entry.path) {
            Some(a) => *a = entry,
            None => self.artifacts.push(entry),
        }
        self.artifacts.sort_by(|a, b| a.path.cmp(&b.path));
        Ok(())
    }

    pub fn save(&self, dir: impl AsRef<Path>) -> Result<()> {
        write_json(dir.as_ref().join(MANIFEST_FILE), self)
    }

    /// Re-hashes every listed artifact; returns the paths that changed.
    pub fn verify(&self, dir: impl AsRef<Path>) -> Result<Vec<String>> {
        let dir = dir.as_ref();
        let mut changed = Vec::new();
        for a in &self.artifacts {
            let p = dir.join(&a.path);
            if !p.exists() || file_sha256(&p)? != a.sha256 {
                changed.push(a.path.clone());
            }
        }
        Ok(changed)
    }
}
