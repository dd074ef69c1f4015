//! Atomic output files and run manifests.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::Failure;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_sha256(path: &Path) -> Result<String, Failure> {
    let mut file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = file
            .read(&mut buf)
            .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex(&hasher.finalize()))
}

/// Writes via a temporary file in the target directory, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let internal = |e: io::Error| Failure::Internal(format!("writing {}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(internal)?;
    tmp.write_all(bytes).map_err(internal)?;
    tmp.as_file().sync_all().map_err(internal)?;
    tmp.persist(path).map_err(|e| internal(e.error))?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every output file.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub inputs: BTreeMap<String, FileDigest>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub output: Option<FileDigest>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            seed: None,
            config: serde_json::Value::Object(Default::default()),
            output: None,
        }
    }

    pub fn input(&mut self, flag: &str, path: &Path) -> Result<(), Failure> {
        let digest = FileDigest {
            path: path.to_path_buf(),
            sha256: file_sha256(path)?,
        };
        let mut key = flag.to_string();
        let mut i = 1;
        while self.inputs.contains_key(&key) {
            i += 1;
            key = format!("{flag}#{i}");
        }
        self.inputs.insert(key, digest);
        Ok(())
    }

    pub fn config(&mut self, key: &str, value: impl Serialize) {
        let value = serde_json::to_value(value).expect("config value serializes");
        if let serde_json::Value::Object(map) = &mut self.config {
            map.insert(key.to_string(), value);
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Where a command's main output goes.
#[derive(Debug, Clone, Default)]
pub struct Destination {
    pub out: Option<PathBuf>,
    pub manifest: Option<PathBuf>,
}

impl Destination {
    /// Writes the output (stdout when no path) and, for file outputs or an
    /// explicit manifest path, the manifest.
    pub fn emit(&self, bytes: &[u8], mut manifest: RunManifest) -> Result<(), Failure> {
        match &self.out {
            Some(path) => {
                write_atomic(path, bytes)?;
                manifest.output = Some(FileDigest {
                    path: path.clone(),
                    sha256: sha256_hex(bytes),
                });
            }
            None => {
                let mut stdout = io::stdout().lock();
                stdout
                    .write_all(bytes)
                    .and_then(|_| stdout.flush())
                    .map_err(|e| Failure::Internal(format!("writing stdout: {e}")))?;
                manifest.output = Some(FileDigest {
                    path: PathBuf::from("-"),
                    sha256: sha256_hex(bytes),
                });
            }
        }
        let target = self.manifest.clone().or_else(|| self.out.as_deref().map(manifest_path));
        if let Some(target) = target {
            let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            text.push('\n');
            write_atomic(&target, text.as_bytes())?;
        }
        Ok(())
    }
}
