use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use weakseg_core::{Error, PipelineConfig, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn hash_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(sha256_hex(&bytes))
}

/// Writes through a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let io = |p: &Path, e| Error::Io {
        path: p.to_path_buf(),
        source: e,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp-{}", std::process::id()));
    std::fs::write(&tmp, bytes).map_err(|e| io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        io(path, e)
    })
}

#[derive(Debug, Serialize)]
pub struct FileRecord {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Provenance written next to every output.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    pub inputs: Vec<FileRecord>,
    pub outputs: Vec<FileRecord>,
}

impl RunManifest {
    pub fn new(command: &str, config: Option<PipelineConfig>) -> Self {
        Self {
            tool: "weakseg",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<()> {
        self.inputs.push(FileRecord {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: hash_file(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path, bytes: &[u8]) {
        self.outputs.push(FileRecord {
            role: role.to_string(),
            path: path
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
            sha256: sha256_hex(bytes),
        });
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self).expect("manifest serializes");
        text.push('\n');
        write_atomic(path, text.as_bytes())
    }
}

/// Collects output files, writes them atomically and records their hashes.
pub struct OutputSet<'a> {
    pub dir: PathBuf,
    pub manifest: &'a mut RunManifest,
}

impl OutputSet<'_> {
    pub fn put(&mut self, role: &str, file_name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.dir.join(file_name);
        write_atomic(&path, bytes)?;
        self.manifest.output(role, &path, bytes);
        eprintln!("weakseg: wrote {}", path.display());
        Ok(path)
    }
}
