//! Output directory handling: config hash, file headers and the run
//! manifest. The manifest is the only file that carries a timestamp.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub struct Output {
    dir: PathBuf,
    command: String,
    seed: u64,
    hash: String,
    inputs: Vec<(String, String)>,
    files: Vec<String>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl Output {
    /// Hashes the command, the effective configuration (after flag
    /// overrides) and the contents of every input file.
    pub fn new(dir: &Path, command: &str, config: &impl Serialize, seed: u64, inputs: &[&Path]) -> Result<Self> {
        let mut input_hashes = Vec::new();
        for p in inputs {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            input_hashes.push((p.display().to_string(), hex(&Sha256::digest(&bytes))));
        }
        let material = json!({
            "command": command,
            "config": config,
            "seed": seed,
            "inputs": input_hashes.iter().map(|(_, h)| h).collect::<Vec<_>>(),
        });
        let hash = hex(&Sha256::digest(serde_json::to_vec(&material)?));
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Self { dir: dir.to_path_buf(), command: command.into(), seed, hash, inputs: input_hashes, files: Vec::new() })
    }

    /// Comment lines for CSV headers.
    pub fn comments(&self) -> Vec<String> {
        vec![format!("config_hash={}", self.hash), format!("seed={}", self.seed)]
    }

    pub fn create(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.files.push(name.into());
        Ok(BufWriter::new(f))
    }

    /// Writes `value` as pretty JSON with a `config_hash` field added.
    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        match &mut v {
            Value::Object(map) => {
                map.insert("config_hash".into(), Value::String(self.hash.clone()));
            }
            other => v = json!({ "config_hash": self.hash, "value": other.take() }),
        }
        let mut w = self.create(name)?;
        serde_json::to_writer_pretty(&mut w, &v)?;
        use std::io::Write;
        writeln!(w)?;
        w.flush()?;
        Ok(())
    }

    pub fn finish(self, status: &str) -> Result<()> {
        let created = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        let manifest = json!({
            "command": self.command,
            "config_hash": self.hash,
            "seed": self.seed,
            "status": status,
            "files": self.files,
            "inputs": self.inputs.iter().map(|(p, h)| json!({"path": p, "sha256": h})).collect::<Vec<_>>(),
            "versions": { "optispin": optispin::VERSION, "optispin-cli": env!("CARGO_PKG_VERSION") },
            "created_unix": created,
        });
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }
}
