//! Artifact directories and their manifests.
//!
//! Every file written through [`OutDir`] is hashed; the manifest records the
//! invocation, the resolved scenario and those hashes, which is enough to
//! re-run the command and compare bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CliError;
use crate::scenario::Scenario;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Hawkes,
    Volterra,
    Book,
    Price,
    Coupled,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    /// Replace λ₁ by β₁ + 2β₂ in the closed form.
    Lambda1,
}

/// The command that produced an artifact directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Invocation {
    Verify {
        seed: u64,
        mutate: Option<Mutation>,
    },
    Simulate {
        stage: Stage,
        scenario: Box<Scenario>,
    },
    ScalingStudy {
        scenario: Box<Scenario>,
    },
    Analyze {
        ticks: PathBuf,
        depth: Option<PathBuf>,
        window: Option<f64>,
        max_lag: usize,
        /// sha256 of each input file
        inputs: BTreeMap<String, String>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub tool: String,
    pub invocation: Invocation,
    pub threads: usize,
    pub git_describe: String,
    pub wall_time_s: f64,
    /// relative path → sha256
    pub artifacts: BTreeMap<String, String>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

/// `git describe` of the source tree the binary was built from.
pub fn git_describe() -> String {
    Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .current_dir(env!("CARGO_MANIFEST_DIR"))
        .output()
        .ok()
        .filter(|o| o.status.success())
        .and_then(|o| String::from_utf8(o.stdout).ok())
        .map(|s| s.trim().to_string())
        .unwrap_or_else(|| "unknown".to_string())
}

/// An output directory whose files are hashed as they are written.
#[derive(Debug)]
pub struct OutDir {
    root: PathBuf,
    artifacts: BTreeMap<String, String>,
}

impl OutDir {
    /// Creates the directory and checks that it is writable.
    pub fn create(root: &Path) -> Result<Self, CliError> {
        let unwritable = |e: std::io::Error| CliError::Runtime(format!("output directory {} is not writable: {e}", root.display()));
        fs::create_dir_all(root).map_err(unwritable)?;
        let probe = root.join(".roughbook-write-test");
        fs::write(&probe, b"").map_err(unwritable)?;
        let _ = fs::remove_file(&probe);
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: BTreeMap::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, rel: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        self.artifacts.insert(rel.to_string(), sha256_hex(bytes));
        Ok(())
    }

    pub fn write_json_lines<T: Serialize>(&mut self, rel: &str, records: &[T]) -> Result<(), CliError> {
        let mut buf = Vec::new();
        for r in records {
            serde_json::to_writer(&mut buf, r).map_err(CliError::runtime)?;
            buf.push(b'\n');
        }
        self.write(rel, &buf)
    }

    pub fn finish(self, invocation: Invocation, threads: usize, wall_time_s: f64) -> Result<Manifest, CliError> {
        let m = Manifest {
            tool: format!("roughbook {}", env!("CARGO_PKG_VERSION")),
            invocation,
            threads,
            git_describe: git_describe(),
            wall_time_s,
            artifacts: self.artifacts,
        };
        let path = self.root.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&m).map_err(CliError::runtime)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::io(&path, e))?;
        Ok(m)
    }
}

/// Builds a CSV in memory from a header and rows of numbers.
pub struct Csv {
    buf: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, values: &[f64]) {
        let mut first = true;
        for v in values {
            if !first {
                self.buf.push(',');
            }
            first = false;
            self.buf.push_str(&v.to_string());
        }
        self.buf.push('\n');
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}
