//! Run manifest: what was run, with which inputs, and what it produced.

use std::path::{Path, PathBuf};
use std::time::Instant;

use contour_opt::presets::FieldSpec;
use contour_opt::solver::PhysicsConfig;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// SHA-256 of the effective configuration as canonical JSON.
    pub config_hash: String,
    pub config: RunConfig,
    pub resolutions: Vec<Resolution>,
    pub physics: Option<PhysicsSummary>,
    pub phases: Vec<Phase>,
    pub outputs: Vec<OutputFile>,
    pub summary: serde_json::Value,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Resolution {
    pub n: usize,
    pub m: usize,
}

#[derive(Debug, Serialize)]
pub struct PhysicsSummary {
    pub k: f64,
    pub gamma: f64,
    pub u0: f64,
    pub q: String,
    pub target: String,
    pub region: [f64; 4],
}

impl From<&PhysicsConfig> for PhysicsSummary {
    fn from(p: &PhysicsConfig) -> Self {
        let describe = |f: &FieldSpec| match f {
            FieldSpec::Constant(c) => format!("{c}"),
            FieldSpec::Preset(p) => p.name().to_string(),
            FieldSpec::Samples(g) => format!("samples on {0}x{0} grid", g.n),
        };
        PhysicsSummary {
            k: p.k,
            gamma: p.gamma,
            u0: p.u0,
            q: describe(&p.q),
            target: describe(&p.target),
            region: [p.region.x0, p.region.x1, p.region.y0, p.region.y1],
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Phase {
    pub name: String,
    pub seconds: f64,
}

#[derive(Debug, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub bytes: u64,
}

/// Collects the manifest while a command runs.
pub struct Recorder {
    out: PathBuf,
    files: Vec<String>,
    manifest: RunManifest,
}

pub fn config_hash(config: &RunConfig) -> String {
    let bytes = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Recorder {
    pub fn new(command: &str, out: &Path, config: &RunConfig) -> Result<Recorder, CliError> {
        std::fs::create_dir_all(out).map_err(|e| CliError::config(format!("cannot create {}: {e}", out.display())))?;
        Ok(Recorder {
            out: out.to_path_buf(),
            files: Vec::new(),
            manifest: RunManifest {
                command: command.to_string(),
                version: format!("v{}", env!("CARGO_PKG_VERSION")),
                config_hash: config_hash(config),
                config: config.clone(),
                resolutions: Vec::new(),
                physics: None,
                phases: Vec::new(),
                outputs: Vec::new(),
                summary: serde_json::Value::Null,
            },
        })
    }

    /// Registers an output file relative to the output directory and
    /// returns its full path, creating parent directories.
    pub fn file(&mut self, rel: &str) -> Result<PathBuf, CliError> {
        let path = self.out.join(rel);
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir).map_err(|e| CliError::solver(format!("cannot create {}: {e}", dir.display())))?;
        }
        if !self.files.iter().any(|f| f == rel) {
            self.files.push(rel.to_string());
        }
        Ok(path)
    }

    pub fn phase<T>(&mut self, name: &str, f: impl FnOnce(&mut Self) -> T) -> T {
        let start = Instant::now();
        let out = f(self);
        self.manifest.phases.push(Phase { name: name.to_string(), seconds: start.elapsed().as_secs_f64() });
        out
    }

    pub fn resolution(&mut self, n: usize, m: usize) {
        let r = Resolution { n, m };
        if !self.manifest.resolutions.contains(&r) {
            self.manifest.resolutions.push(r);
        }
    }

    pub fn physics(&mut self, p: &PhysicsConfig) {
        self.manifest.physics = Some(p.into());
    }

    pub fn summary(&mut self, value: serde_json::Value) {
        self.manifest.summary = value;
    }

    /// Checks that every registered output exists and is non-empty, then
    /// writes the manifest.
    pub fn finish(mut self) -> Result<(), CliError> {
        for rel in &self.files {
            let bytes = std::fs::metadata(self.out.join(rel)).map(|m| m.len()).unwrap_or(0);
            if bytes == 0 {
                return Err(CliError::solver(format!("output {rel} is missing or empty")));
            }
            self.manifest.outputs.push(OutputFile { path: rel.clone(), bytes });
        }
        let text = serde_json::to_string_pretty(&self.manifest).expect("manifest serializes");
        std::fs::write(self.out.join(MANIFEST_FILE), text)
            .map_err(|e| CliError::solver(format!("cannot write manifest: {e}")))
    }
}
