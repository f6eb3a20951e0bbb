//! File plumbing shared by every subcommand: error-to-exit-code mapping,
//! artifact load/save helpers, hashing, and the per-run manifest.

use std::fmt;
use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use evasion::bench::BenchError;
use evasion::costmap::{Costmap, CostmapError, Zone};
use evasion::diffusion::{DiffusionCheckpoint, DiffusionError, DiffusionModel};
use evasion::env::{EnvError, WorldConfig};
use evasion::numerics::{Adam, NumericsError};
use evasion::planners::{PathRecord, PlanError};
use evasion::rl::{RlError, SacAgent, SacCheckpoint};

/// Exit codes: 0 success, 1 usage, 2 data/config, 3 runtime.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Data(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Data(m) => write!(f, "data/config error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

impl From<EnvError> for CliError {
    fn from(e: EnvError) -> Self {
        match e {
            EnvError::InvalidConfig(_) | EnvError::Io(_) | EnvError::Parse(_) => {
                CliError::Data(e.to_string())
            }
            EnvError::NoFreeSpace(..) | EnvError::Terminal(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<PlanError> for CliError {
    fn from(e: PlanError) -> Self {
        match e {
            PlanError::Dataset(_) | PlanError::InvalidQuery(_) => CliError::Data(e.to_string()),
            PlanError::NoPath => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<DiffusionError> for CliError {
    fn from(e: DiffusionError) -> Self {
        match e {
            DiffusionError::Schedule(_) | DiffusionError::Shape(_) => {
                CliError::Data(e.to_string())
            }
            DiffusionError::Training(_) | DiffusionError::Numerics(_) => {
                CliError::Runtime(e.to_string())
            }
        }
    }
}

impl From<NumericsError> for CliError {
    fn from(e: NumericsError) -> Self {
        match e {
            NumericsError::Shape(_) | NumericsError::UnsupportedFormatVersion(_) => {
                CliError::Data(e.to_string())
            }
            NumericsError::NonFiniteGradient(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<RlError> for CliError {
    fn from(e: RlError) -> Self {
        match e {
            RlError::Config(_) => CliError::Data(e.to_string()),
            RlError::Env(inner) => inner.into(),
            RlError::Diffusion(inner) => inner.into(),
            RlError::Numerics(inner) => inner.into(),
        }
    }
}

impl From<CostmapError> for CliError {
    fn from(e: CostmapError) -> Self {
        match e {
            CostmapError::ZoneOutsideExtent(_) | CostmapError::Malformed(_) => {
                CliError::Data(e.to_string())
            }
            CostmapError::Env(inner) => inner.into(),
            CostmapError::Diffusion(inner) => inner.into(),
            CostmapError::Rl(inner) => inner.into(),
            CostmapError::AllForbidden => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::Artifact(_) | BenchError::InvalidRequest(_) => {
                CliError::Data(e.to_string())
            }
            BenchError::Env(inner) => inner.into(),
            BenchError::Plan(inner) => inner.into(),
            BenchError::Diffusion(inner) => inner.into(),
            BenchError::Rl(inner) => inner.into(),
            BenchError::Costmap(inner) => inner.into(),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(format!("io error: {e}"))
    }
}

/// Resolve an output path against `EVASION_OUT_ROOT` (relative paths only).
pub fn resolve_out(path: &Path) -> PathBuf {
    match std::env::var_os("EVASION_OUT_ROOT") {
        Some(root) if path.is_relative() => PathBuf::from(root).join(path),
        _ => path.to_path_buf(),
    }
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    Ok(())
}

pub fn sha256_hex(path: &Path) -> Result<String, CliError> {
    let mut file = fs::File::open(path)
        .map_err(|e| CliError::Data(format!("cannot open {}: {e}", path.display())))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(format!("{:x}", hasher.finalize()))
}

pub fn load_config(path: &Path) -> Result<WorldConfig, CliError> {
    WorldConfig::load(path)
        .map_err(|e| CliError::Data(format!("config {}: {e}", path.display())))
}

pub fn load_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {} {}: {e}", what, path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Data(format!("malformed {} {}: {e}", what, path.display())))
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    ensure_parent(path)?;
    let text = serde_json::to_string(value)
        .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?;
    fs::write(path, text)?;
    Ok(())
}

pub fn load_diffusion(path: &Path) -> Result<(DiffusionModel, Option<Adam>), CliError> {
    let ckpt: DiffusionCheckpoint = load_json(path, "diffusion checkpoint")?;
    ckpt.restore()
        .map_err(|e| CliError::Data(format!("diffusion checkpoint {}: {e}", path.display())))
}

pub fn save_diffusion(
    path: &Path,
    model: &DiffusionModel,
    opt: Option<&Adam>,
) -> Result<(), CliError> {
    save_json(path, &DiffusionCheckpoint::capture(model, opt))
}

pub fn load_agent(path: &Path) -> Result<SacAgent, CliError> {
    let ckpt: SacCheckpoint = load_json(path, "agent checkpoint")?;
    ckpt.restore()
        .map_err(|e| CliError::Data(format!("agent checkpoint {}: {e}", path.display())))
}

pub fn load_costmap(path: &Path) -> Result<Costmap, CliError> {
    let map: Costmap = load_json(path, "costmap")?;
    map.validate()
        .map_err(|e| CliError::Data(format!("costmap {}: {e}", path.display())))?;
    Ok(map)
}

pub fn load_zones(path: &Path) -> Result<Vec<Zone>, CliError> {
    load_json(path, "zones file")
}

/// Dataset: one JSON record per line.
pub fn save_dataset(path: &Path, records: &[PathRecord]) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = String::new();
    for r in records {
        text.push_str(
            &serde_json::to_string(r)
                .map_err(|e| CliError::Runtime(format!("serialization failed: {e}")))?,
        );
        text.push('\n');
    }
    fs::write(path, text)?;
    Ok(())
}

pub fn load_dataset(path: &Path) -> Result<Vec<PathRecord>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read dataset {}: {e}", path.display())))?;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let r: PathRecord = serde_json::from_str(line).map_err(|e| {
            CliError::Data(format!("dataset {} line {}: {e}", path.display(), i + 1))
        })?;
        records.push(r);
    }
    if records.is_empty() {
        return Err(CliError::Data(format!("dataset {} is empty", path.display())));
    }
    Ok(records)
}

#[derive(Serialize)]
pub struct ArtifactRef {
    pub role: String,
    pub path: String,
    pub sha256: String,
}

/// Per-run provenance record. `wall_clock_s` varies between runs by nature;
/// data artifacts themselves stay byte-identical for equal inputs.
#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub seed: Option<u64>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    pub wall_clock_s: f64,
}

pub struct ManifestBuilder {
    command: String,
    seed: Option<u64>,
    inputs: Vec<ArtifactRef>,
    outputs: Vec<ArtifactRef>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.inputs.push(ArtifactRef {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(path)?,
        });
        Ok(())
    }

    pub fn output(&mut self, role: &str, path: &Path) -> Result<(), CliError> {
        self.outputs.push(ArtifactRef {
            role: role.to_string(),
            path: path.display().to_string(),
            sha256: sha256_hex(path)?,
        });
        Ok(())
    }

    /// Write the manifest next to the run's outputs: `<dir>/manifest.json`
    /// for directory outputs, `<file>.manifest.json` otherwise.
    pub fn write(self, anchor: &Path) -> Result<PathBuf, CliError> {
        let path = if anchor.is_dir() {
            anchor.join("manifest.json")
        } else {
            let mut name = anchor.file_name().unwrap_or_default().to_os_string();
            name.push(".manifest.json");
            anchor.with_file_name(name)
        };
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed: self.seed,
            inputs: self.inputs,
            outputs: self.outputs,
            wall_clock_s: self.started.elapsed().as_secs_f64(),
        };
        save_json(&path, &manifest)?;
        Ok(path)
    }
}
