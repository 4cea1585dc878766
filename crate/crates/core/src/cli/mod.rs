//! Batch driver: `cavitrap <task> --config <file> [--seed S] [--threads T] [--out DIR]`.
//!
//! Every output file is written to a temporary file in the output directory
//! and renamed into place. Identical config and seed give byte-identical CSVs.

pub mod config;
pub mod table_one;
mod tasks;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use config::{ExperimentConfig, Task, TrapSection};

use crate::physics::{IonSpecies, TrapConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Parse(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Compute(String),
}

impl CliError {
    pub fn validation(e: crate::Error) -> Self {
        CliError::Validation(e.to_string())
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse(_) => "parse",
            CliError::Validation(_) => "validation",
            CliError::Compute(_) => "compute",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Parse(_) => 2,
            CliError::Validation(_) => 3,
            CliError::Compute(_) => 4,
        }
    }

    /// One-line JSON diagnostic for stderr.
    pub fn to_json(&self) -> String {
        serde_json::json!({
            "error": self.kind(),
            "exit_code": self.exit_code(),
            "message": self.to_string(),
        })
        .to_string()
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        CliError::Compute(e.to_string())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub task: String,
    /// SHA-256 of the config file bytes.
    pub config_hash: String,
    pub code_version: String,
    pub seed: u64,
    pub wall_time_s: f64,
    /// Relative to the output directory.
    pub outputs: Vec<String>,
    pub warnings: Vec<String>,
}

/// Files written by one run.
pub struct Outputs {
    dir: PathBuf,
    written: Vec<String>,
}

impl Outputs {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Compute(format!("{}: {e}", dir.display())))?;
        Ok(Outputs {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[String] {
        &self.written
    }

    pub fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let io = |e: std::io::Error| CliError::Compute(format!("writing {name}: {e}"));
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(io)?;
        tmp.write_all(bytes).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(self.dir.join(name)).map_err(|e| io(e.error))?;
        if !self.written.iter().any(|w| w == name) {
            self.written.push(name.to_string());
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| CliError::Compute(e.to_string()))?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let err = |e: csv::Error| CliError::Compute(format!("writing {name}: {e}"));
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Compute(e.to_string()))?;
        self.write_bytes(name, &bytes)
    }
}

/// Shortest round-trip representation of a float.
pub fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Resolved inputs shared by every task.
pub struct RunContext {
    pub config: ExperimentConfig,
    pub species: IonSpecies,
    pub trap: TrapConfig,
    pub seed: u64,
    pub out: Outputs,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
}

/// Parse, validate and execute `task` from the config file at `config_path`.
pub fn run(task: Task, config_path: &Path, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let started = Instant::now();
    let bytes = std::fs::read(config_path)
        .map_err(|e| CliError::Parse(format!("{}: {e}", config_path.display())))?;
    let text = std::str::from_utf8(&bytes).map_err(|e| CliError::Parse(format!("config is not UTF-8: {e}")))?;
    let config = ExperimentConfig::parse(text)?;
    if let Some(t) = config.task {
        if t != task {
            return Err(CliError::Validation(format!(
                "config is for task {} but {} was requested",
                t.name(),
                task.name()
            )));
        }
    }
    let config_dir = config_path.parent().unwrap_or(Path::new("."));
    let species = config.species(config_dir)?;
    let trap = config.trap.build(&species)?;
    let seed = opts.seed.or(config.seed).unwrap_or(0);
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(|p| config_dir.join(p)))
        .unwrap_or_else(|| PathBuf::from("cavitrap-out"));

    let mut ctx = RunContext {
        config,
        species,
        trap,
        seed,
        out: Outputs::new(&out_dir)?,
        warnings: Vec::new(),
    };
    log::info!("running {} with seed {seed} into {}", task.name(), out_dir.display());
    tasks::dispatch(task, &mut ctx)?;

    let manifest = RunManifest {
        task: task.name().to_string(),
        config_hash: hex::encode(Sha256::digest(&bytes)),
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: ctx.out.written().to_vec(),
        warnings: ctx.warnings.clone(),
    };
    ctx.out.write_json("manifest.json", &manifest)?;
    Ok(manifest)
}
