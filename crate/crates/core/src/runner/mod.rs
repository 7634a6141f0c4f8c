//! Config-driven experiments: parse, dispatch, write outputs and a manifest.

mod config;
mod experiments;

pub use config::{
    CertifyConfig, DomainConfig, ExperimentConfig, ExperimentKind, HierarchyConfig, InitialConfig,
    KernelConfig, KineticMethod, ParamsConfig, Resolved, RunConfig, SweepConfig, VlasovConfig,
};
pub use experiments::{compare_vlasov, VlasovRow};

use serde::Serialize;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::error::{Error, Result};
use crate::io::{sha256_file, sha256_hex, OutputSet};

/// Overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    /// Prefix for relative output directories.
    pub output_root: Option<PathBuf>,
    pub seed_override: Option<u64>,
    /// Size of a dedicated worker pool; the global pool is used when unset.
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub kind: String,
    pub config_hash: String,
    pub version: String,
    pub seed: u64,
    pub threads: Option<usize>,
    pub wall_time_seconds: f64,
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub manifest: Manifest,
    /// Some certificate had its hypotheses hold and its conclusion fail.
    pub violated: bool,
    pub summary: serde_json::Value,
}

/// Hash of the canonical serialization of `cfg`.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    sha256_hex(cfg.to_toml().as_bytes())
}

fn output_dir(cfg: &ExperimentConfig, opts: &RunOptions) -> PathBuf {
    let dir = opts
        .output_dir
        .clone()
        .or_else(|| cfg.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("bdlab-out").join(cfg.kind.name()));
    match &opts.output_root {
        Some(root) if dir.is_relative() => root.join(dir),
        _ => dir,
    }
}

/// Parse and validate a config file without running it.
pub fn validate_config_file(path: &Path) -> Result<ExperimentConfig> {
    let cfg = ExperimentConfig::from_path(path)?;
    cfg.resolve()?;
    Ok(cfg)
}

pub fn run_config_file(path: &Path, opts: &RunOptions) -> Result<RunReport> {
    let cfg = ExperimentConfig::from_path(path)?;
    run_experiment(&cfg, opts)
}

pub fn run_experiment(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunReport> {
    let mut cfg = cfg.clone();
    if let Some(seed) = opts.seed_override {
        cfg.run.seed = seed;
    }
    let resolved = cfg.resolve()?;
    let dir = output_dir(&cfg, opts);
    std::fs::create_dir_all(&dir)?;
    let mut out = OutputSet::new(&dir);
    let hash = config_hash(&cfg);
    out.text("config.toml", &cfg.to_toml())?;

    let start = Instant::now();
    let mut body = || experiments::dispatch(&cfg, &resolved, &hash, &mut out);
    let outcome = match opts.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| Error::param("threads", e.to_string()))?
            .install(body)?,
        None => body()?,
    };
    let wall = start.elapsed().as_secs_f64();

    let files = out
        .files()
        .iter()
        .map(|p| {
            Ok(ManifestEntry {
                path: p.strip_prefix(&dir).unwrap_or(p).display().to_string(),
                sha256: sha256_file(p)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = Manifest {
        kind: cfg.kind.name().into(),
        config_hash: hash,
        version: env!("CARGO_PKG_VERSION").into(),
        seed: cfg.run.seed,
        threads: opts.threads,
        wall_time_seconds: wall,
        files,
    };
    crate::io::write_json(&dir.join("manifest.json"), &manifest)?;
    log::info!(
        "{} finished in {wall:.3}s, outputs in {}",
        cfg.kind.name(),
        dir.display()
    );
    Ok(RunReport {
        output_dir: dir,
        manifest,
        violated: outcome.violated,
        summary: outcome.summary,
    })
}
