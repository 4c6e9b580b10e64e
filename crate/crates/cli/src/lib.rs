//! Reproducible experiment runs over `oscillab-core`: configuration,
//! pipelines, manifests and plots.

pub mod config;
pub mod error;
pub mod manifest;
mod pipelines;
pub mod plot;
mod staging;

use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use oscillab_core::{DyadicPath, Measure, SourceSpec};
use rayon::prelude::*;

pub use config::{ExperimentConfig, Format, Pipeline};
pub use error::{CliError, Result};
pub use manifest::{InputRecord, OutputRecord, RunManifest, UnitSummary, MANIFEST_NAME};
pub use staging::sha256_hex;

use pipelines::{Ctx, Origin, Unit};

/// Environment variable holding the worker count.
pub const WORKERS_ENV: &str = "OSCILLAB_WORKERS";

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `OSCILLAB_WORKERS` or all cores when unset.
    pub workers: Option<usize>,
    /// Fail every artifact write after the first `n`. Test hook for the
    /// no-partial-output guarantee.
    pub fault_after: Option<usize>,
}

pub fn workers_from_env() -> Result<usize> {
    match std::env::var(WORKERS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(CliError::key(WORKERS_ENV, format!("`{v}` is not a positive integer"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

fn read_input(role: &str, path: &Path, inputs: &mut Vec<InputRecord>) -> Result<Vec<u8>> {
    let bytes = std::fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    inputs.push(InputRecord {
        role: role.to_string(),
        path: path.to_path_buf(),
        sha256: sha256_hex(&bytes),
    });
    Ok(bytes)
}

fn units(cfg: &ExperimentConfig, inputs: &mut Vec<InputRecord>) -> Result<(Vec<Unit>, Option<Arc<Measure>>)> {
    if let Some(p) = &cfg.measure {
        if cfg.pipeline == Pipeline::Spectrum {
            let bytes = read_input("measure", p, inputs)?;
            let text = String::from_utf8(bytes).map_err(|_| CliError::Data(format!("{}: not UTF-8", p.display())))?;
            let mu = Measure::from_csv(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
            let stem = p.file_stem().map_or("measure".into(), |s| s.to_string_lossy().into_owned());
            return Ok((vec![Unit { label: stem, origin: Origin::Fixture }], Some(Arc::new(mu))));
        }
    }
    if pipelines::is_fixture_run(cfg) {
        let label = format!("{}-{}", cfg.fixture.as_deref().unwrap_or("cantor"), cfg.level);
        return Ok((vec![Unit { label, origin: Origin::Fixture }], None));
    }
    if let Some(p) = &cfg.snapshot {
        let bytes = read_input("snapshot", p, inputs)?;
        let path = DyadicPath::from_snapshot_bytes(&bytes).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        return Ok((vec![Unit { label: "snapshot".into(), origin: Origin::Snapshot(Arc::new(path)) }], None));
    }
    if let Some(s) = &cfg.source {
        let spec: SourceSpec = s.parse().map_err(|e| CliError::key("source", e))?;
        if let SourceSpec::File { path } = &spec {
            read_input("source", path, inputs)?;
        }
        return Ok((vec![Unit { label: "source".into(), origin: Origin::Source(spec) }], None));
    }
    let units = (cfg.seed..=cfg.seed + (cfg.seeds - 1))
        .map(|s| Unit { label: format!("seed{s}"), origin: Origin::Seed(s) })
        .collect();
    Ok((units, None))
}

pub fn run(cfg: &ExperimentConfig) -> Result<RunManifest> {
    run_with(cfg, &RunOptions::default())
}

/// Runs the configured pipeline. Artifacts and `manifest.json` appear in
/// `cfg.out` only if every step succeeds.
pub fn run_with(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let workers = match opts.workers {
        Some(0) => return Err(CliError::key("workers", "must be positive")),
        Some(n) => n,
        None => workers_from_env()?,
    };
    let mut inputs = Vec::new();
    let (units, measure) = units(cfg, &mut inputs)?;
    let staging = staging::Staging::new(&cfg.out, opts.fault_after)?;
    let ctx = Ctx {
        cfg,
        formats: cfg.format_set()?,
        staging: &staging,
        start,
        measure,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let (summaries, aggregate) = pool.install(|| -> Result<_> {
        let s: Vec<serde_json::Value> = units.par_iter().map(|u| pipelines::run_unit(&ctx, u)).collect::<Result<_>>()?;
        let a = pipelines::aggregate(&ctx, &s)?;
        Ok((s, a))
    })?;
    drop(ctx);
    let manifest = RunManifest {
        tool: "oscillab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        config_text: cfg.to_toml(),
        inputs,
        outputs: staging.records(),
        wall_clock_secs: start.elapsed().as_secs_f64(),
        workers,
        units: units
            .iter()
            .zip(summaries)
            .map(|(u, summary)| UnitSummary { unit: u.label.clone(), seed: u.seed(), summary })
            .collect(),
        aggregate,
    };
    if let Some(b) = cfg.budget_secs {
        if manifest.wall_clock_secs > b {
            return Err(CliError::Budget(format!("{:.1}s used of {b}s", manifest.wall_clock_secs)));
        }
    }
    staging.commit(MANIFEST_NAME, &manifest.to_json_bytes())?;
    Ok(manifest)
}

/// Runs the config recorded in a manifest again, writing to `out`.
pub fn rerun(manifest: &Path, out: &Path, opts: &RunOptions) -> Result<RunManifest> {
    let m = RunManifest::read(manifest)?;
    let mut cfg = m.config;
    cfg.out = out.to_path_buf();
    run_with(&cfg, opts)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verification {
    pub outputs: usize,
    /// Outputs whose bytes differ from the recorded hashes.
    pub differences: Vec<String>,
    /// Inputs whose current hash differs from the recorded one.
    pub changed_inputs: Vec<PathBuf>,
}

impl Verification {
    pub fn reproduced(&self) -> bool {
        self.differences.is_empty() && self.changed_inputs.is_empty()
    }
}

/// Re-executes a manifest in a scratch directory and compares every
/// output hash.
pub fn verify(manifest: &Path, opts: &RunOptions) -> Result<Verification> {
    let recorded = RunManifest::read(manifest)?;
    let changed_inputs = recorded
        .inputs
        .iter()
        .filter(|i| std::fs::read(&i.path).map(|b| sha256_hex(&b) != i.sha256).unwrap_or(true))
        .map(|i| i.path.clone())
        .collect();
    let scratch = tempfile::tempdir()?;
    let fresh = rerun(manifest, &scratch.path().join("out"), opts)?;
    Ok(Verification {
        outputs: recorded.outputs.len(),
        differences: recorded.output_differences(&fresh),
        changed_inputs,
    })
}

/// Renders each report into `out/<stem>.svg`. Nothing is written unless
/// every report renders.
pub fn plot_files(reports: &[PathBuf], out: &Path) -> Result<Vec<PathBuf>> {
    if reports.is_empty() {
        return Err(CliError::Usage("no report files given".into()));
    }
    let rendered = reports
        .iter()
        .map(|p| {
            let (_, svg) = plot::plot_report(p)?;
            let stem = p.file_stem().map_or("plot".into(), |s| s.to_string_lossy().into_owned());
            Ok((out.join(format!("{stem}.svg")), svg))
        })
        .collect::<Result<Vec<_>>>()?;
    std::fs::create_dir_all(out)?;
    let mut written = Vec::new();
    for (path, svg) in rendered {
        let mut tmp = tempfile::NamedTempFile::new_in(out)?;
        std::io::Write::write_all(&mut tmp, svg.as_bytes())?;
        tmp.persist(&path).map_err(|e| CliError::Data(e.to_string()))?;
        written.push(path);
    }
    Ok(written)
}
