use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use oscillab::config::parse_override;
use oscillab::{CliError, ExperimentConfig, Pipeline, RunOptions};

#[derive(Parser)]
#[command(name = "oscillab", version, about = "Seeded experiments on finite-resolution Brownian paths")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate paths and write snapshots.
    Simulate(RunArgs),
    /// Zero-set local-time measures.
    Zeroset(RunArgs),
    /// Fixture measures: cantor, middle-thirds or uniform.
    Measure(RunArgs),
    /// Fourier transform and decay fit.
    Spectrum(RunArgs),
    /// Box, capacity and Fourier dimension estimates.
    Dimension(RunArgs),
    /// Sumset interiors and affine copies.
    Sumset(RunArgs),
    /// Diophantine witness search.
    Dioph(RunArgs),
    /// Integer relations among path values on D_l.
    Hamel(RunArgs),
    /// Local minimizers, relation test and argmin statistics.
    Minima(RunArgs),
    /// Run a manifest's config again.
    Rerun {
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-execute a manifest and compare every output hash.
    Verify { manifest: PathBuf },
    /// Render report files (decay or dimension JSON, density CSV, arcsine JSON) as SVG.
    Plot {
        #[arg(required = true)]
        reports: Vec<PathBuf>,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Fixture name for `measure` and `dimension`.
    fixture: Option<String>,
    /// Config file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any knob; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    seeds: Option<String>,
    #[arg(long)]
    depth: Option<String>,
    #[arg(long)]
    snapshot: Option<String>,
    #[arg(long)]
    measure: Option<String>,
    #[arg(long)]
    level: Option<String>,
    #[arg(long)]
    annuli: Option<String>,
    #[arg(long)]
    k: Option<String>,
    #[arg(long)]
    grid: Option<String>,
    #[arg(long)]
    r: Option<String>,
    #[arg(long)]
    ell: Option<String>,
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    formats: Option<String>,
}

impl RunArgs {
    fn resolve(self, pipeline: Pipeline) -> Result<ExperimentConfig, CliError> {
        let file = match &self.config {
            Some(p) => Some(
                std::fs::read_to_string(p).map_err(|e| CliError::Usage(format!("config {}: {e}", p.display())))?,
            ),
            None => None,
        };
        let mut overrides = vec![("pipeline".to_string(), format!("\"{pipeline}\""))];
        for s in &self.set {
            overrides.push(parse_override(s)?);
        }
        let quoted = |v: String| format!("{:?}", v);
        let flags = [
            ("fixture", self.fixture.map(quoted)),
            ("seed", self.seed),
            ("seeds", self.seeds),
            ("depth", self.depth),
            ("snapshot", self.snapshot.map(quoted)),
            ("measure", self.measure.map(quoted)),
            ("level", self.level),
            ("annuli", self.annuli.map(quoted)),
            ("k", self.k),
            ("grid", self.grid),
            ("r", self.r.map(quoted)),
            ("ell", self.ell),
            ("out", self.out.map(quoted)),
            ("formats", self.formats.map(quoted)),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                overrides.push((k.to_string(), v));
            }
        }
        ExperimentConfig::resolve(file.as_deref(), &overrides)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let opts = RunOptions::default();
    let (pipeline, args) = match cli.command {
        Command::Simulate(a) => (Pipeline::Simulate, a),
        Command::Zeroset(a) => (Pipeline::Zeroset, a),
        Command::Measure(a) => (Pipeline::Measure, a),
        Command::Spectrum(a) => (Pipeline::Spectrum, a),
        Command::Dimension(a) => (Pipeline::Dimension, a),
        Command::Sumset(a) => (Pipeline::Sumset, a),
        Command::Dioph(a) => (Pipeline::Dioph, a),
        Command::Hamel(a) => (Pipeline::Hamel, a),
        Command::Minima(a) => (Pipeline::Minima, a),
        Command::Rerun { manifest, out } => {
            let m = oscillab::rerun(&manifest, &out, &opts)?;
            println!("{} outputs in {}", m.outputs.len(), out.display());
            return Ok(());
        }
        Command::Verify { manifest } => {
            let v = oscillab::verify(&manifest, &opts)?;
            if v.reproduced() {
                println!("reproduced {} outputs bit-for-bit", v.outputs);
                return Ok(());
            }
            for p in &v.changed_inputs {
                eprintln!("input changed: {}", p.display());
            }
            for name in &v.differences {
                eprintln!("output differs: {name}");
            }
            return Err(CliError::Data(format!("{} of {} outputs differ", v.differences.len(), v.outputs)));
        }
        Command::Plot { reports, out } => {
            for p in oscillab::plot_files(&reports, &out)? {
                println!("{}", p.display());
            }
            return Ok(());
        }
    };
    let cfg = args.resolve(pipeline)?;
    let m = oscillab::run_with(&cfg, &opts)?;
    println!(
        "{}: {} units, {} outputs in {} ({:.2}s)",
        pipeline,
        m.units.len(),
        m.outputs.len(),
        cfg.out.display(),
        m.wall_clock_secs
    );
    println!("{}", serde_json::to_string(&m.aggregate).expect("json value"));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("oscillab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
