// SPDX-License-Identifier: Apache-2.0

//! Command-line front end: benchmark generation, experiment runs and reports.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand};
use effitest::experiment::{
    emit_reports, load_manifest, load_results, run_experiment, BenchmarkSource, ExperimentConfig, Mode,
};
use effitest::timing::{Benchmark, GeneratorConfig};
use log::info;

#[derive(Parser)]
#[command(name = "effitest", version, about = "Post-silicon path delay test with tunable buffers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic benchmark and write it as JSON.
    Generate {
        /// Generator parameters as JSON; defaults are used for missing fields.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Number of paths.
        #[arg(long)]
        paths: Option<usize>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Run an experiment and write its reports.
    Run {
        /// Experiment configuration (JSON). A manifest written by a previous run
        /// is also accepted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Benchmark file; overrides the configured source.
        #[arg(long)]
        benchmark: Option<PathBuf>,
        #[arg(long)]
        chips: Option<usize>,
        #[arg(long)]
        mode: Option<Mode>,
        #[arg(long)]
        chip_seed: Option<u64>,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Repeat a run from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
    /// Re-emit the report files from a saved results.json.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long, short)]
        out: PathBuf,
    },
}

fn read_config(path: &Path) -> Result<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| anyhow!("reading {}: {e}", path.display()))?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| anyhow!("parsing {}: {e}", path.display()))?;
    if value.get("version").is_some() && value.get("config").is_some() {
        return Ok(load_manifest(path)?);
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| anyhow!("parsing {}: {e}", path.display()))?;
    Ok(cfg)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // Library errors already carry their causes in the message.
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Generate {
            config,
            seed,
            paths,
            out,
        } => {
            let mut g = match config {
                Some(p) => {
                    let text = fs::read_to_string(&p).map_err(|e| anyhow!("reading {}: {e}", p.display()))?;
                    serde_json::from_str::<GeneratorConfig>(&text).map_err(|e| anyhow!("parsing {}: {e}", p.display()))?
                }
                None => GeneratorConfig::default(),
            };
            if let Some(s) = seed {
                g.seed = s;
            }
            if let Some(n) = paths {
                g.n_p = n;
            }
            let bench = Benchmark::generate(&g)?;
            bench.save(&out)?;
            info!(
                "wrote {} ({} flip-flops, {} buffers, {} paths)",
                out.display(),
                bench.n_s(),
                bench.n_b(),
                bench.n_p()
            );
        }
        Command::Run {
            config,
            benchmark,
            chips,
            mode,
            chip_seed,
            out,
        } => {
            let mut cfg = match config {
                Some(p) => read_config(&p)?,
                None => ExperimentConfig::default(),
            };
            if let Some(b) = benchmark {
                cfg.benchmark = BenchmarkSource::File(b);
            }
            if let Some(n) = chips {
                cfg.chips = n;
            }
            if let Some(m) = mode {
                cfg.mode = m;
            }
            if let Some(s) = chip_seed {
                cfg.chip_seed = s;
            }
            execute(&cfg, &out)?;
        }
        Command::Replay { manifest, out } => {
            let cfg = load_manifest(&manifest)?;
            execute(&cfg, &out)?;
        }
        Command::Report { results, out } => {
            let r = load_results(&results)?;
            emit_reports(&r, &out)?;
            info!("wrote reports to {}", out.display());
        }
    }
    Ok(())
}

fn execute(cfg: &ExperimentConfig, out: &Path) -> Result<()> {
    let results = run_experiment(cfg)?;
    emit_reports(&results, out)?;
    let m = &results.metrics;
    info!(
        "{}: n_pt {}/{}, t_a {:.1}, t'_a {:.1}, r_a {:.1}%",
        m.circuit, m.n_pt, m.n_p, m.t_a, m.t_a_prime, m.r_a
    );
    for y in &results.yields {
        info!(
            "T = {:.4} (q {}): y_i {:.1}%, y_t {:.1}%, no buffers {:.1}%",
            y.period,
            y.quantile,
            100.0 * y.y_i,
            100.0 * y.y_t,
            100.0 * y.no_buffer
        );
    }
    info!("wrote reports to {}", out.display());
    Ok(())
}
