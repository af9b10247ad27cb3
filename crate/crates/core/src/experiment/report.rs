// SPDX-License-Identifier: Apache-2.0

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use super::config::ExperimentConfig;
use super::run::ExperimentResults;
use crate::error::{Error, Result};
use crate::tester::write_jsonl;

pub const MANIFEST_VERSION: u32 = 1;

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub version: u32,
    pub config: ExperimentConfig,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let file = File::open(path).map_err(io_err(path))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_manifest(path: &Path, config: &ExperimentConfig) -> Result<()> {
    write_json(
        path,
        &Manifest {
            version: MANIFEST_VERSION,
            config: config.clone(),
        },
    )
}

pub fn load_manifest(path: &Path) -> Result<ExperimentConfig> {
    let m: Manifest = read_json(path)?;
    if m.version != MANIFEST_VERSION {
        return Err(Error::InvalidConfig(format!(
            "{}: manifest version {} (expected {MANIFEST_VERSION})",
            path.display(),
            m.version
        )));
    }
    m.config.validate()?;
    Ok(m.config)
}

pub fn load_results(path: &Path) -> Result<ExperimentResults> {
    read_json(path)
}

struct Csv {
    path: PathBuf,
    w: csv::Writer<File>,
}

impl Csv {
    fn create(path: PathBuf) -> Result<Self> {
        let w = csv::Writer::from_path(&path).map_err(|source| Error::Csv {
            path: path.clone(),
            source,
        })?;
        Ok(Self { path, w })
    }

    fn row<I, S>(&mut self, fields: I) -> Result<()>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.w.write_record(fields).map_err(|source| Error::Csv {
            path: self.path.clone(),
            source,
        })
    }

    fn finish(mut self) -> Result<()> {
        self.w.flush().map_err(io_err(&self.path))
    }
}

fn pct(x: f64) -> String {
    (x * 100.0).to_string()
}

/// Writes the CSV tables, `summary.json`, `runtime.json`, `results.json`,
/// `manifest.json` and, when present, `iterations.jsonl` into `dir`.
/// Runtimes are kept out of the CSV files so repeated runs compare equal.
pub fn emit_reports(results: &ExperimentResults, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let m = &results.metrics;

    let mut metrics = Csv::create(dir.join("metrics.csv"))?;
    metrics.row([
        "circuit", "n_s", "n_g", "n_b", "n_p", "n_pt", "t_a", "t_v", "t_a_prime", "t_v_prime", "r_a", "r_v",
    ])?;
    metrics.row([
        m.circuit.clone(),
        m.n_s.to_string(),
        m.n_g.to_string(),
        m.n_b.to_string(),
        m.n_p.to_string(),
        m.n_pt.to_string(),
        m.t_a.to_string(),
        m.t_v.to_string(),
        m.t_a_prime.to_string(),
        m.t_v_prime.to_string(),
        m.r_a.to_string(),
        m.r_v.to_string(),
    ])?;
    metrics.finish()?;

    let mut yields = Csv::create(dir.join("yield.csv"))?;
    let mut header = vec!["circuit".to_string()];
    for k in 1..=results.config.period_quantiles.len() {
        header.extend(["y_i", "y_t", "y_r", "y_nobuf", "period"].map(|c| format!("{c}_{k}")));
    }
    yields.row(&header)?;
    if !results.yields.is_empty() {
        let mut row = vec![m.circuit.clone()];
        for y in &results.yields {
            row.extend([pct(y.y_i), pct(y.y_t), pct(y.y_r), pct(y.no_buffer), y.period.to_string()]);
        }
        yields.row(&row)?;
    }
    yields.finish()?;

    let mut ablation = Csv::create(dir.join("ablation.csv"))?;
    ablation.row(["circuit", "mode", "chips", "tested_paths", "iterations_per_path"])?;
    for a in &results.ablation {
        ablation.row([
            m.circuit.clone(),
            a.mode.to_string(),
            a.chips.to_string(),
            a.tested_paths.to_string(),
            a.iterations_per_path.to_string(),
        ])?;
    }
    ablation.finish()?;

    for k in 0..results.config.period_quantiles.len() {
        let mut v = Csv::create(dir.join(format!("verdicts_p{}.csv", k + 1)))?;
        v.row(["chip_id", "feasible", "setup_pass", "hold_pass", "xi", "iterations"])?;
        for c in results.yields.get(k).map(|y| y.verdicts.as_slice()).unwrap_or_default() {
            v.row([
                c.chip_id.to_string(),
                c.feasible.to_string(),
                c.setup_pass.to_string(),
                c.hold_pass.to_string(),
                c.xi.map(|x| x.to_string()).unwrap_or_default(),
                c.iterations.to_string(),
            ])?;
        }
        v.finish()?;
    }

    let periods: Vec<_> = results
        .yields
        .iter()
        .map(|y| {
            json!({
                "quantile": y.quantile,
                "period": y.period,
                "y_i": y.y_i,
                "y_t": y.y_t,
                "y_r": y.y_r,
                "no_buffer": y.no_buffer,
                "hold_pass": y.hold_pass,
            })
        })
        .collect();
    write_json(
        &dir.join("summary.json"),
        &json!({
            "circuit": m.circuit,
            "mode": results.config.mode,
            "chips": results.config.chips,
            "resolution": results.resolution,
            "n_p": m.n_p,
            "n_pt": m.n_pt,
            "batches": results.plan.batches.len(),
            "degree_lower_bound": results.plan.degree_lower_bound,
            "t_a": m.t_a,
            "t_v": m.t_v,
            "t_a_prime": m.t_a_prime,
            "t_v_prime": m.t_v_prime,
            "r_a": m.r_a,
            "r_v": m.r_v,
            "hold_method": results.hold.method,
            "out_of_window": results.out_of_window,
            "periods": periods,
        }),
    )?;
    write_json(&dir.join("runtime.json"), &m.runtimes)?;
    write_json(&dir.join("results.json"), results)?;
    write_manifest(&dir.join("manifest.json"), &results.config)?;

    if !results.iterations.is_empty() {
        let path = dir.join("iterations.jsonl");
        let file = File::create(&path).map_err(io_err(&path))?;
        let mut w = BufWriter::new(file);
        write_jsonl(&mut w, &results.iterations).map_err(io_err(&path))?;
        w.flush().map_err(io_err(&path))?;
    }
    Ok(())
}
