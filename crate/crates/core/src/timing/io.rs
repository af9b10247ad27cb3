// SPDX-License-Identifier: Apache-2.0

use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::generator::{generate_benchmark, GeneratorConfig};
use super::graph::TimingGraph;
use super::model::{DelayModel, VarLabel};
use crate::error::{Error, Result};

pub const BENCHMARK_FORMAT_VERSION: u32 = 1;

/// A circuit under test together with its delay model.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub name: String,
    pub graph: TimingGraph,
    pub model: DelayModel,
    pub generator: Option<GeneratorConfig>,
}

#[derive(Serialize, Deserialize)]
struct Document {
    format_version: u32,
    name: String,
    generator: Option<GeneratorConfig>,
    graph: TimingGraph,
    means: Vec<f64>,
    /// Row-major, `means.len()` squared entries.
    covariance: Vec<f64>,
    labels: Vec<VarLabel>,
}

impl Benchmark {
    pub fn generate(cfg: &GeneratorConfig) -> Result<Self> {
        let (graph, model) = generate_benchmark(cfg)?;
        Ok(Self {
            name: cfg.name.clone(),
            graph,
            model,
            generator: Some(cfg.clone()),
        })
    }

    pub fn n_s(&self) -> usize {
        self.graph.num_nodes()
    }

    pub fn n_b(&self) -> usize {
        self.graph.buffered_nodes().len()
    }

    pub fn n_p(&self) -> usize {
        self.graph.num_edges()
    }

    pub fn n_g(&self) -> usize {
        self.generator.as_ref().map_or(0, |g| g.n_g)
    }

    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let cov = self.model.covariance();
        let n = cov.nrows();
        let doc = Document {
            format_version: BENCHMARK_FORMAT_VERSION,
            name: self.name.clone(),
            generator: self.generator.clone(),
            graph: self.graph.clone(),
            means: self.model.means().to_vec(),
            covariance: (0..n * n).map(|k| cov[(k / n, k % n)]).collect(),
            labels: self.model.labels().to_vec(),
        };
        serde_json::to_string_pretty(&doc)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: Document = serde_json::from_str(text).map_err(|source| Error::Json {
            path: "<benchmark>".into(),
            source,
        })?;
        Self::from_document(doc)
    }

    fn from_document(doc: Document) -> Result<Self> {
        if doc.format_version != BENCHMARK_FORMAT_VERSION {
            return Err(Error::InvalidModel(format!(
                "benchmark format version {} (expected {})",
                doc.format_version, BENCHMARK_FORMAT_VERSION
            )));
        }
        let n = doc.means.len();
        if doc.covariance.len() != n * n {
            return Err(Error::InvalidModel(format!(
                "covariance has {} entries for dimension {n}",
                doc.covariance.len()
            )));
        }
        let model = DelayModel::new(doc.means, DMatrix::from_row_slice(n, n, &doc.covariance), doc.labels)?;
        doc.graph.validate(Some(model.dim()))?;
        Ok(Self {
            name: doc.name,
            graph: doc.graph,
            model,
            generator: doc.generator,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json().map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        fs::write(path, text).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let doc: Document = serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_document(doc)
    }
}
