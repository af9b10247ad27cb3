// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use thiserror::Error;

use crate::timing::EdgeId;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid timing graph: {0}")]
    InvalidGraph(String),

    #[error("invalid delay model: {0}")]
    InvalidModel(String),

    #[error("covariance could not be factorized: {0}")]
    Factorization(String),

    #[error("tested-path covariance is singular beyond ridge repair (group of {paths} paths)")]
    SingularCovariance { paths: usize },

    #[error("alignment model infeasible; conflicting hold bounds on edges {edges:?}")]
    AlignmentInfeasible { edges: Vec<EdgeId> },

    #[error("optimizer gave up on the {stage} model: {detail}")]
    Solver { stage: &'static str, detail: String },

    #[error("frequency stepping exceeded {limit} iterations on batch {batch} (chip {chip})")]
    IterationGuard { chip: u64, batch: usize, limit: usize },

    #[error("hold yield target must lie in (0, 1], got {0}")]
    InvalidYieldTarget(f64),

    #[error("experiment stage `{stage}` failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error(transparent)]
    Mip(#[from] effitest_mip::MipError),
}

impl Error {
    pub fn in_stage(self, stage: &'static str) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
