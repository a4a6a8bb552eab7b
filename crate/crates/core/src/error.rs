// Licensed under the Apache License, Version 2.0 (the "License"); you may
// not use this file except in compliance with the License. You may obtain
// a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
// WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
// License for the specific language governing permissions and limitations
// under the License.

use std::fmt;

use thiserror::Error;

/// Pipeline stage that produced an error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Peel,
    Core,
    Substars,
    StarForest,
    Seam,
    Fallback,
    Family,
    Slice,
    Strip,
    Matchings,
    Verify,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Peel => "peel",
            Stage::Core => "core",
            Stage::Substars => "substars",
            Stage::StarForest => "star-forest",
            Stage::Seam => "seam",
            Stage::Fallback => "fallback",
            Stage::Family => "family",
            Stage::Slice => "slice",
            Stage::Strip => "strip",
            Stage::Matchings => "matchings",
            Stage::Verify => "verify",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Error)]
pub enum AsdError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{op}: precondition failed: {detail}")]
    Precondition { op: &'static str, detail: String },
    #[error("{op}: infeasible: {detail}")]
    Infeasible { op: &'static str, detail: String },
    #[error("{op}: unsupported instance: {detail}")]
    Unsupported { op: &'static str, detail: String },
    #[error("{op}: no valid sample after {attempts} attempts")]
    RandomizedFailure { op: &'static str, attempts: usize },
    #[error("stage {stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<AsdError>,
    },
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

impl AsdError {
    pub(crate) fn pre(op: &'static str, detail: impl Into<String>) -> Self {
        AsdError::Precondition {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn infeasible(op: &'static str, detail: impl Into<String>) -> Self {
        AsdError::Infeasible {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        AsdError::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Innermost error, with stage wrappers removed.
    pub fn root(&self) -> &AsdError {
        match self {
            AsdError::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, AsdError>;
