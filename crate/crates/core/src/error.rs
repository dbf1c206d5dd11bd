use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Simulation engine selector; also tags engine errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    Swing,
    Emt,
    Hybrid,
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Engine::Swing => "swing",
            Engine::Emt => "emt",
            Engine::Hybrid => "hybrid",
        })
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("topology error: {0}")]
    Topology(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid disturbance: {0}")]
    InvalidDisturbance(String),

    #[error("line {line} has zero series reactance")]
    SingularLine { line: usize },

    #[error("{engine} engine diverged at t = {t} s: non-finite state at bus {bus}")]
    Divergence { engine: Engine, bus: usize, t: f64 },

    #[error("{engine} engine inside hybrid run: {source}")]
    Hybrid {
        engine: Engine,
        #[source]
        source: Box<Error>,
    },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("node {node} is isolated: conductance matrix is singular")]
    IsolatedNode { node: usize },

    #[error("insufficient arrivals: {found} detected, at least 2 required")]
    InsufficientArrivals { found: usize },

    #[error("underdetermined: {found} usable sensors, at least {needed} required")]
    Underdetermined { needed: usize, found: usize },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
