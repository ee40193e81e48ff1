//! Per-point inputs, result records and their content hash.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use floquet_core::floquet::ScatteringResult;

use crate::config::{OracleConfig, ProblemConfig, SolverConfig};

pub const INPUT_SCHEMA: &str = "floquet-input/1";
pub const RECORD_SCHEMA: &str = "floquet-record/1";

/// Sideband range echoed in flat outputs.
pub const ECHO_SIDEBANDS: i32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "kebab-case")]
pub enum Mode {
    Solve,
    Oracle(OracleConfig),
}

/// Everything a point depends on; its canonical JSON is the hash input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointInput {
    pub schema: String,
    pub core_version: String,
    pub mode: Mode,
    pub problem: ProblemConfig,
    pub solver: SolverConfig,
}

impl PointInput {
    pub fn new(mode: Mode, problem: ProblemConfig, solver: SolverConfig) -> Self {
        Self {
            schema: INPUT_SCHEMA.into(),
            core_version: env!("CARGO_PKG_VERSION").into(),
            mode,
            problem,
            solver,
        }
    }

    /// SHA-256 of the canonical JSON form, as lowercase hex.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("point inputs serialize");
        format!("{:x}", Sha256::digest(&bytes))
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub cutoff: Option<usize>,
    pub total_transmission: Option<f64>,
    pub total_reflection: Option<f64>,
    pub unitarity_deficit: Option<f64>,
    /// Probabilities for sidebands −4..=4, `None` for closed or absent channels.
    pub transmitted: Vec<Option<f64>>,
    pub reflected: Vec<Option<f64>>,
    pub threshold_regularized: bool,
    pub static_transmission: Option<f64>,
    pub relative_enhancement: Option<f64>,
    pub time_averaged_transmission: Option<f64>,
    /// Adaptive trials (N, total transmission, deficit).
    pub history: Option<Vec<(usize, f64, f64)>>,
    pub result: Option<ScatteringResult>,
    pub oracle: Option<serde_json::Value>,
}

impl Summary {
    pub fn from_result(r: &ScatteringResult) -> Self {
        let pick = |f: &dyn Fn(i32) -> Option<f64>| (-ECHO_SIDEBANDS..=ECHO_SIDEBANDS).map(|n| f(n)).collect();
        let index = |n: i32| r.sidebands.iter().position(|&s| s == n);
        Self {
            cutoff: Some(r.cutoff),
            total_transmission: Some(r.total_transmission),
            total_reflection: Some(r.total_reflection),
            unitarity_deficit: Some(r.unitarity_deficit),
            transmitted: pick(&|n| index(n).and_then(|i| r.transmitted[i])),
            reflected: pick(&|n| index(n).and_then(|i| r.reflected[i])),
            threshold_regularized: r.threshold_regularized,
            result: Some(r.clone()),
            ..Self::default()
        }
    }

    /// Probabilities given per sideband index.
    pub fn from_sidebands(sidebands: &[i32], transmitted: &[f64], reflected: Option<&[f64]>) -> Self {
        let at = |v: &[f64], n: i32| sidebands.iter().position(|&s| s == n).map(|i| v[i]);
        Self {
            transmitted: (-ECHO_SIDEBANDS..=ECHO_SIDEBANDS).map(|n| at(transmitted, n)).collect(),
            reflected: (-ECHO_SIDEBANDS..=ECHO_SIDEBANDS)
                .map(|n| reflected.and_then(|r| at(r, n)))
                .collect(),
            ..Self::default()
        }
    }
}

/// JSON cannot carry ±∞ or NaN; such values are recorded as absent.
pub fn finite(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub schema_version: String,
    pub input_hash: String,
    pub input: PointInput,
    pub summary: Option<Summary>,
    /// Solver error with the offending parameters.
    pub error: Option<String>,
    pub wall_time_s: f64,
}
