//! Run configuration, its hash and the `# key=value` header form.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::angle::Angle;

/// Everything that determines a run's output. The worker count is left
/// out on purpose: it never changes results.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Angle>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub restarts: Option<u64>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kind: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub warm_start: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub found_threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub store: Option<String>,
}

impl RunConfig {
    pub fn new(command: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            seed,
            ..Default::default()
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    /// SHA-256 of the compact JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let body = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(body.as_bytes()))
    }

    /// `# key=value` lines, keys sorted. String values are written bare,
    /// everything else as compact JSON.
    pub fn header_lines(&self) -> Vec<String> {
        let serde_json::Value::Object(map) = self.to_json() else {
            unreachable!("config is a struct")
        };
        let mut lines: Vec<String> = map
            .iter()
            .map(|(k, v)| match v {
                serde_json::Value::String(s) => format!("# {k}={s}"),
                other => format!("# {k}={other}"),
            })
            .collect();
        lines.push(format!("# config_hash={}", self.hash()));
        lines
    }
}
