//! Run report emitted to stdout after every subcommand.

use serde::Serialize;
use serde_json::Value;

/// Summary of one run: verdicts, numbers, and a config echo sufficient to
/// reproduce it. Timing is reported here and nowhere else, so data artifacts
/// written to output files stay byte-reproducible.
#[derive(Debug, Serialize)]
pub struct RunReport {
    pub schema: u32,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub verdict: Option<String>,
    pub exit_code: i32,
    pub data: Value,
    pub config: Value,
    pub wall_ms: f64,
}

impl RunReport {
    pub fn new(command: &str, exit_code: i32, data: Value, config: Value) -> Self {
        Self {
            schema: 1,
            command: command.to_string(),
            verdict: None,
            exit_code,
            data,
            config,
            wall_ms: 0.0,
        }
    }

    pub fn with_verdict(mut self, verdict: &str) -> Self {
        self.verdict = Some(verdict.to_string());
        self
    }
}
