use serde::Serialize;
use serde_json::{json, Value};

use crate::{Failure, Format};

/// Bumped whenever a structured field is renamed or removed.
pub const SCHEMA_VERSION: u32 = 1;

/// What a command produced, in both renderings.
#[derive(Debug)]
pub struct Outcome {
    pub command: &'static str,
    pub result: Value,
    pub text: String,
    /// Something an auditor should look at was found.
    pub findings: bool,
    /// The user asked for findings to fail the run.
    pub gate: bool,
    /// Reported after the output, e.g. when some addresses of a batch
    /// could not be fetched.
    pub failure: Option<Failure>,
}

impl Outcome {
    pub fn new(command: &'static str, result: impl Serialize, text: String) -> Self {
        let result = serde_json::to_value(result).expect("command results serialize");
        Outcome { command, result, text, findings: false, gate: false, failure: None }
    }

    pub fn findings(mut self, present: bool, gate: bool) -> Self {
        self.findings = present;
        self.gate = gate;
        self
    }

    pub fn failed(mut self, failure: Option<Failure>) -> Self {
        self.failure = failure;
        self
    }

    /// Structured output goes through `serde_json::Value`, whose maps are
    /// sorted, so key order never depends on struct layout.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.text.trim_end().to_owned(),
            Format::Structured => {
                let doc = json!({
                    "schema_version": SCHEMA_VERSION,
                    "command": self.command,
                    "findings": self.findings,
                    "result": self.result,
                });
                serde_json::to_string_pretty(&doc).expect("json values serialize")
            }
        }
    }
}
