//! Harness side of the import probe: request and result files and the
//! `<interpreter> probe.py <request_path>` invocation.

use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{Executor, HarnessError};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeRequest {
    pub names: Vec<String>,
    pub output_path: PathBuf,
}

impl ProbeRequest {
    /// Names must be non-empty and each have at least two dotted segments.
    pub fn new(names: Vec<String>, output_path: PathBuf) -> Result<Self, HarnessError> {
        if names.is_empty() {
            return Err(HarnessError::Probe("probe request without names".into()));
        }
        if let Some(bad) = names
            .iter()
            .find(|n| !crate::names::is_dotted_name(n) || !n.contains('.'))
        {
            return Err(HarnessError::Probe(format!("`{bad}` is not a dotted name with two or more segments")));
        }
        Ok(Self { names, output_path })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeStatus {
    Importable,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeEntry {
    pub name: String,
    pub status: ProbeStatus,
    /// First segment that could not be reached.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failed_segment: Option<String>,
    /// First line of the exception raised while reaching it.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterpreterFingerprint {
    pub python_version: String,
    /// `name==version` of the installed distributions.
    #[serde(default)]
    pub installed: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub results: Vec<ProbeEntry>,
    pub interpreter_fingerprint: InterpreterFingerprint,
}

impl ProbeResult {
    pub fn importable(&self) -> impl Iterator<Item = &str> {
        self.results
            .iter()
            .filter(|e| e.status == ProbeStatus::Importable)
            .map(|e| e.name.as_str())
    }
}

pub fn write_probe_request(path: &Path, request: &ProbeRequest) -> Result<(), HarnessError> {
    let text = serde_json::to_string_pretty(request).map_err(std::io::Error::other)?;
    std::fs::write(path, text)?;
    Ok(())
}

/// Reads a probe result and checks it answers `request` name by name, in order.
pub fn read_probe_result(path: &Path, request: &ProbeRequest) -> Result<ProbeResult, HarnessError> {
    let text = std::fs::read_to_string(path)?;
    let result: ProbeResult = serde_json::from_str(&text)
        .map_err(|e| HarnessError::Probe(format!("unreadable result {}: {e}", path.display())))?;
    if result.results.len() != request.names.len() {
        return Err(HarnessError::Probe(format!(
            "{} results for {} names",
            result.results.len(),
            request.names.len()
        )));
    }
    if let Some((entry, name)) = result
        .results
        .iter()
        .zip(&request.names)
        .find(|(e, n)| &e.name != *n)
    {
        return Err(HarnessError::Probe(format!(
            "result order differs: expected {name}, found {}",
            entry.name
        )));
    }
    Ok(result)
}

pub fn probe_command(interpreter: &str, script: &Path, request_path: &Path) -> Vec<String> {
    vec![
        interpreter.to_string(),
        script.to_string_lossy().into_owned(),
        request_path.to_string_lossy().into_owned(),
    ]
}

/// Writes the request into `work_dir`, runs the probe there and reads back
/// the result.
pub fn run_probe(
    executor: &dyn Executor,
    interpreter: &str,
    script: &Path,
    request: &ProbeRequest,
    work_dir: &Path,
    timeout: Duration,
) -> Result<ProbeResult, HarnessError> {
    let request_path = work_dir.join("probe_request.json");
    write_probe_request(&request_path, request)?;
    let outcome = executor.run(
        &probe_command(interpreter, script, &request_path),
        work_dir,
        timeout,
        &work_dir.join("probe.log"),
    )?;
    if outcome.timed_out {
        return Err(HarnessError::Probe("probe timed out".into()));
    }
    if !request.output_path.exists() {
        return Err(HarnessError::Probe(format!(
            "probe wrote no result (exit {:?}): {}",
            outcome.exit_code,
            outcome.log.lines().last().unwrap_or("")
        )));
    }
    read_probe_result(&request.output_path, request)
}
