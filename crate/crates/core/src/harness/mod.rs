//! Environment plans, external install/execute commands, and classification
//! of what went wrong.

mod classify;
mod exec;
mod probe;

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::notebook::{load_notebook, sanitize_cell, NotebookError};
use crate::resolver::{requirement_line, Resolution};

pub use classify::{
    classify_install_log, classify_runtime_error, strip_ansi, ErrorClass, ErrorLabel,
    InstallMarker, InstallOutcome, InstallStatus,
};
pub use exec::{CommandOutcome, Executor, ProcessExecutor};
pub use probe::{
    probe_command, read_probe_result, run_probe, write_probe_request, InterpreterFingerprint,
    ProbeEntry, ProbeRequest, ProbeResult, ProbeStatus,
};

/// Generated cell runner, executed by the environment's interpreter.
pub const RUNNER_SCRIPT: &str = include_str!("runner.py");

pub const DEFAULT_TIME_BUDGET_S: u64 = 600;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("executor unavailable: {0}")]
    ExecutorUnavailable(String),
    #[error(transparent)]
    Notebook(#[from] NotebookError),
    #[error("probe failed: {0}")]
    Probe(String),
    #[error("harness i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// External command templates and limits. Placeholders: `{env}`, `{env_dir}`,
/// `{python}`, `{requirements}`, `{specs}` (one argument per specifier),
/// `{notebook}`, `{cells}`, `{runner}`, `{output}`, `{timeout}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct HarnessConfig {
    pub env_create_cmd: String,
    pub env_install_cmd: String,
    pub nb_exec_cmd: String,
    pub env_remove_cmd: String,
    pub parallelism: usize,
    pub time_budget_s: u64,
    pub install_timeout_s: u64,
    pub keep_env: bool,
    /// Where per-run directories are created; the system temp dir by default.
    pub work_root: Option<PathBuf>,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        Self {
            env_create_cmd: "conda create --yes --quiet --name {env} python={python}".into(),
            env_install_cmd: "conda run --name {env} python -m pip install {specs}".into(),
            nb_exec_cmd: "conda run --name {env} python {runner} {cells} {output}".into(),
            env_remove_cmd: "conda env remove --yes --name {env}".into(),
            parallelism: 4,
            time_budget_s: DEFAULT_TIME_BUDGET_S,
            install_timeout_s: 1800,
            keep_env: false,
            work_root: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepKind {
    CreateEnvironment,
    InstallPackages,
    ExecuteNotebook,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanStep {
    pub kind: StepKind,
    pub description: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvPlan {
    pub env_name: String,
    pub interpreter_line: String,
    pub install_steps: Vec<PlanStep>,
    pub specs: Vec<String>,
    pub notebook_path: PathBuf,
    pub time_budget: u64,
}

static RUN_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Token unique within the host: pid, clock and a process-wide counter.
fn run_token() -> String {
    let nanos = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map_or(0, |d| d.as_nanos());
    let n = RUN_COUNTER.fetch_add(1, Ordering::Relaxed);
    let raw = format!("{}-{nanos}-{n}", std::process::id());
    let digest = <sha2::Sha256 as sha2::Digest>::digest(raw.as_bytes());
    hex::encode(&digest[..5])
}

fn env_name_for(notebook: &Path) -> String {
    let stem: String = notebook
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .take(32)
        .collect();
    let stem = if stem.is_empty() { "notebook".to_string() } else { stem };
    format!("envsniff-{stem}-{}", run_token())
}

/// Specifier lines of a requirements file, comments and blanks dropped.
pub fn specs_from_requirements(text: &str) -> Vec<String> {
    text.lines()
        .map(|l| l.split(" #").next().unwrap_or("").trim())
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// Plan for installing `specs` and executing the notebook. Pure data.
pub fn plan_from_specs(specs: Vec<String>, interpreter_line: &str, notebook_path: &Path) -> EnvPlan {
    let mut specs = specs;
    specs.sort();
    let env_name = env_name_for(notebook_path);
    let mut steps = vec![PlanStep {
        kind: StepKind::CreateEnvironment,
        description: format!("create environment {env_name} with Python {interpreter_line}"),
    }];
    if !specs.is_empty() {
        steps.push(PlanStep {
            kind: StepKind::InstallPackages,
            description: format!("install {}", specs.join(" ")),
        });
    }
    steps.push(PlanStep {
        kind: StepKind::ExecuteNotebook,
        description: format!("execute {} top-down", notebook_path.display()),
    });
    EnvPlan {
        env_name,
        interpreter_line: interpreter_line.to_string(),
        install_steps: steps,
        specs,
        notebook_path: notebook_path.to_path_buf(),
        time_budget: DEFAULT_TIME_BUDGET_S,
    }
}

pub fn plan_environment(resolution: &Resolution, interpreter_line: &str, notebook_path: &Path) -> EnvPlan {
    let specs = resolution.resolved.iter().map(requirement_line).collect();
    plan_from_specs(specs, interpreter_line, notebook_path)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionOutcome {
    /// False when installation failed and nothing was executed.
    pub ran: bool,
    pub all_cells_ok: bool,
    pub failed_at_cell: Option<usize>,
    pub timed_out: bool,
    pub cells_run: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub notebook: PathBuf,
    pub env_name: String,
    pub install: InstallOutcome,
    pub execution: ExecutionOutcome,
    pub error_class: Option<ErrorClass>,
    pub traceback_excerpt: Option<String>,
    /// Kept run directory (logs, cells, result) when the environment is kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub work_dir: Option<PathBuf>,
}

impl ValidationReport {
    pub fn succeeded(&self) -> bool {
        self.install.status == InstallStatus::Success && self.execution.all_cells_ok
    }
}

struct Vars<'a> {
    plan: &'a EnvPlan,
    env_dir: PathBuf,
    requirements: PathBuf,
    cells: PathBuf,
    runner: PathBuf,
    output: PathBuf,
}

impl Vars<'_> {
    fn expand(&self, template: &str) -> Result<Vec<String>, HarnessError> {
        let tokens = shlex::split(template)
            .ok_or_else(|| HarnessError::ExecutorUnavailable(format!("unbalanced quotes in `{template}`")))?;
        let mut argv = Vec::new();
        for token in tokens {
            if token == "{specs}" {
                argv.extend(self.plan.specs.iter().cloned());
                continue;
            }
            let replaced = token
                .replace("{env_dir}", &self.env_dir.to_string_lossy())
                .replace("{env}", &self.plan.env_name)
                .replace("{python}", &self.plan.interpreter_line)
                .replace("{requirements}", &self.requirements.to_string_lossy())
                .replace("{notebook}", &self.plan.notebook_path.to_string_lossy())
                .replace("{cells}", &self.cells.to_string_lossy())
                .replace("{runner}", &self.runner.to_string_lossy())
                .replace("{output}", &self.output.to_string_lossy())
                .replace("{timeout}", &self.plan.time_budget.to_string());
            argv.push(replaced);
        }
        Ok(argv)
    }
}

#[derive(Deserialize)]
struct RunnerResult {
    cells_run: usize,
    failed_at: Option<usize>,
    traceback: Option<String>,
}

fn tail(text: &str, lines: usize) -> String {
    let all: Vec<&str> = text.lines().collect();
    all[all.len().saturating_sub(lines)..].join("\n")
}

fn failed_install(outcome: &CommandOutcome, log: PathBuf) -> InstallOutcome {
    let mut install = classify_install_log(&outcome.log, outcome.exit_code.unwrap_or(-1));
    install.status = InstallStatus::Failure;
    install.raw_log_ref = Some(log);
    install
}

/// Executes a plan: create the environment, install, run the cells top-down
/// within the time budget, then tear everything down unless `keep_env`.
pub fn run_validation(
    plan: &EnvPlan,
    config: &HarnessConfig,
    executor: &dyn Executor,
) -> Result<ValidationReport, HarnessError> {
    let notebook_text = std::fs::read_to_string(&plan.notebook_path)?;
    let cells = load_notebook(&notebook_text)?;
    let root = config.work_root.clone().unwrap_or_else(std::env::temp_dir);
    let work = root.join(&plan.env_name);
    std::fs::create_dir_all(&work)?;
    let work = work.canonicalize()?;
    let vars = Vars {
        plan,
        env_dir: work.join("env"),
        requirements: work.join("requirements.txt"),
        cells: work.join("cells.json"),
        runner: work.join("runner.py"),
        output: work.join("result.json"),
    };
    let runnable: Vec<serde_json::Value> = cells
        .iter()
        .map(|c| {
            let clean = sanitize_cell(&c.source);
            let source = if clean.excluded() { c.source.clone() } else { clean.text };
            serde_json::json!({"position": c.position, "source": source})
        })
        .collect();
    std::fs::write(&vars.cells, serde_json::to_string(&runnable).map_err(std::io::Error::other)?)?;
    std::fs::write(&vars.runner, RUNNER_SCRIPT)?;
    let mut requirements = plan.specs.join("\n");
    requirements.push('\n');
    std::fs::write(&vars.requirements, requirements)?;

    let cwd = plan
        .notebook_path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    let install_timeout = Duration::from_secs(config.install_timeout_s.max(1));
    let result = (|| {
        let mut report = ValidationReport {
            notebook: plan.notebook_path.clone(),
            env_name: plan.env_name.clone(),
            install: classify_install_log("", 0),
            execution: ExecutionOutcome::default(),
            error_class: None,
            traceback_excerpt: None,
            work_dir: None,
        };
        let create_log = work.join("create.log");
        let created = executor.run(&vars.expand(&config.env_create_cmd)?, &cwd, install_timeout, &create_log)?;
        if !created.succeeded() {
            report.install = failed_install(&created, create_log);
            return Ok(report);
        }
        if !plan.specs.is_empty() {
            let install_log = work.join("install.log");
            let installed = executor.run(&vars.expand(&config.env_install_cmd)?, &cwd, install_timeout, &install_log)?;
            let mut outcome = classify_install_log(&installed.log, installed.exit_code.unwrap_or(-1));
            outcome.raw_log_ref = Some(install_log.clone());
            if installed.timed_out {
                outcome = failed_install(&installed, install_log);
            }
            report.install = outcome;
            if report.install.status == InstallStatus::Failure {
                return Ok(report);
            }
        }

        let budget = Duration::from_secs(plan.time_budget.max(1));
        let exec_log = work.join("execute.log");
        let ran = executor.run(&vars.expand(&config.nb_exec_cmd)?, &cwd, budget, &exec_log)?;
        let parsed: Option<RunnerResult> = std::fs::read_to_string(&vars.output)
            .ok()
            .and_then(|t| serde_json::from_str(&t).ok());
        let execution = &mut report.execution;
        execution.ran = true;
        execution.cells_run = parsed.as_ref().map_or(0, |r| r.cells_run);
        if ran.timed_out {
            execution.timed_out = true;
            return Ok(report);
        }
        let traceback = match &parsed {
            Some(RunnerResult {
                failed_at: Some(at),
                traceback,
                ..
            }) => {
                execution.failed_at_cell = Some(*at);
                Some(traceback.clone().unwrap_or_default())
            }
            Some(_) if ran.succeeded() => None,
            _ => Some(tail(&ran.log, 40)),
        };
        match traceback {
            None => execution.all_cells_ok = true,
            Some(tb) => {
                let tb = strip_ansi(&tb);
                report.error_class = Some(classify_runtime_error(&tb));
                report.traceback_excerpt = Some(tail(&tb, 20));
            }
        }
        Ok(report)
    })();

    if config.keep_env {
        if let Ok(report) = result {
            return Ok(ValidationReport {
                work_dir: Some(work),
                ..report
            });
        }
    } else {
        if let Ok(argv) = vars.expand(&config.env_remove_cmd) {
            let _ = executor.run(&argv, &cwd, install_timeout, &work.join("remove.log"));
        }
        let _ = std::fs::remove_dir_all(&work);
    }
    result
}

/// Validates several plans, at most `config.parallelism` at a time. Reports
/// come back in plan order.
pub fn validate_many(
    plans: &[EnvPlan],
    config: &HarnessConfig,
    executor: &dyn Executor,
) -> Vec<Result<ValidationReport, HarnessError>> {
    let width = config.parallelism.max(1);
    let mut out = Vec::with_capacity(plans.len());
    for chunk in plans.chunks(width) {
        let results: Vec<_> = std::thread::scope(|s| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|plan| s.spawn(move || run_validation(plan, config, executor)))
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("validation thread panicked"))
                .collect()
        });
        out.extend(results);
    }
    out
}

#[cfg(test)]
mod tests;
