use std::path::Path;

use anyhow::{bail, Context};
use envsniff::harness::{
    plan_from_specs, run_validation, specs_from_requirements, HarnessError, ProcessExecutor,
};

use crate::config::CliConfig;

/// Interpreter line recorded by `infer` in the requirements header.
fn header_python(text: &str) -> Option<String> {
    text.lines()
        .take_while(|l| l.starts_with('#') || l.trim().is_empty())
        .find_map(|l| l.strip_prefix("# Python:"))
        .map(|v| v.trim().to_string())
}

/// Exit code: 0 when install and execution succeed, 2 when either fails,
/// 1 when the environment tooling is missing.
pub fn run(config: &CliConfig, notebook: &Path, requirements: &Path) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(requirements)
        .with_context(|| format!("reading requirements {}", requirements.display()))?;
    if !notebook.is_file() {
        bail!("notebook {} not found", notebook.display());
    }
    let specs = specs_from_requirements(&text);
    if specs.is_empty() && !config.allow_empty {
        bail!(
            "{} lists no requirements; pass --allow-empty to validate anyway",
            requirements.display()
        );
    }
    let python = config
        .python
        .clone()
        .or_else(|| header_python(&text))
        .unwrap_or_else(|| "3".to_string());
    let mut plan = plan_from_specs(specs, &python, notebook);
    plan.time_budget = config.harness.time_budget_s;
    match run_validation(&plan, &config.harness, &ProcessExecutor) {
        Ok(report) => {
            println!("{}", serde_json::to_string(&report)?);
            Ok(if report.succeeded() { 0 } else { 2 })
        }
        Err(HarnessError::ExecutorUnavailable(what)) => {
            eprintln!("error: environment tooling unavailable: {what}");
            Ok(1)
        }
        Err(e) => Err(e.into()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn python_from_header() {
        let text = "# Generated by envsniff 0.1.0\n# API bank: abc\n# Python: 3.8\npandas==1.0\n# Python: 2.7\n";
        assert_eq!(header_python(text).as_deref(), Some("3.8"));
        assert_eq!(header_python("pandas\n"), None);
    }
}
