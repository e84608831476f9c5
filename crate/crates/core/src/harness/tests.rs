use std::sync::Mutex;

use super::*;
use crate::resolver::{Constraint, VersionRange};

fn range(library: &str, constraint: Constraint) -> VersionRange {
    VersionRange {
        library: library.into(),
        feasible: vec!["1.0".into()],
        emitted_constraint: constraint,
        run: vec!["1.0".into()],
        excluded_runs: Vec::new(),
        usage_count: 1,
    }
}

fn notebook(dir: &Path, cells: &[&str]) -> PathBuf {
    let cells: Vec<serde_json::Value> = cells
        .iter()
        .map(|src| serde_json::json!({"cell_type": "code", "source": src, "execution_count": null, "metadata": {}, "outputs": []}))
        .collect();
    let path = dir.join("nb.ipynb");
    let doc = serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells});
    std::fs::write(&path, doc.to_string()).unwrap();
    path
}

fn local_config(work: &Path) -> HarnessConfig {
    HarnessConfig {
        env_create_cmd: "true".into(),
        env_install_cmd: "true {specs}".into(),
        nb_exec_cmd: "python3 {runner} {cells} {output}".into(),
        env_remove_cmd: "true".into(),
        work_root: Some(work.to_path_buf()),
        ..HarnessConfig::default()
    }
}

#[test]
fn exact_pin_passes_through() {
    let res = Resolution {
        resolved: vec![range("pandas", Constraint::Exact { version: "1.0".into() })],
        ..Resolution::default()
    };
    let plan = plan_environment(&res, "3.8", Path::new("nb.ipynb"));
    assert_eq!(plan.specs, ["pandas==1.0"]);
    assert_eq!(plan.install_steps[1].kind, StepKind::InstallPackages);
    assert!(plan.install_steps[1].description.contains("pandas==1.0"));
    assert_eq!(plan.time_budget, 600);
}

#[test]
fn empty_resolution_plans_create_and_execute() {
    let plan = plan_environment(&Resolution::default(), "3.8", Path::new("nb.ipynb"));
    let kinds: Vec<StepKind> = plan.install_steps.iter().map(|s| s.kind).collect();
    assert_eq!(kinds, [StepKind::CreateEnvironment, StepKind::ExecuteNotebook]);
}

#[test]
fn three_libraries_sorted_in_one_step() {
    let res = Resolution {
        resolved: vec![
            range("scipy", Constraint::Any),
            range("numpy", Constraint::Interval { lo: Some("1.0".into()), hi: None }),
            range("matplotlib", Constraint::Exact { version: "3.1".into() }),
        ],
        ..Resolution::default()
    };
    let plan = plan_environment(&res, "3.8", Path::new("nb.ipynb"));
    assert_eq!(plan.specs, ["matplotlib==3.1", "numpy>=1.0", "scipy"]);
    let installs = plan.install_steps.iter().filter(|s| s.kind == StepKind::InstallPackages).count();
    assert_eq!(installs, 1);
}

#[test]
fn environment_names_are_unique() {
    let a = plan_from_specs(vec![], "3.8", Path::new("x/My Notebook.ipynb"));
    let b = plan_from_specs(vec![], "3.8", Path::new("x/My Notebook.ipynb"));
    assert_ne!(a.env_name, b.env_name);
    assert!(a.env_name.starts_with("envsniff-My_Notebook-"));
}

#[test]
fn requirements_parsing() {
    let specs = specs_from_requirements("# header\npandas\n\nnumpy>=1.0 # note\n");
    assert_eq!(specs, ["pandas", "numpy>=1.0"]);
}

#[test]
fn template_expansion() {
    let plan = plan_from_specs(vec!["b==1".into(), "a".into()], "3.8", Path::new("/n/nb.ipynb"));
    let vars = Vars {
        plan: &plan,
        env_dir: "/w/env".into(),
        requirements: "/w/req.txt".into(),
        cells: "/w/cells.json".into(),
        runner: "/w/runner.py".into(),
        output: "/w/out.json".into(),
    };
    let argv = vars.expand("pip install --target {env_dir} {specs} -r '{requirements}'").unwrap();
    assert_eq!(argv, ["pip", "install", "--target", "/w/env", "a", "b==1", "-r", "/w/req.txt"]);
    let argv = vars.expand("run --name={env} --timeout {timeout} {notebook}").unwrap();
    assert_eq!(argv[1], format!("--name={}", plan.env_name));
    assert_eq!(argv[3], "600");
    assert_eq!(argv[4], "/n/nb.ipynb");
}

#[test]
fn all_cells_ok() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["%matplotlib inline\nimport json\nx = json.dumps([1])", "y = x + '!'\ndisplay(y)"]);
    let plan = plan_from_specs(vec!["toylib==2".into()], "3", &nb);
    let report = run_validation(&plan, &local_config(dir.path()), &ProcessExecutor).unwrap();
    assert!(report.succeeded(), "{report:?}");
    assert_eq!(report.execution.cells_run, 2);
    assert!(report.error_class.is_none());
    assert!(!dir.path().join(&plan.env_name).exists());
}

#[test]
fn failing_cell_is_classified() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["x = 1", "from sklearn.grid_search import GridSearchCV", "never = 1"]);
    let plan = plan_from_specs(vec![], "3", &nb);
    let report = run_validation(&plan, &local_config(dir.path()), &ProcessExecutor).unwrap();
    assert!(!report.execution.all_cells_ok);
    assert_eq!(report.execution.failed_at_cell, Some(1));
    assert_eq!(report.execution.cells_run, 2);
    let class = report.error_class.unwrap();
    assert_eq!(class.label, ErrorLabel::ModuleNotFoundError);
    assert!(class.environment_related);
    assert!(report.traceback_excerpt.unwrap().contains("sklearn"));
}

#[test]
fn time_budget_forces_timeout() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["import time\ntime.sleep(30)"]);
    let mut plan = plan_from_specs(vec![], "3", &nb);
    plan.time_budget = 1;
    let report = run_validation(&plan, &local_config(dir.path()), &ProcessExecutor).unwrap();
    assert!(report.execution.timed_out);
    assert!(report.error_class.is_none());
    assert!(!report.execution.all_cells_ok);
}

#[test]
fn keep_env_keeps_the_work_dir() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["pass"]);
    let plan = plan_from_specs(vec![], "3", &nb);
    let config = HarnessConfig {
        keep_env: true,
        ..local_config(dir.path())
    };
    let report = run_validation(&plan, &config, &ProcessExecutor).unwrap();
    let kept = report.work_dir.unwrap();
    assert!(kept.join("cells.json").exists());
}

/// Replays canned outcomes and records the commands it was given.
struct Scripted {
    outcomes: Mutex<Vec<CommandOutcome>>,
    seen: Mutex<Vec<Vec<String>>>,
}

impl Executor for Scripted {
    fn run(&self, argv: &[String], _: &Path, _: Duration, _: &Path) -> Result<CommandOutcome, HarnessError> {
        self.seen.lock().unwrap().push(argv.to_vec());
        let mut outcomes = self.outcomes.lock().unwrap();
        Ok(if outcomes.is_empty() {
            CommandOutcome { exit_code: Some(0), timed_out: false, log: String::new() }
        } else {
            outcomes.remove(0)
        })
    }
}

#[test]
fn install_failure_stops_before_execution() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["import toylib"]);
    let plan = plan_from_specs(vec!["toylib==9".into()], "3", &nb);
    let exec = Scripted {
        outcomes: Mutex::new(vec![
            CommandOutcome { exit_code: Some(0), timed_out: false, log: String::new() },
            CommandOutcome {
                exit_code: Some(1),
                timed_out: false,
                log: "ERROR: Could not find a version that satisfies the requirement toylib==9".into(),
            },
        ]),
        seen: Mutex::new(Vec::new()),
    };
    let report = run_validation(&plan, &local_config(dir.path()), &exec).unwrap();
    assert_eq!(report.install.status, InstallStatus::Failure);
    assert_eq!(report.install.matched_markers, [InstallMarker::GenericError]);
    assert!(!report.execution.ran);
    assert!(report.error_class.is_none());
    // create, install, remove: nothing executed
    assert_eq!(exec.seen.lock().unwrap().len(), 3);
}

#[test]
fn missing_executor_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["pass"]);
    let plan = plan_from_specs(vec![], "3", &nb);
    let config = HarnessConfig {
        env_create_cmd: "/nonexistent/conda create -n {env}".into(),
        ..local_config(dir.path())
    };
    assert!(matches!(
        run_validation(&plan, &config, &ProcessExecutor),
        Err(HarnessError::ExecutorUnavailable(_))
    ));
}

#[test]
fn parallel_runs_do_not_share_environments() {
    let dir = tempfile::tempdir().unwrap();
    let nb = notebook(dir.path(), &["x = 1"]);
    let plans: Vec<EnvPlan> = (0..4).map(|_| plan_from_specs(vec![], "3", &nb)).collect();
    let config = HarnessConfig {
        parallelism: 4,
        ..local_config(dir.path())
    };
    let reports: Vec<ValidationReport> = validate_many(&plans, &config, &ProcessExecutor)
        .into_iter()
        .map(Result::unwrap)
        .collect();
    let names: std::collections::BTreeSet<&str> = reports.iter().map(|r| r.env_name.as_str()).collect();
    assert_eq!(names.len(), 4);
    assert!(reports.iter().all(ValidationReport::succeeded));
}
