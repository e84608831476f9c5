use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use envsniff::bank::{load_bank, ApiBankIndex};
use envsniff::notebook::{local_modules_near, AnalysisOptions, InterpreterLine, StdlibTable};
use envsniff::resolver::{emit_pipfile, emit_requirements};
use envsniff::{infer_notebook, Inference};
use rayon::prelude::*;
use walkdir::WalkDir;

use crate::config::CliConfig;

const COMPLETE: u8 = 0;
const HARD_ERROR: u8 = 1;
const PARTIAL: u8 = 2;

fn notebooks_under(dir: &Path) -> Vec<PathBuf> {
    let mut found: Vec<PathBuf> = WalkDir::new(dir)
        .into_iter()
        .filter_entry(|e| e.file_name() != ".ipynb_checkpoints")
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file() && e.path().extension().is_some_and(|x| x == "ipynb"))
        .map(|e| e.into_path())
        .collect();
    found.sort();
    found
}

fn stem(path: &Path) -> String {
    path.file_stem().map_or_else(|| "notebook".to_string(), |s| s.to_string_lossy().into_owned())
}

fn analysis_options(config: &CliConfig, notebook: &Path) -> anyhow::Result<AnalysisOptions> {
    let stdlib = match &config.python {
        Some(text) => StdlibTable::for_line(
            InterpreterLine::parse(text).with_context(|| format!("unknown interpreter line `{text}`"))?,
        ),
        None => StdlibTable::all_lines(),
    };
    Ok(AnalysisOptions {
        stdlib,
        local_modules: local_modules_near(notebook),
    })
}

struct Outputs {
    dir: PathBuf,
    /// Prefix file names with the notebook stem (batch mode).
    prefixed: bool,
}

impl Outputs {
    fn file(&self, notebook: &Path, name: &str) -> PathBuf {
        if self.prefixed {
            self.dir.join(format!("{}.{name}", stem(notebook)))
        } else {
            self.dir.join(name)
        }
    }
}

fn write_outputs(
    config: &CliConfig,
    notebook: &Path,
    inference: &Inference,
    outputs: &Outputs,
    explain: bool,
) -> anyhow::Result<Vec<PathBuf>> {
    let mut written = Vec::new();
    let mut put = |path: PathBuf, text: String| -> anyhow::Result<()> {
        std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };
    if config.format.requirements() {
        put(outputs.file(notebook, "requirements.txt"), emit_requirements(&inference.resolution))?;
    }
    if config.format.pipfile() {
        put(outputs.file(notebook, "Pipfile"), emit_pipfile(&inference.resolution))?;
    }
    if explain {
        let name = format!("{}.explain.json", stem(notebook));
        put(outputs.dir.join(name), serde_json::to_string_pretty(inference)?)?;
    }
    Ok(written)
}

fn infer_one(
    config: &CliConfig,
    index: &ApiBankIndex,
    notebook: &Path,
    outputs: &Outputs,
    explain: bool,
) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(notebook).with_context(|| format!("reading {}", notebook.display()))?;
    let options = analysis_options(config, notebook)?;
    let inference = infer_notebook(&text, &options, index, &config.policy)
        .with_context(|| notebook.display().to_string())?;
    let written = write_outputs(config, notebook, &inference, outputs, explain)?;
    let res = &inference.resolution;
    let libs: Vec<String> = res
        .resolved
        .iter()
        .map(envsniff::resolver::requirement_line)
        .collect();
    println!(
        "{}: {} usages, {} libraries [{}], {} unresolved -> {}",
        notebook.display(),
        inference.usages.usages.len(),
        res.resolved.len(),
        libs.join(", "),
        res.unresolved_usages.len(),
        written.iter().map(|p| p.display().to_string()).collect::<Vec<_>>().join(", ")
    );
    Ok(if res.is_complete() { COMPLETE } else { PARTIAL })
}

/// Exit code: 0 when every usage resolved, 2 when some did not, 1 on a hard
/// error. A batch reports the worst code of its notebooks.
pub fn run(config: &CliConfig, path: &Path, output: Option<&Path>, explain: bool) -> anyhow::Result<u8> {
    let bank = load_bank(&config.bank_dir).with_context(|| format!("loading bank {}", config.bank_dir.display()))?;
    if bank.is_empty() {
        bail!(
            "the API bank at {} is empty; run `envsniff bank add <library>` first",
            config.bank_dir.display()
        );
    }
    let batch = path.is_dir();
    let notebooks = if batch { notebooks_under(path) } else { vec![path.to_path_buf()] };
    if notebooks.is_empty() {
        bail!("no notebooks under {}", path.display());
    }
    let default_dir = if batch {
        path.to_path_buf()
    } else {
        path.parent().map(Path::to_path_buf).unwrap_or_default()
    };
    let dir = output.map_or(default_dir, Path::to_path_buf);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let outputs = Outputs { dir, prefixed: batch };

    let pool = rayon::ThreadPoolBuilder::new().num_threads(config.parallelism).build()?;
    let codes: Vec<u8> = pool.install(|| {
        notebooks
            .par_iter()
            .map(|nb| match infer_one(config, &bank.index, nb, &outputs, explain) {
                Ok(code) => code,
                Err(e) => {
                    eprintln!("error: {e:#}");
                    HARD_ERROR
                }
            })
            .collect()
    });
    let worst = if codes.contains(&HARD_ERROR) {
        HARD_ERROR
    } else if codes.contains(&PARTIAL) {
        PARTIAL
    } else {
        COMPLETE
    };
    Ok(worst)
}
