use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::ValueEnum;
use envsniff::harness::HarnessConfig;
use envsniff::ingest::DEFAULT_INDEX_URL;
use envsniff::resolver::ResolvePolicy;
use serde::Deserialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Requirements,
    Pipfile,
    Both,
}

impl OutputFormat {
    pub fn requirements(self) -> bool {
        matches!(self, OutputFormat::Requirements | OutputFormat::Both)
    }

    pub fn pipfile(self) -> bool {
        matches!(self, OutputFormat::Pipfile | OutputFormat::Both)
    }
}

/// Contents of the TOML config file. Every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
pub struct FileConfig {
    pub bank_dir: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub index_base_url: Option<String>,
    pub pin_latest: bool,
    pub include_star_imports: bool,
    pub allow_empty: bool,
    pub format: Option<OutputFormat>,
    pub python: Option<String>,
    #[serde(flatten)]
    pub harness: HarnessConfig,
}

impl FileConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

/// Effective settings after merging defaults, config file and flags.
#[derive(Debug, Clone)]
pub struct CliConfig {
    pub bank_dir: PathBuf,
    pub cache_dir: PathBuf,
    pub index_base_url: String,
    pub policy: ResolvePolicy,
    pub allow_empty: bool,
    pub format: OutputFormat,
    pub parallelism: usize,
    pub python: Option<String>,
    pub harness: HarnessConfig,
}

/// Values given on the command line; `None`/`false` means "not given".
#[derive(Debug, Default)]
pub struct Overrides {
    pub bank: Option<PathBuf>,
    pub cache: Option<PathBuf>,
    pub index_url: Option<String>,
    pub format: Option<OutputFormat>,
    pub pin_latest: bool,
    pub include_star_imports: bool,
    pub allow_empty: bool,
    pub parallel: Option<usize>,
    pub keep_env: bool,
    pub python: Option<String>,
    pub time_budget: Option<u64>,
}

fn data_home() -> PathBuf {
    std::env::var_os("HOME").map_or_else(|| PathBuf::from("."), PathBuf::from)
}

impl CliConfig {
    pub fn resolve(file: FileConfig, flags: Overrides) -> anyhow::Result<Self> {
        let bank_dir = flags
            .bank
            .or(file.bank_dir)
            .or_else(|| std::env::var_os("ENVSNIFF_BANK").map(PathBuf::from))
            .unwrap_or_else(|| data_home().join(".local/share/envsniff/bank"));
        let cache_dir = flags
            .cache
            .or(file.cache_dir)
            .unwrap_or_else(|| data_home().join(".cache/envsniff"));
        let mut harness = file.harness;
        if flags.keep_env {
            harness.keep_env = true;
        }
        if let Some(t) = flags.time_budget {
            harness.time_budget_s = t;
        }
        let parallelism = flags.parallel.unwrap_or(harness.parallelism);
        anyhow::ensure!(parallelism >= 1, "parallelism must be at least 1");
        anyhow::ensure!(harness.time_budget_s > 0, "time budget must be positive");
        harness.parallelism = parallelism;
        Ok(Self {
            bank_dir,
            cache_dir,
            index_base_url: flags
                .index_url
                .or(file.index_base_url)
                .unwrap_or_else(|| DEFAULT_INDEX_URL.to_string()),
            policy: ResolvePolicy {
                pin_latest: flags.pin_latest || file.pin_latest,
                include_star_imports: flags.include_star_imports || file.include_star_imports,
                demote_ambiguous: false,
            },
            allow_empty: flags.allow_empty || file.allow_empty,
            format: flags.format.or(file.format).unwrap_or_default(),
            parallelism,
            python: flags.python.or(file.python),
            harness,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_beat_file() {
        let file: FileConfig = toml::from_str(
            "bank_dir = \"/from/file\"\nformat = \"pipfile\"\nnb_exec_cmd = \"run {cells}\"\nparallelism = 3\ntime_budget_s = 60\n",
        )
        .unwrap();
        assert_eq!(file.harness.nb_exec_cmd, "run {cells}");
        let cfg = CliConfig::resolve(
            file,
            Overrides {
                bank: Some("/from/flag".into()),
                parallel: Some(2),
                ..Overrides::default()
            },
        )
        .unwrap();
        assert_eq!(cfg.bank_dir, PathBuf::from("/from/flag"));
        assert_eq!(cfg.format, OutputFormat::Pipfile);
        assert_eq!(cfg.parallelism, 2);
        assert_eq!(cfg.harness.time_budget_s, 60);
    }

    #[test]
    fn zero_parallelism_rejected() {
        let err = CliConfig::resolve(
            FileConfig::default(),
            Overrides {
                parallel: Some(0),
                ..Overrides::default()
            },
        );
        assert!(err.is_err());
    }
}
