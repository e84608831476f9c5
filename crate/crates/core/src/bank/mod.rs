//! The API bank: per-release API sets with re-export aliases, release diffs,
//! and the inverted index queried during inference.

mod closure;
mod diff;
mod enhance;
mod index;
mod store;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

pub use crate::pysrc::ImportEdge;
use crate::pysrc::{DefKind, Signature};
pub use closure::compute_import_closure;
pub use diff::{diff_releases, ApiDiff, ParamChange};
pub use enhance::enhance_tree;
pub use index::{build_index, ApiBankIndex, CallSignature, EntryKind, IndexRef};
pub use store::{load_bank, save_bank, save_index, save_release, FORMAT_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum BankError {
    #[error("release {library} {version} is already in the bank")]
    DuplicateRelease { library: String, version: String },
    #[error("cannot diff releases of different libraries ({left} vs {right})")]
    LibraryMismatch { left: String, right: String },
    #[error("corrupt bank: {0}")]
    CorruptBank(String),
    #[error("unsupported bank format version {found} (supported: {supported})")]
    UnsupportedFormat { found: u32, supported: u32 },
    #[error("bank is empty")]
    EmptyBank,
    #[error("bank i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// One callable API of a release.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiRecord {
    pub fqn: String,
    pub kind: DefKind,
    pub signature: Signature,
    pub defining_module: String,
}

impl ApiRecord {
    pub fn positional_params(&self) -> &[String] {
        &self.signature.positional
    }
}

/// Non-fatal findings recorded while building a release's API set.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum BankNote {
    /// A re-exported name that is never defined in the release, typically one
    /// coming from an external dependency.
    DanglingEdge { edge: ImportEdge },
    StarImportUnresolved { module: String, source: String },
    ParseFailure { module: String, line: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseStats {
    pub modules_total: usize,
    pub modules_failed: usize,
    pub skipped_constructs: usize,
    pub orphan_files: usize,
}

/// The complete API set of one library at one version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseApiSet {
    pub library: String,
    pub version: String,
    pub apis: BTreeMap<String, ApiRecord>,
    /// Alias fqn -> canonical fqn.
    pub alias_map: BTreeMap<String, String>,
    /// Dotted paths of every module and package of the release.
    pub modules: BTreeSet<String>,
    pub top_levels: BTreeSet<String>,
    pub notes: Vec<BankNote>,
    pub stats: ReleaseStats,
}

impl ReleaseApiSet {
    pub fn new(library: &str, version: &str) -> Self {
        Self {
            library: crate::names::normalize_library_name(library),
            version: version.to_string(),
            apis: BTreeMap::new(),
            alias_map: BTreeMap::new(),
            modules: BTreeSet::new(),
            top_levels: BTreeSet::new(),
            notes: Vec::new(),
            stats: ReleaseStats::default(),
        }
    }

    pub fn key(&self) -> (String, String) {
        (self.library.clone(), self.version.clone())
    }

    /// Canonical fqn of an API reachable as `fqn`, directly or via an alias.
    pub fn canonical<'a>(&'a self, fqn: &'a str) -> Option<&'a str> {
        if self.apis.contains_key(fqn) {
            Some(fqn)
        } else {
            self.alias_map.get(fqn).map(String::as_str)
        }
    }

    pub fn record(&self, fqn: &str) -> Option<&ApiRecord> {
        self.canonical(fqn).and_then(|c| self.apis.get(c))
    }

    /// True when `fqn` names an API, an alias, or a module of this release.
    pub fn contains(&self, fqn: &str) -> bool {
        self.canonical(fqn).is_some() || self.modules.contains(fqn)
    }

    /// Every queryable API name: canonical fqns plus aliases.
    pub fn api_names(&self) -> impl Iterator<Item = &str> {
        self.apis
            .keys()
            .chain(self.alias_map.keys())
            .map(String::as_str)
    }
}

/// Releases plus their index, as stored on disk.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ApiBank {
    pub releases: BTreeMap<(String, String), ReleaseApiSet>,
    pub index: ApiBankIndex,
}

impl ApiBank {
    pub fn from_releases(releases: Vec<ReleaseApiSet>) -> Result<Self, BankError> {
        let index = build_index(&releases)?;
        let releases = releases.into_iter().map(|r| (r.key(), r)).collect();
        Ok(Self { releases, index })
    }

    pub fn insert(&mut self, release: ReleaseApiSet) -> Result<(), BankError> {
        self.index.add_release(&release)?;
        self.releases.insert(release.key(), release);
        Ok(())
    }

    pub fn get(&self, library: &str, version: &str) -> Option<&ReleaseApiSet> {
        let library = crate::names::normalize_library_name(library);
        self.releases.get(&(library, version.to_string()))
    }

    pub fn contains_release(&self, library: &str, version: &str) -> bool {
        self.get(library, version).is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.releases.is_empty()
    }
}
