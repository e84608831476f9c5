//! Notebook side: cell loading, magic stripping, and extraction of
//! standardized third-party API usages.

mod load;
mod sanitize;
mod stdlib;
mod usages;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

pub use crate::bank::CallSignature;
pub use load::{load_notebook, load_notebook_document, local_modules_near, NotebookDocument, NotebookMeta};
pub use sanitize::{sanitize_cell, Sanitized, SanitizeNote};
pub use stdlib::{is_builtin, InterpreterLine, StdlibTable};
pub use usages::{classify_name, collect_usages, trace_instance_calls, AnalysisOptions};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodeCell {
    /// 0-based index among the notebook's code cells.
    pub position: usize,
    pub execution_count: Option<u32>,
    pub source: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NotebookError {
    #[error("malformed notebook: {0}")]
    MalformedNotebook(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NameClass {
    Local,
    Stdlib,
    Library,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UsageOrigin {
    DirectCall,
    AliasCall,
    InstanceMethod,
    AttributeAccess,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CallSite {
    Call(CallSignature),
    /// Referenced (imported, passed around) without being called.
    ReferenceOnly,
}

impl CallSite {
    pub fn signature(&self) -> Option<&CallSignature> {
        match self {
            CallSite::Call(sig) => Some(sig),
            CallSite::ReferenceOnly => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct UsageRecord {
    pub fqn: String,
    pub call: CallSite,
    pub cell_position: usize,
    pub origin: UsageOrigin,
    /// Guessed from a star import rather than bound explicitly.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub low_confidence: bool,
}

/// Something the analysis skipped or could not handle in one cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellNote {
    pub cell_position: usize,
    pub note: SanitizeNote,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageSet {
    /// Usages in document order, exact duplicates removed.
    pub usages: Vec<UsageRecord>,
    /// Root modules of third-party imports.
    pub imported_top_levels: BTreeSet<String>,
    pub local_names: BTreeSet<String>,
    /// Bare names that were neither local, builtin nor import-rooted.
    pub unresolved: BTreeSet<String>,
    pub notes: Vec<CellNote>,
    /// Interpreter line of the stdlib table used, when one was selected.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpreter_line: Option<String>,
}

impl UsageSet {
    pub fn is_empty(&self) -> bool {
        self.usages.is_empty()
    }
}
