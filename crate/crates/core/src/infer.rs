//! Notebook text to resolution in one call, with the bank already loaded.

use serde::Serialize;

use crate::bank::ApiBankIndex;
use crate::notebook::{collect_usages, load_notebook_document, AnalysisOptions, NotebookError, NotebookMeta, UsageSet};
use crate::resolver::{resolve, Resolution, ResolveError, ResolvePolicy};

#[derive(Debug, thiserror::Error)]
pub enum InferError {
    #[error(transparent)]
    Notebook(#[from] NotebookError),
    #[error(transparent)]
    Resolve(#[from] ResolveError),
}

#[derive(Debug, Clone, Serialize)]
pub struct Inference {
    pub meta: NotebookMeta,
    pub usages: UsageSet,
    pub resolution: Resolution,
}

/// Loads, analyzes and resolves one notebook document. Never touches the
/// network: the index is the only source of release knowledge.
pub fn infer_notebook(
    document: &str,
    options: &AnalysisOptions,
    index: &ApiBankIndex,
    policy: &ResolvePolicy,
) -> Result<Inference, InferError> {
    let doc = load_notebook_document(document)?;
    let usages = collect_usages(&doc.cells, options);
    let resolution = resolve(&usages, index, policy)?;
    Ok(Inference {
        meta: doc.meta,
        usages,
        resolution,
    })
}
