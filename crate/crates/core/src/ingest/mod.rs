//! Release acquisition: package-index metadata, archive download and
//! unpacking, and the per-release pipeline that feeds the bank.

mod archive;
mod client;
mod pipeline;

use serde::{Deserialize, Serialize};

use crate::bank::ReleaseStats;

pub use archive::{fetch_and_unpack, unpack_archive};
pub use client::{IndexClient, DEFAULT_INDEX_URL};
pub use pipeline::{ingest_many, ingest_release, ingest_tree, IngestOutcome, UnindexedReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ArchiveKind {
    Wheel,
    Sdist,
}

/// A downloadable archive of one published version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseRef {
    pub library: String,
    pub version: String,
    pub archive_url: String,
    pub filename: String,
    pub archive_kind: ArchiveKind,
    /// Hex SHA-256 of the archive bytes.
    pub checksum: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedVersion {
    pub version: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReleaseListing {
    /// One usable archive per version, ascending by version.
    pub refs: Vec<ReleaseRef>,
    pub skipped: Vec<SkippedVersion>,
}

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("package index unavailable: {0}")]
    IndexUnavailable(String),
    #[error("unknown library {0}")]
    UnknownLibrary(String),
    #[error("checksum mismatch for {filename}: expected {expected}, got {found}")]
    ChecksumMismatch {
        filename: String,
        expected: String,
        found: String,
    },
    #[error("corrupt archive {0}")]
    CorruptArchive(String),
    #[error("too many modules failed to parse ({} of {})", .0.modules_failed, .0.modules_total)]
    IngestDegraded(ReleaseStats),
    #[error("release contains no importable source file")]
    EmptyRelease,
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl IngestError {
    /// Errors worth retrying later without changing anything.
    pub fn is_retryable(&self) -> bool {
        matches!(self, IngestError::IndexUnavailable(_))
    }
}
