use std::collections::BTreeSet;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{fetch_and_unpack, IndexClient, IngestError, ReleaseRef};
use crate::bank::{compute_import_closure, enhance_tree, BankNote, ReleaseApiSet, ReleaseStats};
use crate::pysrc::{
    build_directory_tree, extract_import_edges, parse_file, ImportNote, ReleaseModules, SourceModule,
};

/// Top-level modules (or requested names) the index knows nothing about.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnindexedReport {
    pub unindexed_modules: BTreeSet<String>,
}

impl UnindexedReport {
    pub fn record(&mut self, name: &str) {
        self.unindexed_modules.insert(name.to_string());
    }

    pub fn is_empty(&self) -> bool {
        self.unindexed_modules.is_empty()
    }
}

#[derive(Debug)]
pub struct IngestOutcome {
    pub release: ReleaseRef,
    pub result: Result<ReleaseApiSet, IngestError>,
}

/// Builds the API set of an unpacked release rooted at `root`.
pub fn ingest_tree(library: &str, version: &str, root: &Path) -> Result<ReleaseApiSet, IngestError> {
    let mut files: Vec<String> = walkdir::WalkDir::new(root)
        .into_iter()
        .filter_map(Result::ok)
        .filter(|e| e.file_type().is_file())
        .filter_map(|e| {
            let rel = e.path().strip_prefix(root).ok()?;
            let rel = rel.to_string_lossy().replace('\\', "/");
            rel.ends_with(".py").then_some(rel)
        })
        .collect();
    files.sort();
    let tree = build_directory_tree(&files).map_err(|_| IngestError::EmptyRelease)?;

    let mut stats = ReleaseStats {
        orphan_files: tree.orphans.len(),
        ..ReleaseStats::default()
    };
    let mut notes = Vec::new();
    let mut modules: Vec<SourceModule> = Vec::new();
    for (module_path, file_path) in tree.source_files() {
        stats.modules_total += 1;
        let bytes = std::fs::read(root.join(file_path))?;
        match parse_file(&bytes, file_path) {
            Ok(module) => {
                stats.skipped_constructs += module.skipped_constructs;
                modules.push(module);
            }
            Err(e) => {
                tracing::debug!(module = module_path, line = e.line, "parse failure");
                stats.modules_failed += 1;
                notes.push(BankNote::ParseFailure {
                    module: module_path.to_string(),
                    line: e.line,
                });
            }
        }
    }
    if stats.modules_failed * 2 > stats.modules_total {
        return Err(IngestError::IngestDegraded(stats));
    }

    let view = ReleaseModules::new(&modules);
    let mut edges = Vec::new();
    for module in &modules {
        let found = extract_import_edges(module, &view);
        edges.extend(found.edges);
        notes.extend(found.notes.into_iter().map(|n| match n {
            ImportNote::StarImportUnresolved { module, source } => {
                BankNote::StarImportUnresolved { module, source }
            }
        }));
    }
    let closure = compute_import_closure(&edges);
    let mut release = enhance_tree(library, version, &tree, &closure, &modules);
    release.notes.extend(notes);
    release.notes.sort();
    release.notes.dedup();
    release.stats = stats;
    Ok(release)
}

/// Fetches (or reuses the cached copy of) a release and builds its API set.
pub fn ingest_release(
    client: &IndexClient,
    release: &ReleaseRef,
    cache_dir: &Path,
) -> Result<ReleaseApiSet, IngestError> {
    let root = fetch_and_unpack(client, release, cache_dir)?;
    ingest_tree(&release.library, &release.version, &root)
}

/// Ingests releases on at most `parallelism` worker threads. Outcomes come
/// back in input order.
pub fn ingest_many(
    client: &IndexClient,
    releases: &[ReleaseRef],
    cache_dir: &Path,
    parallelism: usize,
) -> Vec<IngestOutcome> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<IngestOutcome>>> =
        Mutex::new((0..releases.len()).map(|_| None).collect());
    let workers = parallelism.max(1).min(releases.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(release) = releases.get(i) else {
                    break;
                };
                let result = ingest_release(client, release, cache_dir);
                slots.lock().unwrap()[i] = Some(IngestOutcome {
                    release: release.clone(),
                    result,
                });
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|o| o.expect("every slot filled"))
        .collect()
}
