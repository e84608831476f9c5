use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::Duration;

use serde::Deserialize;

use super::{ArchiveKind, IngestError, ReleaseListing, ReleaseRef, SkippedVersion};
use crate::names::normalize_library_name;
use crate::version::ReleaseVersion;

pub const DEFAULT_INDEX_URL: &str = "https://pypi.org";

#[derive(Debug, Deserialize)]
struct ProjectDoc {
    #[serde(default)]
    releases: BTreeMap<String, Vec<FileDoc>>,
}

#[derive(Debug, Deserialize)]
struct FileDoc {
    filename: String,
    url: String,
    #[serde(default)]
    packagetype: String,
    #[serde(default)]
    digests: BTreeMap<String, String>,
    #[serde(default)]
    yanked: bool,
}

enum Fetch {
    NotFound,
    Failed(String),
}

/// Client for the package index JSON API (`<base>/pypi/<name>/json`).
/// `file://` bases and archive URLs are read from disk.
#[derive(Debug)]
pub struct IndexClient {
    base_url: String,
    agent: ureq::Agent,
    max_retries: u32,
    backoff: Duration,
    requests: AtomicUsize,
}

impl IndexClient {
    pub fn new(base_url: &str) -> Self {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(120)))
            .build();
        Self {
            base_url: base_url.trim_end_matches('/').to_string(),
            agent: ureq::Agent::new_with_config(config),
            max_retries: 3,
            backoff: Duration::from_millis(500),
            requests: AtomicUsize::new(0),
        }
    }

    /// Retry policy: up to `max_retries` extra attempts, sleeping `backoff`,
    /// `2*backoff`, ... between them.
    pub fn with_retries(mut self, max_retries: u32, backoff: Duration) -> Self {
        self.max_retries = max_retries;
        self.backoff = backoff;
        self
    }

    pub fn base_url(&self) -> &str {
        &self.base_url
    }

    /// Number of network (or file URL) reads issued so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::Relaxed)
    }

    fn fetch_once(&self, url: &str) -> Result<Vec<u8>, Fetch> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        if let Some(path) = url.strip_prefix("file://") {
            let path = PathBuf::from(path);
            return std::fs::read(&path).map_err(|e| match e.kind() {
                std::io::ErrorKind::NotFound => Fetch::NotFound,
                _ => Fetch::Failed(format!("{}: {e}", path.display())),
            });
        }
        match self.agent.get(url).call() {
            Ok(mut response) => response
                .body_mut()
                .with_config()
                .limit(u64::MAX)
                .read_to_vec()
                .map_err(|e| Fetch::Failed(format!("{url}: {e}"))),
            Err(ureq::Error::StatusCode(404)) => Err(Fetch::NotFound),
            Err(e) => Err(Fetch::Failed(format!("{url}: {e}"))),
        }
    }

    fn fetch(&self, url: &str) -> Result<Option<Vec<u8>>, IngestError> {
        let mut delay = self.backoff;
        let mut attempt = 0;
        loop {
            match self.fetch_once(url) {
                Ok(bytes) => return Ok(Some(bytes)),
                Err(Fetch::NotFound) => return Ok(None),
                Err(Fetch::Failed(reason)) if attempt >= self.max_retries => {
                    return Err(IngestError::IndexUnavailable(reason));
                }
                Err(Fetch::Failed(reason)) => {
                    tracing::debug!(%reason, attempt, "retrying");
                    std::thread::sleep(delay);
                    delay *= 2;
                    attempt += 1;
                }
            }
        }
    }

    /// Downloads an archive.
    pub fn download(&self, url: &str) -> Result<Vec<u8>, IngestError> {
        self.fetch(url)?
            .ok_or_else(|| IngestError::IndexUnavailable(format!("{url}: not found")))
    }

    /// Every published version with a usable archive, ascending by version,
    /// plus the versions that had none.
    pub fn list_releases(&self, library: &str) -> Result<ReleaseListing, IngestError> {
        let url = format!("{}/pypi/{}/json", self.base_url, library);
        let bytes = self
            .fetch(&url)?
            .ok_or_else(|| IngestError::UnknownLibrary(library.to_string()))?;
        let doc: ProjectDoc = serde_json::from_slice(&bytes)
            .map_err(|e| IngestError::IndexUnavailable(format!("{url}: bad metadata: {e}")))?;
        Ok(listing_from_doc(&normalize_library_name(library), doc))
    }
}

fn listing_from_doc(library: &str, doc: ProjectDoc) -> ReleaseListing {
    let mut listing = ReleaseListing::default();
    for (version, files) in doc.releases {
        match choose_artifact(&files) {
            Ok((file, kind)) => listing.refs.push(ReleaseRef {
                library: library.to_string(),
                version,
                archive_url: file.url.clone(),
                filename: file.filename.clone(),
                archive_kind: kind,
                checksum: file.digests["sha256"].to_lowercase(),
            }),
            Err(reason) => listing.skipped.push(SkippedVersion { version, reason }),
        }
    }
    listing.refs.sort_by_cached_key(|r| ReleaseVersion::new(&r.version));
    listing
        .skipped
        .sort_by_cached_key(|s| ReleaseVersion::new(&s.version));
    listing
}

/// Wheel tags from a file name: (python, abi, platform).
fn wheel_tags(filename: &str) -> Option<(&str, &str, &str)> {
    let stem = filename.strip_suffix(".whl")?;
    let parts: Vec<&str> = stem.split('-').collect();
    if parts.len() < 5 {
        return None;
    }
    let n = parts.len();
    Some((parts[n - 3], parts[n - 2], parts[n - 1]))
}

fn is_sdist_name(filename: &str) -> bool {
    [".tar.gz", ".tgz", ".zip", ".tar"]
        .iter()
        .any(|ext| filename.ends_with(ext))
}

/// Ranks usable artifacts: universal wheels, other pure-platform wheels,
/// platform wheels (only their source members are read), then sdists.
fn artifact_rank(file: &FileDoc) -> Option<(u8, ArchiveKind)> {
    if file.yanked || !file.digests.contains_key("sha256") {
        return None;
    }
    if let Some((python, abi, platform)) = wheel_tags(&file.filename) {
        let rank = match (platform, abi) {
            ("any", "none") if python.contains("py2") && python.contains("py3") => 0,
            ("any", _) => 1,
            _ => 2,
        };
        return Some((rank, ArchiveKind::Wheel));
    }
    if (file.packagetype == "sdist" || file.packagetype.is_empty()) && is_sdist_name(&file.filename) {
        return Some((3, ArchiveKind::Sdist));
    }
    None
}

fn choose_artifact(files: &[FileDoc]) -> Result<(&FileDoc, ArchiveKind), String> {
    if files.is_empty() {
        return Err("no files published".into());
    }
    files
        .iter()
        .filter_map(|f| artifact_rank(f).map(|(rank, kind)| (rank, &f.filename, f, kind)))
        .min_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)))
        .map(|(_, _, f, kind)| (f, kind))
        .ok_or_else(|| {
            let kinds: Vec<&str> = files
                .iter()
                .map(|f| {
                    if f.yanked {
                        "yanked"
                    } else if f.packagetype.is_empty() {
                        f.filename.as_str()
                    } else {
                        f.packagetype.as_str()
                    }
                })
                .collect();
            format!("no applicable archive ({})", kinds.join(", "))
        })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn file(name: &str, kind: &str) -> FileDoc {
        FileDoc {
            filename: name.into(),
            url: format!("https://files.example/{name}"),
            packagetype: kind.into(),
            digests: [("sha256".to_string(), "AB".to_string())].into(),
            yanked: false,
        }
    }

    #[test]
    fn universal_wheel_wins() {
        let files = vec![
            file("t-1.0.tar.gz", "sdist"),
            file("t-1.0-cp39-cp39-manylinux1_x86_64.whl", "bdist_wheel"),
            file("t-1.0-py3-none-any.whl", "bdist_wheel"),
            file("t-1.0-py2.py3-none-any.whl", "bdist_wheel"),
        ];
        let (chosen, kind) = choose_artifact(&files).unwrap();
        assert_eq!(chosen.filename, "t-1.0-py2.py3-none-any.whl");
        assert_eq!(kind, ArchiveKind::Wheel);
    }

    #[test]
    fn platform_wheel_beats_sdist() {
        let files = vec![
            file("t-1.0.tar.gz", "sdist"),
            file("t-1.0-cp39-cp39-win_amd64.whl", "bdist_wheel"),
        ];
        assert_eq!(choose_artifact(&files).unwrap().1, ArchiveKind::Wheel);
    }

    #[test]
    fn sdist_fallback() {
        let files = vec![file("t-1.0.zip", "sdist")];
        assert_eq!(choose_artifact(&files).unwrap().1, ArchiveKind::Sdist);
    }

    #[test]
    fn egg_only_is_skipped() {
        let files = vec![file("t-1.0-py2.7.egg", "bdist_egg")];
        let reason = choose_artifact(&files).unwrap_err();
        assert!(reason.contains("bdist_egg"), "{reason}");
    }

    #[test]
    fn listing_sorted_by_version() {
        let doc = ProjectDoc {
            releases: [
                ("10.0".to_string(), vec![file("t-10.0-py3-none-any.whl", "bdist_wheel")]),
                ("2.0".to_string(), vec![file("t-2.0-py3-none-any.whl", "bdist_wheel")]),
                ("3.0".to_string(), vec![]),
            ]
            .into_iter()
            .collect(),
        };
        let listing = listing_from_doc("t", doc);
        let versions: Vec<&str> = listing.refs.iter().map(|r| r.version.as_str()).collect();
        assert_eq!(versions, ["2.0", "10.0"]);
        assert_eq!(listing.skipped.len(), 1);
        assert_eq!(listing.refs[0].checksum, "ab");
    }
}
