//! On-disk bank layout:
//!
//! ```text
//! <bank>/releases/<library>/<version>.apirec
//! <bank>/index.jsonl
//! ```
//!
//! Both are line-delimited JSON. The first line of every file is a header
//! carrying `format_version`, the record type and the SHA-256 of the rest of
//! the file; the remaining lines are the body.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{ApiBank, ApiBankIndex, BankError, IndexRef, ReleaseApiSet};
use crate::pysrc::Signature;

pub const FORMAT_VERSION: u32 = 1;

const INDEX_FILE: &str = "index.jsonl";
const RELEASES_DIR: &str = "releases";
const RELEASE_EXT: &str = "apirec";

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    format_version: u32,
    record: String,
    sha256: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "line", rename_all = "snake_case")]
enum IndexLine {
    Meta {
        release_count: usize,
        api_count: usize,
        versions: BTreeMap<String, Vec<String>>,
        top_level: BTreeMap<String, BTreeSet<String>>,
    },
    Signature {
        id: u32,
        signature: Signature,
    },
    Entry {
        fqn: String,
        refs: Vec<IndexRef>,
    },
}

fn corrupt(path: &Path, reason: impl std::fmt::Display) -> BankError {
    BankError::CorruptBank(format!("{}: {reason}", path.display()))
}

fn release_path(bank_dir: &Path, library: &str, version: &str) -> PathBuf {
    bank_dir
        .join(RELEASES_DIR)
        .join(library)
        .join(format!("{version}.{RELEASE_EXT}"))
}

fn write_atomic(path: &Path, record: &str, body: &str) -> Result<(), BankError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    let header = Header {
        format_version: FORMAT_VERSION,
        record: record.to_string(),
        sha256: hex::encode(Sha256::digest(body.as_bytes())),
    };
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    {
        let mut file = fs::File::create(&tmp)?;
        serde_json::to_writer(&mut file, &header).map_err(std::io::Error::other)?;
        file.write_all(b"\n")?;
        file.write_all(body.as_bytes())?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

fn read_checked(path: &Path, record: &str) -> Result<String, BankError> {
    let text = fs::read_to_string(path)?;
    let (head, body) = text
        .split_once('\n')
        .ok_or_else(|| corrupt(path, "missing header"))?;
    let header: Header =
        serde_json::from_str(head).map_err(|e| corrupt(path, format!("bad header: {e}")))?;
    if header.format_version != FORMAT_VERSION {
        return Err(BankError::UnsupportedFormat {
            found: header.format_version,
            supported: FORMAT_VERSION,
        });
    }
    if header.record != record {
        return Err(corrupt(path, format!("expected {record} record, found {}", header.record)));
    }
    if hex::encode(Sha256::digest(body.as_bytes())) != header.sha256 {
        return Err(corrupt(path, "checksum mismatch"));
    }
    Ok(body.to_string())
}

/// Writes (or replaces) the record of one release.
pub fn save_release(bank_dir: &Path, release: &ReleaseApiSet) -> Result<(), BankError> {
    let mut body = serde_json::to_string(release).map_err(std::io::Error::other)?;
    body.push('\n');
    write_atomic(
        &release_path(bank_dir, &release.library, &release.version),
        "release",
        &body,
    )
}

pub fn save_index(bank_dir: &Path, index: &ApiBankIndex) -> Result<(), BankError> {
    let mut lines = Vec::with_capacity(index.entries.len() + index.signatures.len() + 1);
    lines.push(IndexLine::Meta {
        release_count: index.release_count,
        api_count: index.api_count,
        versions: index.versions.clone(),
        top_level: index.top_level.clone(),
    });
    for (id, signature) in index.signatures.iter().enumerate() {
        lines.push(IndexLine::Signature {
            id: id as u32,
            signature: signature.clone(),
        });
    }
    for (fqn, refs) in &index.entries {
        lines.push(IndexLine::Entry {
            fqn: fqn.clone(),
            refs: refs.clone(),
        });
    }
    let mut body = String::new();
    for line in &lines {
        body.push_str(&serde_json::to_string(line).map_err(std::io::Error::other)?);
        body.push('\n');
    }
    write_atomic(&bank_dir.join(INDEX_FILE), "index", &body)
}

/// Writes every release record plus the index.
pub fn save_bank(bank: &ApiBank, bank_dir: &Path) -> Result<(), BankError> {
    fs::create_dir_all(bank_dir)?;
    for release in bank.releases.values() {
        save_release(bank_dir, release)?;
    }
    save_index(bank_dir, &bank.index)
}

fn load_index(path: &Path) -> Result<ApiBankIndex, BankError> {
    let body = read_checked(path, "index")?;
    let mut index = ApiBankIndex::default();
    let mut saw_meta = false;
    for (n, line) in body.lines().enumerate() {
        let parsed: IndexLine = serde_json::from_str(line)
            .map_err(|e| corrupt(path, format!("line {}: {e}", n + 2)))?;
        match parsed {
            IndexLine::Meta {
                release_count,
                api_count,
                versions,
                top_level,
            } => {
                saw_meta = true;
                index.release_count = release_count;
                index.api_count = api_count;
                index.versions = versions;
                index.top_level = top_level;
            }
            IndexLine::Signature { id, signature } => {
                if id as usize != index.signatures.len() {
                    return Err(corrupt(path, format!("signature id {id} out of order")));
                }
                index.signatures.push(signature);
            }
            IndexLine::Entry { fqn, refs } => {
                index.entries.insert(fqn, refs);
            }
        }
    }
    if !saw_meta {
        return Err(corrupt(path, "missing meta line"));
    }
    index.rebuild_interning();
    Ok(index)
}

/// Loads a bank written by [`save_bank`]. Every release referenced by the
/// index must have a record, and vice versa.
pub fn load_bank(bank_dir: &Path) -> Result<ApiBank, BankError> {
    if !bank_dir.is_dir() {
        return Err(BankError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("bank directory {} not found", bank_dir.display()),
        )));
    }
    let mut releases = BTreeMap::new();
    let root = bank_dir.join(RELEASES_DIR);
    if root.is_dir() {
        for entry in walkdir::WalkDir::new(&root).sort_by_file_name() {
            let entry = entry.map_err(|e| corrupt(&root, e))?;
            let path = entry.path();
            if path.extension().and_then(|e| e.to_str()) != Some(RELEASE_EXT) {
                continue;
            }
            let body = read_checked(path, "release")?;
            let release: ReleaseApiSet = serde_json::from_str(body.trim_end())
                .map_err(|e| corrupt(path, e))?;
            if path != release_path(bank_dir, &release.library, &release.version) {
                return Err(corrupt(path, "record does not match its location"));
            }
            releases.insert(release.key(), release);
        }
    }

    let index_path = bank_dir.join(INDEX_FILE);
    let index = if index_path.exists() {
        load_index(&index_path)?
    } else if releases.is_empty() {
        ApiBankIndex::default()
    } else {
        return Err(corrupt(&index_path, "index missing"));
    };

    let indexed: BTreeSet<(String, String)> = index
        .versions
        .iter()
        .flat_map(|(lib, vs)| vs.iter().map(move |v| (lib.clone(), v.clone())))
        .collect();
    let stored: BTreeSet<(String, String)> = releases.keys().cloned().collect();
    if indexed != stored || index.release_count != stored.len() {
        return Err(corrupt(&index_path, "index and release records disagree"));
    }
    for (fqn, refs) in &index.entries {
        for r in refs {
            if !stored.contains(&(r.library.clone(), r.version.clone())) {
                return Err(corrupt(&index_path, format!("{fqn} references a missing release")));
            }
        }
    }
    Ok(ApiBank { releases, index })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bank::ApiRecord;
    use crate::pysrc::DefKind;

    fn sample() -> ApiBank {
        let mut releases = Vec::new();
        for v in ["1.0", "2.0"] {
            let mut r = ReleaseApiSet::new("toylib", v);
            r.apis.insert(
                "toylib.core.load".into(),
                ApiRecord {
                    fqn: "toylib.core.load".into(),
                    kind: DefKind::Function,
                    signature: Signature {
                        positional: vec!["path".into()],
                        ..Signature::default()
                    },
                    defining_module: "toylib.core".into(),
                },
            );
            r.alias_map
                .insert("toylib.load".into(), "toylib.core.load".into());
            r.top_levels.insert("toylib".into());
            releases.push(r);
        }
        ApiBank::from_releases(releases).unwrap()
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let bank = sample();
        save_bank(&bank, dir.path()).unwrap();
        assert_eq!(load_bank(dir.path()).unwrap(), bank);
    }

    #[test]
    fn truncated_release_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_bank(&sample(), dir.path()).unwrap();
        let path = release_path(dir.path(), "toylib", "1.0");
        let text = fs::read(&path).unwrap();
        fs::write(&path, &text[..text.len() - 20]).unwrap();
        assert!(matches!(load_bank(dir.path()), Err(BankError::CorruptBank(_))));
    }

    #[test]
    fn truncated_index_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_bank(&sample(), dir.path()).unwrap();
        let path = dir.path().join(INDEX_FILE);
        let text = fs::read(&path).unwrap();
        fs::write(&path, &text[..10]).unwrap();
        assert!(matches!(load_bank(dir.path()), Err(BankError::CorruptBank(_))));
    }

    #[test]
    fn other_format_version_is_reported() {
        let dir = tempfile::tempdir().unwrap();
        save_bank(&sample(), dir.path()).unwrap();
        let path = dir.path().join(INDEX_FILE);
        let text = fs::read_to_string(&path).unwrap();
        let bumped = text.replacen("\"format_version\":1", "\"format_version\":0", 1);
        fs::write(&path, bumped).unwrap();
        match load_bank(dir.path()) {
            Err(BankError::UnsupportedFormat { found, supported }) => {
                assert_eq!((found, supported), (0, FORMAT_VERSION));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn empty_dir_loads_empty_bank() {
        let dir = tempfile::tempdir().unwrap();
        assert!(load_bank(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn index_without_release_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        save_bank(&sample(), dir.path()).unwrap();
        fs::remove_file(release_path(dir.path(), "toylib", "2.0")).unwrap();
        assert!(matches!(load_bank(dir.path()), Err(BankError::CorruptBank(_))));
    }
}
