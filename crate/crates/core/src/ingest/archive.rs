use std::fs;
use std::io::{Cursor, Read};
use std::path::{Component, Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};

use sha2::{Digest, Sha256};

use super::{ArchiveKind, IndexClient, IngestError, ReleaseRef};

/// Directories of an sdist that never hold importable API.
const SDIST_EXCLUDED: &[&str] = &[
    "tests", "test", "testing", "docs", "doc", "examples", "example", "benchmarks", "bench",
];

const BUILD_FILES: &[&str] = &["setup.py", "pyproject.toml", "setup.cfg"];

static TMP_COUNTER: AtomicUsize = AtomicUsize::new(0);

/// Downloads, verifies and unpacks `release` under
/// `<cache>/<library>/<version>/<checksum>`, returning that directory. A warm
/// cache is returned as is, without touching the network.
pub fn fetch_and_unpack(
    client: &IndexClient,
    release: &ReleaseRef,
    cache_dir: &Path,
) -> Result<PathBuf, IngestError> {
    let version_dir = cache_dir.join(&release.library).join(&release.version);
    let target = version_dir.join(&release.checksum);
    if target.is_dir() {
        return Ok(target);
    }
    let bytes = client.download(&release.archive_url)?;
    let found = hex::encode(Sha256::digest(&bytes));
    if found != release.checksum {
        return Err(IngestError::ChecksumMismatch {
            filename: release.filename.clone(),
            expected: release.checksum.clone(),
            found,
        });
    }

    fs::create_dir_all(&version_dir)?;
    let tmp = version_dir.join(format!(
        ".tmp-{}-{}-{}",
        release.checksum,
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    let unpacked = unpack_archive(&bytes, &release.filename, release.archive_kind, &tmp);
    if let Err(e) = unpacked {
        let _ = fs::remove_dir_all(&tmp);
        return Err(e);
    }
    if let Err(e) = fs::rename(&tmp, &target) {
        // another worker won the race
        let _ = fs::remove_dir_all(&tmp);
        if !target.is_dir() {
            return Err(e.into());
        }
    }
    Ok(target)
}

/// Extracts the source files of an archive into `dest`.
pub fn unpack_archive(
    bytes: &[u8],
    filename: &str,
    kind: ArchiveKind,
    dest: &Path,
) -> Result<(), IngestError> {
    let entries = read_entries(bytes, filename)?;
    let selected = match kind {
        ArchiveKind::Wheel => select_wheel(entries),
        ArchiveKind::Sdist => select_sdist(entries),
    };
    fs::create_dir_all(dest)?;
    for (rel, data) in selected {
        let path = dest.join(&rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(path, data)?;
    }
    Ok(())
}

/// Path components of an archive member, rejecting anything that could
/// escape the destination.
fn safe_components(name: &str, archive: &str) -> Result<Vec<String>, IngestError> {
    let mut out = Vec::new();
    for component in Path::new(name).components() {
        match component {
            Component::Normal(c) => out.push(c.to_string_lossy().into_owned()),
            Component::CurDir => {}
            _ => {
                return Err(IngestError::CorruptArchive(format!(
                    "{archive}: unsafe member path {name}"
                )))
            }
        }
    }
    Ok(out)
}

type Entry = (Vec<String>, Vec<u8>);

/// Every regular file of the archive; contents are kept only for `.py`
/// files, the rest are listed with empty contents.
fn read_entries(bytes: &[u8], filename: &str) -> Result<Vec<Entry>, IngestError> {
    let bad = |e: &dyn std::fmt::Display| IngestError::CorruptArchive(format!("{filename}: {e}"));
    let mut out = Vec::new();
    if filename.ends_with(".whl") || filename.ends_with(".zip") {
        let mut zip = zip::ZipArchive::new(Cursor::new(bytes)).map_err(|e| bad(&e))?;
        for i in 0..zip.len() {
            let mut file = zip.by_index(i).map_err(|e| bad(&e))?;
            if file.is_dir() {
                continue;
            }
            let parts = safe_components(file.name(), filename)?;
            let mut data = Vec::new();
            if file.name().ends_with(".py") {
                file.read_to_end(&mut data).map_err(|e| bad(&e))?;
            }
            out.push((parts, data));
        }
    } else {
        let reader: Box<dyn Read> = if filename.ends_with(".tar") {
            Box::new(Cursor::new(bytes))
        } else {
            Box::new(flate2::read::GzDecoder::new(Cursor::new(bytes)))
        };
        let mut archive = tar::Archive::new(reader);
        for entry in archive.entries().map_err(|e| bad(&e))? {
            let mut entry = entry.map_err(|e| bad(&e))?;
            if !entry.header().entry_type().is_file() {
                continue;
            }
            let name = entry.path().map_err(|e| bad(&e))?.to_string_lossy().into_owned();
            let parts = safe_components(&name, filename)?;
            let mut data = Vec::new();
            if name.ends_with(".py") {
                entry.read_to_end(&mut data).map_err(|e| bad(&e))?;
            }
            out.push((parts, data));
        }
    }
    Ok(out)
}

fn is_source(parts: &[String]) -> bool {
    parts.last().is_some_and(|p| p.ends_with(".py"))
}

/// Wheel members minus metadata; `<dist>.data/{purelib,platlib}/` is folded
/// into the root.
fn select_wheel(entries: Vec<Entry>) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    for (parts, data) in entries {
        if !is_source(&parts) || parts[0].ends_with(".dist-info") {
            continue;
        }
        let rel: &[String] = if parts[0].ends_with(".data") {
            match parts.get(1).map(String::as_str) {
                Some("purelib" | "platlib") if parts.len() > 2 => &parts[2..],
                _ => continue,
            }
        } else {
            &parts
        };
        out.push((rel.iter().collect(), data));
    }
    out
}

/// Package directories next to the shallowest build script (or under its
/// `src/` directory), without tests, docs and examples.
fn select_sdist(entries: Vec<Entry>) -> Vec<(PathBuf, Vec<u8>)> {
    let base: Vec<String> = entries
        .iter()
        .filter(|(parts, _)| parts.last().is_some_and(|f| BUILD_FILES.contains(&f.as_str())))
        .map(|(parts, _)| parts[..parts.len() - 1].to_vec())
        .min_by_key(|dir| dir.len())
        .unwrap_or_else(|| common_top_dir(&entries));

    let under = |parts: &[String], prefix: &[String]| parts.len() > prefix.len() && parts.starts_with(prefix);
    let mut src = base.clone();
    src.push("src".into());
    let has_src_layout = entries
        .iter()
        .any(|(parts, _)| under(parts, &src) && parts.last().is_some_and(|f| f == "__init__.py"));
    let base = if has_src_layout { src } else { base };

    let mut out = Vec::new();
    for (parts, data) in entries {
        if !is_source(&parts) || !under(&parts, &base) {
            continue;
        }
        let rel = &parts[base.len()..];
        if rel.len() > 1 && SDIST_EXCLUDED.contains(&rel[0].as_str()) {
            continue;
        }
        out.push((rel.iter().collect(), data));
    }
    out
}

fn common_top_dir(entries: &[Entry]) -> Vec<String> {
    let mut tops = entries.iter().filter(|(p, _)| p.len() > 1).map(|(p, _)| &p[0]);
    match tops.next() {
        Some(first) if tops.all(|t| t == first) && entries.iter().all(|(p, _)| p.len() > 1) => {
            vec![first.clone()]
        }
        _ => Vec::new(),
    }
}
