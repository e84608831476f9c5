//! Release version ordering.
//!
//! Versions follow the packaging ecosystem's ordering rules (numeric release
//! segments, pre-releases before their final release). Strings that do not parse
//! sort after every parseable version, lexicographically among themselves, and
//! are flagged through [`ReleaseVersion::is_unparsed`].

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone)]
pub struct ReleaseVersion {
    raw: String,
    parsed: Option<pep440_rs::Version>,
}

impl ReleaseVersion {
    pub fn new(raw: &str) -> Self {
        let raw = raw.trim().to_string();
        let parsed = pep440_rs::Version::from_str(&raw).ok();
        Self { raw, parsed }
    }

    pub fn as_str(&self) -> &str {
        &self.raw
    }

    pub fn is_unparsed(&self) -> bool {
        self.parsed.is_none()
    }

    pub fn is_prerelease(&self) -> bool {
        self.parsed.as_ref().is_some_and(|v| v.any_prerelease())
    }
}

impl fmt::Display for ReleaseVersion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.raw)
    }
}

impl PartialEq for ReleaseVersion {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for ReleaseVersion {}

impl PartialOrd for ReleaseVersion {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for ReleaseVersion {
    fn cmp(&self, other: &Self) -> Ordering {
        match (&self.parsed, &other.parsed) {
            // `1.0` and `1.0.0` compare equal under the ordering rules; fall back
            // to the raw text so that distinct strings never collapse.
            (Some(a), Some(b)) => a.cmp(b).then_with(|| self.raw.cmp(&other.raw)),
            (Some(_), None) => Ordering::Less,
            (None, Some(_)) => Ordering::Greater,
            (None, None) => self.raw.cmp(&other.raw),
        }
    }
}

/// Compares two version strings.
pub fn compare_versions(a: &str, b: &str) -> Ordering {
    ReleaseVersion::new(a).cmp(&ReleaseVersion::new(b))
}

/// Sorts version strings in place, ascending.
pub fn sort_versions(versions: &mut [String]) {
    versions.sort_by_cached_key(|v| ReleaseVersion::new(v));
}
