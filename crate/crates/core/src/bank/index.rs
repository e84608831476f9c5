use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{BankError, ReleaseApiSet};
use crate::pysrc::{DefKind, Signature};
use crate::version::compare_versions;

/// What a call site looked like: how many positional arguments it passed and
/// which keywords it named.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CallSignature {
    pub positional: usize,
    pub keywords: Vec<String>,
}

impl CallSignature {
    pub fn new(positional: usize, keywords: &[&str]) -> Self {
        Self {
            positional,
            keywords: keywords.iter().map(|k| k.to_string()).collect(),
        }
    }

    pub fn fits(&self, signature: &Signature) -> bool {
        self.keywords.iter().all(|k| signature.accepts_keyword(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EntryKind {
    Canonical,
    Alias,
    /// A module or package path; imports of it resolve through this entry.
    Module,
}

/// One (library, version) that provides a name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexRef {
    pub library: String,
    pub version: String,
    /// Interned signature id, see [`ApiBankIndex::signature`].
    pub signature: Option<u32>,
    pub kind: EntryKind,
    /// The name (or the alias target) is a class.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub class: bool,
}

fn ref_order(a: &IndexRef, b: &IndexRef) -> Ordering {
    a.library
        .cmp(&b.library)
        .then_with(|| compare_versions(&a.version, &b.version))
}

/// Inverted index from API name to the releases that provide it.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ApiBankIndex {
    pub entries: BTreeMap<String, Vec<IndexRef>>,
    /// Top-level module name -> libraries shipping it.
    pub top_level: BTreeMap<String, BTreeSet<String>>,
    /// Known versions per library, ascending.
    pub versions: BTreeMap<String, Vec<String>>,
    pub release_count: usize,
    /// Canonical APIs summed over releases.
    pub api_count: usize,
    pub signatures: Vec<Signature>,
    #[serde(skip)]
    signature_ids: HashMap<Signature, u32>,
}

impl PartialEq for ApiBankIndex {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
            && self.top_level == other.top_level
            && self.versions == other.versions
            && self.release_count == other.release_count
            && self.api_count == other.api_count
            && self.signatures == other.signatures
    }
}

/// Builds the index over a set of releases with unique (library, version) keys.
pub fn build_index(releases: &[ReleaseApiSet]) -> Result<ApiBankIndex, BankError> {
    let mut index = ApiBankIndex::default();
    for release in releases {
        index.add_release(release)?;
    }
    Ok(index)
}

impl ApiBankIndex {
    /// Restores the intern table after deserialization.
    pub(crate) fn rebuild_interning(&mut self) {
        self.signature_ids = self
            .signatures
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i as u32))
            .collect();
    }

    fn intern(&mut self, signature: &Signature) -> u32 {
        if let Some(id) = self.signature_ids.get(signature) {
            return *id;
        }
        let id = self.signatures.len() as u32;
        self.signatures.push(signature.clone());
        self.signature_ids.insert(signature.clone(), id);
        id
    }

    /// Short digest of the set of indexed releases, stable across runs.
    pub fn identity(&self) -> String {
        let mut hasher = Sha256::new();
        for (library, versions) in &self.versions {
            for v in versions {
                hasher.update(format!("{library}=={v}\n"));
            }
        }
        hex::encode(hasher.finalize())[..12].to_string()
    }

    pub fn signature(&self, id: u32) -> Option<&Signature> {
        self.signatures.get(id as usize)
    }

    pub fn contains_release(&self, library: &str, version: &str) -> bool {
        self.versions
            .get(library)
            .is_some_and(|vs| vs.iter().any(|v| v == version))
    }

    pub fn is_empty(&self) -> bool {
        self.release_count == 0
    }

    /// All known versions of a library, ascending.
    pub fn versions_of(&self, library: &str) -> &[String] {
        self.versions.get(library).map_or(&[], Vec::as_slice)
    }

    pub fn libraries(&self) -> impl Iterator<Item = &str> {
        self.versions.keys().map(String::as_str)
    }

    pub fn libraries_for_top_level(&self, module: &str) -> Option<&BTreeSet<String>> {
        self.top_level.get(module)
    }

    /// Incrementally indexes one more release.
    pub fn add_release(&mut self, release: &ReleaseApiSet) -> Result<(), BankError> {
        if self.contains_release(&release.library, &release.version) {
            return Err(BankError::DuplicateRelease {
                library: release.library.clone(),
                version: release.version.clone(),
            });
        }
        let mut refs: Vec<(String, IndexRef)> = Vec::new();
        for (fqn, record) in &release.apis {
            let id = self.intern(&record.signature);
            let mut r = self.make_ref(release, Some(id), EntryKind::Canonical);
            r.class = record.kind == DefKind::Class;
            refs.push((fqn.clone(), r));
        }
        for (alias, canonical) in &release.alias_map {
            let record = release.apis.get(canonical);
            let id = record.map(|r| self.intern(&r.signature));
            let mut r = self.make_ref(release, id, EntryKind::Alias);
            r.class = record.is_some_and(|r| r.kind == DefKind::Class);
            refs.push((alias.clone(), r));
        }
        for module in &release.modules {
            if release.canonical(module).is_none() {
                refs.push((module.clone(), self.make_ref(release, None, EntryKind::Module)));
            }
        }
        for (fqn, r) in refs {
            let list = self.entries.entry(fqn).or_default();
            let pos = list.partition_point(|x| ref_order(x, &r) == Ordering::Less);
            list.insert(pos, r);
        }
        for top in &release.top_levels {
            self.top_level
                .entry(top.clone())
                .or_default()
                .insert(release.library.clone());
        }
        let versions = self.versions.entry(release.library.clone()).or_default();
        let pos = versions
            .partition_point(|v| compare_versions(v, &release.version) == Ordering::Less);
        versions.insert(pos, release.version.clone());
        self.release_count += 1;
        self.api_count += release.apis.len();
        Ok(())
    }

    fn make_ref(&self, release: &ReleaseApiSet, signature: Option<u32>, kind: EntryKind) -> IndexRef {
        IndexRef {
            library: release.library.clone(),
            version: release.version.clone(),
            signature,
            kind,
            class: false,
        }
    }

    /// Raw entry list for a name, sorted by (library, version).
    pub fn refs(&self, fqn: &str) -> &[IndexRef] {
        self.entries.get(fqn).map_or(&[], Vec::as_slice)
    }

    /// Every (library, version) providing `fqn`. When `call` names keywords,
    /// releases whose signature cannot accept one of them are left out.
    pub fn query(&self, fqn: &str, call: Option<&CallSignature>) -> Vec<(String, String)> {
        self.refs(fqn)
            .iter()
            .filter(|r| match (call, r.signature.and_then(|id| self.signature(id))) {
                (Some(call), Some(sig)) => call.fits(sig),
                _ => true,
            })
            .map(|r| (r.library.clone(), r.version.clone()))
            .collect()
    }
}
