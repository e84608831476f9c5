use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{BankError, ReleaseApiSet};
use crate::pysrc::Signature;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ParamChange {
    pub fqn: String,
    pub old: Signature,
    pub new: Signature,
}

/// Changes between two releases of one library, over canonical names and aliases.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApiDiff {
    pub added: BTreeSet<String>,
    pub removed: BTreeSet<String>,
    pub param_changed: Vec<ParamChange>,
}

impl ApiDiff {
    pub fn is_empty(&self) -> bool {
        self.added.is_empty() && self.removed.is_empty() && self.param_changed.is_empty()
    }
}

/// Diffs `a` (older) against `b` (newer). Ordering is not checked; callers
/// that accept user input swap arguments themselves.
pub fn diff_releases(a: &ReleaseApiSet, b: &ReleaseApiSet) -> Result<ApiDiff, BankError> {
    if a.library != b.library {
        return Err(BankError::LibraryMismatch {
            left: a.library.clone(),
            right: b.library.clone(),
        });
    }
    let old: BTreeSet<&str> = a.api_names().collect();
    let new: BTreeSet<&str> = b.api_names().collect();

    let mut diff = ApiDiff {
        added: new.difference(&old).map(|s| s.to_string()).collect(),
        removed: old.difference(&new).map(|s| s.to_string()).collect(),
        param_changed: Vec::new(),
    };
    for name in old.intersection(&new) {
        let (Some(before), Some(after)) = (a.record(name), b.record(name)) else {
            continue;
        };
        if before.signature.shape() != after.signature.shape() {
            diff.param_changed.push(ParamChange {
                fqn: name.to_string(),
                old: before.signature.clone(),
                new: after.signature.clone(),
            });
        }
    }
    Ok(diff)
}
