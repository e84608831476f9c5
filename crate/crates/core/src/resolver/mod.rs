//! Covering library set and version ranges for a notebook's usages, plus the
//! requirements and Pipfile emitters.

mod constraint;
mod emit;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::bank::{ApiBankIndex, IndexRef};
use crate::names::{normalize_library_name, root_segment};
use crate::notebook::{CallSite, UsageOrigin, UsageRecord, UsageSet};
use crate::version::compare_versions;

pub use constraint::{choose_emitted_constraint, Constraint, EmittedChoice};
pub use emit::{emit_pipfile, emit_requirements, requirement_line, DEFAULT_SOURCE_URL};

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvePolicy {
    /// Always pin the newest feasible version.
    pub pin_latest: bool,
    /// Let guesses from notebook star imports take part.
    pub include_star_imports: bool,
    /// Report usages whose library could only be picked arbitrarily as
    /// unresolved instead of guessing.
    pub demote_ambiguous: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum ResolveError {
    #[error("the API bank is empty")]
    EmptyBank,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VersionRange {
    pub library: String,
    /// Versions satisfying every usage assigned to the library, ascending.
    pub feasible: Vec<String>,
    pub emitted_constraint: Constraint,
    /// The contiguous run of `feasible` that the constraint admits.
    pub run: Vec<String>,
    /// Feasible runs left out because they are separated from `run` by an
    /// infeasible version.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub excluded_runs: Vec<Vec<String>>,
    /// Distinct (fqn, call) usages covered.
    pub usage_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnresolvedReason {
    UnknownApi,
    EmptyIntersection,
    AmbiguousLibrary,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UnresolvedUsage {
    pub usage: UsageRecord,
    pub reason: UnresolvedReason,
    pub detail: String,
}

/// How one distinct usage was handled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageTrace {
    pub fqn: String,
    pub call: CallSite,
    /// Library -> versions providing the name.
    pub candidates: BTreeMap<String, Vec<String>>,
    /// Library -> versions providing the name but not accepting the call's keywords.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub signature_rejected: BTreeMap<String, Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matched_via_module: Option<String>,
    pub assigned: Option<String>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub ambiguous: bool,
    pub outcome: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    /// One entry per library, sorted by name.
    pub resolved: Vec<VersionRange>,
    pub unresolved_usages: Vec<UnresolvedUsage>,
    pub diagnostics: Vec<UsageTrace>,
    pub bank_identity: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub interpreter_line: Option<String>,
}

impl Resolution {
    pub fn is_complete(&self) -> bool {
        self.unresolved_usages.is_empty()
    }

    pub fn range(&self, library: &str) -> Option<&VersionRange> {
        let library = normalize_library_name(library);
        self.resolved.iter().find(|r| r.library == library)
    }
}

/// A distinct usage with the versions of each candidate library that can
/// satisfy it.
struct Candidate {
    usage: UsageRecord,
    fits: BTreeMap<String, BTreeSet<String>>,
    trace: usize,
}

fn group_refs<'a>(refs: impl Iterator<Item = &'a IndexRef>) -> BTreeMap<String, BTreeSet<String>> {
    let mut out: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for r in refs {
        out.entry(r.library.clone())
            .or_default()
            .insert(r.version.clone());
    }
    out
}

fn sorted(versions: &BTreeSet<String>) -> Vec<String> {
    let mut v: Vec<String> = versions.iter().cloned().collect();
    v.sort_by(|a, b| compare_versions(a, b));
    v
}

/// Longest module prefix of `fqn` known to the bank.
fn module_prefix<'a>(index: &ApiBankIndex, fqn: &'a str) -> Option<&'a str> {
    let mut end = fqn.len();
    while let Some(dot) = fqn[..end].rfind('.') {
        end = dot;
        let prefix = &fqn[..end];
        if index
            .refs(prefix)
            .iter()
            .any(|r| r.kind == crate::bank::EntryKind::Module)
        {
            return Some(prefix);
        }
    }
    None
}

fn name_matches(library: &str, fqn: &str) -> bool {
    normalize_library_name(root_segment(fqn)) == library
}

/// Computes the covering library set and the feasible versions of each.
pub fn resolve(
    usages: &UsageSet,
    index: &ApiBankIndex,
    policy: &ResolvePolicy,
) -> Result<Resolution, ResolveError> {
    if index.is_empty() {
        return Err(ResolveError::EmptyBank);
    }
    let mut resolution = Resolution {
        bank_identity: index.identity(),
        interpreter_line: usages.interpreter_line.clone(),
        ..Resolution::default()
    };

    let mut seen = BTreeSet::new();
    let mut candidates: Vec<Candidate> = Vec::new();
    for usage in &usages.usages {
        if usage.low_confidence && !policy.include_star_imports {
            continue;
        }
        if !seen.insert((usage.fqn.clone(), usage.call.clone())) {
            continue;
        }
        let mut trace = UsageTrace {
            fqn: usage.fqn.clone(),
            call: usage.call.clone(),
            candidates: BTreeMap::new(),
            signature_rejected: BTreeMap::new(),
            matched_via_module: None,
            assigned: None,
            ambiguous: false,
            outcome: String::new(),
        };
        let mut refs = index.refs(&usage.fqn);
        if refs.is_empty() {
            if usage.origin == UsageOrigin::InstanceMethod {
                let receiver = usage.fqn.rsplit_once('.').map_or("", |(r, _)| r);
                if !index.refs(receiver).iter().any(|r| r.class) {
                    trace.outcome = "dropped: receiver is not a known class".into();
                    resolution.diagnostics.push(trace);
                    continue;
                }
            }
            if usage.low_confidence {
                trace.outcome = "dropped: star-import guess not in bank".into();
                resolution.diagnostics.push(trace);
                continue;
            }
            if usage.call == CallSite::ReferenceOnly {
                if let Some(module) = module_prefix(index, &usage.fqn) {
                    trace.matched_via_module = Some(module.to_string());
                    refs = index.refs(module);
                }
            }
        }
        if refs.is_empty() {
            trace.outcome = "unresolved: unknown_api".into();
            resolution.diagnostics.push(trace);
            resolution.unresolved_usages.push(UnresolvedUsage {
                usage: usage.clone(),
                reason: UnresolvedReason::UnknownApi,
                detail: "name not found in any indexed release".into(),
            });
            continue;
        }
        let all = group_refs(refs.iter());
        let fitting = group_refs(refs.iter().filter(|r| {
            match (usage.call.signature(), r.signature.and_then(|id| index.signature(id))) {
                (Some(call), Some(sig)) => call.fits(sig),
                _ => true,
            }
        }));
        for (lib, versions) in &all {
            trace.candidates.insert(lib.clone(), sorted(versions));
            let kept = fitting.get(lib);
            let rejected: BTreeSet<String> = versions
                .iter()
                .filter(|v| !kept.is_some_and(|k| k.contains(*v)))
                .cloned()
                .collect();
            if !rejected.is_empty() {
                trace.signature_rejected.insert(lib.clone(), sorted(&rejected));
            }
        }
        let fits = if fitting.is_empty() {
            all.keys().map(|l| (l.clone(), BTreeSet::new())).collect()
        } else {
            fitting
        };
        resolution.diagnostics.push(trace);
        candidates.push(Candidate {
            usage: usage.clone(),
            fits,
            trace: resolution.diagnostics.len() - 1,
        });
    }

    // Library choice: a library named after the usage's top-level module wins;
    // the rest is greedy set cover, ties broken by name.
    let mut assigned: Vec<Option<String>> = candidates
        .iter()
        .map(|c| {
            c.fits
                .keys()
                .find(|lib| name_matches(lib, &c.usage.fqn))
                .cloned()
        })
        .collect();
    for (c, a) in candidates.iter().zip(&assigned) {
        if a.is_none() && c.fits.len() > 1 {
            resolution.diagnostics[c.trace].ambiguous = true;
        }
    }
    loop {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for (c, a) in candidates.iter().zip(&assigned) {
            if a.is_none() {
                for lib in c.fits.keys() {
                    *counts.entry(lib).or_default() += 1;
                }
            }
        }
        let Some((best, _)) = counts
            .iter()
            .max_by(|a, b| a.1.cmp(b.1).then_with(|| b.0.cmp(a.0)))
        else {
            break;
        };
        let best = best.to_string();
        for (c, a) in candidates.iter().zip(assigned.iter_mut()) {
            if a.is_none() && c.fits.contains_key(&best) {
                *a = Some(best.clone());
            }
        }
    }

    let mut per_library: BTreeMap<String, Vec<usize>> = BTreeMap::new();
    for (i, (c, a)) in candidates.iter().zip(&assigned).enumerate() {
        let lib = a.clone().expect("every candidate has a library");
        let trace = &mut resolution.diagnostics[c.trace];
        if trace.ambiguous && policy.demote_ambiguous {
            trace.outcome = "unresolved: ambiguous_library".into();
            resolution.unresolved_usages.push(UnresolvedUsage {
                usage: c.usage.clone(),
                reason: UnresolvedReason::AmbiguousLibrary,
                detail: format!(
                    "provided by {}",
                    c.fits.keys().cloned().collect::<Vec<_>>().join(", ")
                ),
            });
            continue;
        }
        trace.assigned = Some(lib.clone());
        per_library.entry(lib).or_default().push(i);
    }

    for (library, members) in per_library {
        let known = index.versions_of(&library);
        // The version satisfying the most usages (newest on ties) anchors the
        // kept set; usages missing from it are demoted.
        let anchor = known
            .iter()
            .max_by_key(|v| {
                members
                    .iter()
                    .filter(|&&i| candidates[i].fits[&library].contains(*v))
                    .count()
            })
            .filter(|v| {
                members
                    .iter()
                    .any(|&i| candidates[i].fits[&library].contains(*v))
            });
        let mut kept = Vec::new();
        for &i in &members {
            let c = &candidates[i];
            let versions = &c.fits[&library];
            if anchor.is_some_and(|a| versions.contains(a)) {
                kept.push(i);
                continue;
            }
            let detail = if versions.is_empty() {
                format!(
                    "no {library} release accepts the keywords {:?}",
                    c.usage.call.signature().map(|s| s.keywords.clone()).unwrap_or_default()
                )
            } else {
                format!(
                    "available only in {library} {}, disjoint from the other usages",
                    sorted(versions).join(", ")
                )
            };
            resolution.diagnostics[c.trace].outcome = "unresolved: empty_intersection".into();
            resolution.unresolved_usages.push(UnresolvedUsage {
                usage: c.usage.clone(),
                reason: UnresolvedReason::EmptyIntersection,
                detail,
            });
        }
        if kept.is_empty() {
            continue;
        }
        let feasible: Vec<String> = known
            .iter()
            .filter(|v| kept.iter().all(|&i| candidates[i].fits[&library].contains(*v)))
            .cloned()
            .collect();
        for &i in &kept {
            resolution.diagnostics[candidates[i].trace].outcome = format!("resolved: {library}");
        }
        let choice = choose_emitted_constraint(&feasible, known, policy);
        resolution.resolved.push(VersionRange {
            library,
            feasible,
            emitted_constraint: choice.constraint,
            run: choice.run,
            excluded_runs: choice.excluded_runs,
            usage_count: kept.len(),
        });
    }
    Ok(resolution)
}

#[cfg(test)]
mod tests;
