use std::collections::BTreeSet;

use proptest::prelude::*;

use super::*;
use crate::bank::{build_index, ApiRecord, CallSignature, ReleaseApiSet};
use crate::pysrc::{DefKind, KeywordParam, Signature};

fn api(fqn: &str, kind: DefKind, keywords: &[&str]) -> ApiRecord {
    ApiRecord {
        fqn: fqn.into(),
        kind,
        signature: Signature {
            keyword: keywords
                .iter()
                .map(|k| KeywordParam {
                    name: k.to_string(),
                    has_default: true,
                })
                .collect(),
            ..Signature::default()
        },
        defining_module: fqn.rsplit_once('.').map_or("", |(m, _)| m).into(),
    }
}

fn release(lib: &str, ver: &str, fqns: &[&str]) -> ReleaseApiSet {
    let mut r = ReleaseApiSet::new(lib, ver);
    for fqn in fqns {
        r.apis.insert(fqn.to_string(), api(fqn, DefKind::Function, &[]));
        r.top_levels.insert(root_segment(fqn).to_string());
    }
    r
}

fn call(fqn: &str) -> UsageRecord {
    call_kw(fqn, &[])
}

fn call_kw(fqn: &str, keywords: &[&str]) -> UsageRecord {
    UsageRecord {
        fqn: fqn.into(),
        call: CallSite::Call(CallSignature::new(0, keywords)),
        cell_position: 0,
        origin: UsageOrigin::DirectCall,
        low_confidence: false,
    }
}

fn usage_set(usages: Vec<UsageRecord>) -> UsageSet {
    UsageSet {
        imported_top_levels: usages
            .iter()
            .map(|u| root_segment(&u.fqn).to_string())
            .collect(),
        usages,
        ..UsageSet::default()
    }
}

fn toylib() -> ApiBankIndex {
    build_index(&[
        release("toylib", "1", &["toylib.f"]),
        release("toylib", "2", &["toylib.f", "toylib.g"]),
        release("toylib", "3", &["toylib.f", "toylib.g", "toylib.h"]),
        release("toylib", "4", &["toylib.f", "toylib.h"]),
    ])
    .unwrap()
}

#[test]
fn intersection_of_two_apis() {
    let res = resolve(
        &usage_set(vec![call("toylib.g"), call("toylib.h")]),
        &toylib(),
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(res.resolved.len(), 1);
    assert_eq!(res.resolved[0].feasible, ["3"]);
    assert_eq!(
        res.resolved[0].emitted_constraint,
        Constraint::Exact { version: "3".into() }
    );
    assert!(res.is_complete());
}

#[test]
fn bounded_range() {
    let res = resolve(&usage_set(vec![call("toylib.g")]), &toylib(), &ResolvePolicy::default()).unwrap();
    assert_eq!(res.resolved[0].feasible, ["2", "3"]);
    assert_eq!(
        res.resolved[0].emitted_constraint,
        Constraint::Interval {
            lo: Some("2".into()),
            hi: Some("3".into())
        }
    );
}

#[test]
fn universal_api_is_any() {
    let res = resolve(&usage_set(vec![call("toylib.f")]), &toylib(), &ResolvePolicy::default()).unwrap();
    assert_eq!(res.resolved[0].emitted_constraint, Constraint::Any);
}

#[test]
fn empty_usage_set() {
    let res = resolve(&UsageSet::default(), &toylib(), &ResolvePolicy::default()).unwrap();
    assert!(res.resolved.is_empty());
    assert!(res.unresolved_usages.is_empty());
}

#[test]
fn empty_bank_is_an_error() {
    let index = build_index(&[]).unwrap();
    assert!(matches!(
        resolve(&UsageSet::default(), &index, &ResolvePolicy::default()),
        Err(ResolveError::EmptyBank)
    ));
}

#[test]
fn dual_form_single_library() {
    let mut old = release("pandas", "0.25", &["pandas.io.excel.read_excel"]);
    old.alias_map
        .insert("pandas.read_excel".into(), "pandas.io.excel.read_excel".into());
    let mut new = release("pandas", "1.0", &["pandas.io.excel._base.read_excel"]);
    new.alias_map
        .insert("pandas.read_excel".into(), "pandas.io.excel._base.read_excel".into());
    let mut newer = new.clone();
    newer.version = "1.1".into();
    let index = build_index(&[old, new, newer]).unwrap();
    let res = resolve(
        &usage_set(vec![
            call("pandas.read_excel"),
            call("pandas.io.excel._base.read_excel"),
        ]),
        &index,
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(res.resolved.len(), 1);
    assert_eq!(res.resolved[0].library, "pandas");
    assert_eq!(res.resolved[0].feasible, ["1.0", "1.1"]);
}

#[test]
fn unknown_api_is_demoted() {
    let res = resolve(
        &usage_set(vec![call("toylib.f"), call("toylib.nope")]),
        &toylib(),
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(res.resolved.len(), 1);
    assert_eq!(res.unresolved_usages.len(), 1);
    assert_eq!(res.unresolved_usages[0].reason, UnresolvedReason::UnknownApi);
}

#[test]
fn disjoint_usages_keep_the_larger_group() {
    let index = build_index(&[
        release("toylib", "1", &["toylib.a"]),
        release("toylib", "2", &["toylib.b", "toylib.c"]),
    ])
    .unwrap();
    let res = resolve(
        &usage_set(vec![call("toylib.a"), call("toylib.b"), call("toylib.c")]),
        &index,
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(res.resolved[0].feasible, ["2"]);
    assert_eq!(res.unresolved_usages.len(), 1);
    assert_eq!(res.unresolved_usages[0].usage.fqn, "toylib.a");
    assert_eq!(
        res.unresolved_usages[0].reason,
        UnresolvedReason::EmptyIntersection
    );
}

#[test]
fn keyword_narrows_feasible_versions() {
    let mut v1 = ReleaseApiSet::new("toylib", "1");
    v1.apis.insert("toylib.f".into(), api("toylib.f", DefKind::Function, &[]));
    let mut v2 = ReleaseApiSet::new("toylib", "2");
    v2.apis
        .insert("toylib.f".into(), api("toylib.f", DefKind::Function, &["sep"]));
    let index = build_index(&[v1, v2]).unwrap();
    let res = resolve(
        &usage_set(vec![call_kw("toylib.f", &["sep"])]),
        &index,
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(res.resolved[0].feasible, ["2"]);
    assert_eq!(res.diagnostics[0].signature_rejected["toylib"], ["1"]);
}

#[test]
fn top_level_name_wins_the_tie() {
    let index = build_index(&[
        release("utils", "1", &["utils.helper"]),
        release("aaa-tools", "1", &["utils.helper"]),
    ])
    .unwrap();
    let res = resolve(&usage_set(vec![call("utils.helper")]), &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(res.resolved.len(), 1);
    assert_eq!(res.resolved[0].library, "utils");
    assert!(!res.diagnostics[0].ambiguous);
}

#[test]
fn greedy_cover_prefers_wider_library() {
    let index = build_index(&[
        release("alpha", "1", &["shared.a"]),
        release("beta", "1", &["shared.a", "shared.b"]),
    ])
    .unwrap();
    let res = resolve(
        &usage_set(vec![call("shared.a"), call("shared.b")]),
        &index,
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert_eq!(
        res.resolved.iter().map(|r| r.library.as_str()).collect::<Vec<_>>(),
        ["beta"]
    );
    assert!(res.diagnostics[0].ambiguous);

    let strict = ResolvePolicy {
        demote_ambiguous: true,
        ..ResolvePolicy::default()
    };
    let res = resolve(&usage_set(vec![call("shared.a")]), &index, &strict).unwrap();
    assert!(res.resolved.is_empty());
    assert_eq!(res.unresolved_usages[0].reason, UnresolvedReason::AmbiguousLibrary);
}

#[test]
fn star_import_guesses_follow_policy() {
    let mut guess = call("toylib.g");
    guess.low_confidence = true;
    let mut missing = call("toylib.zzz");
    missing.low_confidence = true;
    let set = usage_set(vec![guess, missing]);
    let res = resolve(&set, &toylib(), &ResolvePolicy::default()).unwrap();
    assert!(res.resolved.is_empty());
    let policy = ResolvePolicy {
        include_star_imports: true,
        ..ResolvePolicy::default()
    };
    let res = resolve(&set, &toylib(), &policy).unwrap();
    assert_eq!(res.resolved[0].feasible, ["2", "3"]);
    assert!(res.is_complete());
}

#[test]
fn method_of_untraceable_receiver_is_dropped() {
    let index = build_index(&[release("pandas", "1", &["pandas.read_csv"])]).unwrap();
    let mut head = call("pandas.read_csv.head");
    head.origin = UsageOrigin::InstanceMethod;
    let res = resolve(
        &usage_set(vec![call("pandas.read_csv"), head]),
        &index,
        &ResolvePolicy::default(),
    )
    .unwrap();
    assert!(res.is_complete());
    assert_eq!(res.diagnostics.len(), 2);
}

#[test]
fn method_missing_from_known_class_is_unknown() {
    let mut r = release("toylib", "1", &[]);
    r.apis
        .insert("toylib.Model".into(), api("toylib.Model", DefKind::Class, &[]));
    let index = build_index(&[r]).unwrap();
    let mut fit = call("toylib.Model.fit");
    fit.origin = UsageOrigin::InstanceMethod;
    let res = resolve(&usage_set(vec![fit]), &index, &ResolvePolicy::default()).unwrap();
    assert_eq!(res.unresolved_usages[0].reason, UnresolvedReason::UnknownApi);
}

#[test]
fn reference_falls_back_to_module() {
    let mut r = release("numpy", "1", &["numpy.sum"]);
    r.modules.insert("numpy".into());
    let index = build_index(&[r]).unwrap();
    let pi = UsageRecord {
        call: CallSite::ReferenceOnly,
        origin: UsageOrigin::AttributeAccess,
        ..call("numpy.pi")
    };
    let res = resolve(&usage_set(vec![pi]), &index, &ResolvePolicy::default()).unwrap();
    assert!(res.is_complete());
    assert_eq!(res.diagnostics[0].matched_via_module.as_deref(), Some("numpy"));
}

#[test]
fn deterministic_output() {
    let set = usage_set(vec![call("toylib.g"), call("toylib.h"), call("toylib.zzz")]);
    let a = serde_json::to_string(&resolve(&set, &toylib(), &ResolvePolicy::default()).unwrap()).unwrap();
    let b = serde_json::to_string(&resolve(&set, &toylib(), &ResolvePolicy::default()).unwrap()).unwrap();
    assert_eq!(a, b);
}

/// Parses one emitted requirements line with an independent grammar and maps
/// it back to a constraint.
fn parse_line(line: &str) -> (String, Constraint) {
    use pep508_rs::pep440_rs::Operator;
    use std::str::FromStr;
    let req = pep508_rs::Requirement::<pep508_rs::VerbatimUrl>::from_str(line).unwrap();
    let specs = match req.version_or_url {
        None => return (req.name.to_string(), Constraint::Any),
        Some(pep508_rs::VersionOrUrl::VersionSpecifier(s)) => s,
        Some(other) => panic!("unexpected {other:?}"),
    };
    let mut lo = None;
    let mut hi = None;
    let mut exact = None;
    for s in specs.iter() {
        match s.operator() {
            Operator::Equal => exact = Some(s.version().to_string()),
            Operator::GreaterThanEqual => lo = Some(s.version().to_string()),
            Operator::LessThanEqual => hi = Some(s.version().to_string()),
            op => panic!("unexpected operator {op}"),
        }
    }
    let constraint = match exact {
        Some(version) => Constraint::Exact { version },
        None => Constraint::Interval { lo, hi },
    };
    (req.name.to_string(), constraint)
}

#[test]
fn requirement_lines_round_trip() {
    let known: Vec<String> = ["0.9", "1.0", "1.1", "2.0"].map(String::from).to_vec();
    let releases: Vec<ReleaseApiSet> = known
        .iter()
        .map(|v| release("some-lib", v, &["some_lib.f"]))
        .collect();
    let index = build_index(&releases).unwrap();
    for lo in 0..known.len() {
        for hi in lo..known.len() {
            let feasible = known[lo..=hi].to_vec();
            let choice = choose_emitted_constraint(&feasible, index.versions_of("some-lib"), &ResolvePolicy::default());
            let res = Resolution {
                resolved: vec![VersionRange {
                    library: "some-lib".into(),
                    feasible: feasible.clone(),
                    emitted_constraint: choice.constraint.clone(),
                    run: choice.run,
                    excluded_runs: choice.excluded_runs,
                    usage_count: 1,
                }],
                ..Resolution::default()
            };
            let text = emit_requirements(&res);
            let line = text.lines().find(|l| !l.starts_with('#')).unwrap();
            let (name, parsed) = parse_line(line);
            assert_eq!(name, "some-lib");
            assert_eq!(parsed, choice.constraint, "{line}");
        }
    }
}

fn brute_force_feasible(
    releases: &[ReleaseApiSet],
    library: &str,
    fqns: &BTreeSet<String>,
) -> Vec<String> {
    let mut versions: Vec<String> = releases
        .iter()
        .filter(|r| r.library == library)
        .filter(|r| fqns.iter().all(|f| r.contains(f)))
        .map(|r| r.version.clone())
        .collect();
    versions.sort_by(|a, b| compare_versions(a, b));
    versions
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn feasible_matches_enumeration(
        presence in prop::collection::vec(prop::collection::vec(any::<bool>(), 6), 1..8),
        picks in prop::collection::btree_set(0usize..6, 1..4),
    ) {
        let releases: Vec<ReleaseApiSet> = presence
            .iter()
            .enumerate()
            .map(|(v, present)| {
                let names: Vec<String> = present
                    .iter()
                    .enumerate()
                    .filter(|(_, p)| **p)
                    .map(|(i, _)| format!("toylib.api{i}"))
                    .collect();
                let refs: Vec<&str> = names.iter().map(String::as_str).collect();
                release("toylib", &format!("{}.0", v + 1), &refs)
            })
            .collect();
        let index = build_index(&releases).unwrap();
        let usages: Vec<UsageRecord> = picks.iter().map(|i| call(&format!("toylib.api{i}"))).collect();
        let res = resolve(&usage_set(usages), &index, &ResolvePolicy::default()).unwrap();
        let kept: BTreeSet<String> = res
            .diagnostics
            .iter()
            .filter(|t| t.outcome.starts_with("resolved"))
            .map(|t| t.fqn.clone())
            .collect();
        match res.resolved.first() {
            Some(range) => {
                prop_assert_eq!(&range.feasible, &brute_force_feasible(&releases, "toylib", &kept));
            }
            None => prop_assert!(kept.is_empty()),
        }
        // The kept set is as large as any set of usages sharing a version.
        let best = releases
            .iter()
            .map(|r| picks.iter().filter(|i| r.contains(&format!("toylib.api{i}"))).count())
            .max()
            .unwrap_or(0);
        prop_assert_eq!(kept.len(), best);
    }
}
