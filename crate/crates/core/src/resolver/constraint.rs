use serde::{Deserialize, Serialize};

use super::ResolvePolicy;

/// Version constraint written for one library. Interval bounds are inclusive;
/// a missing bound means the run reaches the oldest or newest known version.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    Any,
    Exact { version: String },
    Interval {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        lo: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hi: Option<String>,
    },
}

impl Constraint {
    /// Whether `version` (one of `known`, ascending) is admitted.
    pub fn admits(&self, version: &str, known: &[String]) -> bool {
        let pos = |v: &str| known.iter().position(|k| k == v);
        match self {
            Constraint::Any => true,
            Constraint::Exact { version: v } => v == version,
            Constraint::Interval { lo, hi } => {
                let Some(at) = pos(version) else { return false };
                let lo_ok = lo.as_deref().is_none_or(|l| pos(l).is_some_and(|p| p <= at));
                let hi_ok = hi.as_deref().is_none_or(|h| pos(h).is_some_and(|p| at <= p));
                lo_ok && hi_ok
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmittedChoice {
    pub constraint: Constraint,
    pub run: Vec<String>,
    pub excluded_runs: Vec<Vec<String>>,
}

/// Splits `feasible` into maximal runs that are contiguous in `known`.
fn runs(feasible: &[String], known: &[String]) -> Vec<Vec<String>> {
    let mut out: Vec<Vec<String>> = Vec::new();
    let mut last: Option<usize> = None;
    for (i, v) in known.iter().enumerate() {
        if !feasible.contains(v) {
            continue;
        }
        match (last, out.last_mut()) {
            (Some(prev), Some(run)) if prev + 1 == i => run.push(v.clone()),
            _ => out.push(vec![v.clone()]),
        }
        last = Some(i);
    }
    out
}

/// Picks the constraint for a feasible set given every known version of the
/// library (ascending). The most recent contiguous run is emitted.
pub fn choose_emitted_constraint(
    feasible: &[String],
    known: &[String],
    policy: &ResolvePolicy,
) -> EmittedChoice {
    let mut all = runs(feasible, known);
    let Some(run) = all.pop() else {
        return EmittedChoice {
            constraint: Constraint::Any,
            run: Vec::new(),
            excluded_runs: Vec::new(),
        };
    };
    let newest = run.last().expect("runs are non-empty").clone();
    if policy.pin_latest || run.len() == 1 {
        return EmittedChoice {
            constraint: Constraint::Exact { version: newest },
            run: if policy.pin_latest { vec![run.last().unwrap().clone()] } else { run },
            excluded_runs: all,
        };
    }
    let lo = (known.first() != run.first()).then(|| run[0].clone());
    let hi = (known.last() != Some(&newest)).then_some(newest);
    let constraint = match (&lo, &hi) {
        (None, None) => Constraint::Any,
        _ => Constraint::Interval { lo, hi },
    };
    EmittedChoice {
        constraint,
        run,
        excluded_runs: all,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn single_version_is_exact() {
        let c = choose_emitted_constraint(&v(&["1.17.5"]), &v(&["1.17.4", "1.17.5"]), &ResolvePolicy::default());
        assert_eq!(c.constraint, Constraint::Exact { version: "1.17.5".into() });
    }

    #[test]
    fn everything_is_any() {
        let known = v(&["0.1", "0.2", "1.0"]);
        let c = choose_emitted_constraint(&known, &known, &ResolvePolicy::default());
        assert_eq!(c.constraint, Constraint::Any);
    }

    #[test]
    fn open_ended_lower_bound() {
        let known = v(&["0.22.0", "0.23.0", "0.24.0"]);
        let c = choose_emitted_constraint(&v(&["0.23.0", "0.24.0"]), &known, &ResolvePolicy::default());
        assert_eq!(c.constraint, Constraint::Interval { lo: Some("0.23.0".into()), hi: None });
    }

    #[test]
    fn disjoint_keeps_latest_run() {
        let known = v(&["1.0", "1.1", "1.2", "2.0"]);
        let c = choose_emitted_constraint(&v(&["1.0", "1.1", "2.0"]), &known, &ResolvePolicy::default());
        assert_eq!(c.constraint, Constraint::Exact { version: "2.0".into() });
        assert_eq!(c.excluded_runs, vec![v(&["1.0", "1.1"])]);
    }

    #[test]
    fn pin_latest() {
        let known = v(&["1", "2", "3"]);
        let policy = ResolvePolicy { pin_latest: true, ..ResolvePolicy::default() };
        let c = choose_emitted_constraint(&known, &known, &policy);
        assert_eq!(c.constraint, Constraint::Exact { version: "3".into() });
    }

    #[test]
    fn admits_exactly_the_run() {
        let known = v(&["1", "2", "3", "4", "5"]);
        for lo in 0..5 {
            for hi in lo..5 {
                let feasible = known[lo..=hi].to_vec();
                let c = choose_emitted_constraint(&feasible, &known, &ResolvePolicy::default());
                for k in &known {
                    assert_eq!(c.constraint.admits(k, &known), feasible.contains(k), "{lo}..{hi} {k}");
                }
            }
        }
    }
}
