use std::fmt::Write as _;

use super::{Constraint, Resolution, UnresolvedReason, VersionRange};
use crate::version::ReleaseVersion;

/// Package index written into the Pipfile `[[source]]` block.
pub const DEFAULT_SOURCE_URL: &str = "https://pypi.org/simple";

fn exact(version: &str) -> String {
    // Non-standard versions can only be matched by arbitrary equality.
    if ReleaseVersion::new(version).is_unparsed() {
        format!("==={version}")
    } else {
        format!("=={version}")
    }
}

/// Specifier part of a constraint; empty for `Any`.
fn specifier(constraint: &Constraint) -> String {
    match constraint {
        Constraint::Any => String::new(),
        Constraint::Exact { version } => exact(version),
        Constraint::Interval { lo, hi } => {
            let mut parts = Vec::new();
            if let Some(lo) = lo {
                parts.push(format!(">={lo}"));
            }
            if let Some(hi) = hi {
                parts.push(format!("<={hi}"));
            }
            parts.join(",")
        }
    }
}

/// `name`, `name==V` or `name>=LO,<=HI`.
pub fn requirement_line(range: &VersionRange) -> String {
    format!("{}{}", range.library, specifier(&range.emitted_constraint))
}

fn reason_label(reason: UnresolvedReason) -> &'static str {
    match reason {
        UnresolvedReason::UnknownApi => "unknown_api",
        UnresolvedReason::EmptyIntersection => "empty_intersection",
        UnresolvedReason::AmbiguousLibrary => "ambiguous_library",
    }
}

/// requirements.txt text: a comment header, one line per library sorted by
/// name, then warnings and unresolved usages as comments.
pub fn emit_requirements(resolution: &Resolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# Generated by envsniff {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "# API bank: {}", resolution.bank_identity);
    if let Some(line) = &resolution.interpreter_line {
        let _ = writeln!(out, "# Python: {line}");
    }
    let mut ranges: Vec<_> = resolution.resolved.iter().collect();
    ranges.sort_by(|a, b| a.library.cmp(&b.library));
    for range in &ranges {
        let _ = writeln!(out, "{}", requirement_line(range));
    }
    for range in &ranges {
        for run in &range.excluded_runs {
            let _ = writeln!(
                out,
                "# warning: {} also works with {}, not admitted above",
                range.library,
                run.join(", ")
            );
        }
    }
    for u in &resolution.unresolved_usages {
        let _ = writeln!(
            out,
            "# unresolved: {} ({}): {}",
            u.usage.fqn,
            reason_label(u.reason),
            u.detail
        );
    }
    out
}

fn toml_key(name: &str) -> String {
    if !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_')
    {
        name.to_string()
    } else {
        format!("\"{name}\"")
    }
}

/// Pipfile text with a `[[source]]` block and a `[packages]` table.
pub fn emit_pipfile(resolution: &Resolution) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "[[source]]");
    let _ = writeln!(out, "url = \"{DEFAULT_SOURCE_URL}\"");
    let _ = writeln!(out, "verify_ssl = true");
    let _ = writeln!(out, "name = \"pypi\"");
    if resolution.resolved.is_empty() {
        return out;
    }
    let _ = writeln!(out, "\n[packages]");
    let mut ranges: Vec<_> = resolution.resolved.iter().collect();
    ranges.sort_by(|a, b| a.library.cmp(&b.library));
    for range in ranges {
        let spec = match specifier(&range.emitted_constraint) {
            s if s.is_empty() => "*".to_string(),
            s => s,
        };
        let _ = writeln!(out, "{} = \"{}\"", toml_key(&range.library), spec);
    }
    out
}
