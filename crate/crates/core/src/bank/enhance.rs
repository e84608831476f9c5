use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::{ApiRecord, BankNote, ImportEdge, ReleaseApiSet};
use crate::pysrc::{DefKind, DirectoryTree, ImportForm, SourceModule};

/// Upper bound on alias propagation rounds; real releases settle in two or three.
const MAX_ROUNDS: usize = 16;

/// Produces the complete API set of a release: every definition under its
/// canonical fqn, plus aliases for every name re-exported through the import
/// closure. Re-exported classes and modules carry their members along, and
/// subclasses inherit the methods of base classes defined in the same release.
pub fn enhance_tree(
    library: &str,
    version: &str,
    tree: &DirectoryTree,
    closure: &[ImportEdge],
    modules: &[SourceModule],
) -> ReleaseApiSet {
    let mut release = ReleaseApiSet::new(library, version);
    release.top_levels = tree.top_levels.clone();
    release.modules = tree.nodes.keys().cloned().collect();

    let in_tree: Vec<&SourceModule> = modules
        .iter()
        .filter(|m| tree.node(&m.module_path).is_some())
        .collect();

    let mut classes: Vec<(String, &SourceModule, &[String])> = Vec::new();
    for module in &in_tree {
        for def in &module.definitions {
            let fqn = module.qualified_name(def);
            let signature = match def.kind {
                DefKind::Method => def.signature.without_receiver(),
                _ => def.signature.clone(),
            };
            if def.kind == DefKind::Class && !def.bases.is_empty() {
                classes.push((fqn.clone(), module, &def.bases));
            }
            release.apis.insert(
                fqn.clone(),
                ApiRecord {
                    fqn,
                    kind: def.kind,
                    signature,
                    defining_module: module.module_path.clone(),
                },
            );
        }
    }

    let bindings: HashMap<&str, HashMap<String, String>> = in_tree
        .iter()
        .map(|m| (m.module_path.as_str(), module_bindings(m)))
        .collect();

    let (module_edges, name_edges): (Vec<&ImportEdge>, Vec<&ImportEdge>) =
        closure.iter().partition(|e| e.is_module);

    let mut round = 0;
    loop {
        round += 1;
        let mut changed = false;

        for edge in &name_edges {
            let key = edge.bound_fqn();
            let source = format!("{}.{}", edge.source_module, edge.name);
            if let Some(canonical) = resolve(&release, &source) {
                changed |= add_alias(&mut release, key, canonical);
            }
        }

        // prefix expansions: (new prefix, existing prefix)
        let mut prefixes: BTreeSet<(String, String)> = BTreeSet::new();
        for edge in &module_edges {
            let bound = edge.bound_fqn();
            if release.modules.contains(&edge.source_module) {
                prefixes.insert((bound, edge.source_module.clone()));
            }
        }
        for (alias, canonical) in &release.alias_map {
            if release.apis.get(canonical).map(|r| r.kind) == Some(DefKind::Class) {
                prefixes.insert((alias.clone(), canonical.clone()));
            }
        }
        for (new_prefix, old_prefix) in prefixes {
            if new_prefix == old_prefix
                || new_prefix.starts_with(&format!("{old_prefix}."))
                || old_prefix.starts_with(&format!("{new_prefix}."))
            {
                continue;
            }
            for (name, canonical) in names_under(&release, &old_prefix) {
                let key = format!("{new_prefix}{}", &name[old_prefix.len()..]);
                changed |= add_alias(&mut release, key, canonical);
            }
        }

        for (class_fqn, module, bases) in &classes {
            for base in bases.iter() {
                let Some(base_fqn) = resolve_expression(&bindings, module, base)
                    .and_then(|b| resolve(&release, &b))
                else {
                    continue;
                };
                if base_fqn == *class_fqn
                    || release.apis.get(&base_fqn).map(|r| r.kind) != Some(DefKind::Class)
                {
                    continue;
                }
                let members: Vec<(String, String)> = names_under(&release, &base_fqn)
                    .into_iter()
                    .filter(|(n, _)| !n[base_fqn.len() + 1..].contains('.'))
                    .collect();
                for (name, canonical) in members {
                    let key = format!("{class_fqn}{}", &name[base_fqn.len()..]);
                    changed |= add_alias(&mut release, key, canonical);
                }
            }
        }

        if !changed || round >= MAX_ROUNDS {
            break;
        }
    }

    for edge in &name_edges {
        let source = format!("{}.{}", edge.source_module, edge.name);
        if resolve(&release, &source).is_none() && !release.modules.contains(&source) {
            release.notes.push(BankNote::DanglingEdge {
                edge: (*edge).clone(),
            });
        }
    }
    release.notes.sort();
    release.notes.dedup();
    release
}

fn resolve(release: &ReleaseApiSet, fqn: &str) -> Option<String> {
    release.canonical(fqn).map(str::to_string)
}

/// Adds an alias unless the name is already a canonical API or alias.
fn add_alias(release: &mut ReleaseApiSet, key: String, canonical: String) -> bool {
    if key == canonical || release.apis.contains_key(&key) || release.alias_map.contains_key(&key) {
        return false;
    }
    release.alias_map.insert(key, canonical);
    true
}

/// `(name, canonical)` for every API or alias strictly below `prefix`.
fn names_under(release: &ReleaseApiSet, prefix: &str) -> Vec<(String, String)> {
    let start = format!("{prefix}.");
    let mut out: Vec<(String, String)> = release
        .apis
        .range(start.clone()..)
        .take_while(|(k, _)| k.starts_with(&start))
        .map(|(k, _)| (k.clone(), k.clone()))
        .collect();
    out.extend(
        release
            .alias_map
            .range(start.clone()..)
            .take_while(|(k, _)| k.starts_with(&start))
            .map(|(k, v)| (k.clone(), v.clone())),
    );
    out
}

/// Names bound at module level by imports and definitions, mapped to the
/// dotted path they refer to.
fn module_bindings(module: &SourceModule) -> HashMap<String, String> {
    let mut out = HashMap::new();
    for import in &module.import_statements {
        match import.form {
            ImportForm::Import => {
                for n in &import.imported_names {
                    match &n.alias {
                        Some(alias) => out.insert(alias.clone(), n.name.clone()),
                        None => {
                            let root = crate::names::root_segment(&n.name).to_string();
                            out.insert(root.clone(), root)
                        }
                    };
                }
            }
            ImportForm::FromImport => {
                for n in &import.imported_names {
                    out.insert(
                        n.bound_name().to_string(),
                        format!("{}.{}", import.source_module, n.name),
                    );
                }
            }
            ImportForm::StarImport => {}
        }
    }
    for def in &module.definitions {
        if def.owner_class.is_none() {
            out.insert(def.name.clone(), module.qualified_name(def));
        }
    }
    out
}

fn resolve_expression(
    bindings: &HashMap<&str, HashMap<String, String>>,
    module: &SourceModule,
    expr: &str,
) -> Option<String> {
    if !crate::names::is_dotted_name(expr) {
        return None;
    }
    let (root, rest) = match expr.split_once('.') {
        Some((root, rest)) => (root, Some(rest)),
        None => (expr, None),
    };
    let base = bindings.get(module.module_path.as_str())?.get(root)?;
    Some(match rest {
        Some(rest) => format!("{base}.{rest}"),
        None => base.clone(),
    })
}

/// Convenience used by tests and ingestion: the alias map as a sorted list.
pub(crate) fn _alias_pairs(release: &ReleaseApiSet) -> BTreeMap<&str, &str> {
    release
        .alias_map
        .iter()
        .map(|(a, c)| (a.as_str(), c.as_str()))
        .collect()
}
