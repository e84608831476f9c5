use std::collections::{BTreeSet, HashMap};

use super::ImportEdge;

/// Transitive closure of import-flow edges under chaining: `A -f-> B` and
/// `B -f-> C` yield `A -f-> C` (following renames through `as`). Original edges
/// are kept; self-edges are never produced, so cycles terminate.
pub fn compute_import_closure(edges: &[ImportEdge]) -> Vec<ImportEdge> {
    let base: BTreeSet<ImportEdge> = edges
        .iter()
        .filter(|e| e.source_module != e.target_module && !e.name.is_empty())
        .cloned()
        .collect();

    let mut successors: HashMap<(&str, &str), Vec<&ImportEdge>> = HashMap::new();
    for edge in &base {
        successors
            .entry((edge.source_module.as_str(), edge.name.as_str()))
            .or_default()
            .push(edge);
    }

    let mut closure = base.clone();
    let mut worklist: Vec<ImportEdge> = base.iter().cloned().collect();
    while let Some(edge) = worklist.pop() {
        let Some(nexts) = successors.get(&(edge.target_module.as_str(), edge.bound_name())) else {
            continue;
        };
        for next in nexts {
            if next.target_module == edge.source_module {
                continue;
            }
            let bound = next.bound_name();
            let derived = ImportEdge {
                source_module: edge.source_module.clone(),
                name: edge.name.clone(),
                alias: (bound != edge.name).then(|| bound.to_string()),
                target_module: next.target_module.clone(),
                is_module: edge.is_module,
            };
            if closure.insert(derived.clone()) {
                worklist.push(derived);
            }
        }
    }
    closure.into_iter().collect()
}
