use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::names::is_identifier;

/// Name of the synthetic node that collects files outside any package.
pub const ORPHAN_NODE: &str = "__orphan__";

/// Top-level scripts that sit next to packages but are never importable API.
const BUILD_SCRIPTS: &[&str] = &["setup", "conftest", "noxfile", "fabfile", "runtests"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Package { implicit_namespace: bool },
    Module,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub kind: NodeKind,
    /// Source file backing the node; `None` for namespace packages.
    pub file_path: Option<String>,
    pub children: BTreeSet<String>,
}

/// Package/module tree of one release. Nodes are keyed by dotted path, so
/// paths are unique by construction.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectoryTree {
    pub root: String,
    pub top_levels: BTreeSet<String>,
    pub nodes: BTreeMap<String, TreeNode>,
    /// Files attached under [`ORPHAN_NODE`]; excluded from API naming.
    pub orphans: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TreeError {
    #[error("release contains no importable source file")]
    EmptyRelease,
}

impl DirectoryTree {
    pub fn node(&self, dotted: &str) -> Option<&TreeNode> {
        self.nodes.get(dotted)
    }

    pub fn is_package(&self, dotted: &str) -> bool {
        matches!(
            self.nodes.get(dotted).map(|n| n.kind),
            Some(NodeKind::Package { .. })
        )
    }

    /// Every `(module_path, file_path)` pair backed by a source file.
    pub fn source_files(&self) -> impl Iterator<Item = (&str, &str)> {
        self.nodes
            .iter()
            .filter_map(|(path, node)| node.file_path.as_deref().map(|f| (path.as_str(), f)))
    }
}

/// Maps a release-relative file path to its dotted module path and whether it is
/// a package initializer. Returns `None` for non-source files or paths with
/// non-identifier components.
pub fn module_path_for_file(rel_path: &str) -> Option<(String, bool)> {
    let path = normalize_path(rel_path);
    let stem_path = path.strip_suffix(".py")?;
    let mut parts: Vec<&str> = stem_path.split('/').collect();
    let is_package = parts.last() == Some(&"__init__");
    if is_package {
        parts.pop();
    }
    if parts.is_empty() || !parts.iter().all(|p| is_identifier(p)) {
        return None;
    }
    Some((parts.join("."), is_package))
}

fn normalize_path(path: &str) -> String {
    let path = path.replace('\\', "/");
    path.trim_start_matches("./").to_string()
}

/// Builds the package tree for the files of one unpacked release.
pub fn build_directory_tree<S: AsRef<str>>(files: &[S]) -> Result<DirectoryTree, TreeError> {
    let files: Vec<String> = files.iter().map(|f| normalize_path(f.as_ref())).collect();
    let regular: BTreeSet<&str> = files
        .iter()
        .filter_map(|f| f.strip_suffix("/__init__.py"))
        .collect();

    let is_package_dir = |dir: &str| -> Option<bool> {
        if regular.contains(dir) {
            return Some(false);
        }
        let has_regular_ancestor = dir
            .match_indices('/')
            .any(|(idx, _)| regular.contains(&dir[..idx]));
        let prefix = format!("{dir}/");
        let has_regular_descendant = regular.iter().any(|r| r.starts_with(&prefix));
        (has_regular_ancestor || has_regular_descendant).then_some(true)
    };

    let mut tree = DirectoryTree {
        root: String::new(),
        top_levels: BTreeSet::new(),
        nodes: BTreeMap::new(),
        orphans: Vec::new(),
    };

    for file in files.iter().filter(|f| f.ends_with(".py")) {
        let Some((module_path, is_init)) = module_path_for_file(file) else {
            tree.orphans.push(file.clone());
            continue;
        };
        let segments: Vec<&str> = module_path.split('.').collect();
        let dir_count = if is_init {
            segments.len()
        } else {
            segments.len() - 1
        };
        if dir_count == 0 && BUILD_SCRIPTS.contains(&segments[0]) {
            tree.orphans.push(file.clone());
            continue;
        }

        let dir_parts: Vec<&str> = file.split('/').collect();
        let mut package_kinds = Vec::with_capacity(dir_count);
        let mut orphan = false;
        for depth in 1..=dir_count {
            let dir = dir_parts[..depth].join("/");
            match is_package_dir(&dir) {
                Some(implicit) => package_kinds.push(implicit),
                None => {
                    orphan = true;
                    break;
                }
            }
        }
        if orphan {
            tree.orphans.push(file.clone());
            continue;
        }

        tree.top_levels.insert(segments[0].to_string());
        for (depth, implicit) in package_kinds.iter().enumerate() {
            let dotted = segments[..=depth].join(".");
            let node = tree.nodes.entry(dotted.clone()).or_insert_with(|| TreeNode {
                kind: NodeKind::Package {
                    implicit_namespace: *implicit,
                },
                file_path: None,
                children: BTreeSet::new(),
            });
            if is_init && depth + 1 == dir_count {
                node.file_path = Some(file.clone());
            }
            if depth > 0 {
                let parent = segments[..depth].join(".");
                if let Some(p) = tree.nodes.get_mut(&parent) {
                    p.children.insert(dotted);
                }
            }
        }
        if !is_init {
            tree.nodes.insert(
                module_path.clone(),
                TreeNode {
                    kind: NodeKind::Module,
                    file_path: Some(file.clone()),
                    children: BTreeSet::new(),
                },
            );
            if let Some((parent, _)) = module_path.rsplit_once('.') {
                if let Some(p) = tree.nodes.get_mut(parent) {
                    p.children.insert(module_path.clone());
                }
            }
        }
    }

    if !tree.nodes.values().any(|n| n.file_path.is_some()) {
        return Err(TreeError::EmptyRelease);
    }
    tree.orphans.sort();
    tree.root = tree.top_levels.iter().next().cloned().unwrap_or_default();
    Ok(tree)
}
