use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{DefKind, ImportForm, SourceModule};

/// A re-export: `name` is imported from `source_module` into `target_module`
/// (bound there as `alias` when renamed). Written `source -name-> target`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ImportEdge {
    pub source_module: String,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
    pub target_module: String,
    /// The imported name is itself a module of the release (`from . import sub`).
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub is_module: bool,
}

impl ImportEdge {
    pub fn new(source: &str, name: &str, target: &str) -> Self {
        Self {
            source_module: source.to_string(),
            name: name.to_string(),
            alias: None,
            target_module: target.to_string(),
            is_module: false,
        }
    }

    /// Name under which the import is visible in the target module.
    pub fn bound_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }

    /// Fully-qualified name the import creates in the target module.
    pub fn bound_fqn(&self) -> String {
        format!("{}.{}", self.target_module, self.bound_name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(tag = "note", rename_all = "snake_case")]
pub enum ImportNote {
    /// `from X import *` where X is not part of the release.
    StarImportUnresolved { module: String, source: String },
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ImportEdges {
    pub edges: Vec<ImportEdge>,
    pub notes: Vec<ImportNote>,
}

/// Read-only view over all parsed modules of one release.
#[derive(Debug, Default)]
pub struct ReleaseModules<'a> {
    modules: BTreeMap<&'a str, &'a SourceModule>,
    packages: BTreeSet<String>,
}

impl<'a> ReleaseModules<'a> {
    pub fn new(modules: impl IntoIterator<Item = &'a SourceModule>) -> Self {
        let modules: BTreeMap<&str, &SourceModule> = modules
            .into_iter()
            .map(|m| (m.module_path.as_str(), m))
            .collect();
        let mut packages = BTreeSet::new();
        for path in modules.keys() {
            let mut rest = *path;
            while let Some((parent, _)) = rest.rsplit_once('.') {
                packages.insert(parent.to_string());
                rest = parent;
            }
        }
        Self { modules, packages }
    }

    /// True for parsed modules and for (possibly namespace) packages above them.
    pub fn contains(&self, module_path: &str) -> bool {
        self.modules.contains_key(module_path) || self.packages.contains(module_path)
    }

    pub fn get(&self, module_path: &str) -> Option<&'a SourceModule> {
        self.modules.get(module_path).copied()
    }

    /// Names a star import of `module_path` binds: the literal `__all__` when
    /// present, otherwise every non-underscore top-level definition and imported
    /// binding, following nested star imports inside the release.
    pub fn public_names(&self, module_path: &str) -> BTreeSet<String> {
        let mut seen = BTreeSet::new();
        self.public_names_inner(module_path, &mut seen)
    }

    fn public_names_inner(&self, module_path: &str, seen: &mut BTreeSet<String>) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        if !seen.insert(module_path.to_string()) {
            return out;
        }
        let Some(module) = self.get(module_path) else {
            return out;
        };
        if let Some(all) = &module.explicit_all {
            return all.iter().cloned().collect();
        }
        for def in &module.definitions {
            if def.kind != DefKind::Method && !def.is_underscore_named {
                out.insert(def.name.clone());
            }
        }
        for import in &module.import_statements {
            match import.form {
                ImportForm::FromImport => {
                    for n in &import.imported_names {
                        if !n.bound_name().starts_with('_') {
                            out.insert(n.bound_name().to_string());
                        }
                    }
                }
                ImportForm::Import => {
                    for n in &import.imported_names {
                        if let Some(alias) = &n.alias {
                            if !alias.starts_with('_') {
                                out.insert(alias.clone());
                            }
                        }
                    }
                }
                ImportForm::StarImport => {
                    out.extend(self.public_names_inner(&import.source_module, seen));
                }
            }
        }
        out
    }
}

/// One edge per imported name of `module`. Star imports expand to the public
/// names of their source when it belongs to the same release; otherwise a
/// [`ImportNote::StarImportUnresolved`] is emitted.
pub fn extract_import_edges(module: &SourceModule, release: &ReleaseModules<'_>) -> ImportEdges {
    let mut out = ImportEdges::default();
    let target = module.module_path.as_str();
    for import in &module.import_statements {
        match import.form {
            ImportForm::FromImport => {
                for imported in &import.imported_names {
                    let submodule = format!("{}.{}", import.source_module, imported.name);
                    let is_module =
                        release.contains(&submodule) || import.source_module == target;
                    let source = if is_module {
                        submodule
                    } else {
                        import.source_module.clone()
                    };
                    if source == target {
                        continue;
                    }
                    out.edges.push(ImportEdge {
                        source_module: source,
                        name: imported.name.clone(),
                        alias: imported.alias.clone(),
                        target_module: target.to_string(),
                        is_module,
                    });
                }
            }
            ImportForm::Import => {
                // only `import a.b as c` re-exports something under a new name
                for imported in &import.imported_names {
                    let Some(alias) = &imported.alias else {
                        continue;
                    };
                    if !release.contains(&imported.name) || imported.name == target {
                        continue;
                    }
                    let last = imported.name.rsplit('.').next().unwrap_or(&imported.name);
                    out.edges.push(ImportEdge {
                        source_module: imported.name.clone(),
                        name: last.to_string(),
                        alias: Some(alias.clone()),
                        target_module: target.to_string(),
                        is_module: true,
                    });
                }
            }
            ImportForm::StarImport => {
                if !release.contains(&import.source_module) {
                    out.notes.push(ImportNote::StarImportUnresolved {
                        module: target.to_string(),
                        source: import.source_module.clone(),
                    });
                    continue;
                }
                if import.source_module == target {
                    continue;
                }
                for name in release.public_names(&import.source_module) {
                    out.edges.push(ImportEdge::new(&import.source_module, &name, target));
                }
            }
        }
    }
    out
}
