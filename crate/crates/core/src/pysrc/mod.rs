//! Structural model of library source code: definitions, parameters, imports
//! and the package directory tree of one release.

mod imports;
mod parse;
pub mod syntax;
mod tree;

use serde::{Deserialize, Serialize};

pub use imports::{extract_import_edges, ImportEdge, ImportEdges, ImportNote, ReleaseModules};
pub use parse::{decode_source, parse_file, parse_source};
pub use tree::{build_directory_tree, module_path_for_file, DirectoryTree, TreeError, TreeNode, NodeKind, ORPHAN_NODE};

/// One parsed source file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceModule {
    /// Dotted module name, e.g. `pandas.io.excel._base`.
    pub module_path: String,
    /// Path relative to the release root, e.g. `pandas/io/excel/_base.py`.
    pub file_path: String,
    /// True for package initializer files.
    pub is_package: bool,
    pub definitions: Vec<Definition>,
    pub import_statements: Vec<RawImport>,
    /// Literal `__all__` list, when the module declares one.
    pub explicit_all: Option<Vec<String>>,
    /// Constructs that were recognized but not modeled (nested classes,
    /// relative imports reaching above the top-level package, ...).
    pub skipped_constructs: usize,
}

impl SourceModule {
    pub fn empty(module_path: &str, is_package: bool) -> Self {
        Self {
            module_path: module_path.to_string(),
            file_path: file_path_for_module(module_path, is_package),
            is_package,
            definitions: Vec::new(),
            import_statements: Vec::new(),
            explicit_all: None,
            skipped_constructs: 0,
        }
    }

    /// The package that relative imports are resolved against.
    pub fn package(&self) -> &str {
        if self.is_package {
            &self.module_path
        } else {
            self.module_path
                .rsplit_once('.')
                .map_or("", |(parent, _)| parent)
        }
    }

    /// Qualified name of a definition inside this module.
    pub fn qualified_name(&self, def: &Definition) -> String {
        match &def.owner_class {
            Some(owner) => format!("{}.{}.{}", self.module_path, owner, def.name),
            None => format!("{}.{}", self.module_path, def.name),
        }
    }
}

/// Relative file path of a module (`a.b` -> `a/b.py` or `a/b/__init__.py`).
pub fn file_path_for_module(module_path: &str, is_package: bool) -> String {
    let base = module_path.replace('.', "/");
    if is_package {
        format!("{base}/__init__.py")
    } else {
        format!("{base}.py")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DefKind {
    Function,
    Class,
    Method,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeywordParam {
    pub name: String,
    pub has_default: bool,
}

/// A callable signature. Positional parameters are those without defaults
/// before any `*`; keyword parameters are defaulted or keyword-only ones.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub positional: Vec<String>,
    pub keyword: Vec<KeywordParam>,
    /// Leading parameters that cannot be passed by keyword (before `/`).
    #[serde(default, skip_serializing_if = "is_zero")]
    pub positional_only: usize,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub var_positional: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub var_keyword: bool,
}

fn is_zero(n: &usize) -> bool {
    *n == 0
}

impl Signature {
    /// Signature that accepts any keyword (used when the real one is unknown).
    pub fn open() -> Self {
        Self {
            var_positional: true,
            var_keyword: true,
            ..Self::default()
        }
    }

    /// Drops a leading `self`/`cls` parameter.
    pub fn without_receiver(&self) -> Self {
        let mut out = self.clone();
        if matches!(out.positional.first().map(String::as_str), Some("self" | "cls")) {
            out.positional.remove(0);
            out.positional_only = out.positional_only.saturating_sub(1);
        }
        out
    }

    /// Whether a call passing `keyword` by name can bind to this signature.
    pub fn accepts_keyword(&self, keyword: &str) -> bool {
        self.var_keyword
            || self.keyword.iter().any(|k| k.name == keyword)
            || self
                .positional
                .iter()
                .skip(self.positional_only)
                .any(|p| p == keyword)
    }

    /// Positional names plus keyword set, the part compared when diffing.
    pub fn shape(&self) -> (Vec<&str>, Vec<(&str, bool)>) {
        let positional = self.positional.iter().map(String::as_str).collect();
        let mut keyword: Vec<_> = self
            .keyword
            .iter()
            .map(|k| (k.name.as_str(), k.has_default))
            .collect();
        keyword.sort_unstable();
        (positional, keyword)
    }
}

/// A top-level function, class, or method of a top-level class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Definition {
    pub name: String,
    pub kind: DefKind,
    pub signature: Signature,
    pub owner_class: Option<String>,
    pub is_underscore_named: bool,
    /// Superclass expressions as written (classes only), e.g. `generic.NDFrame`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bases: Vec<String>,
    pub line: usize,
}

impl Definition {
    pub fn positional_params(&self) -> &[String] {
        &self.signature.positional
    }

    pub fn keyword_params(&self) -> &[KeywordParam] {
        &self.signature.keyword
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImportForm {
    /// `import a.b [as c]`; `imported_names` holds the dotted path and alias.
    Import,
    /// `from a import b [as c], ...`
    FromImport,
    /// `from a import *`
    StarImport,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ImportedName {
    pub name: String,
    pub alias: Option<String>,
}

impl ImportedName {
    pub fn bound_name(&self) -> &str {
        self.alias.as_deref().unwrap_or(&self.name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RawImport {
    pub form: ImportForm,
    /// Absolute dotted module name; relative imports are already resolved.
    pub source_module: String,
    pub imported_names: Vec<ImportedName>,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("syntax error in {module_path} at line {line}")]
pub struct SyntaxError {
    pub module_path: String,
    pub line: usize,
}
