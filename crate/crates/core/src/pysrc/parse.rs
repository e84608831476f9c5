use tree_sitter::Node;

use super::syntax::{named_children, parse_python, string_list, ParsedSource};
use super::{
    DefKind, Definition, ImportForm, ImportedName, KeywordParam, RawImport, Signature,
    SourceModule, SyntaxError,
};
use crate::pysrc::tree::module_path_for_file;

/// Decodes source bytes according to a leading BOM or an encoding declaration
/// on one of the first two lines, defaulting to UTF-8.
pub fn decode_source(bytes: &[u8]) -> String {
    if let Some(rest) = bytes.strip_prefix(b"\xEF\xBB\xBF") {
        return String::from_utf8_lossy(rest).into_owned();
    }
    match declared_encoding(bytes).as_deref() {
        Some("latin-1" | "latin1" | "iso-8859-1" | "iso8859-1" | "l1" | "cp1252" | "windows-1252") => {
            bytes.iter().map(|&b| b as char).collect()
        }
        _ => String::from_utf8_lossy(bytes).into_owned(),
    }
}

fn declared_encoding(bytes: &[u8]) -> Option<String> {
    for line in bytes.split(|&b| b == b'\n').take(2) {
        let line = String::from_utf8_lossy(line);
        let trimmed = line.trim_start();
        if !trimmed.starts_with('#') {
            continue;
        }
        let idx = trimmed.find("coding")?;
        let rest = &trimmed[idx + "coding".len()..];
        let rest = rest.strip_prefix(':').or_else(|| rest.strip_prefix('='))?;
        let name: String = rest
            .trim_start()
            .chars()
            .take_while(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
            .collect();
        if !name.is_empty() {
            return Some(name.to_ascii_lowercase().replace('_', "-"));
        }
    }
    None
}

/// Parses a file of a release given its path relative to the release root.
pub fn parse_file(bytes: &[u8], rel_path: &str) -> Result<SourceModule, SyntaxError> {
    let (module_path, is_package) = module_path_for_file(rel_path).ok_or_else(|| SyntaxError {
        module_path: rel_path.to_string(),
        line: 0,
    })?;
    let mut module = parse_source(&decode_source(bytes), &module_path, is_package)?;
    module.file_path = rel_path.to_string();
    Ok(module)
}

/// Parses one module's source text into its structural model.
pub fn parse_source(
    text: &str,
    module_path: &str,
    is_package: bool,
) -> Result<SourceModule, SyntaxError> {
    let parsed = parse_python(text).map_err(|line| SyntaxError {
        module_path: module_path.to_string(),
        line,
    })?;
    let mut module = SourceModule::empty(module_path, is_package);
    let mut walker = ModuleWalker {
        src: &parsed,
        module: &mut module,
    };
    walker.visit_block(parsed.root());
    Ok(module)
}

struct ModuleWalker<'a> {
    src: &'a ParsedSource,
    module: &'a mut SourceModule,
}

const CLAUSE_KINDS: &[&str] = &[
    "elif_clause",
    "else_clause",
    "except_clause",
    "except_group_clause",
    "finally_clause",
    "case_clause",
];

impl ModuleWalker<'_> {
    fn text(&self, node: Node<'_>) -> &str {
        self.src.node_text(node)
    }

    /// Module-level statements, including those nested in conditional or
    /// exception-handling blocks (but never inside function or class bodies).
    fn visit_block(&mut self, block: Node<'_>) {
        for stmt in named_children(block) {
            self.visit_statement(stmt);
        }
    }

    fn visit_statement(&mut self, stmt: Node<'_>) {
        match stmt.kind() {
            "function_definition" => {
                let def = self.function(stmt, None);
                self.module.definitions.push(def);
            }
            "class_definition" => self.class(stmt, &[]),
            "decorated_definition" => {
                let decorators = self.decorators(stmt);
                if let Some(def) = stmt.child_by_field_name("definition") {
                    match def.kind() {
                        "function_definition" => {
                            let def = self.function(def, None);
                            self.module.definitions.push(def);
                        }
                        "class_definition" => self.class(def, &decorators),
                        _ => self.module.skipped_constructs += 1,
                    }
                }
            }
            "import_statement" => self.import(stmt),
            "import_from_statement" => self.import_from(stmt),
            "expression_statement" => self.maybe_all(stmt),
            "if_statement" | "try_statement" | "with_statement" | "for_statement"
            | "while_statement" | "match_statement" => self.visit_compound(stmt),
            _ => {}
        }
    }

    fn visit_compound(&mut self, node: Node<'_>) {
        for child in named_children(node) {
            if child.kind() == "block" {
                self.visit_block(child);
            } else if CLAUSE_KINDS.contains(&child.kind()) {
                self.visit_compound(child);
            }
        }
    }

    fn decorators(&self, decorated: Node<'_>) -> Vec<String> {
        named_children(decorated)
            .into_iter()
            .filter(|n| n.kind() == "decorator")
            .map(|n| self.text(n).trim_start_matches('@').trim().to_string())
            .collect()
    }

    fn function(&mut self, node: Node<'_>, owner: Option<&str>) -> Definition {
        let name = node
            .child_by_field_name("name")
            .map(|n| self.text(n).to_string())
            .unwrap_or_default();
        let signature = node
            .child_by_field_name("parameters")
            .map(|p| self.parameters(p))
            .unwrap_or_default();
        Definition {
            is_underscore_named: name.starts_with('_'),
            name,
            kind: if owner.is_some() {
                DefKind::Method
            } else {
                DefKind::Function
            },
            signature,
            owner_class: owner.map(str::to_string),
            bases: Vec::new(),
            line: node.start_position().row + 1,
        }
    }

    fn parameters(&mut self, params: Node<'_>) -> Signature {
        let mut sig = Signature::default();
        let mut keyword_only = false;
        for (idx, param) in named_children(params).into_iter().enumerate() {
            match param.kind() {
                "identifier" => {
                    let name = self.text(param).to_string();
                    if keyword_only {
                        sig.keyword.push(KeywordParam {
                            name,
                            has_default: false,
                        });
                    } else {
                        sig.positional.push(name);
                    }
                }
                "typed_parameter" => {
                    let inner = named_children(param).into_iter().next();
                    match inner.map(|n| (n.kind(), n)) {
                        Some(("identifier", n)) => {
                            let name = self.text(n).to_string();
                            if keyword_only {
                                sig.keyword.push(KeywordParam {
                                    name,
                                    has_default: false,
                                });
                            } else {
                                sig.positional.push(name);
                            }
                        }
                        Some(("list_splat_pattern", _)) => {
                            sig.var_positional = true;
                            keyword_only = true;
                        }
                        Some(("dictionary_splat_pattern", _)) => sig.var_keyword = true,
                        _ => self.module.skipped_constructs += 1,
                    }
                }
                "default_parameter" | "typed_default_parameter" => {
                    if let Some(name) = param.child_by_field_name("name") {
                        sig.keyword.push(KeywordParam {
                            name: self.text(name).to_string(),
                            has_default: true,
                        });
                    }
                }
                "list_splat_pattern" => {
                    sig.var_positional = true;
                    keyword_only = true;
                }
                "keyword_separator" => keyword_only = true,
                "dictionary_splat_pattern" => sig.var_keyword = true,
                "positional_separator" => sig.positional_only = sig.positional.len(),
                "tuple_pattern" => {
                    // legacy tuple parameter; unnamed at runtime
                    sig.positional.push(format!(".{idx}"));
                    self.module.skipped_constructs += 1;
                }
                _ => {}
            }
        }
        sig
    }

    fn class(&mut self, node: Node<'_>, decorators: &[String]) {
        let Some(name) = node.child_by_field_name("name").map(|n| self.text(n).to_string())
        else {
            return;
        };
        let bases: Vec<String> = node
            .child_by_field_name("superclasses")
            .map(|args| {
                named_children(args)
                    .into_iter()
                    .filter(|a| a.kind() != "keyword_argument")
                    .map(|a| self.text(a).to_string())
                    .filter(|b| b != "object")
                    .collect()
            })
            .unwrap_or_default();

        let mut methods = Vec::new();
        if let Some(body) = node.child_by_field_name("body") {
            self.class_body(body, &name, &mut methods);
        }
        let signature = match methods.iter().find(|m| m.name == "__init__") {
            Some(init) => init.signature.without_receiver(),
            None if bases.is_empty() && decorators.is_empty() => Signature::default(),
            None => Signature::open(),
        };
        self.module.definitions.push(Definition {
            is_underscore_named: name.starts_with('_'),
            kind: DefKind::Class,
            signature,
            owner_class: None,
            bases,
            line: node.start_position().row + 1,
            name,
        });
        self.module.definitions.extend(methods);
    }

    fn class_body(&mut self, block: Node<'_>, class_name: &str, out: &mut Vec<Definition>) {
        for stmt in named_children(block) {
            match stmt.kind() {
                "function_definition" => out.push(self.function(stmt, Some(class_name))),
                "decorated_definition" => match stmt.child_by_field_name("definition") {
                    Some(def) if def.kind() == "function_definition" => {
                        out.push(self.function(def, Some(class_name)))
                    }
                    _ => self.module.skipped_constructs += 1,
                },
                "class_definition" => self.module.skipped_constructs += 1,
                "if_statement" | "try_statement" | "with_statement" => {
                    let mut stack = vec![stmt];
                    while let Some(node) = stack.pop() {
                        for child in named_children(node) {
                            if child.kind() == "block" {
                                self.class_body(child, class_name, out);
                            } else if CLAUSE_KINDS.contains(&child.kind()) {
                                stack.push(child);
                            }
                        }
                    }
                }
                _ => {}
            }
        }
    }

    fn import(&mut self, stmt: Node<'_>) {
        let line = stmt.start_position().row + 1;
        let mut cursor = stmt.walk();
        let names: Vec<_> = stmt.children_by_field_name("name", &mut cursor).collect();
        for name in names {
            let (path, alias) = match name.kind() {
                "aliased_import" => (
                    name.child_by_field_name("name")
                        .map(|n| self.text(n).to_string()),
                    name.child_by_field_name("alias")
                        .map(|n| self.text(n).to_string()),
                ),
                _ => (Some(self.text(name).to_string()), None),
            };
            let Some(path) = path else { continue };
            let path = normalize_dotted(&path);
            self.module.import_statements.push(RawImport {
                form: ImportForm::Import,
                imported_names: vec![ImportedName {
                    name: path.clone(),
                    alias,
                }],
                source_module: path,
                line,
            });
        }
    }

    fn import_from(&mut self, stmt: Node<'_>) {
        let line = stmt.start_position().row + 1;
        let Some(module_node) = stmt.child_by_field_name("module_name") else {
            return;
        };
        let source = if module_node.kind() == "relative_import" {
            let mut level = 0usize;
            let mut rest = None;
            for child in named_children(module_node) {
                match child.kind() {
                    "import_prefix" => level = self.text(child).trim().len(),
                    "dotted_name" => rest = Some(normalize_dotted(self.text(child))),
                    _ => {}
                }
            }
            match resolve_relative(self.module.package(), level, rest.as_deref()) {
                Some(abs) => abs,
                None => {
                    self.module.skipped_constructs += 1;
                    return;
                }
            }
        } else {
            normalize_dotted(self.text(module_node))
        };

        let is_star = named_children(stmt)
            .iter()
            .any(|n| n.kind() == "wildcard_import");
        if is_star {
            self.module.import_statements.push(RawImport {
                form: ImportForm::StarImport,
                source_module: source,
                imported_names: Vec::new(),
                line,
            });
            return;
        }

        let mut cursor = stmt.walk();
        let mut imported = Vec::new();
        for name in stmt.children_by_field_name("name", &mut cursor) {
            match name.kind() {
                "aliased_import" => {
                    if let Some(n) = name.child_by_field_name("name") {
                        imported.push(ImportedName {
                            name: normalize_dotted(self.text(n)),
                            alias: name
                                .child_by_field_name("alias")
                                .map(|a| self.text(a).to_string()),
                        });
                    }
                }
                _ => imported.push(ImportedName {
                    name: normalize_dotted(self.text(name)),
                    alias: None,
                }),
            }
        }
        self.module.import_statements.push(RawImport {
            form: ImportForm::FromImport,
            source_module: source,
            imported_names: imported,
            line,
        });
    }

    fn maybe_all(&mut self, stmt: Node<'_>) {
        let Some(assign) = named_children(stmt).into_iter().next() else {
            return;
        };
        if assign.kind() != "assignment" {
            return;
        }
        let (Some(left), Some(right)) = (
            assign.child_by_field_name("left"),
            assign.child_by_field_name("right"),
        ) else {
            return;
        };
        if self.text(left) == "__all__" {
            if let Some(names) = string_list(&self.src.text, right) {
                self.module.explicit_all = Some(names);
            }
        }
    }
}

fn normalize_dotted(text: &str) -> String {
    text.split('.')
        .map(str::trim)
        .collect::<Vec<_>>()
        .join(".")
}

/// Resolves a relative import against the importing module's package.
/// Returns `None` when the level climbs above the top-level package.
pub(crate) fn resolve_relative(package: &str, level: usize, rest: Option<&str>) -> Option<String> {
    if level == 0 {
        return rest.map(str::to_string);
    }
    let parts: Vec<&str> = if package.is_empty() {
        Vec::new()
    } else {
        package.split('.').collect()
    };
    if level > parts.len() {
        return None;
    }
    let mut base: Vec<&str> = parts[..parts.len() + 1 - level].to_vec();
    if let Some(rest) = rest {
        base.extend(rest.split('.'));
    }
    Some(base.join("."))
}
