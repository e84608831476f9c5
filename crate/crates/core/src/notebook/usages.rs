use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use tree_sitter::Node;

use super::sanitize::sanitize_cell;
use super::stdlib::is_builtin;
use super::{
    CallSite, CallSignature, CellNote, CodeCell, NameClass, StdlibTable, UsageOrigin, UsageRecord,
    UsageSet,
};
use crate::names::root_segment;
use crate::pysrc::syntax::{dotted_text, named_children, node_text, parse_python};

#[derive(Debug, Clone, Default)]
pub struct AnalysisOptions {
    pub stdlib: StdlibTable,
    /// Modules that live next to the notebook and are therefore local.
    pub local_modules: BTreeSet<String>,
}

/// Classifies a dotted name by its root segment: defined in the notebook,
/// standard library (directly or through an import binding), or library.
pub fn classify_name(
    name: &str,
    local_defs: &BTreeSet<String>,
    imports: &BTreeMap<String, String>,
    stdlib: &StdlibTable,
) -> NameClass {
    let root = root_segment(name);
    if local_defs.contains(root) {
        return NameClass::Local;
    }
    let module = imports.get(root).map_or(root, String::as_str);
    if stdlib.contains(module) || (!imports.contains_key(root) && is_builtin(root)) {
        NameClass::Stdlib
    } else {
        NameClass::Library
    }
}

#[derive(Debug, Clone)]
enum Binding {
    /// Bound by an import of a third-party module or name.
    Api { fqn: String, renamed: bool },
    Instance { class_fqn: String },
    Local,
}

#[derive(Debug, Clone)]
enum Value {
    Api { fqn: String, renamed: bool },
    Instance(String),
    /// Attribute of an instance (a bound method when called).
    Member(String),
    Unbound(String),
    Other,
}

#[derive(Default)]
struct Scope {
    names: HashMap<String, Binding>,
    stars: Vec<String>,
}

struct Analyzer<'a> {
    options: &'a AnalysisOptions,
    scopes: Vec<Scope>,
    out: UsageSet,
    seen: HashSet<UsageRecord>,
    cell: usize,
}

/// Extracts the standardized third-party usages of a notebook. Cells are
/// sanitized and processed top-down with one shared symbol table.
pub fn collect_usages(cells: &[CodeCell], options: &AnalysisOptions) -> UsageSet {
    let mut analyzer = Analyzer {
        options,
        scopes: vec![Scope::default()],
        out: UsageSet {
            interpreter_line: options.stdlib.line().map(|l| l.label()),
            ..UsageSet::default()
        },
        seen: HashSet::new(),
        cell: 0,
    };
    for cell in cells {
        analyzer.cell = cell.position;
        let cleaned = sanitize_cell(&cell.source);
        for note in cleaned.notes {
            analyzer.out.notes.push(CellNote {
                cell_position: cell.position,
                note,
            });
        }
        if cleaned.text.is_empty() {
            continue;
        }
        let Ok(parsed) = parse_python(&cleaned.text) else {
            continue;
        };
        analyzer.visit(&parsed.text, parsed.root());
    }
    analyzer.out
}

/// Usages reached through instances (`m = y(); m.fun()` gives `x.y.fun`).
pub fn trace_instance_calls(cells: &[CodeCell]) -> Vec<UsageRecord> {
    collect_usages(cells, &AnalysisOptions::default())
        .usages
        .into_iter()
        .filter(|u| u.origin == UsageOrigin::InstanceMethod)
        .collect()
}

fn call_signature(src: &str, args: Option<Node<'_>>) -> CallSignature {
    let mut sig = CallSignature::default();
    let Some(args) = args else {
        return sig;
    };
    if args.kind() == "generator_expression" {
        sig.positional = 1;
        return sig;
    }
    for arg in named_children(args) {
        match arg.kind() {
            "keyword_argument" => {
                if let Some(name) = arg.child_by_field_name("name") {
                    sig.keywords.push(node_text(src, name).to_string());
                }
            }
            "dictionary_splat" => {}
            _ => sig.positional += 1,
        }
    }
    sig
}

impl Analyzer<'_> {
    fn lookup(&self, name: &str) -> Option<&Binding> {
        self.scopes.iter().rev().find_map(|s| s.names.get(name))
    }

    fn stars(&self) -> Vec<String> {
        self.scopes.iter().flat_map(|s| s.stars.iter().cloned()).collect()
    }

    fn bind(&mut self, name: &str, binding: Binding) {
        if self.scopes.len() == 1 {
            if matches!(binding, Binding::Local) {
                self.out.local_names.insert(name.to_string());
            } else {
                self.out.local_names.remove(name);
            }
        }
        self.scopes
            .last_mut()
            .expect("module scope")
            .names
            .insert(name.to_string(), binding);
    }

    fn module_class(&self, module: &str) -> NameClass {
        let root = root_segment(module);
        if self.options.local_modules.contains(root) {
            NameClass::Local
        } else if self.options.stdlib.contains(root) {
            NameClass::Stdlib
        } else {
            NameClass::Library
        }
    }

    fn record(&mut self, fqn: String, call: CallSite, origin: UsageOrigin, low_confidence: bool) {
        let usage = UsageRecord {
            fqn,
            call,
            cell_position: self.cell,
            origin,
            low_confidence,
        };
        if self.seen.insert(usage.clone()) {
            self.out.usages.push(usage);
        }
    }

    fn record_import(&mut self, path: &str) {
        self.out
            .imported_top_levels
            .insert(root_segment(path).to_string());
        self.record(
            path.to_string(),
            CallSite::ReferenceOnly,
            UsageOrigin::AttributeAccess,
            false,
        );
    }

    fn eval(&self, src: &str, node: Node<'_>) -> Value {
        match node.kind() {
            "identifier" => {
                let name = node_text(src, node);
                match self.lookup(name) {
                    Some(Binding::Api { fqn, renamed }) => Value::Api {
                        fqn: fqn.clone(),
                        renamed: *renamed,
                    },
                    Some(Binding::Instance { class_fqn }) => Value::Instance(class_fqn.clone()),
                    Some(Binding::Local) => Value::Other,
                    None if is_builtin(name) => Value::Other,
                    None => Value::Unbound(name.to_string()),
                }
            }
            "attribute" => {
                let (Some(object), Some(attr)) = (
                    node.child_by_field_name("object"),
                    node.child_by_field_name("attribute"),
                ) else {
                    return Value::Other;
                };
                let attr = node_text(src, attr);
                match self.eval(src, object) {
                    Value::Api { fqn, renamed } => Value::Api {
                        fqn: format!("{fqn}.{attr}"),
                        renamed,
                    },
                    Value::Instance(class) | Value::Member(class) => {
                        Value::Member(format!("{class}.{attr}"))
                    }
                    _ => Value::Other,
                }
            }
            "call" => match node
                .child_by_field_name("function")
                .map(|f| self.eval(src, f))
            {
                Some(Value::Api { fqn, .. }) => Value::Instance(fqn),
                _ => Value::Other,
            },
            "parenthesized_expression" => named_children(node)
                .first()
                .map_or(Value::Other, |inner| self.eval(src, *inner)),
            _ => Value::Other,
        }
    }

    /// Binding created by assigning the value of `node` to a plain name.
    fn binding_for(&self, src: &str, node: Node<'_>) -> Binding {
        match self.eval(src, node) {
            Value::Api { fqn, .. } => Binding::Api { fqn, renamed: true },
            Value::Instance(class_fqn) => Binding::Instance { class_fqn },
            _ => Binding::Local,
        }
    }

    fn visit_children(&mut self, src: &str, node: Node<'_>) {
        for child in named_children(node) {
            self.visit(src, child);
        }
    }

    fn visit(&mut self, src: &str, node: Node<'_>) {
        match node.kind() {
            "import_statement" => self.visit_import(src, node),
            "import_from_statement" => self.visit_from_import(src, node),
            "future_import_statement" | "comment" | "global_statement" | "nonlocal_statement"
            | "string_content" | "integer" | "float" | "true" | "false" | "none"
            | "escape_sequence" => {}
            "function_definition" => self.visit_function(src, node),
            "class_definition" => self.visit_class(src, node),
            "assignment" => {
                self.visit_assignment(src, node);
            }
            "augmented_assignment" => {
                if let Some(right) = node.child_by_field_name("right") {
                    self.visit(src, right);
                }
                if let Some(left) = node.child_by_field_name("left") {
                    self.visit(src, left);
                    self.bind_targets(src, left, None);
                }
            }
            "for_statement" => {
                if let Some(right) = node.child_by_field_name("right") {
                    self.visit(src, right);
                }
                if let Some(left) = node.child_by_field_name("left") {
                    self.bind_targets(src, left, None);
                }
                for field in ["body", "alternative"] {
                    if let Some(part) = node.child_by_field_name(field) {
                        self.visit(src, part);
                    }
                }
            }
            "with_item" => self.visit_with_item(src, node),
            "except_clause" => {
                if let Some(value) = node.child_by_field_name("value") {
                    self.visit(src, value);
                }
                if let Some(alias) = node.child_by_field_name("alias") {
                    self.bind_targets(src, alias, None);
                }
                for child in named_children(node) {
                    if child.kind() == "block" {
                        self.visit(src, child);
                    }
                }
            }
            "named_expression" => {
                if let (Some(name), Some(value)) = (
                    node.child_by_field_name("name"),
                    node.child_by_field_name("value"),
                ) {
                    self.visit(src, value);
                    let binding = self.binding_for(src, value);
                    self.bind(node_text(src, name), binding);
                }
            }
            "lambda" => {
                self.scopes.push(Scope::default());
                if let Some(params) = node.child_by_field_name("parameters") {
                    self.bind_parameters(src, params);
                }
                if let Some(body) = node.child_by_field_name("body") {
                    self.visit(src, body);
                }
                self.scopes.pop();
            }
            "list_comprehension" | "set_comprehension" | "dictionary_comprehension"
            | "generator_expression" => {
                self.scopes.push(Scope::default());
                let children = named_children(node);
                for clause in children
                    .iter()
                    .filter(|c| matches!(c.kind(), "for_in_clause" | "if_clause"))
                {
                    if clause.kind() == "for_in_clause" {
                        if let Some(right) = clause.child_by_field_name("right") {
                            self.visit(src, right);
                        }
                        if let Some(left) = clause.child_by_field_name("left") {
                            self.bind_targets(src, left, None);
                        }
                    } else {
                        self.visit_children(src, *clause);
                    }
                }
                if let Some(body) = node.child_by_field_name("body") {
                    self.visit(src, body);
                }
                self.scopes.pop();
            }
            "keyword_argument" => {
                if let Some(value) = node.child_by_field_name("value") {
                    self.visit(src, value);
                }
            }
            "call" => self.visit_call(src, node),
            "attribute" => self.visit_attribute(src, node),
            "identifier" => self.visit_identifier(src, node),
            _ => self.visit_children(src, node),
        }
    }

    fn visit_import(&mut self, src: &str, node: Node<'_>) {
        for item in named_children(node) {
            let (path, alias) = match item.kind() {
                "dotted_name" => (dotted_text(src, item), None),
                "aliased_import" => (
                    item.child_by_field_name("name").and_then(|n| dotted_text(src, n)),
                    item.child_by_field_name("alias")
                        .map(|a| node_text(src, a).to_string()),
                ),
                _ => continue,
            };
            let Some(path) = path else { continue };
            let library = self.module_class(&path) == NameClass::Library;
            match alias {
                Some(alias) => {
                    let binding = if library {
                        let last = path.rsplit('.').next().unwrap_or(&path);
                        Binding::Api {
                            renamed: alias != last,
                            fqn: path.clone(),
                        }
                    } else {
                        Binding::Local
                    };
                    self.bind(&alias, binding);
                }
                None => {
                    let root = root_segment(&path).to_string();
                    let binding = if library {
                        Binding::Api {
                            fqn: root.clone(),
                            renamed: false,
                        }
                    } else {
                        Binding::Local
                    };
                    self.bind(&root, binding);
                }
            }
            if library {
                self.record_import(&path);
            }
        }
    }

    fn visit_from_import(&mut self, src: &str, node: Node<'_>) {
        let module = node
            .child_by_field_name("module_name")
            .filter(|m| m.kind() == "dotted_name")
            .and_then(|m| dotted_text(src, m));
        let library = module
            .as_deref()
            .is_some_and(|m| self.module_class(m) == NameClass::Library);
        let mut cursor = node.walk();
        let names: Vec<Node<'_>> = node.children_by_field_name("name", &mut cursor).collect();
        if named_children(node).iter().any(|c| c.kind() == "wildcard_import") {
            if let (true, Some(module)) = (library, &module) {
                self.out
                    .imported_top_levels
                    .insert(root_segment(module).to_string());
                self.scopes
                    .last_mut()
                    .expect("module scope")
                    .stars
                    .push(module.clone());
            }
            return;
        }
        for item in names {
            let (name, alias) = match item.kind() {
                "dotted_name" => (dotted_text(src, item), None),
                "aliased_import" => (
                    item.child_by_field_name("name").and_then(|n| dotted_text(src, n)),
                    item.child_by_field_name("alias")
                        .map(|a| node_text(src, a).to_string()),
                ),
                _ => continue,
            };
            let Some(name) = name else { continue };
            let bound = alias.clone().unwrap_or_else(|| name.clone());
            match (&module, library) {
                (Some(module), true) => {
                    let fqn = format!("{module}.{name}");
                    self.bind(
                        &bound,
                        Binding::Api {
                            fqn: fqn.clone(),
                            renamed: alias.is_some_and(|a| a != name),
                        },
                    );
                    self.record_import(&fqn);
                }
                _ => self.bind(&bound, Binding::Local),
            }
        }
    }

    fn bind_parameters(&mut self, src: &str, params: Node<'_>) {
        for param in named_children(params) {
            match param.kind() {
                "identifier" => self.bind(node_text(src, param), Binding::Local),
                "default_parameter" | "typed_default_parameter" => {
                    if let Some(value) = param.child_by_field_name("value") {
                        self.visit(src, value);
                    }
                    if let Some(name) = param.child_by_field_name("name") {
                        self.bind_targets(src, name, None);
                    }
                }
                _ => {
                    for child in named_children(param) {
                        match child.kind() {
                            "identifier" => self.bind(node_text(src, child), Binding::Local),
                            "list_splat_pattern" | "dictionary_splat_pattern" | "tuple_pattern" => {
                                self.bind_targets(src, child, None)
                            }
                            _ => {}
                        }
                    }
                }
            }
        }
    }

    fn visit_function(&mut self, src: &str, node: Node<'_>) {
        if let Some(name) = node.child_by_field_name("name") {
            self.bind(node_text(src, name), Binding::Local);
        }
        self.scopes.push(Scope::default());
        if let Some(params) = node.child_by_field_name("parameters") {
            self.bind_parameters(src, params);
        }
        if let Some(body) = node.child_by_field_name("body") {
            self.visit(src, body);
        }
        self.scopes.pop();
    }

    fn visit_class(&mut self, src: &str, node: Node<'_>) {
        if let Some(bases) = node.child_by_field_name("superclasses") {
            self.visit(src, bases);
        }
        if let Some(name) = node.child_by_field_name("name") {
            self.bind(node_text(src, name), Binding::Local);
        }
        self.scopes.push(Scope::default());
        if let Some(body) = node.child_by_field_name("body") {
            self.visit(src, body);
        }
        self.scopes.pop();
    }

    /// Visits the right-hand side, then binds the targets. Returns the binding
    /// so chained assignments share it.
    fn visit_assignment(&mut self, src: &str, node: Node<'_>) -> Option<Binding> {
        let right = node.child_by_field_name("right");
        let binding = match right {
            Some(r) if r.kind() == "assignment" => self.visit_assignment(src, r),
            Some(r) => {
                self.visit(src, r);
                Some(self.binding_for(src, r))
            }
            None => None,
        };
        if let Some(annotation) = node.child_by_field_name("type") {
            self.visit(src, annotation);
        }
        if let Some(left) = node.child_by_field_name("left") {
            self.bind_targets(src, left, binding.clone());
        }
        binding
    }

    fn visit_with_item(&mut self, src: &str, node: Node<'_>) {
        let Some(value) = node.child_by_field_name("value") else {
            return;
        };
        if value.kind() != "as_pattern" {
            self.visit(src, value);
            return;
        }
        let children = named_children(value);
        let Some(expr) = children.iter().find(|c| c.kind() != "as_pattern_target") else {
            return;
        };
        self.visit(src, *expr);
        let binding = self.binding_for(src, *expr);
        if let Some(target) = value.child_by_field_name("alias") {
            for t in named_children(target) {
                self.bind_targets(src, t, Some(binding.clone()));
            }
        }
    }

    /// Binds every name in an assignment target. Only a plain name receives
    /// `binding`; names inside tuples, lists or splats become locals.
    /// Attribute and subscript targets are visited as reads.
    fn bind_targets(&mut self, src: &str, target: Node<'_>, binding: Option<Binding>) {
        match target.kind() {
            "identifier" => {
                let binding = binding.unwrap_or(Binding::Local);
                self.bind(node_text(src, target), binding);
            }
            "attribute" | "subscript" => {
                for child in named_children(target) {
                    if target.kind() == "attribute"
                        && target.child_by_field_name("attribute") == Some(child)
                    {
                        continue;
                    }
                    self.visit(src, child);
                }
            }
            _ => {
                for child in named_children(target) {
                    self.bind_targets(src, child, None);
                }
            }
        }
    }

    /// Walks the receiver side of a call or attribute chain without
    /// recording the chain itself again.
    fn visit_chain(&mut self, src: &str, node: Node<'_>) {
        match node.kind() {
            "identifier" => {
                if let Value::Unbound(name) = self.eval(src, node) {
                    self.out.unresolved.insert(name);
                }
            }
            "attribute" => {
                if let Some(object) = node.child_by_field_name("object") {
                    self.visit_chain(src, object);
                }
            }
            "parenthesized_expression" => {
                for child in named_children(node) {
                    self.visit_chain(src, child);
                }
            }
            _ => self.visit(src, node),
        }
    }

    fn visit_call(&mut self, src: &str, node: Node<'_>) {
        let args = node.child_by_field_name("arguments");
        if let Some(function) = node.child_by_field_name("function") {
            let sig = call_signature(src, args);
            match self.eval(src, function) {
                Value::Api { fqn, renamed } => {
                    let origin = if renamed {
                        UsageOrigin::AliasCall
                    } else {
                        UsageOrigin::DirectCall
                    };
                    self.record(fqn, CallSite::Call(sig), origin, false);
                }
                Value::Member(fqn) => {
                    self.record(fqn, CallSite::Call(sig), UsageOrigin::InstanceMethod, false)
                }
                Value::Unbound(name) => {
                    let stars = self.stars();
                    if stars.is_empty() {
                        self.out.unresolved.insert(name.clone());
                    }
                    for module in stars {
                        self.record(
                            format!("{module}.{name}"),
                            CallSite::Call(sig.clone()),
                            UsageOrigin::DirectCall,
                            true,
                        );
                    }
                }
                _ => {}
            }
            match function.kind() {
                "identifier" => {}
                _ => self.visit_chain(src, function),
            }
        }
        if let Some(args) = args {
            self.visit(src, args);
        }
    }

    fn visit_attribute(&mut self, src: &str, node: Node<'_>) {
        if let Value::Api { fqn, .. } = self.eval(src, node) {
            self.record(fqn, CallSite::ReferenceOnly, UsageOrigin::AttributeAccess, false);
        }
        if let Some(object) = node.child_by_field_name("object") {
            self.visit_chain(src, object);
        }
    }

    fn visit_identifier(&mut self, src: &str, node: Node<'_>) {
        let name = node_text(src, node);
        match self.lookup(name) {
            Some(Binding::Api { fqn, .. }) if fqn.contains('.') => {
                let fqn = fqn.clone();
                self.record(fqn, CallSite::ReferenceOnly, UsageOrigin::AttributeAccess, false);
            }
            Some(_) => {}
            None if is_builtin(name) => {}
            None => {
                self.out.unresolved.insert(name.to_string());
            }
        }
    }
}
