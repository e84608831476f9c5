//! Thin layer over the tree-sitter grammar shared by library parsing and
//! notebook analysis.
//!
//! The grammar accepts both the 2.7 line (print/exec statements, backticks,
//! `except E, e`) and the 3.x line. When a file fails under it as written, it is
//! retried once with legacy tab indentation expanded to 8-column stops, the way
//! the 2.x tokenizer treated mixed tabs and spaces.

use std::cell::RefCell;

use tree_sitter::{Node, Parser, Tree};

thread_local! {
    static PARSER: RefCell<Option<Parser>> = const { RefCell::new(None) };
}

/// A successfully parsed source text together with its tree.
pub struct ParsedSource {
    pub text: String,
    pub tree: Tree,
    pub legacy_retry: bool,
}

impl ParsedSource {
    pub fn root(&self) -> Node<'_> {
        self.tree.root_node()
    }

    pub fn node_text(&self, node: Node<'_>) -> &str {
        node_text(&self.text, node)
    }
}

pub fn node_text<'a>(src: &'a str, node: Node<'_>) -> &'a str {
    src.get(node.byte_range()).unwrap_or("")
}

fn with_parser<T>(f: impl FnOnce(&mut Parser) -> T) -> T {
    PARSER.with(|cell| {
        let mut slot = cell.borrow_mut();
        let parser = slot.get_or_insert_with(|| {
            let mut parser = Parser::new();
            parser
                .set_language(&tree_sitter_python::LANGUAGE.into())
                .expect("bundled grammar matches the runtime ABI");
            parser
        });
        f(parser)
    })
}

fn parse_once(text: &str) -> Option<Tree> {
    with_parser(|parser| {
        parser.reset();
        parser.parse(text, None)
    })
}

/// 1-based line of the first error or missing node, if any.
pub fn first_error_line(tree: &Tree) -> Option<usize> {
    let root = tree.root_node();
    if !root.has_error() {
        return None;
    }
    let mut cursor = root.walk();
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node.is_error() || node.is_missing() {
            return Some(node.start_position().row + 1);
        }
        if node.has_error() {
            let children: Vec<_> = node.children(&mut cursor).collect();
            stack.extend(children.into_iter().rev());
        }
    }
    Some(root.start_position().row + 1)
}

/// Parses `text`, retrying under legacy indentation rules. On failure returns
/// the first error line of the original attempt.
pub fn parse_python(text: &str) -> Result<ParsedSource, usize> {
    let tree = parse_once(text).ok_or(1usize)?;
    let err_line = match first_error_line(&tree) {
        None => {
            return Ok(ParsedSource {
                text: text.to_string(),
                tree,
                legacy_retry: false,
            })
        }
        Some(line) => line,
    };
    if text.contains('\t') {
        let expanded = expand_legacy_tabs(text);
        if let Some(tree) = parse_once(&expanded) {
            if first_error_line(&tree).is_none() {
                return Ok(ParsedSource {
                    text: expanded,
                    tree,
                    legacy_retry: true,
                });
            }
        }
    }
    Err(err_line)
}

/// True when `text` parses without error.
pub fn parses_cleanly(text: &str) -> bool {
    parse_python(text).is_ok()
}

fn expand_legacy_tabs(text: &str) -> String {
    let mut out = String::with_capacity(text.len() + 16);
    for line in text.split_inclusive('\n') {
        let mut col = 0usize;
        let mut rest = line;
        loop {
            match rest.as_bytes().first() {
                Some(b' ') => {
                    col += 1;
                    rest = &rest[1..];
                }
                Some(b'\t') => {
                    col = (col / 8 + 1) * 8;
                    rest = &rest[1..];
                }
                _ => break,
            }
        }
        out.extend(std::iter::repeat_n(' ', col));
        out.push_str(rest);
    }
    out
}

/// Children that are named nodes, skipping comments.
pub fn named_children<'t>(node: Node<'t>) -> Vec<Node<'t>> {
    let mut cursor = node.walk();
    node.named_children(&mut cursor)
        .filter(|n| n.kind() != "comment")
        .collect()
}

/// Flattens a `dotted_name`/`identifier`/`attribute` chain to text, or `None` when
/// the expression is anything else.
pub fn dotted_text(src: &str, node: Node<'_>) -> Option<String> {
    match node.kind() {
        "identifier" => Some(node_text(src, node).to_string()),
        "dotted_name" => {
            let parts: Vec<_> = named_children(node)
                .into_iter()
                .map(|n| node_text(src, n))
                .collect();
            Some(parts.join("."))
        }
        "attribute" => {
            let object = node.child_by_field_name("object")?;
            let attr = node.child_by_field_name("attribute")?;
            let head = dotted_text(src, object)?;
            Some(format!("{head}.{}", node_text(src, attr)))
        }
        _ => None,
    }
}

/// Extracts string literal contents of a list/tuple of plain string literals.
pub fn string_list(src: &str, node: Node<'_>) -> Option<Vec<String>> {
    if !matches!(node.kind(), "list" | "tuple") {
        return None;
    }
    let mut out = Vec::new();
    for item in named_children(node) {
        if item.kind() != "string" {
            return None;
        }
        let mut content = String::new();
        for part in named_children(item) {
            match part.kind() {
                "string_content" => content.push_str(node_text(src, part)),
                "string_start" | "string_end" => {}
                _ => return None,
            }
        }
        out.push(content);
    }
    Some(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legacy_statements_parse() {
        assert!(parses_cleanly("print 'hi'\nexec 'x = 1'\n"));
        assert!(parses_cleanly("try:\n    pass\nexcept ValueError, e:\n    pass\n"));
    }

    #[test]
    fn broken_source_reports_line() {
        let err = parse_python("x = 1\ndef f(:\n    pass\n").err();
        assert_eq!(err, Some(2));
    }

    #[test]
    fn tab_expansion_uses_eight_columns() {
        assert_eq!(expand_legacy_tabs("\tx\n    \ty\n"), "        x\n        y\n");
    }

    #[test]
    fn dotted_chain_text() {
        let parsed = parse_python("a.b.c\n").unwrap();
        let stmt = named_children(parsed.root())[0];
        let expr = named_children(stmt)[0];
        assert_eq!(dotted_text(&parsed.text, expr).as_deref(), Some("a.b.c"));
    }

    #[test]
    fn all_list_extraction() {
        let parsed = parse_python("__all__ = ['a', \"b\"]\n").unwrap();
        let stmt = named_children(parsed.root())[0];
        let assign = named_children(stmt)[0];
        let right = assign.child_by_field_name("right").unwrap();
        assert_eq!(
            string_list(&parsed.text, right),
            Some(vec!["a".to_string(), "b".to_string()])
        );
    }
}
