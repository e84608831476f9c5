use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{CodeCell, NotebookError};
use crate::names::is_identifier;

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct NotebookMeta {
    pub nbformat: u32,
    pub total_cells: usize,
    pub code_cells: usize,
    pub executed_cells: usize,
    pub max_execution_count: Option<u32>,
    /// Counters jump past the number of executed cells: some cells were run
    /// more than once or out of order.
    pub counter_skip: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub language: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NotebookDocument {
    pub cells: Vec<CodeCell>,
    pub meta: NotebookMeta,
}

fn malformed(reason: impl Into<String>) -> NotebookError {
    NotebookError::MalformedNotebook(reason.into())
}

fn join_source(value: Option<&Value>, what: &str) -> Result<String, NotebookError> {
    match value {
        None | Some(Value::Null) => Ok(String::new()),
        Some(Value::String(s)) => Ok(s.clone()),
        Some(Value::Array(parts)) => parts
            .iter()
            .map(|p| {
                p.as_str()
                    .ok_or_else(|| malformed(format!("{what} contains a non-string line")))
            })
            .collect(),
        Some(_) => Err(malformed(format!("{what} is neither a string nor a list"))),
    }
}

fn counter(value: Option<&Value>) -> Option<u32> {
    value
        .and_then(Value::as_u64)
        .filter(|n| *n >= 1)
        .and_then(|n| u32::try_from(n).ok())
}

/// Code cells of a notebook document, in document order.
pub fn load_notebook(document: &str) -> Result<Vec<CodeCell>, NotebookError> {
    load_notebook_document(document).map(|d| d.cells)
}

/// Code cells plus document metadata. Format 4 is read from `cells`; format 3
/// from `worksheets[].cells` with `input` and `prompt_number`.
pub fn load_notebook_document(document: &str) -> Result<NotebookDocument, NotebookError> {
    let root: Value =
        serde_json::from_str(document).map_err(|e| malformed(format!("not JSON: {e}")))?;
    let obj = root
        .as_object()
        .ok_or_else(|| malformed("top level is not an object"))?;
    let nbformat = obj.get("nbformat").and_then(Value::as_u64).unwrap_or(4) as u32;

    let (raw_cells, source_key, count_key): (Vec<&Value>, &str, &str) =
        if let Some(cells) = obj.get("cells") {
            let cells = cells
                .as_array()
                .ok_or_else(|| malformed("`cells` is not an array"))?;
            (cells.iter().collect(), "source", "execution_count")
        } else if let Some(sheets) = obj.get("worksheets") {
            let sheets = sheets
                .as_array()
                .ok_or_else(|| malformed("`worksheets` is not an array"))?;
            let mut cells = Vec::new();
            for sheet in sheets {
                let list = sheet
                    .get("cells")
                    .and_then(Value::as_array)
                    .ok_or_else(|| malformed("worksheet without `cells` array"))?;
                cells.extend(list.iter());
            }
            (cells, "input", "prompt_number")
        } else {
            return Err(malformed("no `cells` array"));
        };

    let mut cells = Vec::new();
    for (i, cell) in raw_cells.iter().enumerate() {
        let kind = cell
            .get("cell_type")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed(format!("cell {i} has no cell_type")))?;
        if kind != "code" {
            continue;
        }
        let source = join_source(cell.get(source_key), &format!("cell {i} source"))?;
        cells.push(CodeCell {
            position: cells.len(),
            execution_count: counter(cell.get(count_key)),
            source,
        });
    }

    let counters: Vec<u32> = cells.iter().filter_map(|c| c.execution_count).collect();
    let max_execution_count = counters.iter().copied().max();
    let language = obj
        .get("metadata")
        .and_then(|m| {
            m.pointer("/kernelspec/language")
                .or_else(|| m.pointer("/language_info/name"))
                .or_else(|| m.get("language"))
        })
        .and_then(Value::as_str)
        .map(str::to_string);
    let meta = NotebookMeta {
        nbformat,
        total_cells: raw_cells.len(),
        code_cells: cells.len(),
        executed_cells: counters.len(),
        max_execution_count,
        counter_skip: max_execution_count.is_some_and(|m| m as usize > counters.len()),
        language,
    };
    Ok(NotebookDocument { cells, meta })
}

/// Names importable from the notebook's own directory: sibling source files
/// and directories holding source files.
pub fn local_modules_near(notebook_path: &Path) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let Some(dir) = notebook_path.parent() else {
        return out;
    };
    let dir = if dir.as_os_str().is_empty() { Path::new(".") } else { dir };
    let Ok(entries) = std::fs::read_dir(dir) else {
        return out;
    };
    for entry in entries.flatten() {
        let path = entry.path();
        let name = entry.file_name().to_string_lossy().into_owned();
        if path.is_file() {
            if let Some(stem) = name.strip_suffix(".py") {
                if is_identifier(stem) {
                    out.insert(stem.to_string());
                }
            }
        } else if path.is_dir() && is_identifier(&name) {
            let has_source = std::fs::read_dir(&path)
                .map(|it| {
                    it.flatten()
                        .any(|e| e.file_name().to_string_lossy().ends_with(".py"))
                })
                .unwrap_or(false);
            if has_source {
                out.insert(name);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v4(cells: &[(&str, &str, Option<u32>)]) -> String {
        let cells: Vec<Value> = cells
            .iter()
            .map(|(kind, src, count)| {
                serde_json::json!({
                    "cell_type": kind,
                    "source": src.split_inclusive('\n').collect::<Vec<_>>(),
                    "execution_count": count,
                    "metadata": {},
                })
            })
            .collect();
        serde_json::json!({"nbformat": 4, "nbformat_minor": 5, "metadata": {}, "cells": cells})
            .to_string()
    }

    #[test]
    fn three_text_six_code() {
        let mut spec = Vec::new();
        for i in 0..9 {
            if i % 3 == 0 {
                spec.push(("markdown", "# heading\n", None));
            } else {
                spec.push(("code", "x = 1\ny = 2\n", Some(i as u32)));
            }
        }
        let doc = load_notebook_document(&v4(&spec)).unwrap();
        assert_eq!(doc.cells.len(), 6);
        assert_eq!(
            doc.cells.iter().map(|c| c.position).collect::<Vec<_>>(),
            [0, 1, 2, 3, 4, 5]
        );
        assert_eq!(doc.cells[0].source, "x = 1\ny = 2\n");
    }

    #[test]
    fn no_code_cells() {
        let cells = load_notebook(&v4(&[("markdown", "hi", None)])).unwrap();
        assert!(cells.is_empty());
    }

    #[test]
    fn counter_skip_reported() {
        let doc = load_notebook_document(&v4(&[
            ("code", "a = 1", Some(1)),
            ("code", "b = 2", Some(5)),
            ("code", "c = 3", Some(3)),
        ]))
        .unwrap();
        assert!(doc.meta.counter_skip);
        let order: Vec<&str> = doc.cells.iter().map(|c| c.source.as_str()).collect();
        assert_eq!(order, ["a = 1", "b = 2", "c = 3"]);

        let clean = load_notebook_document(&v4(&[("code", "a", Some(1)), ("code", "b", Some(2))])).unwrap();
        assert!(!clean.meta.counter_skip);
    }

    #[test]
    fn version_three_worksheets() {
        let doc = serde_json::json!({
            "nbformat": 3,
            "metadata": {"language": "python"},
            "worksheets": [{"cells": [
                {"cell_type": "heading", "source": "T", "level": 1},
                {"cell_type": "code", "input": ["import pandas\n", "pandas.read_csv('x')"], "prompt_number": 1, "language": "python"}
            ]}]
        });
        let doc = load_notebook_document(&doc.to_string()).unwrap();
        assert_eq!(doc.meta.nbformat, 3);
        assert_eq!(doc.cells.len(), 1);
        assert_eq!(doc.cells[0].source, "import pandas\npandas.read_csv('x')");
        assert_eq!(doc.cells[0].execution_count, Some(1));
    }

    #[test]
    fn malformed_inputs() {
        assert!(load_notebook("not json").is_err());
        assert!(load_notebook("{\"cells\": 3}").is_err());
        assert!(load_notebook("{\"cells\": [{\"source\": \"x\"}]}").is_err());
        assert!(load_notebook("{\"cells\": [{\"cell_type\": \"code\", \"source\": 7}]}").is_err());
    }

    #[test]
    fn sibling_modules() {
        let dir = tempfile::tempdir().unwrap();
        std::fs::write(dir.path().join("helpers.py"), "").unwrap();
        std::fs::create_dir(dir.path().join("mypkg")).unwrap();
        std::fs::write(dir.path().join("mypkg/__init__.py"), "").unwrap();
        std::fs::create_dir(dir.path().join("data")).unwrap();
        std::fs::write(dir.path().join("data/x.csv"), "").unwrap();
        let found = local_modules_near(&dir.path().join("nb.ipynb"));
        assert_eq!(found.into_iter().collect::<Vec<_>>(), ["helpers", "mypkg"]);
    }
}
