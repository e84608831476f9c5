use serde::{Deserialize, Serialize};

use crate::pysrc::syntax::parse_python;

/// Cell magics whose body is ordinary code and is kept.
const PASSTHROUGH_CELL_MAGICS: &[&str] = &["time", "timeit", "capture", "prun", "python", "python3"];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SanitizeNote {
    LineMagicRemoved,
    CellMagicRemoved { magic: String },
    ShellEscapeRemoved,
    HelpRemoved,
    /// `x = %magic` or `x = !cmd` replaced by `x = None`.
    MagicAssignmentReplaced,
    /// The cleaned text still did not parse; the cell is ignored.
    CellExcluded { line: usize },
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sanitized {
    pub text: String,
    pub notes: Vec<SanitizeNote>,
}

impl Sanitized {
    pub fn excluded(&self) -> bool {
        self.notes
            .iter()
            .any(|n| matches!(n, SanitizeNote::CellExcluded { .. }))
    }
}

fn push_note(notes: &mut Vec<SanitizeNote>, note: SanitizeNote) {
    if !notes.contains(&note) {
        notes.push(note);
    }
}

/// `name = %...` / `a.b = !...` -> the assigned target.
fn magic_assignment(line: &str) -> Option<&str> {
    let (lhs, rhs) = line.split_once('=')?;
    let rhs = rhs.trim_start();
    if !(rhs.starts_with('%') || rhs.starts_with('!')) {
        return None;
    }
    let lhs = lhs.trim_end();
    crate::names::is_dotted_name(lhs).then_some(lhs)
}

/// `obj?`, `obj??`, `?obj`, `??obj`.
fn is_help(line: &str) -> bool {
    let inner = line.trim_start_matches('?').trim_end_matches('?');
    inner.len() != line.len() && crate::names::is_dotted_name(inner.trim())
}

/// Strips kernel-only syntax from a cell. When the result does not parse,
/// the text is emptied and a [`SanitizeNote::CellExcluded`] note is added.
pub fn sanitize_cell(source: &str) -> Sanitized {
    let mut notes = Vec::new();
    let mut lines: Vec<&str> = source.lines().collect();

    if let Some(first) = lines.iter().position(|l| !l.trim().is_empty()) {
        if let Some(magic) = lines[first].trim_start().strip_prefix("%%") {
            let name = magic.split_whitespace().next().unwrap_or("").to_string();
            if PASSTHROUGH_CELL_MAGICS.contains(&name.as_str()) {
                lines.drain(..=first);
                push_note(&mut notes, SanitizeNote::CellMagicRemoved { magic: name });
            } else {
                return Sanitized {
                    text: String::new(),
                    notes: vec![SanitizeNote::CellMagicRemoved { magic: name }],
                };
            }
        }
    }

    let mut out: Vec<String> = Vec::with_capacity(lines.len());
    let mut continued = false;
    for line in lines {
        if continued {
            continued = line.ends_with('\\');
            out.push(line.to_string());
            continue;
        }
        let trimmed = line.trim_start();
        let indent = &line[..line.len() - trimmed.len()];
        let replacement = if trimmed.starts_with('%') {
            Some(SanitizeNote::LineMagicRemoved)
        } else if trimmed.starts_with('!') {
            Some(SanitizeNote::ShellEscapeRemoved)
        } else if is_help(trimmed.trim_end()) {
            Some(SanitizeNote::HelpRemoved)
        } else {
            None
        };
        match replacement {
            Some(note) => {
                if !indent.is_empty() {
                    out.push(format!("{indent}pass"));
                }
                push_note(&mut notes, note);
            }
            None => match magic_assignment(trimmed) {
                Some(target) => {
                    out.push(format!("{indent}{target} = None"));
                    push_note(&mut notes, SanitizeNote::MagicAssignmentReplaced);
                }
                None => {
                    continued = line.ends_with('\\');
                    out.push(line.to_string());
                }
            },
        }
    }

    let mut text = out.join("\n");
    if source.ends_with('\n') && !text.is_empty() {
        text.push('\n');
    }
    if text.trim().is_empty() {
        return Sanitized {
            text: String::new(),
            notes,
        };
    }
    if let Err(line) = parse_python(&text) {
        notes.push(SanitizeNote::CellExcluded { line });
        text.clear();
    }
    Sanitized { text, notes }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn line_magic_removed() {
        let s = sanitize_cell("%matplotlib inline\nimport pandas");
        assert_eq!(s.text, "import pandas");
        assert_eq!(s.notes, [SanitizeNote::LineMagicRemoved]);
    }

    #[test]
    fn plain_cell_unchanged() {
        let src = "import pandas as pd\ndf = pd.read_csv('x.csv')\n";
        let s = sanitize_cell(src);
        assert_eq!(s.text, src);
        assert!(s.notes.is_empty());
    }

    #[test]
    fn shell_escape() {
        let s = sanitize_cell("!pip install pandas");
        assert_eq!(s.text, "");
        assert_eq!(s.notes, [SanitizeNote::ShellEscapeRemoved]);
    }

    #[test]
    fn indented_magic_becomes_pass() {
        let s = sanitize_cell("for i in range(3):\n    %time f(i)\n");
        assert_eq!(s.text, "for i in range(3):\n    pass\n");
    }

    #[test]
    fn magic_assignment() {
        let s = sanitize_cell("files = !ls\nt = %timeit -o f()\n");
        assert_eq!(s.text, "files = None\nt = None\n");
    }

    #[test]
    fn help_suffix() {
        let s = sanitize_cell("pd.read_csv?\nx = 1");
        assert_eq!(s.text, "x = 1");
        assert_eq!(s.notes, [SanitizeNote::HelpRemoved]);
    }

    #[test]
    fn cell_magics() {
        let kept = sanitize_cell("%%time\nimport numpy as np\n");
        assert_eq!(kept.text, "import numpy as np\n");
        let dropped = sanitize_cell("%%bash\nls -la\n");
        assert_eq!(dropped.text, "");
        assert_eq!(
            dropped.notes,
            [SanitizeNote::CellMagicRemoved {
                magic: "bash".into()
            }]
        );
    }

    #[test]
    fn unparsable_cell_excluded() {
        let s = sanitize_cell("def broken(:\n");
        assert!(s.excluded());
        assert_eq!(s.text, "");
    }

    #[test]
    fn modulo_expression_kept() {
        let s = sanitize_cell("x = 10 % 3\n");
        assert_eq!(s.text, "x = 10 % 3\n");
    }

    proptest! {
        #[test]
        fn output_parses_when_non_empty(
            lines in prop::collection::vec(
                prop::sample::select(vec![
                    "%matplotlib inline", "!ls", "import pandas as pd", "x = 1",
                    "def f(a):", "    return a", "    %time g()", "pd.read_csv?",
                    "y = !pwd", "%%time", "if x:", "    !echo hi", "print(x)", "z = (1,",
                ]),
                0..10,
            )
        ) {
            let out = sanitize_cell(&lines.join("\n"));
            if !out.text.is_empty() {
                prop_assert!(parse_python(&out.text).is_ok(), "{:?}", out.text);
            }
        }
    }
}
