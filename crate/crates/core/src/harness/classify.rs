use serde::{Deserialize, Serialize};

/// Failure markers searched for in installer output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstallMarker {
    /// `InstallationError`
    InstallationError,
    /// `ERROR:`
    GenericError,
    /// `cannot find a version for`
    NoVersionFound,
}

impl InstallMarker {
    pub const ALL: [InstallMarker; 3] = [
        InstallMarker::InstallationError,
        InstallMarker::GenericError,
        InstallMarker::NoVersionFound,
    ];

    pub fn needle(self) -> &'static str {
        match self {
            InstallMarker::InstallationError => "InstallationError",
            InstallMarker::GenericError => "ERROR:",
            InstallMarker::NoVersionFound => "cannot find a version for",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InstallStatus {
    Success,
    Failure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstallOutcome {
    pub status: InstallStatus,
    pub matched_markers: Vec<InstallMarker>,
    pub exit_code: i32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw_log_ref: Option<std::path::PathBuf>,
}

/// Case-sensitive marker scan; success needs exit code 0 and no marker.
pub fn classify_install_log(log: &str, exit_code: i32) -> InstallOutcome {
    let matched_markers: Vec<InstallMarker> = InstallMarker::ALL
        .into_iter()
        .filter(|m| log.contains(m.needle()))
        .collect();
    let status = if exit_code == 0 && matched_markers.is_empty() {
        InstallStatus::Success
    } else {
        InstallStatus::Failure
    };
    InstallOutcome {
        status,
        matched_markers,
        exit_code,
        raw_log_ref: None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(into = "String", from = "String")]
pub enum ErrorLabel {
    ModuleNotFoundError,
    ImportError,
    FileNotFoundError,
    NameError,
    HttpError,
    Other(String),
}

impl ErrorLabel {
    pub fn as_str(&self) -> &str {
        match self {
            ErrorLabel::ModuleNotFoundError => "ModuleNotFoundError",
            ErrorLabel::ImportError => "ImportError",
            ErrorLabel::FileNotFoundError => "FileNotFoundError",
            ErrorLabel::NameError => "NameError",
            ErrorLabel::HttpError => "HTTPError",
            ErrorLabel::Other(s) => s,
        }
    }
}

impl From<String> for ErrorLabel {
    fn from(s: String) -> Self {
        match s.as_str() {
            "ModuleNotFoundError" => ErrorLabel::ModuleNotFoundError,
            "ImportError" => ErrorLabel::ImportError,
            "FileNotFoundError" => ErrorLabel::FileNotFoundError,
            "NameError" => ErrorLabel::NameError,
            "HTTPError" => ErrorLabel::HttpError,
            _ => ErrorLabel::Other(s),
        }
    }
}

impl From<ErrorLabel> for String {
    fn from(l: ErrorLabel) -> Self {
        l.as_str().to_string()
    }
}

impl std::fmt::Display for ErrorLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorClass {
    pub label: ErrorLabel,
    pub environment_related: bool,
}

impl ErrorClass {
    pub fn unknown() -> Self {
        ErrorClass {
            label: ErrorLabel::Other("unknown".into()),
            environment_related: false,
        }
    }
}

/// Removes terminal color sequences (`ESC [ ... letter`).
pub fn strip_ansi(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c == '\u{1b}' && chars.peek() == Some(&'[') {
            chars.next();
            for n in chars.by_ref() {
                if n.is_ascii_alphabetic() {
                    break;
                }
            }
        } else {
            out.push(c);
        }
    }
    out
}

const EXCEPTION_SUFFIXES: &[&str] = &["Error", "Exception", "Exit", "Interrupt", "Iteration", "Warning"];

/// Wrappers added by notebook executors around the real failure.
const WRAPPERS: &[&str] = &["CellExecutionError", "CellTimeoutError"];

/// Exception type named at the start of a traceback line, if any.
fn exception_name(line: &str) -> Option<&str> {
    let line = line.trim();
    let head = match line.find(':') {
        Some(i) => &line[..i],
        None => line,
    };
    if head.is_empty() || !crate::names::is_dotted_name(head) {
        return None;
    }
    let last = head.rsplit('.').next()?;
    let capitalized = last.chars().next().is_some_and(|c| c.is_ascii_uppercase());
    (capitalized && EXCEPTION_SUFFIXES.iter().any(|s| last.ends_with(s))).then_some(last)
}

/// Classifies a failed cell's traceback by its last exception type.
pub fn classify_runtime_error(traceback: &str) -> ErrorClass {
    let clean = strip_ansi(traceback);
    let names: Vec<&str> = clean.lines().filter_map(exception_name).collect();
    let name = names
        .iter()
        .rev()
        .find(|n| !WRAPPERS.contains(n))
        .or_else(|| names.last());
    let Some(name) = name else {
        return ErrorClass::unknown();
    };
    let label = ErrorLabel::from(name.to_string());
    let environment_related = matches!(label, ErrorLabel::ModuleNotFoundError | ErrorLabel::ImportError);
    ErrorClass {
        label,
        environment_related,
    }
}
