//! Standard-library module tables per interpreter line.

use serde::{Deserialize, Serialize};

const PY27: &[&str] = &[
    "BaseHTTPServer", "Bastion", "CGIHTTPServer", "ConfigParser", "Cookie", "DocXMLRPCServer",
    "HTMLParser", "MimeWriter", "Queue", "ScrolledText", "SimpleHTTPServer", "SimpleXMLRPCServer",
    "SocketServer", "StringIO", "Tix", "Tkinter", "UserDict", "UserList", "UserString",
    "__builtin__", "__future__", "__main__", "_winreg", "abc", "aifc", "anydbm", "argparse",
    "array", "ast", "asynchat", "asyncore", "atexit", "audioop", "base64", "bdb", "binascii",
    "binhex", "bisect", "bsddb", "bz2", "cPickle", "cProfile", "cStringIO", "calendar", "cgi",
    "cgitb", "chunk", "cmath", "cmd", "code", "codecs", "codeop", "collections", "colorsys",
    "commands", "compileall", "compiler", "contextlib", "cookielib", "copy", "copy_reg", "crypt",
    "csv", "ctypes", "curses", "datetime", "dbhash", "dbm", "decimal", "difflib", "dircache",
    "dis", "distutils", "doctest", "dumbdbm", "dummy_thread", "dummy_threading", "email",
    "encodings", "ensurepip", "errno", "exceptions", "fcntl", "filecmp", "fileinput", "fnmatch",
    "formatter", "fpformat", "fractions", "ftplib", "functools", "future_builtins", "gc", "gdbm",
    "getopt", "getpass", "gettext", "glob", "grp", "gzip", "hashlib", "heapq", "hmac", "hotshot",
    "htmlentitydefs", "htmllib", "httplib", "imaplib", "imghdr", "imp", "importlib", "imputil",
    "inspect", "io", "itertools", "json", "keyword", "lib2to3", "linecache", "locale", "logging",
    "macpath", "mailbox", "mailcap", "markupbase", "marshal", "math", "md5", "mhlib", "mimetools",
    "mimetypes", "mimify", "mmap", "modulefinder", "msilib", "msvcrt", "multifile",
    "multiprocessing", "mutex", "netrc", "new", "nis", "nntplib", "ntpath", "numbers", "opcode",
    "operator", "optparse", "os", "os2emxpath", "ossaudiodev", "parser", "pdb", "pickle",
    "pickletools", "pipes", "pkgutil", "platform", "plistlib", "popen2", "poplib", "posix",
    "posixfile", "posixpath", "pprint", "profile", "pstats", "pty", "pwd", "py_compile", "pyclbr",
    "pydoc", "quopri", "random", "re", "readline", "repr", "resource", "rexec", "rfc822",
    "rlcompleter", "robotparser", "runpy", "sched", "select", "sets", "sgmllib", "sha", "shelve",
    "shlex", "shutil", "signal", "site", "smtpd", "smtplib", "sndhdr", "socket", "spwd", "sqlite3",
    "sre", "sre_compile", "sre_constants", "sre_parse", "ssl", "stat", "statvfs", "string",
    "stringprep", "struct", "subprocess", "sunau", "sunaudio", "symbol", "symtable", "sys",
    "sysconfig", "syslog", "tabnanny", "tarfile", "telnetlib", "tempfile", "termios", "textwrap",
    "thread", "threading", "time", "timeit", "token", "tokenize", "trace", "traceback", "ttk",
    "tty", "turtle", "types", "unicodedata", "unittest", "urllib", "urllib2", "urlparse", "user",
    "uu", "uuid", "warnings", "wave", "weakref", "webbrowser", "whichdb", "winsound", "wsgiref",
    "xdrlib", "xml", "xmllib", "xmlrpclib", "zipfile", "zipimport", "zlib",
];

/// 3.x modules as (name, first minor, last minor). `u8::MAX` means still present.
const NOW: u8 = u8::MAX;
const PY3: &[(&str, u8, u8)] = &[
    ("__future__", 0, NOW), ("__main__", 0, NOW), ("_thread", 0, NOW), ("abc", 0, NOW),
    ("aifc", 0, 12), ("argparse", 0, NOW), ("array", 0, NOW), ("ast", 0, NOW),
    ("asynchat", 0, 11), ("asyncio", 4, NOW), ("asyncore", 0, 11), ("atexit", 0, NOW),
    ("audioop", 0, 12), ("base64", 0, NOW), ("bdb", 0, NOW), ("binascii", 0, NOW),
    ("binhex", 0, 10), ("bisect", 0, NOW), ("builtins", 0, NOW), ("bz2", 0, NOW),
    ("cProfile", 0, NOW), ("calendar", 0, NOW), ("cgi", 0, 12), ("cgitb", 0, 12),
    ("chunk", 0, 12), ("cmath", 0, NOW), ("cmd", 0, NOW), ("code", 0, NOW), ("codecs", 0, NOW),
    ("codeop", 0, NOW), ("collections", 0, NOW), ("colorsys", 0, NOW), ("compileall", 0, NOW),
    ("concurrent", 2, NOW), ("configparser", 0, NOW), ("contextlib", 0, NOW),
    ("contextvars", 7, NOW), ("copy", 0, NOW), ("copyreg", 0, NOW), ("crypt", 0, 12),
    ("csv", 0, NOW), ("ctypes", 0, NOW), ("curses", 0, NOW), ("dataclasses", 7, NOW),
    ("datetime", 0, NOW), ("dbm", 0, NOW), ("decimal", 0, NOW), ("difflib", 0, NOW),
    ("dis", 0, NOW), ("distutils", 0, 11), ("doctest", 0, NOW), ("dummy_threading", 0, 8),
    ("email", 0, NOW), ("encodings", 0, NOW), ("ensurepip", 4, NOW), ("enum", 4, NOW),
    ("errno", 0, NOW), ("faulthandler", 3, NOW), ("fcntl", 0, NOW), ("filecmp", 0, NOW),
    ("fileinput", 0, NOW), ("fnmatch", 0, NOW), ("formatter", 0, 9), ("fractions", 0, NOW),
    ("ftplib", 0, NOW), ("functools", 0, NOW), ("gc", 0, NOW), ("getopt", 0, NOW),
    ("getpass", 0, NOW), ("gettext", 0, NOW), ("glob", 0, NOW), ("graphlib", 9, NOW),
    ("grp", 0, NOW), ("gzip", 0, NOW), ("hashlib", 0, NOW), ("heapq", 0, NOW), ("hmac", 0, NOW),
    ("html", 0, NOW), ("http", 0, NOW), ("idlelib", 0, NOW), ("imaplib", 0, NOW),
    ("imghdr", 0, 12), ("imp", 0, 11), ("importlib", 0, NOW), ("inspect", 0, NOW),
    ("io", 0, NOW), ("ipaddress", 3, NOW), ("itertools", 0, NOW), ("json", 0, NOW),
    ("keyword", 0, NOW), ("lib2to3", 0, 12), ("linecache", 0, NOW), ("locale", 0, NOW),
    ("logging", 0, NOW), ("lzma", 3, NOW), ("macpath", 0, 7), ("mailbox", 0, NOW),
    ("mailcap", 0, 12), ("marshal", 0, NOW), ("math", 0, NOW), ("mimetypes", 0, NOW),
    ("mmap", 0, NOW), ("modulefinder", 0, NOW), ("msilib", 0, 12), ("msvcrt", 0, NOW),
    ("multiprocessing", 0, NOW), ("netrc", 0, NOW), ("nis", 0, 12), ("nntplib", 0, 12),
    ("nt", 0, NOW), ("ntpath", 0, NOW), ("nturl2path", 0, NOW), ("numbers", 0, NOW),
    ("opcode", 0, NOW), ("operator", 0, NOW), ("optparse", 0, NOW), ("os", 0, NOW),
    ("ossaudiodev", 0, 12), ("parser", 0, 9), ("pathlib", 4, NOW), ("pdb", 0, NOW),
    ("pickle", 0, NOW), ("pickletools", 0, NOW), ("pipes", 0, 12), ("pkgutil", 0, NOW),
    ("platform", 0, NOW), ("plistlib", 0, NOW), ("poplib", 0, NOW), ("posix", 0, NOW),
    ("posixpath", 0, NOW), ("pprint", 0, NOW), ("profile", 0, NOW), ("pstats", 0, NOW),
    ("pty", 0, NOW), ("pwd", 0, NOW), ("py_compile", 0, NOW), ("pyclbr", 0, NOW),
    ("pydoc", 0, NOW), ("pydoc_data", 0, NOW), ("pyexpat", 0, NOW), ("queue", 0, NOW),
    ("quopri", 0, NOW), ("random", 0, NOW), ("re", 0, NOW), ("readline", 0, NOW),
    ("reprlib", 0, NOW), ("resource", 0, NOW), ("rlcompleter", 0, NOW), ("runpy", 0, NOW),
    ("sched", 0, NOW), ("secrets", 6, NOW), ("select", 0, NOW), ("selectors", 4, NOW),
    ("shelve", 0, NOW), ("shlex", 0, NOW), ("shutil", 0, NOW), ("signal", 0, NOW),
    ("site", 0, NOW), ("smtpd", 0, 11), ("smtplib", 0, NOW), ("sndhdr", 0, 12),
    ("socket", 0, NOW), ("socketserver", 0, NOW), ("spwd", 0, 12), ("sqlite3", 0, NOW),
    ("sre_compile", 0, NOW), ("sre_constants", 0, NOW), ("sre_parse", 0, NOW), ("ssl", 0, NOW),
    ("stat", 0, NOW), ("statistics", 4, NOW), ("string", 0, NOW), ("stringprep", 0, NOW),
    ("struct", 0, NOW), ("subprocess", 0, NOW), ("sunau", 0, 12), ("symbol", 0, 9),
    ("symtable", 0, NOW), ("sys", 0, NOW), ("sysconfig", 2, NOW), ("syslog", 0, NOW),
    ("tabnanny", 0, NOW), ("tarfile", 0, NOW), ("telnetlib", 0, 12), ("tempfile", 0, NOW),
    ("termios", 0, NOW), ("textwrap", 0, NOW), ("this", 0, NOW), ("threading", 0, NOW),
    ("time", 0, NOW), ("timeit", 0, NOW), ("tkinter", 0, NOW), ("token", 0, NOW),
    ("tokenize", 0, NOW), ("tomllib", 11, NOW), ("trace", 0, NOW), ("traceback", 0, NOW),
    ("tracemalloc", 4, NOW), ("tty", 0, NOW), ("turtle", 0, NOW), ("turtledemo", 0, NOW),
    ("types", 0, NOW), ("typing", 5, NOW), ("unicodedata", 0, NOW), ("unittest", 0, NOW),
    ("urllib", 0, NOW), ("uu", 0, 12), ("uuid", 0, NOW), ("venv", 3, NOW),
    ("warnings", 0, NOW), ("wave", 0, NOW), ("weakref", 0, NOW), ("webbrowser", 0, NOW),
    ("winreg", 0, NOW), ("winsound", 0, NOW), ("wsgiref", 0, NOW), ("xdrlib", 0, 12),
    ("xml", 0, NOW), ("xmlrpc", 0, NOW), ("zipapp", 5, NOW), ("zipfile", 0, NOW),
    ("zipimport", 0, NOW), ("zlib", 0, NOW), ("zoneinfo", 9, NOW),
];

/// Names that need no import: language builtins (both lines) and the
/// helpers a notebook kernel injects.
const BUILTINS: &[&str] = &[
    "ArithmeticError", "AssertionError", "AttributeError", "BaseException", "BlockingIOError",
    "BrokenPipeError", "BufferError", "BytesWarning", "ChildProcessError",
    "ConnectionAbortedError", "ConnectionError", "ConnectionRefusedError", "ConnectionResetError",
    "DeprecationWarning", "EOFError", "Ellipsis", "EncodingWarning", "EnvironmentError",
    "Exception", "False", "FileExistsError", "FileNotFoundError", "FloatingPointError",
    "FutureWarning", "GeneratorExit", "IOError", "ImportError", "ImportWarning",
    "IndentationError", "IndexError", "InterruptedError", "IsADirectoryError", "KeyError",
    "KeyboardInterrupt", "LookupError", "MemoryError", "ModuleNotFoundError", "NameError", "None",
    "NotADirectoryError", "NotImplemented", "NotImplementedError", "OSError", "OverflowError",
    "PendingDeprecationWarning", "PermissionError", "ProcessLookupError", "RecursionError",
    "ReferenceError", "ResourceWarning", "RuntimeError", "RuntimeWarning", "StandardError",
    "StopAsyncIteration", "StopIteration", "SyntaxError", "SyntaxWarning", "SystemError",
    "SystemExit", "TabError", "TimeoutError", "True", "TypeError", "UnboundLocalError",
    "UnicodeDecodeError", "UnicodeEncodeError", "UnicodeError", "UnicodeTranslateError",
    "UnicodeWarning", "UserWarning", "ValueError", "Warning", "ZeroDivisionError",
    "__build_class__", "__debug__", "__doc__", "__file__", "__import__", "__name__", "abs",
    "aiter", "all", "anext", "any", "apply", "ascii", "basestring", "bin", "bool", "breakpoint",
    "buffer", "bytearray", "bytes", "callable", "chr", "classmethod", "cmp", "coerce", "compile",
    "complex", "copyright", "credits", "delattr", "dict", "dir", "divmod", "enumerate", "eval",
    "exec", "execfile", "exit", "file", "filter", "float", "format", "frozenset", "getattr",
    "globals", "hasattr", "hash", "help", "hex", "id", "input", "int", "intern", "isinstance",
    "issubclass", "iter", "len", "license", "list", "locals", "long", "map", "max",
    "memoryview", "min", "next", "object", "oct", "open", "ord", "pow", "print", "property",
    "quit", "range", "raw_input", "reduce", "reload", "repr", "reversed", "round", "set",
    "setattr", "slice", "sorted", "staticmethod", "str", "sum", "super", "tuple", "type",
    "unichr", "unicode", "vars", "xrange", "zip",
    // kernel-provided
    "In", "Out", "display", "get_ipython", "_", "__", "___",
];

pub fn is_builtin(name: &str) -> bool {
    BUILTINS.contains(&name)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum InterpreterLine {
    Py27,
    /// 3.x with the given minor version.
    Py3(u8),
}

impl InterpreterLine {
    /// Parses `2.7`, `3`, `3.8`, ...
    pub fn parse(text: &str) -> Option<Self> {
        let text = text.trim();
        if text == "2.7" || text == "2" {
            return Some(Self::Py27);
        }
        let rest = text.strip_prefix('3')?;
        if rest.is_empty() {
            return Some(Self::Py3(NOW));
        }
        rest.strip_prefix('.')?.parse().ok().map(Self::Py3)
    }

    pub fn label(&self) -> String {
        match self {
            Self::Py27 => "2.7".to_string(),
            Self::Py3(NOW) => "3".to_string(),
            Self::Py3(minor) => format!("3.{minor}"),
        }
    }

    fn contains(&self, module: &str) -> bool {
        match self {
            Self::Py27 => PY27.binary_search(&module).is_ok(),
            Self::Py3(minor) => PY3
                .iter()
                .any(|(name, since, until)| *name == module && since <= minor && minor <= until),
        }
    }
}

/// Stdlib membership test over one or more interpreter lines.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StdlibTable {
    /// `None` means every known line.
    line: Option<InterpreterLine>,
}

impl Default for StdlibTable {
    fn default() -> Self {
        Self::all_lines()
    }
}

impl StdlibTable {
    /// Union of every supported interpreter line.
    pub fn all_lines() -> Self {
        Self { line: None }
    }

    pub fn for_line(line: InterpreterLine) -> Self {
        Self { line: Some(line) }
    }

    /// The interpreter line this table is restricted to, if any.
    pub fn line(&self) -> Option<InterpreterLine> {
        self.line
    }

    /// True when the root segment of `module` is a standard-library module.
    pub fn contains(&self, module: &str) -> bool {
        let root = crate::names::root_segment(module);
        match self.line {
            Some(line) => line.contains(root),
            None => PY27.binary_search(&root).is_ok() || PY3.iter().any(|(name, _, _)| *name == root),
        }
    }
}
