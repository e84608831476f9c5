//! Fixture releases, a file-backed package index and notebook builders shared
//! by the integration tests.
#![allow(dead_code)]

use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

pub const TOYLIB_VERSIONS: [&str; 4] = ["1.0", "2.0", "3.0", "4.0"];

/// Source files of toylib at one version. `g` exists in 2.0 and 3.0 only.
pub fn toylib_files(version: &str) -> Vec<(String, String)> {
    let has_g = matches!(version, "2.0" | "3.0");
    let mut core = String::from("def f(a):\n    return a\n\n\nclass Box:\n    def __init__(self, v):\n        self.v = v\n\n    def get(self):\n        return self.v\n");
    let mut init = String::from("from toylib.core import f, Box\n");
    if has_g {
        core.push_str("\n\ndef g(x, y=1):\n    return x + y\n");
        init = String::from("from toylib.core import f, g, Box\n");
    }
    if version == "3.0" {
        core.push_str("\n\ndef h():\n    return 0\n");
    }
    init.push_str(&format!("__version__ = \"{version}\"\n"));
    vec![
        ("toylib/__init__.py".into(), init),
        ("toylib/core.py".into(), core),
    ]
}

/// The simplified pandas layout with `read_excel` re-exported twice.
pub fn pandas_files() -> Vec<(String, String)> {
    [
        ("pandas/__init__.py", "from pandas.io.api import read_excel\n"),
        ("pandas/io/__init__.py", ""),
        ("pandas/io/api.py", "from pandas.io.excel._base import read_excel\n"),
        ("pandas/io/excel/__init__.py", ""),
        (
            "pandas/io/excel/_base.py",
            "def read_excel(io, sheet_name=0, header=0):\n    pass\n",
        ),
    ]
    .into_iter()
    .map(|(p, s)| (p.to_string(), s.to_string()))
    .collect()
}

fn dist_name(name: &str) -> String {
    name.replace('-', "_")
}

/// A pure-Python wheel pip can install.
pub fn wheel(name: &str, version: &str, files: &[(String, String)]) -> Vec<u8> {
    let mut buf = std::io::Cursor::new(Vec::new());
    {
        let mut zip = zip::ZipWriter::new(&mut buf);
        let opts = zip::write::SimpleFileOptions::default();
        let info = format!("{}-{version}.dist-info", dist_name(name));
        let mut record = String::new();
        let mut all: Vec<(String, String)> = files.to_vec();
        all.push((
            format!("{info}/METADATA"),
            format!("Metadata-Version: 2.1\nName: {name}\nVersion: {version}\n"),
        ));
        all.push((
            format!("{info}/WHEEL"),
            "Wheel-Version: 1.0\nGenerator: fixture\nRoot-Is-Purelib: true\nTag: py3-none-any\n".into(),
        ));
        for (path, text) in &all {
            zip.start_file(path.as_str(), opts).unwrap();
            zip.write_all(text.as_bytes()).unwrap();
            record.push_str(&format!("{path},,\n"));
        }
        record.push_str(&format!("{info}/RECORD,,\n"));
        zip.start_file(format!("{info}/RECORD"), opts).unwrap();
        zip.write_all(record.as_bytes()).unwrap();
        zip.finish().unwrap();
    }
    buf.into_inner()
}

pub fn wheel_filename(name: &str, version: &str) -> String {
    format!("{}-{version}-py3-none-any.whl", dist_name(name))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// A package index laid out on disk and addressed with `file://` URLs.
pub struct FixtureIndex {
    pub root: PathBuf,
    pub wheels: PathBuf,
}

impl FixtureIndex {
    pub fn new(root: &Path) -> Self {
        let wheels = root.join("files");
        std::fs::create_dir_all(&wheels).unwrap();
        Self {
            root: root.to_path_buf(),
            wheels,
        }
    }

    pub fn base_url(&self) -> String {
        format!("file://{}", self.root.display())
    }

    fn doc_path(&self, name: &str) -> PathBuf {
        self.root.join("pypi").join(name).join("json")
    }

    /// Publishes one wheel and adds it to the library's metadata document.
    pub fn publish(&self, name: &str, version: &str, files: &[(String, String)]) -> PathBuf {
        let bytes = wheel(name, version, files);
        let filename = wheel_filename(name, version);
        let path = self.wheels.join(&filename);
        std::fs::write(&path, &bytes).unwrap();
        let doc_path = self.doc_path(name);
        let mut doc: serde_json::Value = std::fs::read(&doc_path)
            .ok()
            .and_then(|b| serde_json::from_slice(&b).ok())
            .unwrap_or_else(|| serde_json::json!({"info": {"name": name}, "releases": {}}));
        doc["releases"][version] = serde_json::json!([{
            "filename": filename,
            "url": format!("file://{}", path.display()),
            "packagetype": "bdist_wheel",
            "digests": {"sha256": sha256_hex(&bytes)},
            "yanked": false,
        }]);
        std::fs::create_dir_all(doc_path.parent().unwrap()).unwrap();
        std::fs::write(&doc_path, doc.to_string()).unwrap();
        path
    }

    pub fn publish_toylib(&self) {
        for v in TOYLIB_VERSIONS {
            self.publish("toylib", v, &toylib_files(v));
        }
    }
}

pub fn write_tree(root: &Path, files: &[(String, String)]) {
    for (path, text) in files {
        let full = root.join(path);
        std::fs::create_dir_all(full.parent().unwrap()).unwrap();
        std::fs::write(full, text).unwrap();
    }
}

/// nbformat 4 JSON. Sources starting with `#md ` become markdown cells.
pub fn notebook_json(cells: &[&str]) -> String {
    let mut count = 0;
    let cells: Vec<serde_json::Value> = cells
        .iter()
        .map(|src| match src.strip_prefix("#md ") {
            Some(text) => serde_json::json!({"cell_type": "markdown", "metadata": {}, "source": text}),
            None => {
                count += 1;
                serde_json::json!({
                    "cell_type": "code",
                    "execution_count": count,
                    "metadata": {},
                    "outputs": [],
                    "source": src,
                })
            }
        })
        .collect();
    serde_json::json!({
        "nbformat": 4,
        "nbformat_minor": 5,
        "metadata": {"language_info": {"name": "python"}},
        "cells": cells,
    })
    .to_string()
}

/// The notebook exercising `toylib.g`.
pub const TOYLIB_NOTEBOOK: [&str; 3] = [
    "#md Uses an API that only exists for a while.",
    "from toylib import g",
    "print(g(1, y=2))",
];

pub fn have_python_pip() -> bool {
    std::process::Command::new("python3")
        .args(["-m", "pip", "--version"])
        .output()
        .is_ok_and(|o| o.status.success())
}

/// Harness commands that install wheels from a local directory with
/// `pip --target` and run cells with that directory on `PYTHONPATH`.
pub fn pip_target_config(work_root: &Path, wheels: &Path) -> envsniff::harness::HarnessConfig {
    envsniff::harness::HarnessConfig {
        env_create_cmd: "mkdir -p {env_dir}".into(),
        env_install_cmd: format!(
            "python3 -m pip install --quiet --disable-pip-version-check --no-index --find-links '{}' --target {{env_dir}} {{specs}}",
            wheels.display()
        ),
        nb_exec_cmd: "env PYTHONPATH={env_dir} python3 {runner} {cells} {output}".into(),
        env_remove_cmd: "true".into(),
        work_root: Some(work_root.to_path_buf()),
        ..Default::default()
    }
}
