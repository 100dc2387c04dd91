#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const PIPELINE: [&str; 6] = [
    "preprocess",
    "window",
    "tune",
    "train",
    "evaluate",
    "compare",
];

pub fn toy_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data/toy")
}

pub fn toy_config() -> PathBuf {
    toy_dir().join("experiment.toml")
}

pub fn run(config: &Path, out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rnnbof"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

/// Runs each command in turn and panics with its stderr on the first failure.
pub fn run_all(config: &Path, out: &Path, commands: &[&str]) -> Vec<Output> {
    commands
        .iter()
        .map(|c| {
            let o = run(config, out, &[c]);
            assert!(
                o.status.success(),
                "`{c}` failed: {}",
                String::from_utf8_lossy(&o.stderr)
            );
            o
        })
        .collect()
}

/// Every file under `root` except run metadata, keyed by relative path.
pub fn payloads(root: &Path) -> BTreeMap<String, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<String, Vec<u8>>) {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for p in entries {
            if p.is_dir() {
                walk(root, &p, out);
            } else if p.file_name().unwrap() != "metadata.json" {
                let rel = p.strip_prefix(root).unwrap().display().to_string();
                out.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Writes a config that points at the toy cohort files by absolute path.
pub fn toy_variant(dir: &Path, name: &str, body: &str) -> PathBuf {
    let toy = toy_dir();
    let text = format!(
        "{body}\n[data]\nevents = {:?}\nstatics = {:?}\nschema = {:?}\n",
        toy.join("events.csv"),
        toy.join("statics.csv"),
        toy.join("schema.toml"),
    );
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}
