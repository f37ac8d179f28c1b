#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_coronal");

/// Runs the binary in `dir` with `args`.
pub fn coronal(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).output().expect("binary runs")
}

/// Runs and asserts success, returning stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = coronal(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}{}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

/// Small, fast corpus: 4-degree pixels and a short level-set run.
pub const SMALL: &str = "\
[synth]
n_dates = 4
rows = 45
cols = 90
axis_min = 2
axis_max = 4
holes_min = 3
holes_max = 5
[levelset]
n_iters = 150
[tune]
images = 2
n_iters = 60
max_evals = 8
[forest]
oob_trees = 5, 10
oob_depths = 3, 6
";

pub fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

/// Every file under `root` keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

/// Paths whose bytes differ or that exist on one side only.
pub fn tree_diff(a: &Path, b: &Path) -> Vec<PathBuf> {
    let (ta, tb) = (tree(a), tree(b));
    let mut diff: Vec<PathBuf> = ta.iter().filter(|(k, v)| tb.get(*k) != Some(v)).map(|(k, _)| k.clone()).collect();
    diff.extend(tb.keys().filter(|k| !ta.contains_key(*k)).cloned());
    diff
}

/// Header-indexed CSV rows as strings.
pub fn csv_rows(path: &Path) -> Vec<BTreeMap<String, String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers: Vec<String> = r.headers().unwrap().iter().map(String::from).collect();
    r.records().map(|rec| headers.iter().cloned().zip(rec.unwrap().iter().map(String::from)).collect()).collect()
}
