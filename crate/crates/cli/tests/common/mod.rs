#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn fixture(rel: &str) -> PathBuf {
    root().join("fixtures").join(rel)
}

pub fn vfgrad<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(env!("CARGO_BIN_EXE_vfgrad")).args(args).output().expect("binary runs")
}

pub fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Key-value pairs of the last METRIC line.
pub fn metrics(o: &Output) -> BTreeMap<String, String> {
    let text = stdout(o);
    let line = text.lines().rev().find(|l| l.starts_with("METRIC ")).unwrap_or_else(|| panic!("no METRIC line in {text:?}"));
    line["METRIC ".len()..]
        .split_whitespace()
        .map(|kv| {
            let (k, v) = kv.split_once('=').expect("key=value");
            (k.to_string(), v.to_string())
        })
        .collect()
}

pub fn metric_f64(o: &Output, key: &str) -> f64 {
    metrics(o)[key].parse().unwrap()
}

pub fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}
