#![allow(dead_code)]

pub mod oracle;

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use rand::seq::IndexedRandom;
use rand::Rng;
use serde::de::DeserializeOwned;

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn fixture(rel: &str) -> PathBuf {
    fixtures().join(rel)
}

/// Runs the CLI in-process and returns its exit code.
pub fn cli<S: AsRef<std::ffi::OsStr>>(args: &[S]) -> i32 {
    let mut argv: Vec<OsString> = vec!["hintsmith".into()];
    argv.extend(args.iter().map(|a| a.as_ref().to_os_string()));
    hintsmith::cli::run(argv)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Vec<T> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

const WORDS: &[&str] = &[
    "enter", "your", "the", "city", "cities", "name", "names", "email", "address", "run", "runs",
    "running", "search", "searching", "date", "a", "of", "code", "phone", "number",
];

/// A space-joined sentence of 0..=max_len words from a small vocabulary with
/// stem variants, so every matching stage gets exercised.
pub fn random_sentence<R: Rng>(rng: &mut R, max_len: usize) -> String {
    let n = rng.random_range(0..=max_len);
    (0..n).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}
