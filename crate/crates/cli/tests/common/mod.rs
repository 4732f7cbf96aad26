#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};

pub const SQLMORPH: &str = env!("CARGO_BIN_EXE_sqlmorph");
pub const MOCK: &str = env!("CARGO_BIN_EXE_mock-model");

pub fn mini_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/data/mini")
}

pub fn tables() -> PathBuf {
    mini_dir().join("tables.json")
}

pub fn train() -> PathBuf {
    mini_dir().join("train.json")
}

pub fn sqlmorph<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    Command::new(SQLMORPH).args(args).output().expect("spawn sqlmorph")
}

/// Runs and asserts exit status 0.
pub fn ok<I, S>(args: I) -> Output
where
    I: IntoIterator<Item = S>,
    S: AsRef<std::ffi::OsStr>,
{
    let out = sqlmorph(args);
    assert!(
        out.status.success(),
        "exit {:?}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn sha(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))))
}

pub fn sha_bytes(b: &[u8]) -> String {
    hex::encode(Sha256::digest(b))
}

/// Generates the mini suite into `dir/suite.jsonl`.
pub fn generate_mini(dir: &Path, extra: &[&str]) -> PathBuf {
    let suite = dir.join("suite.jsonl");
    let mut args = vec![
        "generate".to_string(),
        "--schemas".into(),
        tables().display().to_string(),
        "--examples".into(),
        train().display().to_string(),
        "--strict".into(),
        "--out".into(),
        suite.display().to_string(),
    ];
    args.extend(extra.iter().map(|s| s.to_string()));
    ok(&args);
    suite
}

fn quote(p: &Path) -> String {
    format!("'{}'", p.display())
}

/// `cmd:` adapter spec for the mock model with the given extra flags.
pub fn mock_adapter(flags: &str) -> String {
    format!("cmd:{} --examples {} {flags}", quote(Path::new(MOCK)), quote(&train()))
}

pub fn suite_lines(suite: &Path) -> Vec<Value> {
    fs::read_to_string(suite)
        .unwrap()
        .lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

pub fn seed_questions() -> HashMap<String, String> {
    let v: Value = serde_json::from_slice(&fs::read(train()).unwrap()).unwrap();
    v.as_array()
        .unwrap()
        .iter()
        .map(|e| (e["example_id"].as_str().unwrap().to_string(), e["question"].as_str().unwrap().to_string()))
        .collect()
}

pub fn has_marker(q: &str, markers: &[&str]) -> bool {
    let q = q.to_lowercase();
    markers.iter().any(|m| q.contains(&m.to_lowercase()))
}

/// Planted outcome per MR code: `(inconsistent, counted)` when the mock
/// flips every question containing a marker. A case is inconsistent exactly
/// when one of its seed question and its own utterance is marked.
pub fn planted_flips(suite: &Path, markers: &[&str]) -> BTreeMap<String, (usize, usize)> {
    let seeds = seed_questions();
    let mut out: BTreeMap<String, (usize, usize)> = BTreeMap::new();
    for c in suite_lines(suite) {
        let seed_q = &seeds[c["seed_id"].as_str().unwrap()];
        let flipped = has_marker(seed_q, markers) != has_marker(c["utterance"].as_str().unwrap(), markers);
        let e = out.entry(c["mr"].as_str().unwrap().to_string()).or_default();
        e.0 += flipped as usize;
        e.1 += 1;
    }
    out
}

/// `(group, inconsistent, counted, failures, rate)` rows of one report
/// section.
pub fn report_rows(report: &Value, section: &str) -> BTreeMap<String, (usize, usize, usize, Option<f64>)> {
    report["rates"][section]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| {
            (
                r["group"].as_str().unwrap().to_string(),
                (
                    r["inconsistent"].as_u64().unwrap() as usize,
                    r["counted"].as_u64().unwrap() as usize,
                    r["failures"].as_u64().unwrap() as usize,
                    r["rate"].as_f64(),
                ),
            )
        })
        .collect()
}
