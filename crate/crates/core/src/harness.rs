//! Running a suite against a model and measuring inconsistency.
//!
//! The model is a black box behind a [`ModelAdapter`]. Each seed is asked
//! once (request id `seed:<seed_id>`) and each case once (request id =
//! case id), so a run costs `#seeds + #cases` predictions. A case is
//! inconsistent when its prediction does not exact-set-match the seed's
//! prediction; a missing or unparseable prediction on either side makes it a
//! model failure, which is left out of both numerator and denominator.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{mpsc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{Example, Schema, SpiderSchema};
use crate::generate::TestSuite;
use crate::mr::MrTag;
use crate::sql::{classify_hardness, exact_set_match_with, parse_sql, Hardness, MatchOptions, HARDNESS_RULES_VERSION};

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("case {case_id}: seed `{seed_id}` not found")]
    UnknownSeed { case_id: String, seed_id: String },
    #[error("seed {seed_id}: schema `{db_id}` not found")]
    UnknownSchema { seed_id: String, db_id: String },
    #[error("invalid adapter: {0}")]
    Adapter(String),
    #[error("{path}: {message}")]
    Records { path: String, message: String },
}

/// Wire request for both transports.
#[derive(Debug, Clone, Serialize)]
pub struct PredictRequest {
    pub id: String,
    pub question: String,
    pub db_id: String,
    pub schema: SpiderSchema,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FailureKind {
    Timeout,
    Transport,
    Protocol,
    Http,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AdapterFailure {
    pub kind: FailureKind,
    pub message: String,
}

impl AdapterFailure {
    fn new(kind: FailureKind, message: impl Into<String>) -> Self {
        AdapterFailure {
            kind,
            message: message.into(),
        }
    }
}

pub type Prediction = Result<String, AdapterFailure>;

/// A model reachable over some transport. Results line up with requests.
pub trait ModelAdapter: Sync {
    fn predict_batch(&self, requests: &[PredictRequest]) -> Vec<Prediction>;

    fn describe(&self) -> String;
}

#[derive(Debug, Clone)]
pub struct AdapterSettings {
    pub timeout: Duration,
    pub max_inflight: usize,
}

impl Default for AdapterSettings {
    fn default() -> Self {
        AdapterSettings {
            timeout: Duration::from_secs(30),
            max_inflight: 8,
        }
    }
}

impl AdapterSettings {
    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.timeout.is_zero() {
            return Err(HarnessError::Adapter("timeout must be positive".into()));
        }
        if self.max_inflight == 0 {
            return Err(HarnessError::Adapter("max_inflight must be at least 1".into()));
        }
        Ok(())
    }
}

/// `cmd:<shell command>` or `http:<url>` (a bare `http://` URL also works).
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AdapterSpec {
    Subprocess(String),
    Http(String),
}

impl AdapterSpec {
    pub fn parse(s: &str) -> Result<Self, HarnessError> {
        if let Some(cmd) = s.strip_prefix("cmd:") {
            if cmd.trim().is_empty() {
                return Err(HarnessError::Adapter("empty command".into()));
            }
            return Ok(AdapterSpec::Subprocess(cmd.to_string()));
        }
        if s.starts_with("http://") || s.starts_with("https://") {
            return Ok(AdapterSpec::Http(s.to_string()));
        }
        if let Some(url) = s.strip_prefix("http:") {
            return Ok(AdapterSpec::Http(url.to_string()));
        }
        Err(HarnessError::Adapter(format!("`{s}` is neither cmd:<command> nor http:<url>")))
    }

    pub fn build(&self, settings: AdapterSettings) -> Result<Box<dyn ModelAdapter>, HarnessError> {
        settings.validate()?;
        Ok(match self {
            AdapterSpec::Subprocess(cmd) => Box::new(SubprocessAdapter {
                command: cmd.clone(),
                settings,
            }),
            AdapterSpec::Http(url) => Box::new(HttpAdapter {
                base_url: url.trim_end_matches('/').to_string(),
                settings,
            }),
        })
    }
}

/// Child process speaking JSONL on stdin/stdout. Up to `max_inflight`
/// requests are written ahead of their answers; each has its own deadline.
pub struct SubprocessAdapter {
    pub command: String,
    pub settings: AdapterSettings,
}

enum ChildLine {
    Line(String),
    Eof,
}

impl ModelAdapter for SubprocessAdapter {
    fn predict_batch(&self, requests: &[PredictRequest]) -> Vec<Prediction> {
        let n = requests.len();
        let mut results: Vec<Option<Prediction>> = vec![None; n];
        if n == 0 {
            return Vec::new();
        }
        let mut child = match Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
        {
            Ok(c) => c,
            Err(e) => {
                let f = AdapterFailure::new(FailureKind::Transport, format!("cannot start `{}`: {e}", self.command));
                return vec![Err(f); n];
            }
        };
        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, rx) = mpsc::channel();
        let reader = thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(ChildLine::Line(l)).is_err() {
                            return;
                        }
                    }
                    Err(_) => break,
                }
            }
            let _ = tx.send(ChildLine::Eof);
        });
        let mut stdin = child.stdin.take();
        let mut pending: HashMap<&str, (usize, Instant)> = HashMap::new();
        let mut next = 0;
        let mut eof = false;
        loop {
            while !eof && pending.len() < self.settings.max_inflight && next < n {
                let req = &requests[next];
                let mut line = serde_json::to_vec(req).expect("request serializes");
                line.push(b'\n');
                let sent = stdin
                    .as_mut()
                    .map(|s| s.write_all(&line).and_then(|_| s.flush()).is_ok())
                    .unwrap_or(false);
                if sent {
                    pending.insert(req.id.as_str(), (next, Instant::now() + self.settings.timeout));
                } else {
                    stdin = None;
                    results[next] = Some(Err(AdapterFailure::new(FailureKind::Transport, "model process closed its input")));
                }
                next += 1;
            }
            if pending.is_empty() {
                if next >= n {
                    break;
                }
                if eof {
                    for r in results.iter_mut().skip(next) {
                        *r = Some(Err(AdapterFailure::new(FailureKind::Transport, "model process exited")));
                    }
                    break;
                }
                continue;
            }
            let earliest = pending.values().map(|(_, d)| *d).min().expect("pending is nonempty");
            match rx.recv_timeout(earliest.saturating_duration_since(Instant::now())) {
                Ok(ChildLine::Line(raw)) => {
                    if raw.trim().is_empty() {
                        continue;
                    }
                    let value: Option<serde_json::Value> = serde_json::from_str(&raw).ok();
                    let id = value.as_ref().and_then(|v| v.get("id")).and_then(|v| v.as_str());
                    let Some((i, _)) = id.and_then(|id| pending.remove(id)) else {
                        log::warn!("model response with unknown or missing id: {raw}");
                        continue;
                    };
                    results[i] = Some(match value.as_ref().and_then(|v| v.get("sql")).and_then(|v| v.as_str()) {
                        Some(sql) => Ok(sql.to_string()),
                        None => Err(AdapterFailure::new(FailureKind::Protocol, format!("response without `sql`: {raw}"))),
                    });
                }
                Ok(ChildLine::Eof) | Err(mpsc::RecvTimeoutError::Disconnected) => {
                    eof = true;
                    for (_, (i, _)) in pending.drain() {
                        results[i] = Some(Err(AdapterFailure::new(FailureKind::Transport, "model process exited")));
                    }
                }
                Err(mpsc::RecvTimeoutError::Timeout) => {
                    let now = Instant::now();
                    let expired: Vec<&str> = pending.iter().filter(|(_, (_, d))| *d <= now).map(|(id, _)| *id).collect();
                    for id in expired {
                        let (i, _) = pending.remove(id).expect("expired id is pending");
                        results[i] = Some(Err(AdapterFailure::new(
                            FailureKind::Timeout,
                            format!("no answer within {:?}", self.settings.timeout),
                        )));
                    }
                }
            }
        }
        drop(stdin);
        drop(rx);
        let _ = child.kill();
        let _ = child.wait();
        let _ = reader.join();
        results.into_iter().map(|r| r.expect("every request resolved")).collect()
    }

    fn describe(&self) -> String {
        format!("cmd:{}", self.command)
    }
}

/// `POST <base_url>/predict` with the request as JSON body.
pub struct HttpAdapter {
    pub base_url: String,
    pub settings: AdapterSettings,
}

impl HttpAdapter {
    fn predict_one(&self, agent: &ureq::Agent, req: &PredictRequest) -> Prediction {
        let body = serde_json::to_vec(req).expect("request serializes");
        let url = format!("{}/predict", self.base_url);
        let mut resp = agent
            .post(&url)
            .header("content-type", "application/json")
            .send(&body[..])
            .map_err(|e| match e {
                ureq::Error::Timeout(_) => AdapterFailure::new(FailureKind::Timeout, e.to_string()),
                _ => AdapterFailure::new(FailureKind::Transport, e.to_string()),
            })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| AdapterFailure::new(FailureKind::Transport, e.to_string()))?;
        if status != 200 {
            return Err(AdapterFailure::new(FailureKind::Http, format!("status {status}: {text}")));
        }
        let v: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| AdapterFailure::new(FailureKind::Protocol, format!("{e}: {text}")))?;
        if v.get("id").and_then(|x| x.as_str()) != Some(req.id.as_str()) {
            return Err(AdapterFailure::new(FailureKind::Protocol, format!("id mismatch: {text}")));
        }
        v.get("sql")
            .and_then(|x| x.as_str())
            .map(str::to_string)
            .ok_or_else(|| AdapterFailure::new(FailureKind::Protocol, format!("response without `sql`: {text}")))
    }
}

impl ModelAdapter for HttpAdapter {
    fn predict_batch(&self, requests: &[PredictRequest]) -> Vec<Prediction> {
        let config = ureq::Agent::config_builder()
            .timeout_global(Some(self.settings.timeout))
            .http_status_as_error(false)
            .build();
        let agent = ureq::Agent::new_with_config(config);
        let results: Mutex<Vec<Option<Prediction>>> = Mutex::new(vec![None; requests.len()]);
        let cursor = AtomicUsize::new(0);
        let workers = self.settings.max_inflight.min(requests.len()).max(1);
        thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::SeqCst);
                    if i >= requests.len() {
                        break;
                    }
                    let r = self.predict_one(&agent, &requests[i]);
                    results.lock().expect("results lock")[i] = Some(r);
                });
            }
        });
        results
            .into_inner()
            .expect("results lock")
            .into_iter()
            .map(|r| r.expect("every request resolved"))
            .collect()
    }

    fn describe(&self) -> String {
        self.base_url.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Consistent,
    Inconsistent,
    ModelFailure,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyRecord {
    pub case_id: String,
    pub seed_id: String,
    pub mr: MrTag,
    pub pred_original: Option<String>,
    pub pred_transformed: Option<String>,
    pub verdict: Verdict,
    pub hardness: Hardness,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Verdict for a pair of raw predictions, each parsed and bound against the
/// schema it was produced for.
pub fn judge(
    original: &Prediction,
    original_schema: &Schema,
    transformed: &Prediction,
    transformed_schema: &Schema,
    opts: MatchOptions,
) -> (Verdict, Option<String>) {
    let (a, b) = match (original, transformed) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) => return (Verdict::ModelFailure, Some(format!("original: {}", e.message))),
        (_, Err(e)) => return (Verdict::ModelFailure, Some(format!("transformed: {}", e.message))),
    };
    let qa = match parse_sql(a) {
        Ok(q) => q,
        Err(e) => return (Verdict::ModelFailure, Some(format!("original: {e}"))),
    };
    let qb = match parse_sql(b) {
        Ok(q) => q,
        Err(e) => return (Verdict::ModelFailure, Some(format!("transformed: {e}"))),
    };
    if exact_set_match_with(&qa, Some(original_schema), &qb, Some(transformed_schema), opts) {
        (Verdict::Consistent, None)
    } else {
        (Verdict::Inconsistent, None)
    }
}

pub fn seed_request_id(seed_id: &str) -> String {
    format!("seed:{seed_id}")
}

/// Asks the model about every seed that has cases and every case, then
/// judges each case against its seed. Records follow suite order.
pub fn run(
    adapter: &dyn ModelAdapter,
    suite: &TestSuite,
    seeds: &[Example],
    schemas: &[Schema],
    opts: MatchOptions,
) -> Result<Vec<ConsistencyRecord>, HarnessError> {
    let seed_by_id: HashMap<&str, &Example> = seeds.iter().map(|e| (e.example_id.as_str(), e)).collect();
    let schema_by_id: HashMap<&str, &Schema> = schemas.iter().map(|s| (s.db_id.as_str(), s)).collect();

    let mut seed_order: Vec<&Example> = Vec::new();
    let mut seen = HashSet::new();
    for c in &suite.cases {
        let seed = seed_by_id.get(c.seed_id.as_str()).ok_or_else(|| HarnessError::UnknownSeed {
            case_id: c.case_id.clone(),
            seed_id: c.seed_id.clone(),
        })?;
        if seen.insert(seed.example_id.as_str()) {
            if !schema_by_id.contains_key(seed.db_id.as_str()) {
                return Err(HarnessError::UnknownSchema {
                    seed_id: seed.example_id.clone(),
                    db_id: seed.db_id.clone(),
                });
            }
            seed_order.push(seed);
        }
    }

    let mut requests: Vec<PredictRequest> = seed_order
        .iter()
        .map(|s| PredictRequest {
            id: seed_request_id(&s.example_id),
            question: s.utterance.clone(),
            db_id: s.db_id.clone(),
            schema: schema_by_id[s.db_id.as_str()].to_spider(),
        })
        .collect();
    requests.extend(suite.cases.iter().map(|c| PredictRequest {
        id: c.case_id.clone(),
        question: c.utterance.clone(),
        db_id: c.db_id.clone(),
        schema: c.schema.to_spider(),
    }));
    let preds = adapter.predict_batch(&requests);
    let (seed_preds, case_preds) = preds.split_at(seed_order.len());
    let seed_pred: HashMap<&str, &Prediction> = seed_order
        .iter()
        .zip(seed_preds)
        .map(|(s, p)| (s.example_id.as_str(), p))
        .collect();

    let hardness: HashMap<&str, Hardness> = seed_order
        .iter()
        .map(|s| {
            let h = parse_sql(&s.gold_sql).map(|q| classify_hardness(&q)).unwrap_or(Hardness::Extra);
            (s.example_id.as_str(), h)
        })
        .collect();

    Ok(suite
        .cases
        .par_iter()
        .zip(case_preds.par_iter())
        .map(|(c, pt)| {
            let seed = seed_by_id[c.seed_id.as_str()];
            let po = seed_pred[seed.example_id.as_str()];
            let (verdict, failure) = judge(po, schema_by_id[seed.db_id.as_str()], pt, &c.schema, opts);
            ConsistencyRecord {
                case_id: c.case_id.clone(),
                seed_id: c.seed_id.clone(),
                mr: c.mr,
                pred_original: po.as_ref().ok().cloned(),
                pred_transformed: pt.as_ref().ok().cloned(),
                verdict,
                hardness: hardness[seed.example_id.as_str()],
                failure,
            }
        })
        .collect())
}

pub fn records_to_jsonl(records: &[ConsistencyRecord]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("record serializes");
        out.push(b'\n');
    }
    out
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<ConsistencyRecord>, HarnessError> {
    let path = path.as_ref();
    let err = |message: String| HarnessError::Records {
        path: path.display().to_string(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| err(format!("line {}: {e}", i + 1))))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GroupBy {
    All,
    Mr,
    Hardness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub group: String,
    pub inconsistent: usize,
    /// Consistent plus inconsistent cases.
    pub counted: usize,
    pub failures: usize,
    /// Percentage; absent when nothing was counted.
    pub rate: Option<f64>,
}

impl RateRow {
    fn from_counts(group: String, inconsistent: usize, counted: usize, failures: usize) -> Self {
        let rate = (counted > 0).then(|| 100.0 * inconsistent as f64 / counted as f64);
        RateRow {
            group,
            inconsistent,
            counted,
            failures,
            rate,
        }
    }

    /// One-decimal percentage, or `n/a`.
    pub fn display_rate(&self) -> String {
        self.rate.map_or_else(|| "n/a".to_string(), |r| format!("{r:.1}"))
    }
}

fn group_key(r: &ConsistencyRecord, by: GroupBy) -> String {
    match by {
        GroupBy::All => "all".to_string(),
        GroupBy::Mr => r.mr.code().to_string(),
        GroupBy::Hardness => r.hardness.as_str().to_string(),
    }
}

fn group_order(by: GroupBy) -> Vec<String> {
    match by {
        GroupBy::All => vec!["all".to_string()],
        GroupBy::Mr => MrTag::ALL.iter().map(|m| m.code().to_string()).collect(),
        GroupBy::Hardness => Hardness::ALL.iter().map(|h| h.as_str().to_string()).collect(),
    }
}

/// One row per group that has records, in canonical group order.
pub fn rate_rows(records: &[ConsistencyRecord], by: GroupBy) -> Vec<RateRow> {
    let mut tally: HashMap<String, (usize, usize, usize)> = HashMap::new();
    for r in records {
        let e = tally.entry(group_key(r, by)).or_default();
        match r.verdict {
            Verdict::Consistent => e.1 += 1,
            Verdict::Inconsistent => {
                e.0 += 1;
                e.1 += 1;
            }
            Verdict::ModelFailure => e.2 += 1,
        }
    }
    group_order(by)
        .into_iter()
        .filter_map(|g| tally.remove(&g).map(|(i, c, f)| RateRow::from_counts(g, i, c, f)))
        .collect()
}

/// Inconsistency percentage per group; groups with nothing counted are
/// absent rather than zero.
pub fn inconsistency_rate(records: &[ConsistencyRecord], by: GroupBy) -> BTreeMap<String, f64> {
    rate_rows(records, by)
        .into_iter()
        .filter_map(|r| r.rate.map(|v| (r.group, v)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateTable {
    pub overall: Vec<RateRow>,
    pub by_mr: Vec<RateRow>,
    pub by_hardness: Vec<RateRow>,
}

impl RateTable {
    pub fn from_records(records: &[ConsistencyRecord]) -> Self {
        RateTable {
            overall: rate_rows(records, GroupBy::All),
            by_mr: rate_rows(records, GroupBy::Mr),
            by_hardness: rate_rows(records, GroupBy::Hardness),
        }
    }

    pub fn to_csv(&self) -> Vec<u8> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["section", "group", "inconsistent", "counted", "failures", "rate"])
            .expect("in-memory csv");
        for (section, rows) in [("overall", &self.overall), ("mr", &self.by_mr), ("hardness", &self.by_hardness)] {
            for r in rows {
                w.write_record([
                    section.to_string(),
                    r.group.clone(),
                    r.inconsistent.to_string(),
                    r.counted.to_string(),
                    r.failures.to_string(),
                    r.display_rate(),
                ])
                .expect("in-memory csv");
            }
        }
        w.into_inner().expect("in-memory csv")
    }

    /// Inverse of [`RateTable::to_csv`]. Rates are recomputed from the
    /// counts, so nothing is lost to the one-decimal display.
    pub fn from_csv(bytes: &[u8]) -> Result<Self, String> {
        let mut t = RateTable {
            overall: Vec::new(),
            by_mr: Vec::new(),
            by_hardness: Vec::new(),
        };
        let mut r = csv::Reader::from_reader(bytes);
        for rec in r.records() {
            let rec = rec.map_err(|e| e.to_string())?;
            let num = |i: usize| rec.get(i).unwrap_or("").parse::<usize>().map_err(|e| e.to_string());
            let row = RateRow::from_counts(rec.get(1).unwrap_or("").to_string(), num(2)?, num(3)?, num(4)?);
            match rec.get(0) {
                Some("overall") => t.overall.push(row),
                Some("mr") => t.by_mr.push(row),
                Some("hardness") => t.by_hardness.push(row),
                other => return Err(format!("unknown section {other:?}")),
            }
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub no_data: bool,
    pub records: usize,
    pub failures: usize,
    pub suite_fingerprint: String,
    pub config_fingerprint: String,
    pub hardness_rules: String,
    pub rates: RateTable,
}

impl Report {
    pub fn new(records: &[ConsistencyRecord], suite_fingerprint: &str, config_fingerprint: &str) -> Self {
        Report {
            no_data: records.is_empty(),
            records: records.len(),
            failures: records.iter().filter(|r| r.verdict == Verdict::ModelFailure).count(),
            suite_fingerprint: suite_fingerprint.to_string(),
            config_fingerprint: config_fingerprint.to_string(),
            hardness_rules: HARDNESS_RULES_VERSION.to_string(),
            rates: RateTable::from_records(records),
        }
    }

    pub fn failure_fraction(&self) -> f64 {
        if self.records == 0 {
            0.0
        } else {
            self.failures as f64 / self.records as f64
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Markdown,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            "md" | "markdown" => Ok(ReportFormat::Markdown),
            _ => Err(format!("unknown report format `{s}` (json, csv or md)")),
        }
    }
}

fn markdown_table(out: &mut String, title: &str, rows: &[RateRow]) {
    out.push_str(&format!("\n## {title}\n\n"));
    if rows.is_empty() {
        out.push_str("_no data_\n");
        return;
    }
    out.push_str("| group | inconsistent | counted | failures | rate (%) |\n");
    out.push_str("|---|---:|---:|---:|---:|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            r.group,
            r.inconsistent,
            r.counted,
            r.failures,
            r.display_rate()
        ));
    }
}

pub fn emit_report(report: &Report, format: ReportFormat) -> Vec<u8> {
    match format {
        ReportFormat::Json => {
            let mut v = serde_json::to_vec_pretty(report).expect("report serializes");
            v.push(b'\n');
            v
        }
        ReportFormat::Csv => report.rates.to_csv(),
        ReportFormat::Markdown => {
            let mut s = String::from("# Inconsistency report\n\n");
            s.push_str(&format!("- suite: `{}`\n", report.suite_fingerprint));
            s.push_str(&format!("- config: `{}`\n", report.config_fingerprint));
            s.push_str(&format!("- hardness rules: `{}`\n", report.hardness_rules));
            s.push_str(&format!("- records: {} (model failures: {})\n", report.records, report.failures));
            if report.no_data {
                s.push_str("\n_no data_\n");
                return s.into_bytes();
            }
            markdown_table(&mut s, "Overall", &report.rates.overall);
            markdown_table(&mut s, "By relation", &report.rates.by_mr);
            markdown_table(&mut s, "By hardness", &report.rates.by_hardness);
            s.into_bytes()
        }
    }
}
