//! Deterministic stand-in for a text-to-SQL model.
//!
//! Answers every request with the gold SQL of the seed it belongs to, read
//! from `--examples`. The seed is recovered from the request id
//! (`seed:<id>` or `<id>:<MR>:<n>`). Markers inject faults: a question that
//! contains a `--flip-marker` gets a different query (a `LIMIT 1` is added
//! or removed), one with a `--drop-marker` gets no answer, and one with a
//! `--garbage-marker` gets unparseable SQL.
//!
//! Speaks the JSONL protocol on stdin/stdout, or HTTP with `--http <addr>`
//! (the bound address is printed on the first line of stdout).

use std::collections::{BTreeSet, HashMap};
use std::io::{self, BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::Arc;
use std::thread;
use std::time::Duration;

use anyhow::Context;
use clap::Parser;
use serde_json::{json, Value};
use sqlmorph_core::dataset::load_examples_unbound;

#[derive(Parser)]
#[command(name = "mock-model")]
struct Args {
    /// Spider dataset JSON holding the seeds.
    #[arg(long)]
    examples: PathBuf,
    #[arg(long)]
    flip_marker: Vec<String>,
    /// File with one request id per line whose answer is flipped.
    #[arg(long)]
    flip_ids: Option<PathBuf>,
    #[arg(long)]
    drop_marker: Vec<String>,
    #[arg(long)]
    garbage_marker: Vec<String>,
    /// Exit after reading this many requests.
    #[arg(long)]
    exit_after: Option<usize>,
    #[arg(long, default_value_t = 0)]
    delay_ms: u64,
    #[arg(long)]
    http: Option<String>,
}

struct Model {
    gold: HashMap<String, String>,
    flip_markers: Vec<String>,
    flip_ids: BTreeSet<String>,
    drop_markers: Vec<String>,
    garbage_markers: Vec<String>,
    delay: Duration,
}

fn seed_of(id: &str) -> &str {
    if let Some(s) = id.strip_prefix("seed:") {
        return s;
    }
    let parts: Vec<&str> = id.rsplitn(3, ':').collect();
    if parts.len() == 3 {
        parts[2]
    } else {
        id
    }
}

fn flip(sql: &str) -> String {
    let t = sql.trim_end().trim_end_matches(';');
    let words: Vec<&str> = t.split_whitespace().collect();
    let n = words.len();
    if n >= 2 && words[n - 2].eq_ignore_ascii_case("limit") && words[n - 1].parse::<u64>().is_ok() {
        words[..n - 2].join(" ")
    } else {
        format!("{t} LIMIT 1")
    }
}

fn has_marker(question: &str, markers: &[String]) -> bool {
    let q = question.to_lowercase();
    markers.iter().any(|m| q.contains(&m.to_lowercase()))
}

impl Model {
    /// `None` means the request goes unanswered.
    fn answer(&self, req: &Value) -> Option<Value> {
        let id = req.get("id")?.as_str()?;
        let question = req.get("question").and_then(Value::as_str).unwrap_or("");
        if !self.delay.is_zero() {
            thread::sleep(self.delay);
        }
        if has_marker(question, &self.drop_markers) {
            return None;
        }
        let gold = self.gold.get(seed_of(id)).cloned().unwrap_or_else(|| "SELECT".to_string());
        let sql = if has_marker(question, &self.garbage_markers) {
            "SELECT FROM WHERE".to_string()
        } else if has_marker(question, &self.flip_markers) || self.flip_ids.contains(id) {
            flip(&gold)
        } else {
            gold
        };
        Some(json!({"id": id, "sql": sql}))
    }
}

fn serve_stdio(model: &Model, exit_after: Option<usize>) -> anyhow::Result<()> {
    let stdin = io::stdin();
    let mut stdout = io::stdout().lock();
    for (n, line) in stdin.lock().lines().enumerate() {
        if exit_after.is_some_and(|k| n >= k) {
            break;
        }
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let req: Value = serde_json::from_str(&line).context("bad request line")?;
        if let Some(resp) = model.answer(&req) {
            writeln!(stdout, "{resp}")?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn handle_http(model: &Model, stream: TcpStream) -> io::Result<()> {
    let mut reader = BufReader::new(stream.try_clone()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line)?;
    let mut length = 0usize;
    loop {
        let mut h = String::new();
        if reader.read_line(&mut h)? == 0 || h == "\r\n" || h == "\n" {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.trim().eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().unwrap_or(0);
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body)?;
    let mut out = stream;
    let (status, payload) = if !request_line.starts_with("POST /predict") {
        ("404 Not Found", "{}".to_string())
    } else {
        match serde_json::from_slice::<Value>(&body).ok().and_then(|r| model.answer(&r)) {
            Some(v) => ("200 OK", v.to_string()),
            // Dropped requests hang until the client gives up.
            None => {
                thread::sleep(Duration::from_secs(3600));
                return Ok(());
            }
        }
    };
    write!(
        out,
        "HTTP/1.1 {status}\r\ncontent-type: application/json\r\ncontent-length: {}\r\nconnection: close\r\n\r\n{payload}",
        payload.len()
    )?;
    out.flush()
}

fn serve_http(model: Arc<Model>, addr: &str) -> anyhow::Result<()> {
    let listener = TcpListener::bind(addr).with_context(|| format!("binding {addr}"))?;
    println!("http://{}", listener.local_addr()?);
    io::stdout().flush()?;
    for stream in listener.incoming() {
        let stream = stream?;
        let m = model.clone();
        thread::spawn(move || {
            let _ = handle_http(&m, stream);
        });
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let args = Args::parse();
    let gold = load_examples_unbound(&args.examples)?
        .into_iter()
        .map(|e| (e.example_id, e.gold_sql))
        .collect();
    let flip_ids = match &args.flip_ids {
        Some(p) => std::fs::read_to_string(p)?
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(String::from)
            .collect(),
        None => BTreeSet::new(),
    };
    let model = Model {
        gold,
        flip_markers: args.flip_marker,
        flip_ids,
        drop_markers: args.drop_marker,
        garbage_markers: args.garbage_marker,
        delay: Duration::from_millis(args.delay_ms),
    };
    match &args.http {
        Some(addr) => serve_http(Arc::new(model), addr),
        None => serve_stdio(&model, args.exit_after),
    }
}
