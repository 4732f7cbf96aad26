mod common;

use std::fs;
use std::io::{BufRead, BufReader};
use std::process::{Command, Stdio};

use common::*;
use serde_json::Value;

fn code(args: &[&str]) -> i32 {
    sqlmorph(args).status.code().expect("exit code")
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--no-such-flag"]), 1);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["generate", "--schemas", "x.json"]), 1, "missing --out is a usage error");
    assert_eq!(code(&["sample", "--strategy", "zz", "--suite", "s", "--out", "o"]), 1);
    assert_eq!(
        code(&["generate", "--schemas", "/nonexistent/tables.json", "--examples", "/nonexistent/train.json", "--out", "/tmp/x"]),
        2
    );
    assert_eq!(code(&["sql", "parse", "SELECT FROM WHERE"]), 2);
    assert_eq!(code(&["sql", "match", "SELECT a FROM t", "SELECT a FROM t"]), 0);

    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "PI,TS"]);
    let t = tables().display().to_string();
    let e = train().display().to_string();
    let s = suite.display().to_string();
    assert_eq!(code(&["run", "--suite", &s, "--schemas", &t, "--examples", &e, "--adapter", "cmd:exit 0"]), 3);
    assert_eq!(code(&["run", "--suite", &s, "--schemas", &t, "--examples", &e, "--adapter", "ftp:x"]), 1);
    assert_eq!(
        code(&["run", "--suite", &s, "--schemas", &t, "--examples", &e, "--adapter", "http:http://127.0.0.1:9", "--timeout", "2"]),
        3
    );

    // A tampered suite fails validation.
    let text = fs::read_to_string(&suite).unwrap();
    let bad = dir.path().join("bad.jsonl");
    fs::write(&bad, text.replacen("SELECT", "SELECT DISTINCT", 1)).unwrap();
    fs::copy(format!("{s}.meta.json"), format!("{}.meta.json", bad.display())).unwrap();
    assert_eq!(code(&["validate", "--suite", &bad.display().to_string(), "--schemas", &t, "--examples", &e]), 2);
    assert_eq!(code(&["validate", "--suite", &s, "--schemas", &t, "--examples", &e]), 0);
}

#[test]
fn version_lists_rules_and_hashes() {
    let out = ok(["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("sqlmorph "));
    assert!(text.contains("hardness-rules spider-monotone-1"));
    assert!(text.lines().count() >= 6, "{text}");
}

fn run_report(dir: &std::path::Path, suite: &std::path::Path, adapter: &str, extra: &[&str]) -> (Value, std::process::Output) {
    let report = dir.join("report.json");
    let mut args: Vec<String> = [
        "run",
        "--suite",
        &suite.display().to_string(),
        "--schemas",
        &tables().display().to_string(),
        "--examples",
        &train().display().to_string(),
        "--adapter",
        adapter,
        "--report",
        &report.display().to_string(),
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(extra.iter().map(|s| s.to_string()));
    let out = sqlmorph(&args);
    let v = serde_json::from_slice(&fs::read(&report).unwrap_or_default()).unwrap_or(Value::Null);
    (v, out)
}

#[test]
fn subprocess_mock_reports_planted_rates() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &[]);
    let markers = ["tell me", "maximum"];
    let (report, out) = run_report(
        dir.path(),
        &suite,
        &mock_adapter("--flip-marker 'tell me' --flip-marker maximum"),
        &[],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let planted = planted_flips(&suite, &markers);
    let rows = report_rows(&report, "by_mr");
    assert_eq!(rows.len(), planted.len());
    let (mut ti, mut tc) = (0, 0);
    for (mr, (i, c)) in &planted {
        assert_eq!(rows[mr], (*i, *c, 0, Some(100.0 * *i as f64 / *c as f64)), "{mr}");
        ti += i;
        tc += c;
    }
    assert!(ti > 0 && ti < tc, "markers should flip some but not all cases");
    assert_eq!(report_rows(&report, "overall")["all"], (ti, tc, 0, Some(100.0 * ti as f64 / tc as f64)));
    assert!(dir.path().join("report.json.records.jsonl").exists());
}

#[test]
fn http_adapter_matches_subprocess() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "PI,PR,PS,SS,TS,CI"]);
    let mut server = Command::new(MOCK)
        .args(["--examples", &train().display().to_string(), "--flip-marker", "tell me", "--http", "127.0.0.1:0"])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut url = String::new();
    BufReader::new(server.stdout.take().unwrap()).read_line(&mut url).unwrap();
    let records = |name: &str, adapter: &str| {
        let sub = dir.path().join(name);
        fs::create_dir_all(&sub).unwrap();
        let (_, out) = run_report(&sub, &suite, adapter, &[]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(sub.join("report.json.records.jsonl")).unwrap()
    };
    let via_http = records("http", &format!("http:{}", url.trim()));
    let via_cmd = records("cmd", &mock_adapter("--flip-marker 'tell me'"));
    server.kill().unwrap();
    let _ = server.wait();
    assert_eq!(via_http, via_cmd);
    assert!(String::from_utf8(via_http).unwrap().contains("\"inconsistent\""));
}

#[test]
fn dropped_requests_become_failures() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "PI,PR,OK"]);
    let marker = ["tell me"];
    let (report, out) = run_report(
        dir.path(),
        &suite,
        &mock_adapter("--drop-marker 'tell me'"),
        &["--timeout", "0.3", "--max-inflight", "16"],
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seeds = seed_questions();
    let want_failures = suite_lines(&suite)
        .iter()
        .filter(|c| has_marker(&seeds[c["seed_id"].as_str().unwrap()], &marker) || has_marker(c["utterance"].as_str().unwrap(), &marker))
        .count();
    let all = report_rows(&report, "overall")["all"];
    assert!(want_failures > 0);
    assert_eq!(all.2, want_failures);
    assert_eq!(all.0, 0, "nothing is flipped");
    assert_eq!(all.1 + all.2, suite_lines(&suite).len());

    // The same faults over the failure threshold exit with status 3.
    let (_, out) = run_report(
        dir.path(),
        &suite,
        &mock_adapter("--drop-marker 'tell me'"),
        &["--timeout", "0.3", "--max-inflight", "16", "--max-failure-rate", "0.01"],
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn crashed_model_fails_remaining_requests() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "TS"]);
    let (report, out) = run_report(dir.path(), &suite, &mock_adapter("--exit-after 5"), &["--max-failure-rate", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let all = report_rows(&report, "overall")["all"];
    assert!(all.2 > 0);
    assert_eq!(all.1 + all.2, suite_lines(&suite).len());
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "PI,PR"]);
    fs::copy(tables(), dir.path().join("tables.json")).unwrap();
    fs::copy(train(), dir.path().join("train.json")).unwrap();
    let cfg = serde_json::json!({
        "schemas": "tables.json",
        "examples": "train.json",
        "suite": "suite.jsonl",
        "adapter": mock_adapter("--flip-marker 'tell me'"),
        "report": "out/report.md",
        "format": "md",
    });
    let cfg_path = dir.path().join("config.json");
    fs::write(&cfg_path, cfg.to_string()).unwrap();

    // Relative paths resolve against the config's directory, not the cwd.
    let out = Command::new(SQLMORPH)
        .args(["run", "--config", &cfg_path.display().to_string()])
        .current_dir(std::env::temp_dir())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let md = fs::read_to_string(dir.path().join("out/report.md")).unwrap();
    assert!(md.contains("## By relation"), "{md}");

    // Flags win over the file.
    let json_out = dir.path().join("flag.json");
    ok([
        "run",
        "--config",
        &cfg_path.display().to_string(),
        "--format",
        "json",
        "--report",
        &json_out.display().to_string(),
    ]);
    let v: Value = serde_json::from_slice(&fs::read(&json_out).unwrap()).unwrap();
    let planted = planted_flips(&suite, &["tell me"]);
    let total: usize = planted.values().map(|p| p.0).sum();
    assert_eq!(report_rows(&v, "overall")["all"].0, total);

    // Unknown config keys are rejected.
    fs::write(&cfg_path, r#"{"adaptor": "cmd:true"}"#).unwrap();
    assert_eq!(code(&["run", "--config", &cfg_path.display().to_string()]), 2);
}

#[test]
fn report_rerenders_saved_records() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &["--mrs", "PI,PR,PS"]);
    let (report, out) = run_report(dir.path(), &suite, &mock_adapter("--flip-marker 'tell me'"), &[]);
    assert!(out.status.success());
    let records = dir.path().join("report.json.records.jsonl").display().to_string();
    let again = ok(["report", "--records", &records, "--suite", &suite.display().to_string()]).stdout;
    assert_eq!(serde_json::from_slice::<Value>(&again).unwrap(), report);
    let csv = String::from_utf8(ok(["report", "--records", &records, "--format", "csv"]).stdout).unwrap();
    assert!(csv.starts_with("section,group,inconsistent,counted,failures,rate\n"), "{csv}");
    assert!(csv.contains("overall,all,"));
}

#[test]
fn sample_emits_reloadable_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let suite = generate_mini(dir.path(), &[]);
    let out_dir = dir.path().join("aug");
    ok([
        "sample",
        "--strategy",
        "as",
        "--rates",
        r#"{"PI": 0.5, "TS": 0.25, "CRn": 0.25}"#,
        "--scale",
        "1.5",
        "--suite",
        &suite.display().to_string(),
        "--schemas",
        &tables().display().to_string(),
        "--examples",
        &train().display().to_string(),
        "--out",
        &out_dir.display().to_string(),
    ]);
    let sample: Value = serde_json::from_slice(&fs::read(out_dir.join("sample.json")).unwrap()).unwrap();
    assert_eq!(sample["case_ids"].as_array().unwrap().len(), 72);
    assert_eq!(sample["plan"]["per_mr_quota"]["PI"], 36);
    // The augmented set reloads strictly with the CLI's own loader.
    ok([
        "generate",
        "--schemas",
        &out_dir.join("tables.json").display().to_string(),
        "--examples",
        &out_dir.join("train.json").display().to_string(),
        "--strict",
        "--mrs",
        "PI",
        "--out",
        &dir.path().join("re.jsonl").display().to_string(),
    ]);
    assert_eq!(code(&["sample", "--strategy", "as", "--suite", &suite.display().to_string(), "--schemas", &tables().display().to_string(), "--examples", &train().display().to_string(), "--out", "/tmp/never"]), 1);
}

#[test]
fn folds_partition_examples() {
    let dir = tempfile::tempdir().unwrap();
    let folds = dir.path().join("folds.json");
    ok([
        "folds",
        "--examples",
        &train().display().to_string(),
        "--k",
        "4",
        "--out",
        &folds.display().to_string(),
        "--fold-dir",
        &dir.path().join("f").display().to_string(),
    ]);
    for f in 0..4 {
        let load = |n: String| -> usize {
            serde_json::from_slice::<Value>(&fs::read(dir.path().join("f").join(n)).unwrap()).unwrap().as_array().unwrap().len()
        };
        assert_eq!(load(format!("fold_{f}_train.json")) + load(format!("fold_{f}_validation.json")), 48);
        assert_eq!(load(format!("fold_{f}_validation.json")), 12);
    }
}

#[test]
fn sql_match_reports_first_difference() {
    let out = ok(["sql", "match", "SELECT a, b FROM t WHERE x = 1", "select b, a from t where x = 2"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["match"], true);
    let out = ok(["sql", "match", "SELECT a FROM t LIMIT 1", "SELECT a FROM t"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["match"], false);
    assert!(v["first_difference"].is_string());
    let out = ok(["sql", "match", "SELECT a FROM t WHERE x = 1", "SELECT a FROM t WHERE x = 2", "--value-sensitive"]);
    assert_eq!(serde_json::from_slice::<Value>(&out.stdout).unwrap()["match"], false);
}
