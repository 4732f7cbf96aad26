//! `sqlmorph` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or validation error,
//! 3 adapter or transport error.

mod config;

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use sqlmorph_core::augment::{
    augment_target, emit_augmented, sample_adaptive, sample_random, sample_stratified, FoldSplit, Strategy,
    DEFAULT_FOLD_COUNT,
};
use sqlmorph_core::dataset::{load_examples, load_examples_unbound, load_schemas, Example, Schema, SkipMode};
use sqlmorph_core::fluency::{corpus_stats, train_ngram, ExternalScorer, FluencyScorer, ModelScorer};
use sqlmorph_core::generate::{generate, validate_suite, Resources, TestSuite};
use sqlmorph_core::harness::{
    emit_report, read_records, records_to_jsonl, run, AdapterSettings, AdapterSpec, Report, ReportFormat,
};
use sqlmorph_core::mr::MrTag;
use sqlmorph_core::sql::{canonicalize, first_difference, parse_sql, MatchOptions, HARDNESS_RULES_VERSION};

use config::AppConfig;

enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Adapter(anyhow::Error),
}

type CliResult = Result<(), Failure>;

trait OrData<T> {
    fn data(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> OrData<T> for Result<T, E> {
    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure::Data(e.into()))
    }
}

fn usage<T>(msg: impl Into<String>) -> Result<T, Failure> {
    Err(Failure::Usage(msg.into()))
}

#[derive(Parser)]
#[command(name = "sqlmorph", about = "Metamorphic testing and augmentation for text-to-SQL models")]
#[command(disable_version_flag = true)]
struct Cli {
    /// Print version, hardness rule table and default lexicon hashes.
    #[arg(short = 'V', long)]
    version: bool,
    /// Worker threads for generation and scoring (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Option<Cmd>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Apply the relations to a dataset and write a suite.
    Generate(GenerateArgs),
    /// Check a suite against the seeds and schemas it came from.
    Validate(ValidateArgs),
    /// Ask a model about every seed and case and write an inconsistency report.
    Run(RunArgs),
    /// Re-render a report from saved consistency records.
    Report(ReportArgs),
    /// Fluency statistics.
    #[command(subcommand)]
    Fluency(FluencyCmd),
    /// Sample cases and emit an augmented training set.
    Sample(SampleArgs),
    /// Split a dataset into folds.
    Folds(FoldsArgs),
    /// SQL parser and comparator.
    #[command(subcommand)]
    Sql(SqlCmd),
}

#[derive(Args)]
struct InputArgs {
    /// Spider tables.json.
    #[arg(long)]
    schemas: Option<PathBuf>,
    /// Spider dataset JSON.
    #[arg(long)]
    examples: Option<PathBuf>,
    /// Abort on the first example whose gold SQL fails to parse or bind.
    #[arg(long)]
    strict: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// Suite output (JSONL). A `.meta.json` sidecar and a `.skips.json`
    /// skip report are written next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated relation codes, e.g. PI,PR,TS.
    #[arg(long, value_delimiter = ',')]
    mrs: Option<Vec<MrTag>>,
    #[arg(long)]
    max_variants: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    prefix_lexicon: Option<PathBuf>,
    #[arg(long)]
    synonyms: Option<PathBuf>,
    #[arg(long)]
    renames: Option<PathBuf>,
    #[arg(long)]
    kb: Option<PathBuf>,
    /// Leave out aggregate phrases shared by several aggregates.
    #[arg(long)]
    no_opaque_synonyms: bool,
    /// Opaque-key variants also drop primary keys.
    #[arg(long)]
    opaque_remove_primary: bool,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    /// Write the validation report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    suite: Option<PathBuf>,
    #[command(flatten)]
    input: InputArgs,
    /// `cmd:<shell command>` or `http:<url>`.
    #[arg(long)]
    adapter: Option<String>,
    /// Seconds per prediction (default 30).
    #[arg(long)]
    timeout: Option<f64>,
    /// Requests in flight at once (default 8).
    #[arg(long)]
    max_inflight: Option<usize>,
    /// Report path; standard output when absent.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Consistency records (JSONL); defaults to `<report>.records.jsonl`.
    #[arg(long)]
    records: Option<PathBuf>,
    /// json, csv or md (default json).
    #[arg(long)]
    format: Option<String>,
    /// Exit with status 3 when more than this share of cases are model
    /// failures (default 0.5).
    #[arg(long)]
    max_failure_rate: Option<f64>,
    /// Compare literal values too.
    #[arg(long)]
    value_sensitive: bool,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    records: PathBuf,
    /// Suite the records came from; its sidecar supplies the fingerprints.
    #[arg(long)]
    suite: Option<PathBuf>,
    #[arg(long, default_value = "json")]
    format: String,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FluencyCmd {
    /// Compare the fluency of original and synthetic utterances.
    Stats(FluencyArgs),
}

#[derive(Args)]
struct FluencyArgs {
    /// Spider dataset JSON with the original utterances.
    #[arg(long)]
    original: PathBuf,
    /// Suite (`.jsonl`) or Spider dataset JSON with synthetic utterances.
    #[arg(long)]
    synthetic: PathBuf,
    /// `builtin` or `cmd:<shell command>`.
    #[arg(long, default_value = "builtin")]
    lm: String,
    #[arg(long, default_value_t = 3)]
    order: usize,
    #[arg(long, default_value_t = 0.1)]
    k: f64,
    /// Also score suite cases from schema relations (their utterances are
    /// unchanged copies of the seed).
    #[arg(long)]
    all_cases: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SampleArgs {
    /// rs, ss or as.
    #[arg(long)]
    strategy: Strategy,
    /// Cases to sample; defaults to the number `--scale` allows.
    #[arg(long)]
    n: Option<usize>,
    /// Synthetic examples per original example (at least 1).
    #[arg(long, default_value_t = 1.0)]
    scale: f64,
    /// Strata for ss (default: relations present in the suite).
    #[arg(long)]
    k: Option<usize>,
    /// Relation rates for as: inline JSON object or a path to one.
    #[arg(long)]
    rates: Option<String>,
    #[arg(long)]
    suite: PathBuf,
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FoldsArgs {
    #[arg(long)]
    examples: PathBuf,
    #[arg(long, default_value_t = DEFAULT_FOLD_COUNT)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Membership JSON path; standard output when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also write per-fold training and validation files here.
    #[arg(long)]
    fold_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum SqlCmd {
    /// Print the canonical form of a query as JSON.
    Parse(SqlParseArgs),
    /// Exact-set-match two queries.
    Match(SqlMatchArgs),
}

#[derive(Args)]
struct SchemaRef {
    /// tables.json used to resolve column names.
    #[arg(long, requires = "db_id")]
    schemas: Option<PathBuf>,
    #[arg(long)]
    db_id: Option<String>,
}

#[derive(Args)]
struct SqlParseArgs {
    sql: String,
    #[command(flatten)]
    schema: SchemaRef,
}

#[derive(Args)]
struct SqlMatchArgs {
    a: String,
    b: String,
    #[command(flatten)]
    schema: SchemaRef,
    #[arg(long)]
    value_sensitive: bool,
}

fn write_out(path: Option<&Path>, bytes: &[u8]) -> CliResult {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).data()?;
            }
            fs::write(p, bytes).with_context(|| format!("writing {}", p.display())).data()
        }
        None => std::io::stdout().write_all(bytes).context("writing to standard output").data(),
    }
}

fn pretty(v: &impl serde::Serialize) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(v).expect("serializable");
    out.push(b'\n');
    out
}

fn with_suffix(p: &Path, suffix: &str) -> PathBuf {
    let mut s = p.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn require(p: Option<PathBuf>, what: &str) -> Result<PathBuf, Failure> {
    p.map_or_else(|| usage(format!("missing {what}")), Ok)
}

fn load_inputs(
    schemas: Option<PathBuf>,
    examples: Option<PathBuf>,
    strict: bool,
) -> Result<(Vec<Schema>, Vec<Example>, sqlmorph_core::dataset::SkipReport), Failure> {
    let schemas = load_schemas(require(schemas, "--schemas")?).data()?;
    let mode = if strict { SkipMode::Strict } else { SkipMode::Skip };
    let loaded = load_examples(require(examples, "--examples")?, &schemas, mode).data()?;
    for s in &loaded.report.skipped {
        log::warn!("skipping example {}: {}", s.example_id, s.reason);
    }
    Ok((schemas, loaded.examples, loaded.report))
}

fn cmd_generate(a: GenerateArgs) -> CliResult {
    let file = AppConfig::load_opt(a.config.as_deref()).data()?;
    let mut cfg = file.generation.clone().unwrap_or_default();
    if let Some(m) = a.mrs {
        cfg.enabled_mrs = m.into_iter().collect();
    }
    if let Some(v) = a.max_variants {
        cfg.max_variants_per_mr = v;
    }
    if let Some(s) = a.seed {
        cfg.rng_seed = s;
    }
    if a.no_opaque_synonyms {
        cfg.include_opaque_synonyms = false;
    }
    if a.opaque_remove_primary {
        cfg.opaque_remove_primary = true;
    }
    for (flag, slot) in [
        (a.prefix_lexicon, &mut cfg.prefix_lexicon),
        (a.synonyms, &mut cfg.synonym_groups),
        (a.renames, &mut cfg.rename_lexicon),
        (a.kb, &mut cfg.attribute_kb),
    ] {
        if flag.is_some() {
            *slot = flag;
        }
    }
    if let Err(e) = cfg.validate() {
        return usage(e.to_string());
    }
    let out = require(a.out.or(file.out), "--out")?;
    let strict = a.input.strict || file.strict.unwrap_or(false);
    let (schemas, examples, skips) = load_inputs(a.input.schemas.or(file.schemas), a.input.examples.or(file.examples), strict)?;
    let res = Resources::load(&cfg).data()?;
    let suite = generate(&examples, &schemas, &cfg, &res).data()?;
    suite.write(&out).data()?;
    write_out(Some(&with_suffix(&out, ".skips.json")), &skips.to_json())?;
    log::info!(
        "{} cases from {} seeds ({} seed failures)",
        suite.cases.len(),
        suite.seed_count,
        suite.failures.len()
    );
    Ok(())
}

fn cmd_validate(a: ValidateArgs) -> CliResult {
    let (schemas, examples, _) = load_inputs(a.input.schemas, a.input.examples, a.input.strict)?;
    let suite = TestSuite::read(&a.suite).data()?;
    let report = validate_suite(&suite, &schemas, &examples);
    write_out(a.out.as_deref(), &pretty(&report))?;
    if report.is_clean() {
        Ok(())
    } else {
        Err(Failure::Data(anyhow!("{} violations", report.violations.len())))
    }
}

fn parse_format(s: &str) -> Result<ReportFormat, Failure> {
    s.parse().or_else(|e: String| usage(e))
}

fn fingerprints(suite: Option<&Path>) -> Result<(String, String), Failure> {
    let Some(path) = suite else {
        return Ok((String::new(), String::new()));
    };
    let suite = TestSuite::read(path).data()?;
    Ok((suite.fingerprint(), suite.config_fingerprint))
}

fn cmd_run(a: RunArgs) -> CliResult {
    let file = AppConfig::load_opt(a.config.as_deref()).data()?;
    let spec_text = a.adapter.or(file.adapter).map_or_else(|| usage("missing --adapter"), Ok)?;
    let spec = AdapterSpec::parse(&spec_text).map_err(|e| Failure::Usage(e.to_string()))?;
    let timeout = a.timeout.or(file.timeout).unwrap_or(30.0);
    if !(timeout > 0.0 && timeout.is_finite()) {
        return usage("--timeout must be a positive number of seconds");
    }
    let settings = AdapterSettings {
        timeout: Duration::from_secs_f64(timeout),
        max_inflight: a.max_inflight.or(file.max_inflight).unwrap_or(8),
    };
    let adapter = spec.build(settings).map_err(|e| Failure::Usage(e.to_string()))?;
    let threshold = a.max_failure_rate.or(file.max_failure_rate).unwrap_or(0.5);
    if !(0.0..=1.0).contains(&threshold) {
        return usage("--max-failure-rate must be within [0, 1]");
    }
    let format = parse_format(a.format.or(file.format).as_deref().unwrap_or("json"))?;
    let suite_path = require(a.suite.or(file.suite), "--suite")?;
    let strict = a.input.strict || file.strict.unwrap_or(false);
    let (schemas, examples, _) = load_inputs(a.input.schemas.or(file.schemas), a.input.examples.or(file.examples), strict)?;
    let suite = TestSuite::read(&suite_path).data()?;
    let opts = MatchOptions {
        value_sensitive: a.value_sensitive || file.value_sensitive.unwrap_or(false),
    };
    let records = run(adapter.as_ref(), &suite, &examples, &schemas, opts).data()?;
    let report = Report::new(&records, &suite.fingerprint(), &suite.config_fingerprint);
    let report_path = a.report.or(file.report);
    let records_path = a.records.or(file.records).or_else(|| report_path.as_ref().map(|p| with_suffix(p, ".records.jsonl")));
    if let Some(p) = &records_path {
        write_out(Some(p), &records_to_jsonl(&records))?;
    }
    write_out(report_path.as_deref(), &emit_report(&report, format))?;
    let frac = report.failure_fraction();
    if frac > threshold {
        return Err(Failure::Adapter(anyhow!(
            "{} of {} cases were model failures ({:.1}% > {:.1}%) using {}",
            report.failures,
            report.records,
            100.0 * frac,
            100.0 * threshold,
            adapter.describe()
        )));
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> CliResult {
    let format = parse_format(&a.format)?;
    let records = read_records(&a.records).data()?;
    let (sfp, cfp) = fingerprints(a.suite.as_deref())?;
    let report = Report::new(&records, &sfp, &cfp);
    write_out(a.out.as_deref(), &emit_report(&report, format))
}

fn synthetic_utterances(path: &Path, all_cases: bool) -> Result<Vec<String>, Failure> {
    if path.extension().is_some_and(|e| e == "jsonl") {
        let suite = TestSuite::read(path).data()?;
        Ok(suite
            .cases
            .into_iter()
            .filter(|c| all_cases || c.mr.is_utterance())
            .map(|c| c.utterance)
            .collect())
    } else {
        Ok(load_examples_unbound(path).data()?.into_iter().map(|e| e.utterance).collect())
    }
}

fn cmd_fluency(FluencyCmd::Stats(a): FluencyCmd) -> CliResult {
    let original: Vec<String> = load_examples_unbound(&a.original).data()?.into_iter().map(|e| e.utterance).collect();
    let synthetic = synthetic_utterances(&a.synthetic, a.all_cases)?;
    if original.is_empty() || synthetic.is_empty() {
        return Err(Failure::Data(anyhow!("both corpora must be nonempty")));
    }
    let report = if a.lm == "builtin" {
        let model = train_ngram(&original, a.order, a.k).map_err(|e| Failure::Usage(e.to_string()))?;
        corpus_stats(&original, &synthetic, &ModelScorer(&model))
    } else if let Some(cmd) = a.lm.strip_prefix("cmd:") {
        let scorer = ExternalScorer::new(cmd);
        let r = corpus_stats(&original, &synthetic, &scorer as &dyn FluencyScorer);
        if r.original.scored == 0 || r.synthetic.scored == 0 {
            write_out(a.out.as_deref(), &pretty(&r))?;
            return Err(Failure::Adapter(anyhow!("external scorer produced no scores")));
        }
        r
    } else {
        return usage(format!("--lm must be `builtin` or `cmd:<command>`, got `{}`", a.lm));
    };
    write_out(a.out.as_deref(), &pretty(&report))
}

fn parse_rates(text: &str) -> Result<BTreeMap<MrTag, f64>, Failure> {
    let body = if text.trim_start().starts_with('{') {
        text.to_string()
    } else {
        fs::read_to_string(text).with_context(|| format!("reading rates {text}")).data()?
    };
    serde_json::from_str(&body).map_err(|e| Failure::Usage(format!("--rates: {e}")))
}

fn cmd_sample(a: SampleArgs) -> CliResult {
    let (schemas, examples, _) = load_inputs(a.input.schemas, a.input.examples, a.input.strict)?;
    let suite = TestSuite::read(&a.suite).data()?;
    if !(a.scale.is_finite() && a.scale >= 1.0) {
        return usage("--scale must be at least 1");
    }
    let n = a.n.unwrap_or_else(|| augment_target(examples.len(), a.scale).min(suite.cases.len()));
    let sample = match a.strategy {
        Strategy::Random => sample_random(&suite, n, a.seed),
        Strategy::Stratified => {
            let k = a.k.unwrap_or_else(|| suite.counts_by_mr.values().filter(|c| **c > 0).count().max(1));
            sample_stratified(&suite, n, k, a.seed)
        }
        Strategy::Adaptive => {
            let Some(rates) = a.rates.as_deref() else {
                return usage("--strategy as needs --rates");
            };
            sample_adaptive(&suite, &parse_rates(rates)?, n, a.seed)
        }
    }
    .data()?;
    emit_augmented(&examples, &schemas, &sample.cases, a.scale, &a.out).data()?;
    let ids: Vec<&str> = sample.cases.iter().map(|c| c.case_id.as_str()).collect();
    write_out(
        Some(&a.out.join("sample.json")),
        &pretty(&json!({"plan": sample.plan, "case_ids": ids})),
    )
}

fn cmd_folds(a: FoldsArgs) -> CliResult {
    let examples = load_examples_unbound(&a.examples).data()?;
    let ids: Vec<String> = examples.iter().map(|e| e.example_id.clone()).collect();
    let split = FoldSplit::new(&ids, a.k, a.seed).data()?;
    if let Some(dir) = &a.fold_dir {
        split.write_fold_files(&examples, dir).data()?;
    }
    write_out(a.out.as_deref(), &split.to_json())
}

fn resolve_schema(r: &SchemaRef) -> Result<Option<Schema>, Failure> {
    let (Some(path), Some(db)) = (&r.schemas, &r.db_id) else {
        return Ok(None);
    };
    let schemas = load_schemas(path).data()?;
    match schemas.into_iter().find(|s| &s.db_id == db) {
        Some(s) => Ok(Some(s)),
        None => Err(Failure::Data(anyhow!("db_id `{db}` not in {}", path.display()))),
    }
}

fn cmd_sql(cmd: SqlCmd) -> CliResult {
    match cmd {
        SqlCmd::Parse(a) => {
            let schema = resolve_schema(&a.schema)?;
            let q = parse_sql(&a.sql).data()?;
            write_out(None, &pretty(&canonicalize(&q, schema.as_ref(), MatchOptions::default())))
        }
        SqlCmd::Match(a) => {
            let schema = resolve_schema(&a.schema)?;
            let opts = MatchOptions {
                value_sensitive: a.value_sensitive,
            };
            let ca = canonicalize(&parse_sql(&a.a).data()?, schema.as_ref(), opts);
            let cb = canonicalize(&parse_sql(&a.b).data()?, schema.as_ref(), opts);
            let diff = first_difference(&ca, &cb);
            write_out(
                None,
                &pretty(&json!({"match": diff.is_none(), "first_difference": diff.map(|c| c.name())})),
            )
        }
    }
}

fn version_text() -> String {
    let mut s = format!(
        "sqlmorph {}\nhardness-rules {HARDNESS_RULES_VERSION}\n",
        env!("CARGO_PKG_VERSION")
    );
    for (name, hash) in Resources::defaults().hashes() {
        s.push_str(&format!("{name} {hash}\n"));
    }
    s
}

fn dispatch(cli: Cli) -> CliResult {
    if cli.version {
        return write_out(None, version_text().as_bytes());
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return usage("--jobs must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| Failure::Usage(e.to_string()))?;
    }
    match cli.command {
        None => usage("no subcommand given; see --help"),
        Some(Cmd::Generate(a)) => cmd_generate(a),
        Some(Cmd::Validate(a)) => cmd_validate(a),
        Some(Cmd::Run(a)) => cmd_run(a),
        Some(Cmd::Report(a)) => cmd_report(a),
        Some(Cmd::Fluency(a)) => cmd_fluency(a),
        Some(Cmd::Sample(a)) => cmd_sample(a),
        Some(Cmd::Folds(a)) => cmd_folds(a),
        Some(Cmd::Sql(a)) => cmd_sql(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Adapter(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
