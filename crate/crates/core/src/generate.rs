//! Suite generation, validation and the JSONL suite format.
//!
//! Seeds are processed in input order and relations in [`MrTag::ALL`]
//! order, so case ids `"{seed_id}:{MR}:{n}"` are stable across runs. Work is
//! spread over the current rayon pool; the merge keeps input order, so the
//! output does not depend on the number of workers.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{serialize_schema, DatasetError, Example, Schema, SpiderSchema};
use crate::fingerprint::{derive_seed, sha256_hex, sha256_parts};
use crate::mr::MrTag;
use crate::schema_mr::{apply_schema_mr, AttributeKB, RenameLexicon, SchemaMrContext};
use crate::sql::{bind_and_usage, parse_sql, NamedUsage, HARDNESS_RULES_VERSION};
use crate::utterance::{
    prefix_insert, prefix_remove, prefix_substitute, synonym_substitute, PrefixLexicon, SynonymGroups,
    UtteranceVariant,
};

#[derive(Debug, thiserror::Error)]
pub enum GenerateError {
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("{0}")]
    Resource(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{path}:{line}: {message}")]
    SuiteFormat { path: String, line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: &Path, source: std::io::Error) -> GenerateError {
    GenerateError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn all_mrs() -> BTreeSet<MrTag> {
    MrTag::ALL.into_iter().collect()
}

fn default_cap() -> usize {
    10
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub enabled_mrs: BTreeSet<MrTag>,
    pub max_variants_per_mr: usize,
    pub rng_seed: u64,
    pub include_opaque_synonyms: bool,
    /// Opaque-key variants also drop primary keys.
    pub opaque_remove_primary: bool,
    pub prefix_lexicon: Option<PathBuf>,
    pub synonym_groups: Option<PathBuf>,
    pub rename_lexicon: Option<PathBuf>,
    pub attribute_kb: Option<PathBuf>,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        GenerationConfig {
            enabled_mrs: all_mrs(),
            max_variants_per_mr: default_cap(),
            rng_seed: 0,
            include_opaque_synonyms: default_true(),
            opaque_remove_primary: false,
            prefix_lexicon: None,
            synonym_groups: None,
            rename_lexicon: None,
            attribute_kb: None,
        }
    }
}

impl GenerationConfig {
    pub fn validate(&self) -> Result<(), GenerateError> {
        if self.enabled_mrs.is_empty() {
            return Err(GenerateError::Config("enabled_mrs is empty".into()));
        }
        if self.max_variants_per_mr == 0 {
            return Err(GenerateError::Config("max_variants_per_mr must be at least 1".into()));
        }
        Ok(())
    }
}

/// Lexicons and knowledge base used by the relations.
#[derive(Debug, Clone)]
pub struct Resources {
    pub prefixes: PrefixLexicon,
    pub synonyms: SynonymGroups,
    pub renames: RenameLexicon,
    pub kb: AttributeKB,
}

impl Resources {
    pub fn defaults() -> Self {
        Resources {
            prefixes: PrefixLexicon::default_lexicon(),
            synonyms: SynonymGroups::default_groups(),
            renames: RenameLexicon::default_lexicon(),
            kb: AttributeKB::default_kb(),
        }
    }

    pub fn load(cfg: &GenerationConfig) -> Result<Self, GenerateError> {
        let res = |e: &dyn std::fmt::Display| GenerateError::Resource(e.to_string());
        let mut r = Self::defaults();
        if let Some(p) = &cfg.prefix_lexicon {
            r.prefixes = PrefixLexicon::load(p).map_err(|e| res(&e))?;
        }
        if let Some(p) = &cfg.synonym_groups {
            r.synonyms = SynonymGroups::load(p).map_err(|e| res(&e))?;
        }
        if let Some(p) = &cfg.rename_lexicon {
            r.renames = RenameLexicon::load(p).map_err(|e| res(&e))?;
        }
        if let Some(p) = &cfg.attribute_kb {
            r.kb = AttributeKB::load(p).map_err(|e| res(&e))?;
        }
        Ok(r)
    }

    /// Content hashes keyed by resource name.
    pub fn hashes(&self) -> BTreeMap<&'static str, String> {
        let h = |v: Vec<u8>| sha256_hex(&v);
        BTreeMap::from([
            ("prefixes", h(serde_json::to_vec(&self.prefixes).expect("serializable"))),
            ("synonyms", h(self.synonyms.to_json())),
            ("renames", h(serde_json::to_vec(&self.renames).expect("serializable"))),
            ("attribute_kb", h(serde_json::to_vec(&self.kb).expect("serializable"))),
        ])
    }
}

/// Hash of the settings that influence generated output. Resource files
/// enter by content, not by path.
pub fn config_fingerprint(cfg: &GenerationConfig, res: &Resources) -> String {
    let canon = json!({
        "enabled_mrs": cfg.enabled_mrs,
        "max_variants_per_mr": cfg.max_variants_per_mr,
        "rng_seed": cfg.rng_seed,
        "include_opaque_synonyms": cfg.include_opaque_synonyms,
        "opaque_remove_primary": cfg.opaque_remove_primary,
        "resources": res.hashes(),
        "hardness_rules": HARDNESS_RULES_VERSION,
    });
    sha256_hex(&serde_json::to_vec(&canon).expect("json value serializes"))
}

/// One transformed (utterance, schema) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct TransformedCase {
    pub case_id: String,
    pub seed_id: String,
    pub mr: MrTag,
    pub utterance: String,
    pub db_id: String,
    pub schema: Arc<Schema>,
    pub gold_sql: String,
    pub provenance: serde_json::Value,
}

impl TransformedCase {
    /// Dedup key: utterance plus serialized schema.
    pub fn content_fingerprint(&self) -> String {
        content_key(&self.utterance, &self.schema)
    }
}

fn content_key(utterance: &str, schema: &Schema) -> String {
    sha256_parts([utterance.as_bytes(), serialize_schema(schema).as_slice()])
}

#[derive(Serialize, Deserialize)]
struct CaseLine {
    case_id: String,
    seed_id: String,
    mr: MrTag,
    utterance: String,
    db_id: String,
    schema: SpiderSchema,
    gold_sql: String,
    #[serde(default)]
    provenance: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedFailure {
    pub seed_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TestSuite {
    pub cases: Vec<TransformedCase>,
    pub counts_by_mr: BTreeMap<MrTag, usize>,
    pub seed_count: usize,
    pub config_fingerprint: String,
    pub failures: Vec<SeedFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteMeta {
    pub counts_by_mr: BTreeMap<MrTag, usize>,
    pub case_count: usize,
    pub seed_count: usize,
    pub config_fingerprint: String,
    pub hardness_rules: String,
    pub failures: Vec<SeedFailure>,
}

pub fn count_by_mr(cases: &[TransformedCase]) -> BTreeMap<MrTag, usize> {
    let mut counts: BTreeMap<MrTag, usize> = BTreeMap::new();
    for c in cases {
        *counts.entry(c.mr).or_default() += 1;
    }
    counts
}

impl TestSuite {
    pub fn meta(&self) -> SuiteMeta {
        SuiteMeta {
            counts_by_mr: self.counts_by_mr.clone(),
            case_count: self.cases.len(),
            seed_count: self.seed_count,
            config_fingerprint: self.config_fingerprint.clone(),
            hardness_rules: HARDNESS_RULES_VERSION.to_string(),
            failures: self.failures.clone(),
        }
    }

    pub fn to_jsonl(&self) -> Vec<u8> {
        let mut out = Vec::new();
        for c in &self.cases {
            let line = CaseLine {
                case_id: c.case_id.clone(),
                seed_id: c.seed_id.clone(),
                mr: c.mr,
                utterance: c.utterance.clone(),
                db_id: c.db_id.clone(),
                schema: c.schema.to_spider(),
                gold_sql: c.gold_sql.clone(),
                provenance: c.provenance.clone(),
            };
            serde_json::to_writer(&mut out, &line).expect("case serializes");
            out.push(b'\n');
        }
        out
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(&self.to_jsonl())
    }

    /// Writes `path` and the `<path>.meta.json` sidecar.
    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), GenerateError> {
        let path = path.as_ref();
        fs::write(path, self.to_jsonl()).map_err(|e| io_err(path, e))?;
        let meta_path = meta_path(path);
        let mut meta = serde_json::to_vec_pretty(&self.meta()).expect("meta serializes");
        meta.push(b'\n');
        fs::write(&meta_path, meta).map_err(|e| io_err(&meta_path, e))
    }

    /// Reads a suite file. Counts are recomputed from the cases; the
    /// fingerprint and seed count come from the sidecar when present.
    pub fn read(path: impl AsRef<Path>) -> Result<Self, GenerateError> {
        let path = path.as_ref();
        let file = fs::File::open(path).map_err(|e| io_err(path, e))?;
        let mut cases = Vec::new();
        for (i, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let fmt_err = |message: String| GenerateError::SuiteFormat {
                path: path.display().to_string(),
                line: i + 1,
                message,
            };
            let raw: CaseLine = serde_json::from_str(&line).map_err(|e| fmt_err(e.to_string()))?;
            let schema = Schema::from_spider(raw.schema).map_err(|e| fmt_err(e.to_string()))?;
            cases.push(TransformedCase {
                case_id: raw.case_id,
                seed_id: raw.seed_id,
                mr: raw.mr,
                utterance: raw.utterance,
                db_id: raw.db_id,
                schema: Arc::new(schema),
                gold_sql: raw.gold_sql,
                provenance: raw.provenance,
            });
        }
        let counts_by_mr = count_by_mr(&cases);
        let mp = meta_path(path);
        let (seed_count, config_fingerprint, failures) = match fs::read(&mp) {
            Ok(bytes) => {
                let meta: SuiteMeta = serde_json::from_slice(&bytes).map_err(|e| GenerateError::SuiteFormat {
                    path: mp.display().to_string(),
                    line: e.line(),
                    message: e.to_string(),
                })?;
                (meta.seed_count, meta.config_fingerprint, meta.failures)
            }
            Err(_) => {
                let seeds: HashSet<&str> = cases.iter().map(|c| c.seed_id.as_str()).collect();
                (seeds.len(), String::new(), Vec::new())
            }
        };
        Ok(TestSuite {
            cases,
            counts_by_mr,
            seed_count,
            config_fingerprint,
            failures,
        })
    }
}

pub fn meta_path(suite: &Path) -> PathBuf {
    let mut s = suite.as_os_str().to_owned();
    s.push(".meta.json");
    PathBuf::from(s)
}

fn named_usage(gold: &str, schema: &Schema) -> Result<NamedUsage, String> {
    let q = parse_sql(gold).map_err(|e| e.to_string())?;
    let u = bind_and_usage(&q, schema).map_err(|e| e.to_string())?;
    Ok(u.named(schema))
}

fn utterance_variants(tag: MrTag, u: &str, res: &Resources, cfg: &GenerationConfig) -> Vec<UtteranceVariant> {
    match tag {
        MrTag::PrefixInsertion => prefix_insert(u, &res.prefixes),
        MrTag::PrefixRemoval => prefix_remove(u, &res.prefixes),
        MrTag::PrefixSubstitution => prefix_substitute(u, &res.prefixes),
        MrTag::SynonymSubstitution => synonym_substitute(u, &res.synonyms, cfg.include_opaque_synonyms),
        _ => Vec::new(),
    }
}

/// All cases for one seed, or the reason the seed was skipped.
pub fn generate_for_seed(
    ex: &Example,
    schema: &Arc<Schema>,
    cfg: &GenerationConfig,
    res: &Resources,
) -> Result<Vec<TransformedCase>, SeedFailure> {
    let fail = |reason: String| SeedFailure {
        seed_id: ex.example_id.clone(),
        reason,
    };
    let query = parse_sql(&ex.gold_sql).map_err(|e| fail(e.to_string()))?;
    let usage = bind_and_usage(&query, schema).map_err(|e| fail(e.to_string()))?;
    let before = usage.named(schema);
    let seed_key = content_key(&ex.utterance, schema);

    let mut out = Vec::new();
    for &tag in MrTag::ALL.iter().filter(|t| cfg.enabled_mrs.contains(t)) {
        let mut seen: HashSet<String> = HashSet::from([seed_key.clone()]);
        let mut produced: Vec<(String, Arc<Schema>, serde_json::Value)> = Vec::new();
        if tag.is_utterance() {
            for v in utterance_variants(tag, &ex.utterance, res, cfg) {
                if produced.len() >= cfg.max_variants_per_mr {
                    break;
                }
                if seen.insert(content_key(&v.utterance, schema)) {
                    produced.push((v.utterance, schema.clone(), v.provenance));
                }
            }
        } else {
            let ctx = SchemaMrContext {
                max_variants: cfg.max_variants_per_mr,
                rng_seed: derive_seed(cfg.rng_seed, &format!("{}/{}", ex.example_id, tag.code())),
                renames: res.renames.clone(),
                kb: res.kb.clone(),
                opaque_remove_primary: cfg.opaque_remove_primary,
            };
            for rw in apply_schema_mr(tag, schema, &usage, &ctx) {
                if produced.len() >= cfg.max_variants_per_mr {
                    break;
                }
                if !rw.touched.disjoint_from(&usage) {
                    log::debug!("{}: {tag} rewrite touches used elements", ex.example_id);
                    continue;
                }
                if named_usage(&ex.gold_sql, &rw.after).as_ref() != Ok(&before) {
                    log::debug!("{}: {tag} rewrite changes gold binding", ex.example_id);
                    continue;
                }
                if seen.insert(content_key(&ex.utterance, &rw.after)) {
                    produced.push((ex.utterance.clone(), Arc::new(rw.after), rw.provenance));
                }
            }
        }
        for (i, (utterance, case_schema, provenance)) in produced.into_iter().enumerate() {
            out.push(TransformedCase {
                case_id: format!("{}:{}:{}", ex.example_id, tag.code(), i),
                seed_id: ex.example_id.clone(),
                mr: tag,
                utterance,
                db_id: ex.db_id.clone(),
                schema: case_schema,
                gold_sql: ex.gold_sql.clone(),
                provenance,
            });
        }
    }
    Ok(out)
}

/// Applies every enabled relation to every seed.
pub fn generate(
    examples: &[Example],
    schemas: &[Schema],
    cfg: &GenerationConfig,
    res: &Resources,
) -> Result<TestSuite, GenerateError> {
    cfg.validate()?;
    let by_id: HashMap<&str, Arc<Schema>> =
        schemas.iter().map(|s| (s.db_id.as_str(), Arc::new(s.clone()))).collect();
    let per_seed: Vec<Result<Vec<TransformedCase>, SeedFailure>> = examples
        .par_iter()
        .map(|ex| match by_id.get(ex.db_id.as_str()) {
            Some(schema) => generate_for_seed(ex, schema, cfg, res),
            None => Err(SeedFailure {
                seed_id: ex.example_id.clone(),
                reason: format!("unknown db_id `{}`", ex.db_id),
            }),
        })
        .collect();
    let mut cases = Vec::new();
    let mut failures = Vec::new();
    for r in per_seed {
        match r {
            Ok(c) => cases.extend(c),
            Err(f) => failures.push(f),
        }
    }
    Ok(TestSuite {
        counts_by_mr: count_by_mr(&cases),
        cases,
        seed_count: examples.len(),
        config_fingerprint: config_fingerprint(cfg, res),
        failures,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViolationKind {
    UnknownSeed,
    DuplicateCaseId,
    DuplicateContent,
    SchemaInvariant,
    GoldChanged,
    BindingChanged,
    BothSidesChanged,
    NothingChanged,
    CountMismatch,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub case_id: String,
    pub kind: ViolationKind,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub cases_checked: usize,
    pub counts_by_mr: BTreeMap<MrTag, usize>,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Re-checks every case against its seed: schema invariants, unchanged gold
/// SQL that binds to the same named tables and columns, and exactly one of
/// utterance and schema changed.
pub fn validate_suite(suite: &TestSuite, schemas: &[Schema], seeds: &[Example]) -> ValidationReport {
    let schema_by_id: HashMap<&str, &Schema> = schemas.iter().map(|s| (s.db_id.as_str(), s)).collect();
    let seed_by_id: HashMap<&str, &Example> = seeds.iter().map(|e| (e.example_id.as_str(), e)).collect();
    let mut report = ValidationReport {
        cases_checked: suite.cases.len(),
        counts_by_mr: count_by_mr(&suite.cases),
        violations: Vec::new(),
    };
    let mut push = |case_id: &str, kind: ViolationKind, message: String| {
        report.violations.push(Violation {
            case_id: case_id.to_string(),
            kind,
            message,
        })
    };
    let mut ids = HashSet::new();
    let mut content = HashSet::new();
    let mut usage_cache: HashMap<&str, Result<NamedUsage, String>> = HashMap::new();

    for c in &suite.cases {
        let id = c.case_id.as_str();
        if !ids.insert(id) {
            push(id, ViolationKind::DuplicateCaseId, "case id repeated".into());
        }
        if !content.insert((c.seed_id.as_str(), c.mr, c.content_fingerprint())) {
            push(id, ViolationKind::DuplicateContent, "same seed, relation and content as an earlier case".into());
        }
        let Some(seed) = seed_by_id.get(c.seed_id.as_str()) else {
            push(id, ViolationKind::UnknownSeed, format!("seed `{}` not found", c.seed_id));
            continue;
        };
        let Some(original) = schema_by_id.get(seed.db_id.as_str()) else {
            push(id, ViolationKind::UnknownSeed, format!("schema `{}` not found", seed.db_id));
            continue;
        };
        if let Err(e) = c.schema.validate() {
            push(id, ViolationKind::SchemaInvariant, e.to_string());
        }
        if c.gold_sql != seed.gold_sql {
            push(id, ViolationKind::GoldChanged, "gold SQL differs from the seed".into());
        }
        let before = usage_cache
            .entry(seed.example_id.as_str())
            .or_insert_with(|| named_usage(&seed.gold_sql, original));
        match (before, named_usage(&seed.gold_sql, &c.schema)) {
            (Ok(b), Ok(a)) if *b == a => {}
            (Ok(_), Ok(_)) => push(id, ViolationKind::BindingChanged, "gold SQL resolves to different names".into()),
            (_, Err(e)) => push(id, ViolationKind::BindingChanged, e),
            (Err(e), _) => push(id, ViolationKind::BindingChanged, format!("seed does not bind: {e}")),
        }
        let utterance_changed = c.utterance != seed.utterance;
        let schema_changed = serialize_schema(&c.schema) != serialize_schema(original);
        match (utterance_changed, schema_changed) {
            (true, true) => push(id, ViolationKind::BothSidesChanged, "utterance and schema both changed".into()),
            (false, false) => push(id, ViolationKind::NothingChanged, "case equals its seed".into()),
            (u, _) if u != c.mr.is_utterance() => push(
                id,
                ViolationKind::BothSidesChanged,
                format!("{} case changed the wrong side", c.mr),
            ),
            _ => {}
        }
    }
    if report.counts_by_mr != suite.counts_by_mr {
        push("*", ViolationKind::CountMismatch, "counts_by_mr disagrees with the cases".into());
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_schemas;

    const SCHEMA: &str = r#"[{"db_id":"concert",
        "table_names":["singer","stadium"],"table_names_original":["singer","stadium"],
        "column_names":[[-1,"*"],[0,"singer id"],[0,"name"],[0,"age"],[0,"country"],[0,"stadium id"],[1,"stadium id"],[1,"location"],[1,"capacity"]],
        "column_names_original":[[-1,"*"],[0,"singer_id"],[0,"name"],[0,"age"],[0,"country"],[0,"stadium_id"],[1,"stadium_id"],[1,"location"],[1,"capacity"]],
        "column_types":["text","number","text","number","text","number","number","text","number"],
        "primary_keys":[1,6],"foreign_keys":[[5,6]]}]"#;

    fn fixture() -> (Vec<Schema>, Vec<Example>) {
        let schemas = parse_schemas(SCHEMA.as_bytes(), Path::new("mem")).unwrap();
        let ex = |id: &str, u: &str, q: &str| Example {
            example_id: id.into(),
            db_id: "concert".into(),
            utterance: u.into(),
            gold_sql: q.into(),
        };
        let examples = vec![
            ex("0", "what is the age of all singers?", "SELECT age FROM singer"),
            ex("1", "tell me the lowest age", "SELECT min(age) FROM singer"),
        ];
        (schemas, examples)
    }

    #[test]
    fn generated_suite_validates() {
        let (schemas, examples) = fixture();
        let cfg = GenerationConfig::default();
        let suite = generate(&examples, &schemas, &cfg, &Resources::defaults()).unwrap();
        assert!(suite.failures.is_empty());
        assert_eq!(suite.counts_by_mr.values().sum::<usize>(), suite.cases.len());
        for tag in [MrTag::PrefixInsertion, MrTag::OpaqueKey, MrTag::TableShuffle, MrTag::Flattening] {
            assert!(suite.counts_by_mr.get(&tag).copied().unwrap_or(0) > 0, "{tag}");
        }
        let report = validate_suite(&suite, &schemas, &examples);
        assert!(report.is_clean(), "{:?}", report.violations);
    }

    #[test]
    fn corrupted_case_is_flagged() {
        let (schemas, examples) = fixture();
        let cfg = GenerationConfig {
            enabled_mrs: [MrTag::ColumnShuffle].into(),
            ..Default::default()
        };
        let mut suite = generate(&examples, &schemas, &cfg, &Resources::defaults()).unwrap();
        let mut broken = (*suite.cases[0].schema).clone();
        let age = broken.column_in_table(0, "age").unwrap().index;
        broken.columns[age].original_name = "years".into();
        suite.cases[0].schema = Arc::new(broken);
        let report = validate_suite(&suite, &schemas, &examples);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].kind, ViolationKind::BindingChanged);
        assert_eq!(report.violations[0].case_id, suite.cases[0].case_id);
    }

    #[test]
    fn jsonl_round_trip_and_determinism() {
        let (schemas, examples) = fixture();
        let cfg = GenerationConfig::default();
        let a = generate(&examples, &schemas, &cfg, &Resources::defaults()).unwrap();
        let b = generate(&examples, &schemas, &cfg, &Resources::defaults()).unwrap();
        assert_eq!(a.to_jsonl(), b.to_jsonl());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("suite.jsonl");
        a.write(&path).unwrap();
        let back = TestSuite::read(&path).unwrap();
        assert_eq!(back.to_jsonl(), a.to_jsonl());
        assert_eq!(back.config_fingerprint, a.config_fingerprint);
        assert_eq!(back.counts_by_mr, a.counts_by_mr);
    }

    #[test]
    fn config_validation() {
        let cfg = GenerationConfig {
            enabled_mrs: BTreeSet::new(),
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg: GenerationConfig = serde_json::from_str(r#"{"enabled_mrs":["PI","CRm"],"rng_seed":3}"#).unwrap();
        assert_eq!(cfg.enabled_mrs.len(), 2);
        assert_eq!(cfg.max_variants_per_mr, 10);
    }

    #[test]
    fn single_table_shuffle_is_empty() {
        let (schemas, examples) = fixture();
        let mut one = schemas[0].clone();
        one.tables.truncate(1);
        one.columns.truncate(6);
        one.foreign_keys.clear();
        one.primary_keys = vec![1];
        one.validate().unwrap();
        let cfg = GenerationConfig {
            enabled_mrs: [MrTag::TableShuffle].into(),
            ..Default::default()
        };
        let suite = generate(&examples[..1], &[one], &cfg, &Resources::defaults()).unwrap();
        assert!(suite.cases.is_empty());
    }
}
