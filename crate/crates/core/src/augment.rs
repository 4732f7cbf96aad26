//! Sampling transformed cases into augmented training sets.
//!
//! Three samplers pick exactly `n` cases from a suite:
//!
//! * random: `n` uniformly without replacement;
//! * stratified: `min(m_i, floor(n / k))` per relation, then a uniform
//!   filler from the cases not yet picked;
//! * adaptive: rates are normalized to `r̂_i` and each relation gets
//!   `min(m_i, floor(r̂_i n))`, then the same filler.
//!
//! Output keeps suite order. [`emit_augmented`] merges a sample into a
//! Spider-format dataset with fresh `db_id`s for transformed schemas.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{serialize_examples, serialize_schemas, DatasetError, Example, Schema};
use crate::generate::{generate, GenerateError, GenerationConfig, Resources, TestSuite, TransformedCase};
use crate::harness::{self, HarnessError, ModelAdapter, Verdict};
use crate::mr::MrTag;
use crate::sql::MatchOptions;

#[derive(Debug, thiserror::Error)]
pub enum AugmentError {
    #[error("asked for {n} cases but the suite has {available}")]
    NotEnough { n: usize, available: usize },
    #[error("k must be at least 1")]
    ZeroStrata,
    #[error("rates: {0}")]
    Rates(String),
    #[error("all rates are zero; use stratified sampling instead")]
    ZeroRates,
    #[error("fold count must be between 2 and the number of examples ({0})")]
    FoldCount(usize),
    #[error("fold {fold} out of range for {count} folds")]
    FoldIndex { fold: usize, count: usize },
    #[error("scale must be a finite number >= 1, got {0}")]
    Scale(f64),
    #[error("sample has {got} cases but scale {scale} allows at most {target}")]
    SampleTooLarge { got: usize, target: usize, scale: f64 },
    #[error("case {case_id} refers to unknown db_id `{db_id}`")]
    UnknownDb { case_id: String, db_id: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), AugmentError> {
    fs::write(path, bytes).map_err(|source| AugmentError::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Strategy {
    #[serde(rename = "rs")]
    Random,
    #[serde(rename = "ss")]
    Stratified,
    #[serde(rename = "as")]
    Adaptive,
}

impl std::str::FromStr for Strategy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rs" => Ok(Strategy::Random),
            "ss" => Ok(Strategy::Stratified),
            "as" => Ok(Strategy::Adaptive),
            _ => Err(format!("unknown strategy `{s}` (rs, ss or as)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub strategy: Strategy,
    pub n: usize,
    /// Number of strata; unused by random sampling.
    pub k: usize,
    /// Cases taken per relation before the filler step.
    pub per_mr_quota: BTreeMap<MrTag, usize>,
    /// Filler cases drawn after the quotas.
    pub filler: usize,
    pub rng_seed: u64,
    /// Normalized rates (adaptive only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<BTreeMap<MrTag, f64>>,
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub plan: SamplingPlan,
    /// Positions in the suite, ascending.
    pub indices: Vec<usize>,
    pub cases: Vec<TransformedCase>,
}

fn positions_by_mr(suite: &TestSuite) -> BTreeMap<MrTag, Vec<usize>> {
    let mut by: BTreeMap<MrTag, Vec<usize>> = BTreeMap::new();
    for (i, c) in suite.cases.iter().enumerate() {
        by.entry(c.mr).or_default().push(i);
    }
    by
}

fn draw(pool: &[usize], amount: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    index::sample(rng, pool.len(), amount).into_iter().map(|i| pool[i]).collect()
}

fn check_size(suite: &TestSuite, n: usize) -> Result<(), AugmentError> {
    if n > suite.cases.len() {
        return Err(AugmentError::NotEnough {
            n,
            available: suite.cases.len(),
        });
    }
    Ok(())
}

/// Takes each quota from its relation, then fills up to `n` from the rest.
fn quota_then_fill(
    suite: &TestSuite,
    n: usize,
    quotas: &BTreeMap<MrTag, usize>,
    rng: &mut ChaCha8Rng,
) -> (Vec<usize>, usize) {
    let by_mr = positions_by_mr(suite);
    let mut picked: BTreeSet<usize> = BTreeSet::new();
    for (mr, pool) in &by_mr {
        let q = quotas.get(mr).copied().unwrap_or(0);
        picked.extend(draw(pool, q, rng));
    }
    let rest: Vec<usize> = (0..suite.cases.len()).filter(|i| !picked.contains(i)).collect();
    let filler = n - picked.len();
    picked.extend(draw(&rest, filler, rng));
    (picked.into_iter().collect(), filler)
}

fn finish(suite: &TestSuite, plan: SamplingPlan, indices: Vec<usize>) -> Sample {
    let cases = indices.iter().map(|&i| suite.cases[i].clone()).collect();
    Sample { plan, indices, cases }
}

pub fn sample_random(suite: &TestSuite, n: usize, rng_seed: u64) -> Result<Sample, AugmentError> {
    check_size(suite, n)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let all: Vec<usize> = (0..suite.cases.len()).collect();
    let mut indices = draw(&all, n, &mut rng);
    indices.sort_unstable();
    let plan = SamplingPlan {
        strategy: Strategy::Random,
        n,
        k: 0,
        per_mr_quota: BTreeMap::new(),
        filler: n,
        rng_seed,
        rates: None,
    };
    Ok(finish(suite, plan, indices))
}

/// Per-relation quota `min(m_i, floor(n / k))`.
pub fn stratified_quotas(suite: &TestSuite, n: usize, k: usize) -> Result<BTreeMap<MrTag, usize>, AugmentError> {
    if k == 0 {
        return Err(AugmentError::ZeroStrata);
    }
    Ok(positions_by_mr(suite)
        .into_iter()
        .map(|(mr, pool)| (mr, pool.len().min(n / k)))
        .collect())
}

pub fn sample_stratified(suite: &TestSuite, n: usize, k: usize, rng_seed: u64) -> Result<Sample, AugmentError> {
    check_size(suite, n)?;
    let quotas = stratified_quotas(suite, n, k)?;
    // Relations beyond k would push the quota total past n.
    if quotas.values().sum::<usize>() > n {
        return Err(AugmentError::Rates(format!(
            "suite has {} relations but k = {k}",
            quotas.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (indices, filler) = quota_then_fill(suite, n, &quotas, &mut rng);
    let plan = SamplingPlan {
        strategy: Strategy::Stratified,
        n,
        k,
        per_mr_quota: quotas,
        filler,
        rng_seed,
        rates: None,
    };
    Ok(finish(suite, plan, indices))
}

/// Rates scaled to sum to 1. Missing relations count as zero.
pub fn normalize_rates(rates: &BTreeMap<MrTag, f64>) -> Result<BTreeMap<MrTag, f64>, AugmentError> {
    if let Some((mr, r)) = rates.iter().find(|(_, r)| !r.is_finite() || **r < 0.0) {
        return Err(AugmentError::Rates(format!("rate for {mr} is {r}")));
    }
    let total: f64 = rates.values().sum();
    if total <= 0.0 {
        return Err(AugmentError::ZeroRates);
    }
    Ok(rates.iter().map(|(m, r)| (*m, r / total)).collect())
}

/// Per-relation quota `min(m_i, floor(r̂_i n))`. The floor gets a 1e-9
/// allowance so that `r̂_i = 1/k` reproduces `floor(n / k)` exactly.
pub fn adaptive_quotas(suite: &TestSuite, normalized: &BTreeMap<MrTag, f64>, n: usize) -> BTreeMap<MrTag, usize> {
    positions_by_mr(suite)
        .into_iter()
        .map(|(mr, pool)| {
            let r = normalized.get(&mr).copied().unwrap_or(0.0);
            let q = (r * n as f64 + 1e-9).floor() as usize;
            (mr, pool.len().min(q))
        })
        .collect()
}

pub fn sample_adaptive(
    suite: &TestSuite,
    rates: &BTreeMap<MrTag, f64>,
    n: usize,
    rng_seed: u64,
) -> Result<Sample, AugmentError> {
    check_size(suite, n)?;
    let normalized = normalize_rates(rates)?;
    let quotas = adaptive_quotas(suite, &normalized, n);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let (indices, filler) = quota_then_fill(suite, n, &quotas, &mut rng);
    let plan = SamplingPlan {
        strategy: Strategy::Adaptive,
        n,
        k: normalized.len(),
        per_mr_quota: quotas,
        filler,
        rng_seed,
        rates: Some(normalized),
    };
    Ok(finish(suite, plan, indices))
}

/// Random partition of a dataset into `fold_count` folds whose sizes differ
/// by at most one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldSplit {
    pub fold_count: usize,
    pub assignment: BTreeMap<String, usize>,
    pub rng_seed: u64,
}

pub const DEFAULT_FOLD_COUNT: usize = 10;

impl FoldSplit {
    pub fn new(example_ids: &[String], fold_count: usize, rng_seed: u64) -> Result<Self, AugmentError> {
        let unique: BTreeSet<&String> = example_ids.iter().collect();
        if unique.len() != example_ids.len() {
            return Err(AugmentError::Dataset(DatasetError::InvalidExample {
                example_id: String::new(),
                message: "duplicate example ids".into(),
            }));
        }
        if fold_count < 2 || fold_count > example_ids.len() {
            return Err(AugmentError::FoldCount(example_ids.len()));
        }
        let mut order: Vec<&String> = example_ids.iter().collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(rng_seed));
        let assignment = order
            .into_iter()
            .enumerate()
            .map(|(pos, id)| (id.clone(), pos % fold_count))
            .collect();
        Ok(FoldSplit {
            fold_count,
            assignment,
            rng_seed,
        })
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.fold_count];
        for f in self.assignment.values() {
            sizes[*f] += 1;
        }
        sizes
    }

    /// `(training, validation)` for one fold, each in dataset order.
    /// Examples missing from the split are an error.
    pub fn partition(&self, examples: &[Example], fold: usize) -> Result<(Vec<Example>, Vec<Example>), AugmentError> {
        if fold >= self.fold_count {
            return Err(AugmentError::FoldIndex {
                fold,
                count: self.fold_count,
            });
        }
        let mut train = Vec::new();
        let mut valid = Vec::new();
        for e in examples {
            match self.assignment.get(&e.example_id) {
                Some(f) if *f == fold => valid.push(e.clone()),
                Some(_) => train.push(e.clone()),
                None => {
                    return Err(AugmentError::Dataset(DatasetError::InvalidExample {
                        example_id: e.example_id.clone(),
                        message: "not in the fold split".into(),
                    }))
                }
            }
        }
        Ok((train, valid))
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut v = serde_json::to_vec_pretty(self).expect("fold split serializes");
        v.push(b'\n');
        v
    }

    /// Writes `folds.json` plus `fold_<i>_train.json` and
    /// `fold_<i>_validation.json` for every fold.
    pub fn write_fold_files(&self, examples: &[Example], dir: &Path) -> Result<Vec<PathBuf>, AugmentError> {
        fs::create_dir_all(dir).map_err(|source| AugmentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = vec![dir.join("folds.json")];
        write_file(&written[0], &self.to_json())?;
        for f in 0..self.fold_count {
            let (train, valid) = self.partition(examples, f)?;
            for (name, part) in [("train", &train), ("validation", &valid)] {
                let p = dir.join(format!("fold_{f}_{name}.json"));
                write_file(&p, &serialize_examples(part))?;
                written.push(p);
            }
        }
        Ok(written)
    }
}

/// Generates cases over one validation fold, runs `adapter` (a model
/// trained on the other folds) and returns per-relation inconsistency
/// fractions in `[0, 1]`. Relations with no judged case are absent.
#[allow(clippy::too_many_arguments)]
pub fn measure_fold_rates(
    examples: &[Example],
    schemas: &[Schema],
    adapter: &dyn ModelAdapter,
    split: &FoldSplit,
    fold: usize,
    cfg: &GenerationConfig,
    res: &Resources,
    opts: MatchOptions,
) -> Result<BTreeMap<MrTag, f64>, AugmentError> {
    let (_, valid) = split.partition(examples, fold)?;
    let suite = generate(&valid, schemas, cfg, res)?;
    let records = harness::run(adapter, &suite, &valid, schemas, opts)?;
    let mut tally: BTreeMap<MrTag, (usize, usize)> = BTreeMap::new();
    for r in &records {
        let e = tally.entry(r.mr).or_default();
        match r.verdict {
            Verdict::Inconsistent => {
                e.0 += 1;
                e.1 += 1;
            }
            Verdict::Consistent => e.1 += 1,
            Verdict::ModelFailure => {}
        }
    }
    Ok(tally
        .into_iter()
        .filter(|(_, (_, c))| *c > 0)
        .map(|(m, (i, c))| (m, i as f64 / c as f64))
        .collect())
}

/// Number of synthetic examples `scale` allows next to `original` ones.
pub fn augment_target(original: usize, scale: f64) -> usize {
    (scale * original as f64 + 1e-9).floor() as usize
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RenamedId {
    pub case_id: String,
    pub proposed: String,
    pub assigned: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AugmentManifest {
    pub scale: f64,
    pub original_examples: usize,
    pub synthetic_examples: usize,
    pub target_synthetic: usize,
    pub original_schemas: usize,
    pub transformed_schemas: usize,
    /// Fresh identifiers that collided and got a suffix.
    pub renamed: Vec<RenamedId>,
    /// `case_id -> (example_id, db_id)` for every synthetic example.
    pub cases: BTreeMap<String, (String, String)>,
}

pub struct Augmented {
    pub examples: Vec<Example>,
    pub schemas: Vec<Schema>,
    pub manifest: AugmentManifest,
}

fn fresh(base: &str, taken: &BTreeSet<String>, sep: &str) -> String {
    if !taken.contains(base) {
        return base.to_string();
    }
    (2..)
        .map(|i| format!("{base}{sep}{i}"))
        .find(|c| !taken.contains(c))
        .expect("unbounded suffixes")
}

/// Merges the original dataset with sampled cases. Utterance cases keep
/// their seed's `db_id`; each distinct transformed schema gets one fresh
/// `db_id` of the form `<orig>__<mr>__<hash8>`.
pub fn build_augmented(
    original: &[Example],
    original_schemas: &[Schema],
    sampled: &[TransformedCase],
    scale: f64,
) -> Result<Augmented, AugmentError> {
    if !scale.is_finite() || scale < 1.0 {
        return Err(AugmentError::Scale(scale));
    }
    let target = augment_target(original.len(), scale);
    if sampled.len() > target {
        return Err(AugmentError::SampleTooLarge {
            got: sampled.len(),
            target,
            scale,
        });
    }
    let by_db: HashMap<&str, &Schema> = original_schemas.iter().map(|s| (s.db_id.as_str(), s)).collect();
    let mut db_ids: BTreeSet<String> = original_schemas.iter().map(|s| s.db_id.clone()).collect();
    let mut example_ids: BTreeSet<String> = original.iter().map(|e| e.example_id.clone()).collect();
    let mut schemas: Vec<Schema> = original_schemas.to_vec();
    let mut examples: Vec<Example> = original.to_vec();
    let mut assigned: HashMap<(String, String), String> = HashMap::new();
    let mut renamed = Vec::new();
    let mut cases = BTreeMap::new();

    for c in sampled {
        let Some(seed_schema) = by_db.get(c.db_id.as_str()) else {
            return Err(AugmentError::UnknownDb {
                case_id: c.case_id.clone(),
                db_id: c.db_id.clone(),
            });
        };
        let db_id = if c.mr.is_utterance() {
            c.db_id.clone()
        } else {
            let mut s = (*c.schema).clone();
            s.db_id = seed_schema.db_id.clone();
            let fp = s.fingerprint();
            let key = (c.db_id.clone(), fp.clone());
            match assigned.get(&key) {
                Some(id) => id.clone(),
                None => {
                    let proposed = format!("{}__{}__{}", c.db_id, c.mr.code(), &fp[..8]);
                    let id = fresh(&proposed, &db_ids, "_");
                    if id != proposed {
                        renamed.push(RenamedId {
                            case_id: c.case_id.clone(),
                            proposed,
                            assigned: id.clone(),
                        });
                    }
                    db_ids.insert(id.clone());
                    assigned.insert(key, id.clone());
                    s.db_id = id.clone();
                    schemas.push(s);
                    id
                }
            }
        };
        let example_id = fresh(&c.case_id, &example_ids, "#");
        if example_id != c.case_id {
            renamed.push(RenamedId {
                case_id: c.case_id.clone(),
                proposed: c.case_id.clone(),
                assigned: example_id.clone(),
            });
        }
        example_ids.insert(example_id.clone());
        cases.insert(c.case_id.clone(), (example_id.clone(), db_id.clone()));
        examples.push(Example {
            example_id,
            db_id,
            utterance: c.utterance.clone(),
            gold_sql: c.gold_sql.clone(),
        });
    }
    let manifest = AugmentManifest {
        scale,
        original_examples: original.len(),
        synthetic_examples: sampled.len(),
        target_synthetic: target,
        original_schemas: original_schemas.len(),
        transformed_schemas: schemas.len() - original_schemas.len(),
        renamed,
        cases,
    };
    Ok(Augmented {
        examples,
        schemas,
        manifest,
    })
}

/// [`build_augmented`] written to `out_dir` as `train.json`, `tables.json`
/// and `manifest.json`.
pub fn emit_augmented(
    original: &[Example],
    original_schemas: &[Schema],
    sampled: &[TransformedCase],
    scale: f64,
    out_dir: &Path,
) -> Result<AugmentManifest, AugmentError> {
    let aug = build_augmented(original, original_schemas, sampled, scale)?;
    fs::create_dir_all(out_dir).map_err(|source| AugmentError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(&out_dir.join("train.json"), &serialize_examples(&aug.examples))?;
    write_file(&out_dir.join("tables.json"), &serialize_schemas(&aug.schemas))?;
    let mut m = serde_json::to_vec_pretty(&aug.manifest).expect("manifest serializes");
    m.push(b'\n');
    write_file(&out_dir.join("manifest.json"), &m)?;
    Ok(aug.manifest)
}
