//! Utterance naturalness.
//!
//! `H(x)` is the mean negative natural-log probability of the tokens of `x`
//! under a language model and the fluency score is `f(x) = 1 / (1 + H(x))`.
//! The built-in model is an add-k smoothed n-gram model trained on the seed
//! corpus. Other models plug in through [`TokenProbabilityModel`] or as an
//! external command speaking a JSONL batch protocol ([`ExternalScorer`]).

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, BufReader, Write};
use std::process::{Command, Stdio};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::fingerprint::sha256_hex;
use crate::text::token_strings;

pub const UNK: &str = "<unk>";
pub const BOS: &str = "<s>";

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FluencyError {
    #[error("utterance has no tokens")]
    EmptyUtterance,
    #[error("training corpus is empty")]
    EmptyCorpus,
    #[error("invalid model parameters: {0}")]
    InvalidModel(String),
    #[error("external scorer: {0}")]
    External(String),
}

/// Conditional token probabilities. `log_prob` must be finite and `<= 0`.
pub trait TokenProbabilityModel: Send + Sync {
    fn log_prob(&self, token: &str, context: &[String]) -> f64;

    /// Short description for reports.
    fn describe(&self) -> String;
}

/// Mean negative log-probability of a token sequence.
pub fn entropy_from_log_probs(log_probs: &[f64]) -> Result<f64, FluencyError> {
    if log_probs.is_empty() {
        return Err(FluencyError::EmptyUtterance);
    }
    Ok(-log_probs.iter().sum::<f64>() / log_probs.len() as f64)
}

pub fn fluency_from_entropy(h: f64) -> f64 {
    1.0 / (1.0 + h)
}

pub fn token_log_probs(tokens: &[String], lm: &dyn TokenProbabilityModel) -> Vec<f64> {
    (0..tokens.len()).map(|i| lm.log_prob(&tokens[i], &tokens[..i])).collect()
}

pub fn entropy(x: &str, lm: &dyn TokenProbabilityModel) -> Result<f64, FluencyError> {
    let tokens = token_strings(x);
    entropy_from_log_probs(&token_log_probs(&tokens, lm))
}

pub fn fluency(x: &str, lm: &dyn TokenProbabilityModel) -> Result<f64, FluencyError> {
    entropy(x, lm).map(fluency_from_entropy)
}

#[derive(Debug, Clone, Default)]
struct ContextCounts {
    total: u64,
    next: HashMap<String, u64>,
}

/// Add-k smoothed n-gram model over lowercase tokens, with `<s>` padding on
/// the left and an explicit `<unk>` vocabulary entry.
///
/// A context never seen in training backs off to its longest seen suffix.
/// The backoff factor is 1: every distribution stays a proper add-k
/// distribution over the vocabulary, so probabilities always sum to 1.
#[derive(Debug, Clone)]
pub struct NgramModel {
    order: usize,
    k: f64,
    vocab: BTreeSet<String>,
    counts: HashMap<Vec<String>, ContextCounts>,
}

pub const BACKOFF_FACTOR: f64 = 1.0;

pub fn train_ngram(corpus: &[String], order: usize, k: f64) -> Result<NgramModel, FluencyError> {
    if order == 0 {
        return Err(FluencyError::InvalidModel("order must be at least 1".into()));
    }
    if !(k > 0.0 && k.is_finite()) {
        return Err(FluencyError::InvalidModel("k must be positive".into()));
    }
    let sentences: Vec<Vec<String>> = corpus.iter().map(|s| token_strings(s)).filter(|t| !t.is_empty()).collect();
    if sentences.is_empty() {
        return Err(FluencyError::EmptyCorpus);
    }
    let mut vocab: BTreeSet<String> = sentences.iter().flatten().cloned().collect();
    vocab.insert(UNK.to_string());
    let mut counts: HashMap<Vec<String>, ContextCounts> = HashMap::new();
    for s in &sentences {
        let mut padded = vec![BOS.to_string(); order - 1];
        padded.extend(s.iter().cloned());
        for i in order - 1..padded.len() {
            let w = &padded[i];
            for m in 0..order {
                let ctx = padded[i - m..i].to_vec();
                let e = counts.entry(ctx).or_default();
                e.total += 1;
                *e.next.entry(w.clone()).or_default() += 1;
            }
        }
    }
    Ok(NgramModel {
        order,
        k,
        vocab,
        counts,
    })
}

impl NgramModel {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn k(&self) -> f64 {
        self.k
    }

    /// Vocabulary size including `<unk>`.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    pub fn vocabulary(&self) -> impl Iterator<Item = &str> {
        self.vocab.iter().map(String::as_str)
    }

    fn map_token<'a>(&'a self, t: &'a str) -> &'a str {
        if self.vocab.contains(t) {
            t
        } else {
            UNK
        }
    }

    /// The context actually used for prediction after padding and backoff.
    fn effective_context(&self, context: &[String]) -> (Vec<String>, &ContextCounts) {
        let n = self.order - 1;
        let mut full: Vec<String> = vec![BOS.to_string(); n.saturating_sub(context.len())];
        let start = context.len().saturating_sub(n);
        full.extend(context[start..].iter().map(|t| self.map_token(t).to_string()));
        for m in (0..=n).rev() {
            let ctx = full[n - m..].to_vec();
            if let Some(c) = self.counts.get(&ctx) {
                if c.total > 0 {
                    return (ctx, c);
                }
            }
        }
        unreachable!("the empty context is always trained")
    }

    pub fn prob(&self, token: &str, context: &[String]) -> f64 {
        let (_, c) = self.effective_context(context);
        let w = self.map_token(token);
        let count = c.next.get(w).copied().unwrap_or(0) as f64;
        (count + self.k) / (c.total as f64 + self.k * self.vocab.len() as f64)
    }

    /// Full next-token distribution for a context.
    pub fn distribution(&self, context: &[String]) -> Vec<(String, f64)> {
        self.vocab.iter().map(|w| (w.clone(), self.prob(w, context))).collect()
    }
}

impl TokenProbabilityModel for NgramModel {
    fn log_prob(&self, token: &str, context: &[String]) -> f64 {
        self.prob(token, context).ln()
    }

    fn describe(&self) -> String {
        format!("builtin ngram order={} k={} vocab={}", self.order, self.k, self.vocab.len())
    }
}

/// Batch scoring of utterances into fluency values.
pub trait FluencyScorer: Sync {
    fn score_batch(&self, utterances: &[String]) -> Vec<Result<f64, FluencyError>>;

    fn describe(&self) -> String;
}

/// Scores with an in-process model, in parallel.
pub struct ModelScorer<'a>(pub &'a dyn TokenProbabilityModel);

impl FluencyScorer for ModelScorer<'_> {
    fn score_batch(&self, utterances: &[String]) -> Vec<Result<f64, FluencyError>> {
        utterances.par_iter().map(|u| fluency(u, self.0)).collect()
    }

    fn describe(&self) -> String {
        self.0.describe()
    }
}

#[derive(Serialize)]
struct ScoreRequest<'a> {
    id: String,
    tokens: &'a [String],
}

#[derive(Deserialize)]
struct ScoreResponse {
    id: String,
    log_probs: Vec<f64>,
}

/// External model behind a shell command. The command reads
/// `{"id", "tokens"}` lines on stdin and writes `{"id", "log_probs"}` lines
/// on stdout, one log-probability per token.
#[derive(Debug, Clone)]
pub struct ExternalScorer {
    pub command: String,
}

impl ExternalScorer {
    pub fn new(command: impl Into<String>) -> Self {
        ExternalScorer { command: command.into() }
    }

    /// Per-utterance token log-probabilities.
    pub fn log_probs(&self, utterances: &[String]) -> Result<Vec<Result<Vec<f64>, FluencyError>>, FluencyError> {
        let ext = |m: String| FluencyError::External(m);
        let tokens: Vec<Vec<String>> = utterances.iter().map(|u| token_strings(u)).collect();
        let mut input = Vec::new();
        for (i, t) in tokens.iter().enumerate() {
            serde_json::to_writer(&mut input, &ScoreRequest { id: i.to_string(), tokens: t })
                .expect("request serializes");
            input.push(b'\n');
        }
        let mut child = Command::new("sh")
            .arg("-c")
            .arg(&self.command)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .spawn()
            .map_err(|e| ext(format!("cannot start `{}`: {e}", self.command)))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&input));
        let stdout = child.stdout.take().expect("piped stdout");
        let mut got: HashMap<usize, Vec<f64>> = HashMap::new();
        for line in BufReader::new(stdout).lines() {
            let line = line.map_err(|e| ext(e.to_string()))?;
            if line.trim().is_empty() {
                continue;
            }
            let r: ScoreResponse =
                serde_json::from_str(&line).map_err(|e| ext(format!("bad response line `{line}`: {e}")))?;
            if let Ok(i) = r.id.parse::<usize>() {
                got.insert(i, r.log_probs);
            }
        }
        let _ = writer.join();
        let status = child.wait().map_err(|e| ext(e.to_string()))?;
        if !status.success() {
            return Err(ext(format!("`{}` exited with {status}", self.command)));
        }
        Ok(tokens
            .iter()
            .enumerate()
            .map(|(i, t)| match got.remove(&i) {
                None => Err(ext(format!("no response for id {i}"))),
                Some(lp) if lp.len() != t.len() => Err(ext(format!(
                    "id {i}: {} log-probs for {} tokens",
                    lp.len(),
                    t.len()
                ))),
                Some(lp) if lp.iter().any(|v| !v.is_finite() || *v > 0.0) => {
                    Err(ext(format!("id {i}: log-probs must be finite and <= 0")))
                }
                Some(lp) => Ok(lp),
            })
            .collect())
    }
}

impl FluencyScorer for ExternalScorer {
    fn score_batch(&self, utterances: &[String]) -> Vec<Result<f64, FluencyError>> {
        match self.log_probs(utterances) {
            Ok(all) => all
                .into_iter()
                .map(|r| r.and_then(|lp| entropy_from_log_probs(&lp)).map(fluency_from_entropy))
                .collect(),
            Err(e) => utterances.iter().map(|_| Err(e.clone())).collect(),
        }
    }

    fn describe(&self) -> String {
        format!("external `{}`", self.command)
    }
}

/// Scores a corpus, scoring each distinct utterance once.
pub fn score_corpus(utterances: &[String], scorer: &dyn FluencyScorer) -> Vec<Result<f64, FluencyError>> {
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut unique: Vec<String> = Vec::new();
    let slots: Vec<usize> = utterances
        .iter()
        .map(|u| {
            *index.entry(sha256_hex(u.as_bytes())).or_insert_with(|| {
                unique.push(u.clone());
                unique.len() - 1
            })
        })
        .collect();
    let scores = scorer.score_batch(&unique);
    slots.into_iter().map(|i| scores[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub count: usize,
    pub scored: usize,
    pub errors: usize,
    pub mean: f64,
    pub bottom_quartile_mean: f64,
    /// `cdf[p - 1]` is the nearest-rank `p`-th percentile score, p = 1..=100.
    pub cdf: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluencyReport {
    pub model: String,
    pub original: CorpusSummary,
    pub synthetic: CorpusSummary,
    /// `(synthetic.mean - original.mean) / original.mean`.
    pub relative_delta: f64,
    pub bottom_quartile_relative_delta: f64,
}

pub fn percentile_points(sorted: &[f64]) -> Vec<f64> {
    if sorted.is_empty() {
        return Vec::new();
    }
    let n = sorted.len();
    (1..=100)
        .map(|p| {
            let rank = (p * n).div_ceil(100).max(1);
            sorted[rank - 1]
        })
        .collect()
}

pub fn summarize(scores: &[Result<f64, FluencyError>]) -> CorpusSummary {
    let mut ok: Vec<f64> = scores.iter().filter_map(|s| s.as_ref().ok().copied()).collect();
    ok.sort_by(f64::total_cmp);
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    let quartile = ok.len().div_ceil(4);
    CorpusSummary {
        count: scores.len(),
        scored: ok.len(),
        errors: scores.len() - ok.len(),
        mean: mean(&ok),
        bottom_quartile_mean: mean(&ok[..quartile]),
        cdf: percentile_points(&ok),
    }
}

fn relative(a: f64, b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        (b - a) / a
    }
}

pub fn corpus_stats(original: &[String], synthetic: &[String], scorer: &dyn FluencyScorer) -> FluencyReport {
    let o = summarize(&score_corpus(original, scorer));
    let s = summarize(&score_corpus(synthetic, scorer));
    FluencyReport {
        model: scorer.describe(),
        relative_delta: relative(o.mean, s.mean),
        bottom_quartile_relative_delta: relative(o.bottom_quartile_mean, s.bottom_quartile_mean),
        original: o,
        synthetic: s,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Fixed(Vec<f64>);

    impl TokenProbabilityModel for Fixed {
        fn log_prob(&self, _token: &str, context: &[String]) -> f64 {
            self.0[context.len() % self.0.len()]
        }

        fn describe(&self) -> String {
            "fixed".into()
        }
    }

    #[test]
    fn analytic_entropies() {
        assert_eq!(entropy("a b c", &Fixed(vec![0.0])).unwrap(), 0.0);
        assert!((entropy("a b c", &Fixed(vec![-2.0])).unwrap() - 2.0).abs() < 1e-12);
        assert!((entropy("a b c", &Fixed(vec![-1.0, -2.0, -3.0])).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fluency_from_entropy(0.0), 1.0);
        assert_eq!(fluency_from_entropy(1.0), 0.5);
        assert_eq!(entropy("  ", &Fixed(vec![0.0])), Err(FluencyError::EmptyUtterance));
    }

    #[test]
    fn bigram_hand_count() {
        let k = 0.1;
        let m = train_ngram(&["a b a b".to_string()], 2, k).unwrap();
        assert_eq!(m.vocab_size(), 3);
        let p = m.prob("b", &["a".to_string()]);
        assert!((p - (2.0 + k) / (2.0 + k * 3.0)).abs() < 1e-15);
    }

    #[test]
    fn distributions_normalize() {
        let corpus: Vec<String> = ["what is the age of all singers ?", "list the names", "how many singers are there ?"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        let m = train_ngram(&corpus, 3, 0.1).unwrap();
        let ctxs: Vec<Vec<String>> = vec![
            vec![],
            vec!["what".into()],
            vec!["what".into(), "is".into()],
            vec!["zzz".into(), "qqq".into()],
            vec!["the".into(), "names".into()],
        ];
        for c in ctxs {
            let total: f64 = m.distribution(&c).iter().map(|(_, p)| p).sum();
            assert!((total - 1.0).abs() < 1e-9, "{c:?}: {total}");
        }
    }

    #[test]
    fn casing_does_not_matter() {
        let m = train_ngram(&["What is the age".to_string()], 3, 0.1).unwrap();
        assert_eq!(entropy("WHAT IS THE AGE", &m).unwrap(), entropy("what is the age", &m).unwrap());
    }

    #[test]
    fn identical_corpora_have_zero_delta() {
        let corpus: Vec<String> = vec!["a b c".into(), "a c".into(), "b b".into()];
        let m = train_ngram(&corpus, 3, 0.1).unwrap();
        let r = corpus_stats(&corpus, &corpus, &ModelScorer(&m));
        assert_eq!(r.relative_delta, 0.0);
        assert_eq!(r.original.cdf, r.synthetic.cdf);
        assert_eq!(r.original.cdf.len(), 100);
        assert!(r.original.cdf.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn percentile_nearest_rank() {
        let v = [1.0, 2.0, 3.0, 4.0];
        let p = percentile_points(&v);
        assert_eq!(p[24], 1.0);
        assert_eq!(p[25], 2.0);
        assert_eq!(p[99], 4.0);
    }

    #[test]
    fn external_scorer_protocol() {
        let cmd = r#"while IFS= read -r line; do id=$(printf '%s' "$line" | sed 's/.*"id":"\([0-9]*\)".*/\1/'); n=$(printf '%s' "$line" | grep -o '","' | wc -l); lp="-1"; i=1; while [ $i -lt $n ]; do lp="$lp,-1"; i=$((i+1)); done; printf '{"id":"%s","log_probs":[%s]}\n' "$id" "$lp"; done"#;
        let s = ExternalScorer::new(cmd);
        let out = s.score_batch(&["a b c".to_string(), "d".to_string()]);
        assert_eq!(out, vec![Ok(0.5), Ok(0.5)]);
        let bad = ExternalScorer::new(r#"while read -r l; do echo '{"id":"0","log_probs":[-1]}'; done"#);
        let out = bad.score_batch(&["a b".to_string()]);
        assert!(out[0].is_err());
    }

    proptest! {
        #[test]
        fn fluency_is_antitone(a in 0.0f64..1e6, b in 0.0f64..1e6) {
            let (fa, fb) = (fluency_from_entropy(a), fluency_from_entropy(b));
            prop_assert!(fa > 0.0 && fa <= 1.0);
            if a < b { prop_assert!(fa > fb); }
        }
    }
}
