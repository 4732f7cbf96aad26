//! Prefix and synonym relations over utterances.
//!
//! All four relations work on the shared tokenizer in [`crate::text`]:
//! phrases match whole lowercase word tokens separated only by whitespace,
//! so "sum" never matches inside "summary". Each returned variant carries a
//! small JSON note of what was changed.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::sql::Aggregate;
use crate::text::{match_words_at, normalize_phrase, phrase_words, tokenize, Token};

pub const DEFAULT_PREFIXES_JSON: &str = include_str!("../data/lexicon/prefixes.json");
pub const DEFAULT_SYNONYMS_JSON: &str = include_str!("../data/lexicon/synonyms.json");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("lexicon: {0}")]
pub struct LexiconError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrefixKind {
    CommonInterrogative,
    CommonDeclarative,
    SpecialInterrogative,
    SpecialDeclarative,
}

impl PrefixKind {
    pub fn is_common(self) -> bool {
        matches!(self, PrefixKind::CommonInterrogative | PrefixKind::CommonDeclarative)
    }

    pub fn is_interrogative(self) -> bool {
        matches!(self, PrefixKind::CommonInterrogative | PrefixKind::SpecialInterrogative)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PrefixLexicon {
    pub common_interrogative: Vec<String>,
    pub common_declarative: Vec<String>,
    pub special_interrogative: Vec<String>,
    pub special_declarative: Vec<String>,
}

/// A prefix found at the start of an utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PrefixMatch {
    pub phrase: String,
    pub kind: PrefixKind,
    /// Byte offset where the rest of the utterance starts (after whitespace).
    pub rest_start: usize,
}

/// One rewritten utterance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UtteranceVariant {
    pub utterance: String,
    pub provenance: serde_json::Value,
}

fn check_phrase(p: &str, what: &str) -> Result<(), LexiconError> {
    if p.is_empty() {
        return Err(LexiconError(format!("empty phrase in {what}")));
    }
    if normalize_phrase(p) != p {
        return Err(LexiconError(format!(
            "phrase `{p}` in {what} is not lowercase and whitespace-normalized"
        )));
    }
    if phrase_words(p).join(" ") != p {
        return Err(LexiconError(format!("phrase `{p}` in {what} contains punctuation")));
    }
    Ok(())
}

impl PrefixLexicon {
    pub fn default_lexicon() -> Self {
        Self::from_json(DEFAULT_PREFIXES_JSON.as_bytes()).expect("bundled prefix lexicon is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, LexiconError> {
        let lex: PrefixLexicon =
            serde_json::from_slice(bytes).map_err(|e| LexiconError(e.to_string()))?;
        lex.validate()?;
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| LexiconError(format!("{}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    pub fn validate(&self) -> Result<(), LexiconError> {
        let mut seen: BTreeMap<&str, PrefixKind> = BTreeMap::new();
        for (kind, phrases) in self.sets() {
            for p in phrases {
                check_phrase(p, "prefix lexicon")?;
                if let Some(prev) = seen.insert(p, kind) {
                    return Err(LexiconError(format!(
                        "prefix `{p}` listed twice ({prev:?} and {kind:?})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sets(&self) -> [(PrefixKind, &[String]); 4] {
        [
            (PrefixKind::CommonInterrogative, &self.common_interrogative),
            (PrefixKind::CommonDeclarative, &self.common_declarative),
            (PrefixKind::SpecialInterrogative, &self.special_interrogative),
            (PrefixKind::SpecialDeclarative, &self.special_declarative),
        ]
    }

    /// Common prefixes, interrogative first, in lexicon order.
    pub fn common(&self) -> impl Iterator<Item = &String> {
        self.common_interrogative.iter().chain(&self.common_declarative)
    }

    /// Longest lexicon prefix at the very start of `u`.
    pub fn match_prefix(&self, u: &str) -> Option<PrefixMatch> {
        let tokens = tokenize(u);
        let mut best: Option<(usize, &str, PrefixKind)> = None;
        for (kind, phrases) in self.sets() {
            for p in phrases {
                let words = phrase_words(p);
                if let Some(end) = match_words_at(u, &tokens, 0, &words) {
                    if best.is_none_or(|(e, _, _)| end > e) {
                        best = Some((end, p, kind));
                    }
                }
            }
        }
        best.map(|(end, phrase, kind)| {
            let rest_start = tokens.get(end).map_or(u.len(), |t| t.start);
            PrefixMatch {
                phrase: phrase.to_string(),
                kind,
                rest_start,
            }
        })
    }
}

fn has_word(s: &str) -> bool {
    tokenize(s).iter().any(|t| t.is_word)
}

/// Prepends each common declarative prefix to an utterance that opens with
/// an interrogative prefix.
pub fn prefix_insert(u: &str, lex: &PrefixLexicon) -> Vec<UtteranceVariant> {
    let Some(m) = lex.match_prefix(u) else {
        return Vec::new();
    };
    if !m.kind.is_interrogative() {
        return Vec::new();
    }
    // The displaced interrogative is no longer sentence-initial.
    let body = lower_first(u.trim_start());
    lex.common_declarative
        .iter()
        .map(|p| UtteranceVariant {
            utterance: upper_first(&format!("{p} {body}")),
            provenance: json!({"inserted": p, "before": m.phrase}),
        })
        .collect()
}

fn upper_first(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn lower_first(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_lowercase().chain(c).collect()).unwrap_or_default()
}

/// Strips the longest common prefix. Special prefixes are kept.
pub fn prefix_remove(u: &str, lex: &PrefixLexicon) -> Vec<UtteranceVariant> {
    let Some(m) = lex.match_prefix(u) else {
        return Vec::new();
    };
    if !m.kind.is_common() {
        return Vec::new();
    }
    let rest = u[m.rest_start..].trim();
    if !has_word(rest) {
        return Vec::new();
    }
    vec![UtteranceVariant {
        utterance: upper_first(rest),
        provenance: json!({"removed": m.phrase}),
    }]
}

/// Swaps the matched common prefix for every other common prefix.
pub fn prefix_substitute(u: &str, lex: &PrefixLexicon) -> Vec<UtteranceVariant> {
    let Some(m) = lex.match_prefix(u) else {
        return Vec::new();
    };
    if !m.kind.is_common() {
        return Vec::new();
    }
    let rest = u[m.rest_start..].trim();
    if !has_word(rest) {
        return Vec::new();
    }
    lex.common()
        .filter(|p| **p != m.phrase)
        .map(|p| UtteranceVariant {
            utterance: upper_first(&format!("{p} {rest}")),
            provenance: json!({"replaced": m.phrase, "with": p}),
        })
        .collect()
}

/// Aggregate phrase groups. A phrase listed under more than one aggregate is
/// opaque: it does not pin down which aggregate is meant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SynonymGroups {
    pub groups: BTreeMap<Aggregate, Vec<String>>,
    pub opaque_phrases: BTreeSet<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SynonymFile {
    groups: BTreeMap<Aggregate, Vec<String>>,
    #[serde(default)]
    opaque_phrases: Option<BTreeSet<String>>,
}

#[derive(Serialize)]
struct SynonymFileOut<'a> {
    groups: &'a BTreeMap<Aggregate, Vec<String>>,
    opaque_phrases: &'a BTreeSet<String>,
}

impl SynonymGroups {
    pub fn default_groups() -> Self {
        Self::from_json(DEFAULT_SYNONYMS_JSON.as_bytes()).expect("bundled synonym groups are valid")
    }

    pub fn new(groups: BTreeMap<Aggregate, Vec<String>>) -> Result<Self, LexiconError> {
        if groups.contains_key(&Aggregate::None) {
            return Err(LexiconError("group key must be an aggregate, not NONE".into()));
        }
        let mut membership: BTreeMap<&str, usize> = BTreeMap::new();
        for (agg, phrases) in &groups {
            let mut local = BTreeSet::new();
            for p in phrases {
                check_phrase(p, "synonym groups")?;
                if !local.insert(p.as_str()) {
                    return Err(LexiconError(format!("phrase `{p}` repeated in {agg:?}")));
                }
                *membership.entry(p).or_default() += 1;
            }
        }
        let opaque_phrases = membership
            .into_iter()
            .filter(|(_, n)| *n >= 2)
            .map(|(p, _)| p.to_string())
            .collect();
        Ok(SynonymGroups {
            groups,
            opaque_phrases,
        })
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, LexiconError> {
        let raw: SynonymFile =
            serde_json::from_slice(bytes).map_err(|e| LexiconError(e.to_string()))?;
        let syn = Self::new(raw.groups)?;
        if let Some(listed) = raw.opaque_phrases {
            if let Some(p) = listed.iter().find(|p| !syn.opaque_phrases.contains(*p)) {
                return Err(LexiconError(format!(
                    "opaque phrase `{p}` does not appear in two or more groups"
                )));
            }
            if listed != syn.opaque_phrases {
                return Err(LexiconError("opaque_phrases omits a phrase shared by two groups".into()));
            }
        }
        Ok(syn)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, LexiconError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| LexiconError(format!("{}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }

    pub fn to_json(&self) -> Vec<u8> {
        serde_json::to_vec(&SynonymFileOut {
            groups: &self.groups,
            opaque_phrases: &self.opaque_phrases,
        })
        .expect("synonym groups serialize")
    }

    fn all_phrases(&self) -> BTreeSet<&str> {
        self.groups.values().flatten().map(String::as_str).collect()
    }

    /// Replacement candidates for `phrase`, in group order. An opaque phrase
    /// only trades places with phrases sharing all of its groups.
    fn alternatives(&self, phrase: &str, include_opaque: bool) -> Vec<&str> {
        let owners: Vec<&Vec<String>> =
            self.groups.values().filter(|g| g.iter().any(|p| p == phrase)).collect();
        let mut out: Vec<&str> = Vec::new();
        for g in &owners {
            for p in g.iter() {
                if p == phrase || out.contains(&p.as_str()) {
                    continue;
                }
                if !owners.iter().all(|o| o.contains(p)) {
                    continue;
                }
                if !include_opaque && self.opaque_phrases.contains(p) {
                    continue;
                }
                out.push(p);
            }
        }
        out
    }
}

/// Non-overlapping, leftmost-longest phrase occurrences as token ranges.
fn find_occurrences<'a>(u: &str, tokens: &[Token], phrases: &BTreeSet<&'a str>) -> Vec<(usize, usize, &'a str)> {
    let compiled: Vec<(&str, Vec<String>)> = phrases.iter().map(|p| (*p, phrase_words(p))).collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let best = compiled
            .iter()
            .filter_map(|(p, w)| match_words_at(u, tokens, i, w).map(|end| (end, *p)))
            .max_by_key(|(end, _)| *end);
        match best {
            Some((end, p)) => {
                out.push((i, end, p));
                i = end;
            }
            None => i += 1,
        }
    }
    out
}

/// One variant per (occurrence, alternative phrase); exactly one site is
/// rewritten per variant.
pub fn synonym_substitute(u: &str, syn: &SynonymGroups, include_opaque: bool) -> Vec<UtteranceVariant> {
    let tokens = tokenize(u);
    let phrases = syn.all_phrases();
    let mut out = Vec::new();
    for (start, end, phrase) in find_occurrences(u, &tokens, &phrases) {
        let (a, b) = (tokens[start].start, tokens[end - 1].end);
        let capital = u[a..].chars().next().is_some_and(char::is_uppercase);
        for alt in syn.alternatives(phrase, include_opaque) {
            let mut replacement = alt.to_string();
            if capital {
                replacement = capitalize(&replacement);
            }
            out.push(UtteranceVariant {
                utterance: format!("{}{}{}", &u[..a], replacement, &u[b..]),
                provenance: json!({"replaced": phrase, "with": alt, "at": a}),
            });
        }
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) => c.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}
