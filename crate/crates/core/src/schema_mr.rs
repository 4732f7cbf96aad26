//! The eight schema rewrites.
//!
//! Every rewrite is usage-aware: content-changing kinds only touch tables
//! and columns the gold query does not use, so the gold SQL binds against
//! the rewritten schema exactly as before. Shuffles and opaque-key variants
//! leave every name in place and only change order or key metadata.
//!
//! Candidates are enumerated in schema order. Kinds that take an `rng_seed`
//! draw at most `max_variants` of them with a ChaCha8 stream seeded from it,
//! so equal seeds give equal rewrite lists.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::Path;

use rand::seq::index::sample;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{ColumnType, DraftColumn, DraftTable, Schema, SchemaDraft};
use crate::mr::MrTag;
use crate::sql::UsageSet;

pub const DEFAULT_RENAMES_JSON: &str = include_str!("../data/lexicon/renames.json");
pub const DEFAULT_KB_JSON: &str = include_str!("../data/kb/attributes.json");

/// Indices into the schema *before* the rewrite.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Touched {
    pub tables: BTreeSet<usize>,
    pub columns: BTreeSet<usize>,
}

impl Touched {
    pub fn is_empty(&self) -> bool {
        self.tables.is_empty() && self.columns.is_empty()
    }

    /// True when nothing touched is used by the query.
    pub fn disjoint_from(&self, usage: &UsageSet) -> bool {
        self.tables.is_disjoint(&usage.used_tables) && self.columns.is_disjoint(&usage.used_columns)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemaRewrite {
    pub kind: MrTag,
    pub before_fingerprint: String,
    pub after: Schema,
    pub touched: Touched,
    pub rng_seed: Option<u64>,
    pub provenance: serde_json::Value,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{0}")]
pub struct ResourceError(pub String);

fn finish(
    kind: MrTag,
    before: &Schema,
    draft: &SchemaDraft,
    touched: Touched,
    rng_seed: Option<u64>,
    provenance: serde_json::Value,
) -> Option<SchemaRewrite> {
    match draft.build() {
        Ok(after) => Some(SchemaRewrite {
            kind,
            before_fingerprint: before.fingerprint(),
            after,
            touched,
            rng_seed,
            provenance,
        }),
        Err(e) => {
            log::warn!("{kind} rewrite of `{}` dropped: {e}", before.db_id);
            None
        }
    }
}

/// Positions of the candidates to keep: all of them when they fit, else
/// `cap` of them (rng-drawn when an rng is given, the first `cap` otherwise),
/// in ascending order.
fn pick(n: usize, cap: usize, rng: Option<&mut ChaCha8Rng>) -> Vec<usize> {
    if n <= cap {
        return (0..n).collect();
    }
    match rng {
        Some(rng) => {
            let mut v = sample(rng, n, cap).into_vec();
            v.sort_unstable();
            v
        }
        None => (0..cap).collect(),
    }
}

fn has_column(t: &DraftTable, name: &str, skip: Option<usize>) -> bool {
    t.columns
        .iter()
        .enumerate()
        .any(|(i, c)| Some(i) != skip && c.original_name.eq_ignore_ascii_case(name))
}

fn unique_column_name(t: &DraftTable, base: &str, skip: Option<usize>) -> String {
    let mut name = base.to_string();
    let mut n = 2;
    while has_column(t, &name, skip) {
        name = format!("{base}_{n}");
        n += 1;
    }
    name
}

fn unique_table_name(d: &SchemaDraft, base: &str) -> String {
    let mut name = base.to_string();
    let mut n = 2;
    while d.tables.iter().any(|t| t.original_name.eq_ignore_ascii_case(&name)) {
        name = format!("{base}_{n}");
        n += 1;
    }
    name
}

fn unused_plain_columns(schema: &Schema, usage: &UsageSet) -> Vec<usize> {
    schema
        .columns
        .iter()
        .filter(|c| !c.is_star() && !usage.uses_column(c.index) && !schema.is_key(c.index))
        .map(|c| c.index)
        .collect()
}

/// Factors one unused column out into a two-column reference table.
pub fn normalize(schema: &Schema, usage: &UsageSet, max_variants: usize, rng_seed: u64) -> Vec<SchemaRewrite> {
    let cands = unused_plain_columns(schema, usage);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    pick(cands.len(), max_variants, Some(&mut rng))
        .into_iter()
        .filter_map(|i| normalize_one(schema, cands[i], rng_seed))
        .collect()
}

fn normalize_one(schema: &Schema, col: usize, rng_seed: u64) -> Option<SchemaRewrite> {
    let mut d = SchemaDraft::from_schema(schema);
    let (ti, ci) = d.locate(col)?;
    let moved = d.tables[ti].columns[ci].clone();
    let table = &d.tables[ti];
    let link_name = unique_column_name(table, &format!("{}_link", moved.original_name), Some(ci));
    let ref_base = format!("{}_{}_ref", table.original_name, moved.original_name);
    let ref_display = format!("{} {} ref", table.name, moved.name);

    let link = DraftColumn {
        id: d.fresh_id(),
        name: format!("{} link", moved.name),
        original_name: link_name.clone(),
        col_type: ColumnType::Number,
    };
    let key = DraftColumn {
        id: d.fresh_id(),
        name: format!("{} link key", moved.name),
        original_name: format!("{link_name}_key"),
        col_type: ColumnType::Number,
    };
    let ref_name = unique_table_name(&d, &ref_base);
    let (link_id, key_id) = (link.id, key.id);
    d.tables[ti].columns[ci] = link;
    d.tables.push(DraftTable {
        name: ref_display,
        original_name: ref_name.clone(),
        columns: vec![key, moved],
    });
    d.primary_keys.push(key_id);
    d.foreign_keys.push((link_id, key_id));

    let touched = Touched {
        tables: BTreeSet::new(),
        columns: [col].into(),
    };
    let prov = json!({
        "column": schema.qualified_name(col),
        "link": link_name,
        "ref_table": ref_name,
    });
    finish(MrTag::Normalization, schema, &d, touched, Some(rng_seed), prov)
}

/// Merges an unused reference table into the table that points at it.
pub fn flatten(schema: &Schema, usage: &UsageSet, max_variants: usize) -> Vec<SchemaRewrite> {
    let eligible: Vec<usize> = schema
        .foreign_keys
        .iter()
        .enumerate()
        .filter(|(_, &(a, b))| {
            let (t, r) = (schema.columns[a].table_index, schema.columns[b].table_index);
            let Some(r) = r else { return false };
            t != Some(r)
                && !usage.uses_table(r)
                && !schema.tables[r].column_indices.iter().any(|c| usage.uses_column(*c))
        })
        .map(|(i, _)| i)
        .collect();
    pick(eligible.len(), max_variants, None)
        .into_iter()
        .filter_map(|i| flatten_one(schema, eligible[i]))
        .collect()
}

fn flatten_one(schema: &Schema, fk_index: usize) -> Option<SchemaRewrite> {
    let (a, b) = schema.foreign_keys[fk_index];
    let t = schema.columns[a].table_index?;
    let r = schema.columns[b].table_index?;
    let mut d = SchemaDraft::from_schema(schema);
    let reference = d.tables[r].clone();

    let mut renamed = Vec::new();
    let mut moved = Vec::new();
    for c in &reference.columns {
        if c.id == b || schema.is_primary_key(c.id) {
            continue;
        }
        let mut c = c.clone();
        if has_column(&d.tables[t], &c.original_name, None) {
            let base = format!("{}_{}", reference.original_name, c.original_name);
            let fresh = unique_column_name(&d.tables[t], &base, None);
            renamed.push(json!([c.original_name, fresh]));
            c.name = format!("{} {}", reference.name, c.name);
            c.original_name = fresh;
        }
        moved.push(c.original_name.clone());
        d.tables[t].columns.push(c);
    }
    d.tables.remove(r);

    let present: HashSet<usize> = d.tables.iter().flat_map(|t| t.columns.iter().map(|c| c.id)).collect();
    let mut dropped = Vec::new();
    d.foreign_keys.retain(|&(x, y)| {
        let keep = (x, y) != (a, b) && present.contains(&x) && present.contains(&y);
        if !keep && (x, y) != (a, b) {
            dropped.push(json!([schema.qualified_name(x), schema.qualified_name(y)]));
        }
        keep
    });
    d.primary_keys.retain(|c| present.contains(c));

    let touched = Touched {
        tables: [r].into(),
        columns: schema.tables[r].column_indices.iter().copied().collect(),
    };
    let prov = json!({
        "foreign_key": [schema.qualified_name(a), schema.qualified_name(b)],
        "dropped_table": reference.original_name,
        "moved": moved,
        "renamed": renamed,
        "dropped_foreign_keys": dropped,
    });
    finish(MrTag::Flattening, schema, &d, touched, None, prov)
}

/// Drops key constraints: first all foreign keys at once, then each one on
/// its own. With `remove_primary` the all-at-once variant also drops the
/// primary keys.
pub fn opaque_key(schema: &Schema, max_variants: usize, remove_primary: bool) -> Vec<SchemaRewrite> {
    let fks = &schema.foreign_keys;
    let pk_too = remove_primary && !schema.primary_keys.is_empty();
    if fks.is_empty() && !pk_too {
        return Vec::new();
    }
    let mut plans: Vec<(Vec<usize>, bool)> = vec![((0..fks.len()).collect(), pk_too)];
    if fks.len() > 1 || (pk_too && !fks.is_empty()) {
        plans.extend((0..fks.len()).map(|i| (vec![i], false)));
    }
    plans.truncate(max_variants);
    plans
        .into_iter()
        .filter_map(|(removed, pks)| {
            let mut d = SchemaDraft::from_schema(schema);
            d.foreign_keys = fks
                .iter()
                .enumerate()
                .filter(|(i, _)| !removed.contains(i))
                .map(|(_, fk)| *fk)
                .collect();
            if pks {
                d.primary_keys.clear();
            }
            let names: Vec<_> = removed
                .iter()
                .map(|&i| json!([schema.qualified_name(fks[i].0), schema.qualified_name(fks[i].1)]))
                .collect();
            let pk_names: Vec<String> = if pks {
                schema.primary_keys.iter().map(|&c| schema.qualified_name(c)).collect()
            } else {
                Vec::new()
            };
            let prov = json!({"removed_foreign_keys": names, "removed_primary_keys": pk_names});
            finish(MrTag::OpaqueKey, schema, &d, Touched::default(), None, prov)
        })
        .collect()
}

fn factorial_saturating(n: usize) -> usize {
    (1..=n).try_fold(1usize, |acc, k| acc.checked_mul(k)).unwrap_or(usize::MAX)
}

/// Lexicographic successor; false when `p` is the last permutation.
fn next_permutation(p: &mut [usize]) -> bool {
    let n = p.len();
    if n < 2 {
        return false;
    }
    let mut i = n - 1;
    while i > 0 && p[i - 1] >= p[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = n - 1;
    while p[j] <= p[i - 1] {
        j -= 1;
    }
    p.swap(i - 1, j);
    p[i..].reverse();
    true
}

fn all_nontrivial_permutations(n: usize) -> Vec<Vec<usize>> {
    let mut p: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    while next_permutation(&mut p) {
        out.push(p.clone());
    }
    out
}

fn is_identity(p: &[usize]) -> bool {
    p.iter().enumerate().all(|(i, &x)| i == x)
}

/// Up to `cap` distinct non-identity permutations of `0..n`.
fn distinct_permutations(n: usize, cap: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    if n < 2 {
        return Vec::new();
    }
    if factorial_saturating(n) - 1 <= cap {
        return all_nontrivial_permutations(n);
    }
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let mut attempts = 0;
    while out.len() < cap && attempts < cap * 1000 {
        attempts += 1;
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(rng);
        if !is_identity(&p) && seen.insert(p.clone()) {
            out.push(p);
        }
    }
    out
}

pub fn table_shuffle(schema: &Schema, max_variants: usize, rng_seed: u64) -> Vec<SchemaRewrite> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let base = SchemaDraft::from_schema(schema);
    distinct_permutations(schema.tables.len(), max_variants, &mut rng)
        .into_iter()
        .filter_map(|perm| {
            let mut d = base.clone();
            d.tables = perm.iter().map(|&i| base.tables[i].clone()).collect();
            let order: Vec<&str> = perm.iter().map(|&i| schema.tables[i].original_name.as_str()).collect();
            let prov = json!({ "order": order });
            finish(MrTag::TableShuffle, schema, &d, Touched::default(), Some(rng_seed), prov)
        })
        .collect()
}

pub fn column_shuffle(schema: &Schema, max_variants: usize, rng_seed: u64) -> Vec<SchemaRewrite> {
    let eligible: Vec<usize> = schema
        .tables
        .iter()
        .filter(|t| t.column_indices.len() >= 2)
        .map(|t| t.index)
        .collect();
    if eligible.is_empty() {
        return Vec::new();
    }
    let total = eligible.iter().try_fold(0usize, |acc, &t| {
        acc.checked_add(factorial_saturating(schema.tables[t].column_indices.len()).saturating_sub(1))
    });
    let mut plans: Vec<(usize, Vec<usize>)> = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    if total.is_some_and(|n| n <= max_variants) {
        for &t in &eligible {
            for p in all_nontrivial_permutations(schema.tables[t].column_indices.len()) {
                plans.push((t, p));
            }
        }
    } else {
        let mut seen = HashSet::new();
        let mut attempts = 0;
        while plans.len() < max_variants && attempts < max_variants * 1000 {
            attempts += 1;
            let t = eligible[rng.gen_range(0..eligible.len())];
            let mut p: Vec<usize> = (0..schema.tables[t].column_indices.len()).collect();
            p.shuffle(&mut rng);
            if !is_identity(&p) && seen.insert((t, p.clone())) {
                plans.push((t, p));
            }
        }
    }
    let base = SchemaDraft::from_schema(schema);
    plans
        .into_iter()
        .filter_map(|(t, perm)| {
            let mut d = base.clone();
            d.tables[t].columns = perm.iter().map(|&i| base.tables[t].columns[i].clone()).collect();
            let order: Vec<&str> = d.tables[t].columns.iter().map(|c| c.original_name.as_str()).collect();
            let prov = json!({"table": schema.tables[t].original_name, "order": order});
            finish(MrTag::ColumnShuffle, schema, &d, Touched::default(), Some(rng_seed), prov)
        })
        .collect()
}

/// Drops one unused non-key column per rewrite. A table never loses its
/// last column.
pub fn column_remove(schema: &Schema, usage: &UsageSet, max_variants: usize) -> Vec<SchemaRewrite> {
    let cands: Vec<usize> = unused_plain_columns(schema, usage)
        .into_iter()
        .filter(|&c| schema.table_of(c).is_some_and(|t| t.column_indices.len() >= 2))
        .collect();
    pick(cands.len(), max_variants, None)
        .into_iter()
        .filter_map(|i| {
            let col = cands[i];
            let mut d = SchemaDraft::from_schema(schema);
            let (ti, ci) = d.locate(col)?;
            d.tables[ti].columns.remove(ci);
            let touched = Touched {
                tables: BTreeSet::new(),
                columns: [col].into(),
            };
            let prov = json!({ "removed": schema.qualified_name(col) });
            finish(MrTag::ColumnRemoval, schema, &d, touched, None, prov)
        })
        .collect()
}

/// Column-name synonyms: a word (or `_`/space separated phrase) mapped to
/// replacement phrases.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RenameLexicon {
    pub entries: BTreeMap<String, Vec<String>>,
}

fn name_words(s: &str) -> Vec<String> {
    s.split(|c: char| c == '_' || c.is_whitespace())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn is_lexicon_phrase(s: &str) -> bool {
    !s.is_empty()
        && s.split([' ', '_'])
            .all(|w| !w.is_empty() && w.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()))
}

impl RenameLexicon {
    pub fn default_lexicon() -> Self {
        Self::from_json(DEFAULT_RENAMES_JSON.as_bytes()).expect("bundled rename lexicon is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ResourceError> {
        let lex: RenameLexicon =
            serde_json::from_slice(bytes).map_err(|e| ResourceError(format!("rename lexicon: {e}")))?;
        for (k, vs) in &lex.entries {
            if !is_lexicon_phrase(k) {
                return Err(ResourceError(format!("rename lexicon: bad key `{k}`")));
            }
            if vs.is_empty() {
                return Err(ResourceError(format!("rename lexicon: `{k}` has no synonyms")));
            }
            if let Some(v) = vs.iter().find(|v| !is_lexicon_phrase(v) || name_words(v) == name_words(k)) {
                return Err(ResourceError(format!("rename lexicon: bad synonym `{v}` for `{k}`")));
            }
        }
        Ok(lex)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ResourceError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| ResourceError(format!("{}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }
}

/// Renames that were not emitted because the new name already exists in
/// the table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRename {
    pub column: String,
    pub proposed: String,
}

#[derive(Debug, Clone, Default)]
pub struct RenameOutcome {
    pub rewrites: Vec<SchemaRewrite>,
    pub skipped: Vec<SkippedRename>,
}

fn match_case(template: &str, word: &str) -> String {
    let letters: Vec<char> = template.chars().filter(|c| c.is_alphabetic()).collect();
    if letters.len() > 1 && letters.iter().all(|c| c.is_uppercase()) {
        word.to_uppercase()
    } else if letters.first().is_some_and(|c| c.is_uppercase()) {
        let mut cs = word.chars();
        cs.next().map(|f| f.to_uppercase().chain(cs).collect()).unwrap_or_default()
    } else {
        word.to_string()
    }
}

/// New original names for `name` under the lexicon, in lexicon order.
fn rename_proposals(name: &str, lex: &RenameLexicon) -> Vec<(String, String)> {
    let pieces: Vec<&str> = name.split('_').collect();
    let lower: Vec<String> = pieces.iter().map(|p| p.to_lowercase()).collect();
    let mut out = Vec::new();
    for (key, syns) in &lex.entries {
        let kw = name_words(key);
        if kw.len() > lower.len() {
            continue;
        }
        for at in 0..=lower.len() - kw.len() {
            if lower[at..at + kw.len()] != kw[..] {
                continue;
            }
            for syn in syns {
                let repl: Vec<String> = name_words(syn).iter().map(|w| match_case(pieces[at], w)).collect();
                let mut parts: Vec<String> = pieces[..at].iter().map(|s| s.to_string()).collect();
                parts.extend(repl);
                parts.extend(pieces[at + kw.len()..].iter().map(|s| s.to_string()));
                out.push((key.clone(), parts.join("_")));
            }
        }
    }
    out
}

pub fn column_rename(schema: &Schema, usage: &UsageSet, renames: &RenameLexicon, max_variants: usize) -> RenameOutcome {
    let mut outcome = RenameOutcome::default();
    let base = SchemaDraft::from_schema(schema);
    for col in schema.columns.iter().filter(|c| !c.is_star() && !usage.uses_column(c.index)) {
        let Some((ti, ci)) = base.locate(col.index) else { continue };
        for (key, proposed) in rename_proposals(&col.original_name, renames) {
            if outcome.rewrites.len() >= max_variants {
                return outcome;
            }
            if has_column(&base.tables[ti], &proposed, Some(ci)) {
                outcome.skipped.push(SkippedRename {
                    column: schema.qualified_name(col.index),
                    proposed,
                });
                continue;
            }
            let mut d = base.clone();
            let c = &mut d.tables[ti].columns[ci];
            c.name = name_words(&proposed).join(" ");
            c.original_name = proposed.clone();
            let touched = Touched {
                tables: BTreeSet::new(),
                columns: [col.index].into(),
            };
            let prov = json!({"column": schema.qualified_name(col.index), "matched": key, "renamed_to": proposed});
            if let Some(rw) = finish(MrTag::ColumnRenaming, schema, &d, touched, None, prov) {
                outcome.rewrites.push(rw);
            }
        }
    }
    outcome
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbAttribute {
    pub name: String,
    #[serde(rename = "type")]
    pub col_type: ColumnType,
}

/// Source of plausible extra attributes for an entity noun.
pub trait AttributeProvider {
    /// Attributes for a singular lowercase noun; empty when unknown.
    fn attributes(&self, entity: &str) -> Vec<KbAttribute>;
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AttributeKB {
    pub entries: BTreeMap<String, Vec<KbAttribute>>,
}

fn is_identifier(s: &str) -> bool {
    let mut cs = s.chars();
    cs.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && cs.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

impl AttributeKB {
    pub fn default_kb() -> Self {
        Self::from_json(DEFAULT_KB_JSON.as_bytes()).expect("bundled attribute KB is valid")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self, ResourceError> {
        let kb: AttributeKB =
            serde_json::from_slice(bytes).map_err(|e| ResourceError(format!("attribute KB: {e}")))?;
        for (entity, attrs) in &kb.entries {
            if entity.is_empty() || entity.to_lowercase() != *entity {
                return Err(ResourceError(format!("attribute KB: entity `{entity}` must be lowercase")));
            }
            if attrs.is_empty() {
                return Err(ResourceError(format!("attribute KB: `{entity}` has no attributes")));
            }
            if let Some(a) = attrs.iter().find(|a| !is_identifier(&a.name)) {
                return Err(ResourceError(format!("attribute KB: `{}` is not an identifier", a.name)));
            }
        }
        Ok(kb)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ResourceError> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| ResourceError(format!("{}: {e}", path.display())))?;
        Self::from_json(&bytes)
    }
}

impl AttributeProvider for AttributeKB {
    fn attributes(&self, entity: &str) -> Vec<KbAttribute> {
        self.entries.get(entity).cloned().unwrap_or_default()
    }
}

/// Crude English singular for table nouns.
pub fn singularize(word: &str) -> String {
    let w = word.to_lowercase();
    if let Some(stem) = w.strip_suffix("ies") {
        if !stem.is_empty() {
            return format!("{stem}y");
        }
    }
    for suffix in ["sses", "ches", "shes", "xes"] {
        if w.ends_with(suffix) {
            return w[..w.len() - 2].to_string();
        }
    }
    if w.ends_with('s') && !w.ends_with("ss") && w.len() > 1 {
        return w[..w.len() - 1].to_string();
    }
    w
}

fn entity_keys(table: &str) -> Vec<String> {
    let lower = table.to_lowercase();
    let mut keys = vec![lower.clone(), singularize(&lower)];
    if let Some(last) = lower.rsplit('_').next().filter(|l| *l != lower) {
        keys.push(last.to_string());
        keys.push(singularize(last));
    }
    keys.dedup();
    keys
}

/// Appends one knowledge-base attribute per rewrite to a table that lacks it.
pub fn column_insert(schema: &Schema, kb: &dyn AttributeProvider, max_variants: usize) -> Vec<SchemaRewrite> {
    let base = SchemaDraft::from_schema(schema);
    let mut out = Vec::new();
    for (ti, table) in schema.tables.iter().enumerate() {
        let attrs = entity_keys(&table.original_name)
            .iter()
            .map(|k| kb.attributes(k))
            .find(|a| !a.is_empty())
            .unwrap_or_default();
        for attr in attrs {
            if out.len() >= max_variants {
                return out;
            }
            let name = match_case(&table.original_name, &attr.name);
            if has_column(&base.tables[ti], &name, None) {
                continue;
            }
            let mut d = base.clone();
            let id = d.fresh_id();
            d.tables[ti].columns.push(DraftColumn {
                id,
                name: name_words(&attr.name).join(" "),
                original_name: name.clone(),
                col_type: attr.col_type,
            });
            let prov = json!({"table": table.original_name, "inserted": name, "type": attr.col_type});
            if let Some(rw) = finish(MrTag::ColumnInsertion, schema, &d, Touched::default(), None, prov) {
                out.push(rw);
            }
        }
    }
    out
}

/// Everything the schema relations need besides the schema itself.
#[derive(Debug, Clone)]
pub struct SchemaMrContext {
    pub max_variants: usize,
    pub rng_seed: u64,
    pub renames: RenameLexicon,
    pub kb: AttributeKB,
    pub opaque_remove_primary: bool,
}

impl Default for SchemaMrContext {
    fn default() -> Self {
        SchemaMrContext {
            max_variants: 10,
            rng_seed: 0,
            renames: RenameLexicon::default_lexicon(),
            kb: AttributeKB::default_kb(),
            opaque_remove_primary: false,
        }
    }
}

/// Runs one schema relation. Utterance tags yield nothing.
pub fn apply_schema_mr(tag: MrTag, schema: &Schema, usage: &UsageSet, ctx: &SchemaMrContext) -> Vec<SchemaRewrite> {
    let cap = ctx.max_variants;
    match tag {
        MrTag::Normalization => normalize(schema, usage, cap, ctx.rng_seed),
        MrTag::Flattening => flatten(schema, usage, cap),
        MrTag::OpaqueKey => opaque_key(schema, cap, ctx.opaque_remove_primary),
        MrTag::TableShuffle => table_shuffle(schema, cap, ctx.rng_seed),
        MrTag::ColumnShuffle => column_shuffle(schema, cap, ctx.rng_seed),
        MrTag::ColumnRemoval => column_remove(schema, usage, cap),
        MrTag::ColumnRenaming => column_rename(schema, usage, &ctx.renames, cap).rewrites,
        MrTag::ColumnInsertion => column_insert(schema, &ctx.kb, cap),
        _ => Vec::new(),
    }
}
