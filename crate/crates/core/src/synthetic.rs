//! Seeded random schemas and examples for scale and property tests.
//!
//! Schemas are small star/chain shapes over entity tables with an `_id`
//! primary key, a handful of attributes and at most one foreign key each.
//! Examples follow a few Spider-like templates whose utterances draw on the
//! bundled prefix and synonym lexicons, so every relation has something to
//! work on. The same `(count, seed)` always yields the same corpus.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{Example, PrimaryKeyEntry, Schema, SpiderSchema};
use crate::sql::Aggregate;
use crate::utterance::{PrefixLexicon, SynonymGroups};

const ENTITIES: &[&str] = &[
    "singer", "stadium", "concert", "employee", "company", "school", "teacher", "course", "airport", "airline",
    "flight", "student", "person", "city", "product", "customer", "book", "author", "movie", "team", "player",
    "store", "hospital", "museum",
];

const ATTRIBUTES: &[(&str, bool)] = &[
    ("name", false),
    ("age", true),
    ("country", false),
    ("city", false),
    ("address", false),
    ("phone", false),
    ("salary", true),
    ("price", true),
    ("rating", true),
    ("year", true),
    ("capacity", true),
    ("color", false),
    ("email", false),
    ("budget", true),
    ("gender", false),
    ("nationality", false),
    ("title", false),
    ("score", true),
    ("weight", true),
    ("height", true),
    ("population", true),
    ("status", false),
];

#[derive(Debug, Clone)]
struct SynTable {
    name: &'static str,
    attrs: Vec<(&'static str, bool)>,
    parent: Option<usize>,
}

impl SynTable {
    fn key(&self) -> String {
        format!("{}_id", self.name)
    }

    fn numeric(&self) -> Vec<&'static str> {
        self.attrs.iter().filter(|a| a.1).map(|a| a.0).collect()
    }

    fn text(&self) -> Vec<&'static str> {
        self.attrs.iter().filter(|a| !a.1).map(|a| a.0).collect()
    }
}

fn random_tables(rng: &mut ChaCha8Rng) -> Vec<SynTable> {
    let n = rng.gen_range(2..=5);
    let names: Vec<&'static str> = ENTITIES.choose_multiple(rng, n).copied().collect();
    names
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let width = rng.gen_range(3..=6);
            let mut attrs: Vec<(&str, bool)> = ATTRIBUTES.choose_multiple(rng, width).copied().collect();
            attrs.retain(|a| a.0 != *name);
            // Every table gets at least one text and one numeric attribute.
            for numeric in [true, false] {
                if !attrs.iter().any(|a| a.1 == numeric) {
                    let fill = ATTRIBUTES
                        .iter()
                        .find(|a| a.1 == numeric && a.0 != *name)
                        .expect("attribute list has both kinds");
                    attrs.push(*fill);
                }
            }
            let parent = (i > 0 && rng.gen_bool(0.8)).then(|| rng.gen_range(0..i));
            SynTable { name, attrs, parent }
        })
        .collect()
}

fn to_schema(db_id: &str, tables: &[SynTable]) -> Schema {
    let mut column_names: Vec<(i64, String)> = vec![(-1, "*".into())];
    let mut column_types = vec!["text".to_string()];
    let mut primary_keys = Vec::new();
    let mut key_index = Vec::new();
    let mut fk_columns = Vec::new();
    for (ti, t) in tables.iter().enumerate() {
        primary_keys.push(PrimaryKeyEntry::Single(column_names.len()));
        key_index.push(column_names.len());
        column_names.push((ti as i64, t.key()));
        column_types.push("number".into());
        for (a, numeric) in &t.attrs {
            column_names.push((ti as i64, a.to_string()));
            column_types.push(if *numeric { "number" } else { "text" }.into());
        }
        if let Some(p) = t.parent {
            fk_columns.push((column_names.len(), p));
            column_names.push((ti as i64, tables[p].key()));
            column_types.push("number".into());
        }
    }
    let foreign_keys = fk_columns.into_iter().map(|(c, p)| (c, key_index[p])).collect();
    let display = |s: &str| s.replace('_', " ");
    let raw = SpiderSchema {
        column_names: column_names.iter().map(|(t, c)| (*t, display(c))).collect(),
        column_names_original: column_names,
        column_types,
        db_id: db_id.to_string(),
        foreign_keys,
        primary_keys,
        table_names: tables.iter().map(|t| display(t.name)).collect(),
        table_names_original: tables.iter().map(|t| t.name.to_string()).collect(),
    };
    Schema::from_spider(raw).expect("synthetic schemas are well formed")
}

struct Phrasing<'a> {
    prefixes: Vec<&'a str>,
    synonyms: &'a SynonymGroups,
}

impl Phrasing<'_> {
    fn lead(&self, rng: &mut ChaCha8Rng) -> String {
        self.prefixes.choose(rng).map(|p| p.to_string()).unwrap_or_default()
    }

    fn agg(&self, agg: Aggregate, rng: &mut ChaCha8Rng) -> String {
        self.synonyms
            .groups
            .get(&agg)
            .and_then(|g| g.choose(rng))
            .cloned()
            .unwrap_or_else(|| format!("{agg:?}").to_lowercase())
    }
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    c.next().map(|f| f.to_uppercase().chain(c).collect()).unwrap_or_default()
}

fn example(tables: &[SynTable], ph: &Phrasing, rng: &mut ChaCha8Rng) -> (String, String) {
    let ti = rng.gen_range(0..tables.len());
    let t = &tables[ti];
    let tn = t.name;
    let num = *t.numeric().choose(rng).expect("numeric attribute");
    let txt = *t.text().choose(rng).expect("text attribute");
    let lead = ph.lead(rng);
    let kind = rng.gen_range(0..7);
    let (u, sql) = match kind {
        0 => (format!("{lead} the {txt} of all {tn}s"), format!("SELECT {txt} FROM {tn}")),
        1 => {
            let agg = *[Aggregate::Min, Aggregate::Max, Aggregate::Avg, Aggregate::Sum]
                .choose(rng)
                .expect("nonempty");
            let fun = format!("{agg:?}").to_uppercase();
            let phrase = ph.agg(agg, rng);
            let phrase = if phrase.starts_with("the ") { phrase } else { format!("the {phrase}") };
            (format!("{lead} {phrase} {num} of {tn}s"), format!("SELECT {fun}({num}) FROM {tn}"))
        }
        2 => {
            let k = rng.gen_range(1..100);
            (
                format!("{lead} the {txt} of {tn}s whose {num} is greater than {k}"),
                format!("SELECT {txt} FROM {tn} WHERE {num} > {k}"),
            )
        }
        3 => {
            let phrase = ph.agg(Aggregate::Count, rng);
            (format!("{lead} {phrase} {tn}s for each {txt}"), format!("SELECT {txt}, COUNT(*) FROM {tn} GROUP BY {txt}"))
        }
        4 => (
            format!("{lead} the {txt} of the {tn} with the highest {num}"),
            format!("SELECT {txt} FROM {tn} ORDER BY {num} DESC LIMIT 1"),
        ),
        5 => (format!("how many {tn}s are there"), format!("SELECT COUNT(*) FROM {tn}")),
        _ => match t.parent {
            Some(p) => {
                let pt = &tables[p];
                let ptxt = *pt.text().choose(rng).expect("text attribute");
                let key = pt.key();
                (
                    format!("{lead} the {txt} of each {tn} and the {ptxt} of its {}", pt.name),
                    format!(
                        "SELECT T1.{txt}, T2.{ptxt} FROM {tn} AS T1 JOIN {} AS T2 ON T1.{key} = T2.{key}",
                        pt.name
                    ),
                )
            }
            None => (format!("{lead} every {txt} of {tn}s"), format!("SELECT DISTINCT {txt} FROM {tn}")),
        },
    };
    let u = capitalize(u.trim().replace('_', " ").as_str());
    (format!("{u}?"), sql)
}

/// `seed_count` examples spread over `seed_count / 20 + 1` random schemas.
pub fn synthetic_corpus(seed_count: usize, rng_seed: u64) -> (Vec<Schema>, Vec<Example>) {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let lex = PrefixLexicon::default_lexicon();
    let syn = SynonymGroups::default_groups();
    let mut prefixes: Vec<&str> = lex.sets().iter().flat_map(|(_, p)| p.iter().map(String::as_str)).collect();
    prefixes.retain(|p| !matches!(*p, "when" | "where" | "how many" | "count"));
    let ph = Phrasing {
        prefixes,
        synonyms: &syn,
    };
    let db_count = seed_count / 20 + 1;
    let layouts: Vec<Vec<SynTable>> = (0..db_count).map(|_| random_tables(&mut rng)).collect();
    let schemas: Vec<Schema> = layouts
        .iter()
        .enumerate()
        .map(|(i, t)| to_schema(&format!("synth_{i:03}"), t))
        .collect();
    let examples = (0..seed_count)
        .map(|i| {
            let d = rng.gen_range(0..db_count);
            let (utterance, gold_sql) = example(&layouts[d], &ph, &mut rng);
            Example {
                example_id: format!("s{i:04}"),
                db_id: schemas[d].db_id.clone(),
                utterance,
                gold_sql,
            }
        })
        .collect();
    (schemas, examples)
}
