//! Metamorphic test generation for text-to-SQL models.
//!
//! The crate takes seed `(utterance, schema, gold SQL)` triples in Spider
//! format and derives semantics-preserving variants through twelve
//! metamorphic relations: four that rewrite the utterance and eight that
//! rewrite the schema. A model is then judged by whether its prediction on a
//! variant still exact-set-matches its prediction on the seed.
//!
//! Module map:
//!
//! * [`dataset`] - Spider `tables.json` / dataset I/O and schema invariants.
//! * [`sql`] - parser, binder, exact-set-match comparator, hardness labels.
//! * [`utterance`] - prefix and synonym relations over utterances.
//! * [`schema_mr`] - the eight schema rewrites.
//! * [`generate`] - suite generation, validation and the JSONL suite format.
//! * [`harness`] - model adapters, consistency verdicts and rate reports.
//! * [`fluency`] - entropy/fluency scoring with a built-in n-gram model.
//! * [`augment`] - RS/SS/AS samplers, fold splits and augmented dataset output.

pub mod augment;
pub mod dataset;
pub mod fingerprint;
pub mod fluency;
pub mod generate;
pub mod harness;
pub mod mr;
pub mod schema_mr;
pub mod sql;
pub mod synthetic;
pub mod text;
pub mod utterance;

pub use dataset::{Column, ColumnType, Example, Schema, Table};
pub use mr::MrTag;
pub use sql::{exact_set_match, parse_sql, SqlQuery};
