#![allow(dead_code)]

use std::path::PathBuf;

use sqlmorph_core::dataset::{load_examples, load_schemas, Example, Schema, SkipMode};

pub fn mini_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/mini")
}

/// The bundled mini dataset, loaded strictly.
pub fn mini() -> (Vec<Schema>, Vec<Example>) {
    let dir = mini_dir();
    let schemas = load_schemas(dir.join("tables.json")).expect("mini tables load");
    let examples = load_examples(dir.join("train.json"), &schemas, SkipMode::Strict)
        .expect("mini examples load")
        .examples;
    (schemas, examples)
}
