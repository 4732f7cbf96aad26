//! Python bindings: datasets, suite generation and validation, exact set
//! match, sampling, fluency statistics, and a harness that asks a Python
//! callable for predictions.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyList;

use sqlmorph_core::augment::{sample_adaptive, sample_random, sample_stratified, Strategy};
use sqlmorph_core::dataset::{self, parse_schema, serialize_schema, SkipMode};
use sqlmorph_core::fluency::{corpus_stats, train_ngram, ModelScorer};
use sqlmorph_core::generate::{self, GenerationConfig, Resources, TransformedCase};
use sqlmorph_core::harness::{self, AdapterFailure, FailureKind, ModelAdapter, PredictRequest, Prediction, Report};
use sqlmorph_core::sql::{classify_hardness, exact_set_match_with, parse_sql, MatchOptions};
use sqlmorph_core::MrTag;

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn io_err(e: impl std::fmt::Display) -> PyErr {
    PyIOError::new_err(e.to_string())
}

/// Serializes through JSON into plain Python dicts and lists.
fn to_python<'py>(py: Python<'py>, v: &impl serde::Serialize) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(v).map_err(value_err)?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(frozen, name = "Schema", skip_from_py_object)]
#[derive(Clone)]
struct PySchema {
    inner: Arc<dataset::Schema>,
}

#[pymethods]
impl PySchema {
    /// One Spider `tables.json` entry.
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner = parse_schema(text.as_bytes()).map_err(value_err)?;
        inner.validate().map_err(value_err)?;
        Ok(PySchema { inner: Arc::new(inner) })
    }

    fn to_json(&self) -> String {
        String::from_utf8(serialize_schema(&self.inner)).expect("JSON is UTF-8")
    }

    #[getter]
    fn db_id(&self) -> &str {
        &self.inner.db_id
    }

    #[getter]
    fn table_names(&self) -> Vec<String> {
        self.inner.tables.iter().map(|t| t.original_name.clone()).collect()
    }

    /// `table.column` for every column except `*`.
    #[getter]
    fn column_names(&self) -> Vec<String> {
        (0..self.inner.columns.len())
            .filter(|&i| !self.inner.columns[i].is_star())
            .map(|i| self.inner.qualified_name(i))
            .collect()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __repr__(&self) -> String {
        format!("Schema(db_id={:?}, tables={})", self.inner.db_id, self.inner.tables.len())
    }
}

#[pyclass(frozen, name = "Example", skip_from_py_object)]
#[derive(Clone)]
struct PyExample {
    inner: dataset::Example,
}

#[pymethods]
impl PyExample {
    #[new]
    fn new(example_id: String, db_id: String, utterance: String, gold_sql: String) -> Self {
        PyExample {
            inner: dataset::Example {
                example_id,
                db_id,
                utterance,
                gold_sql,
            },
        }
    }

    #[getter]
    fn example_id(&self) -> &str {
        &self.inner.example_id
    }

    #[getter]
    fn db_id(&self) -> &str {
        &self.inner.db_id
    }

    #[getter]
    fn utterance(&self) -> &str {
        &self.inner.utterance
    }

    #[getter]
    fn gold_sql(&self) -> &str {
        &self.inner.gold_sql
    }

    fn __repr__(&self) -> String {
        format!("Example({:?}, db_id={:?})", self.inner.example_id, self.inner.db_id)
    }
}

#[pyclass(frozen, name = "Case", skip_from_py_object)]
#[derive(Clone)]
struct PyCase {
    inner: TransformedCase,
}

#[pymethods]
impl PyCase {
    #[getter]
    fn case_id(&self) -> &str {
        &self.inner.case_id
    }

    #[getter]
    fn seed_id(&self) -> &str {
        &self.inner.seed_id
    }

    /// Relation code, e.g. `PI` or `CRn`.
    #[getter]
    fn mr(&self) -> &'static str {
        self.inner.mr.code()
    }

    #[getter]
    fn utterance(&self) -> &str {
        &self.inner.utterance
    }

    #[getter]
    fn db_id(&self) -> &str {
        &self.inner.db_id
    }

    #[getter]
    fn gold_sql(&self) -> &str {
        &self.inner.gold_sql
    }

    #[getter]
    fn schema(&self) -> PySchema {
        PySchema {
            inner: self.inner.schema.clone(),
        }
    }

    fn __repr__(&self) -> String {
        format!("Case({:?})", self.inner.case_id)
    }
}

#[pyclass(frozen, name = "Suite", skip_from_py_object)]
struct PySuite {
    inner: generate::TestSuite,
}

fn unwrap_schemas(schemas: &[PyRef<'_, PySchema>]) -> Vec<dataset::Schema> {
    schemas.iter().map(|s| (*s.inner).clone()).collect()
}

fn unwrap_examples(examples: &[PyRef<'_, PyExample>]) -> Vec<dataset::Example> {
    examples.iter().map(|e| e.inner.clone()).collect()
}

#[pymethods]
impl PySuite {
    /// Applies the relations to every example. `mrs` is a list of relation
    /// codes; all twelve by default.
    #[staticmethod]
    #[pyo3(signature = (examples, schemas, mrs=None, max_variants=10, seed=0))]
    fn generate(
        py: Python<'_>,
        examples: Vec<PyRef<'_, PyExample>>,
        schemas: Vec<PyRef<'_, PySchema>>,
        mrs: Option<Vec<String>>,
        max_variants: usize,
        seed: u64,
    ) -> PyResult<Self> {
        let mut cfg = GenerationConfig {
            max_variants_per_mr: max_variants,
            rng_seed: seed,
            ..GenerationConfig::default()
        };
        if let Some(codes) = mrs {
            cfg.enabled_mrs = codes.iter().map(|c| c.parse::<MrTag>()).collect::<Result<_, _>>().map_err(value_err)?;
        }
        let (examples, schemas) = (unwrap_examples(&examples), unwrap_schemas(&schemas));
        let inner = py
            .detach(|| generate::generate(&examples, &schemas, &cfg, &Resources::defaults()))
            .map_err(value_err)?;
        Ok(PySuite { inner })
    }

    #[staticmethod]
    fn read(path: PathBuf) -> PyResult<Self> {
        generate::TestSuite::read(path).map(|inner| PySuite { inner }).map_err(io_err)
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        self.inner.write(path).map_err(io_err)
    }

    fn __len__(&self) -> usize {
        self.inner.cases.len()
    }

    #[getter]
    fn cases(&self) -> Vec<PyCase> {
        self.inner.cases.iter().map(|c| PyCase { inner: c.clone() }).collect()
    }

    #[getter]
    fn counts_by_mr(&self) -> BTreeMap<&'static str, usize> {
        self.inner.counts_by_mr.iter().map(|(m, n)| (m.code(), *n)).collect()
    }

    /// `(seed_id, reason)` for every seed that produced nothing.
    #[getter]
    fn failures(&self) -> Vec<(String, String)> {
        self.inner.failures.iter().map(|f| (f.seed_id.clone(), f.reason.clone())).collect()
    }

    fn fingerprint(&self) -> String {
        self.inner.fingerprint()
    }

    fn __repr__(&self) -> String {
        format!("Suite(cases={}, seeds={})", self.inner.cases.len(), self.inner.seed_count)
    }
}

#[pyfunction]
fn load_schemas(path: PathBuf) -> PyResult<Vec<PySchema>> {
    let schemas = dataset::load_schemas(path).map_err(io_err)?;
    Ok(schemas.into_iter().map(|s| PySchema { inner: Arc::new(s) }).collect())
}

/// Examples whose gold SQL fails to parse or bind are skipped, or raise
/// when `strict` is set.
#[pyfunction]
#[pyo3(signature = (path, schemas, strict=false))]
fn load_examples(path: PathBuf, schemas: Vec<PyRef<'_, PySchema>>, strict: bool) -> PyResult<Vec<PyExample>> {
    let mode = if strict { SkipMode::Strict } else { SkipMode::Skip };
    let loaded = dataset::load_examples(path, &unwrap_schemas(&schemas), mode).map_err(io_err)?;
    Ok(loaded.examples.into_iter().map(|inner| PyExample { inner }).collect())
}

/// Validation report as a dict; `violations` is empty for a clean suite.
#[pyfunction]
fn validate_suite<'py>(
    py: Python<'py>,
    suite: &PySuite,
    schemas: Vec<PyRef<'py, PySchema>>,
    seeds: Vec<PyRef<'py, PyExample>>,
) -> PyResult<Bound<'py, PyAny>> {
    let report = generate::validate_suite(&suite.inner, &unwrap_schemas(&schemas), &unwrap_examples(&seeds));
    to_python(py, &report)
}

#[pyfunction]
#[pyo3(signature = (a, b, schema=None, value_sensitive=false))]
fn exact_set_match(a: &str, b: &str, schema: Option<&PySchema>, value_sensitive: bool) -> PyResult<bool> {
    let qa = parse_sql(a).map_err(value_err)?;
    let qb = parse_sql(b).map_err(value_err)?;
    let s = schema.map(|s| &*s.inner);
    Ok(exact_set_match_with(&qa, s, &qb, s, MatchOptions { value_sensitive }))
}

/// `easy`, `medium`, `hard` or `extra`.
#[pyfunction]
fn hardness(sql: &str) -> PyResult<&'static str> {
    Ok(classify_hardness(&parse_sql(sql).map_err(value_err)?).as_str())
}

/// Picks `n` cases with `rs`, `ss` or `as`. `as` needs `rates`, a dict of
/// relation code to rate.
#[pyfunction]
#[pyo3(signature = (suite, strategy, n, k=None, rates=None, seed=0))]
fn sample(
    suite: &PySuite,
    strategy: &str,
    n: usize,
    k: Option<usize>,
    rates: Option<BTreeMap<String, f64>>,
    seed: u64,
) -> PyResult<Vec<PyCase>> {
    let s = &suite.inner;
    let picked = match strategy.parse::<Strategy>().map_err(value_err)? {
        Strategy::Random => sample_random(s, n, seed),
        Strategy::Stratified => {
            let k = k.unwrap_or_else(|| s.counts_by_mr.values().filter(|c| **c > 0).count().max(1));
            sample_stratified(s, n, k, seed)
        }
        Strategy::Adaptive => {
            let rates = rates.ok_or_else(|| value_err("strategy `as` needs rates"))?;
            let rates = rates
                .into_iter()
                .map(|(c, r)| c.parse::<MrTag>().map(|m| (m, r)))
                .collect::<Result<BTreeMap<_, _>, _>>()
                .map_err(value_err)?;
            sample_adaptive(s, &rates, n, seed)
        }
    }
    .map_err(value_err)?;
    Ok(picked.cases.into_iter().map(|inner| PyCase { inner }).collect())
}

/// Built-in n-gram model trained on `original`, scoring both corpora.
#[pyfunction]
#[pyo3(signature = (original, synthetic, order=3, k=0.1))]
fn fluency_stats<'py>(
    py: Python<'py>,
    original: Vec<String>,
    synthetic: Vec<String>,
    order: usize,
    k: f64,
) -> PyResult<Bound<'py, PyAny>> {
    let lm = train_ngram(&original, order, k).map_err(value_err)?;
    let report = py.detach(|| corpus_stats(&original, &synthetic, &ModelScorer(&lm)));
    to_python(py, &report)
}

/// Adapter around a Python callable that takes a list of request dicts
/// (`id`, `question`, `db_id`, `schema`) and returns one SQL string per
/// request, or `None` for no answer.
struct CallableAdapter {
    predict: Py<PyAny>,
}

impl CallableAdapter {
    fn call(&self, requests: &[PredictRequest]) -> PyResult<Vec<Option<String>>> {
        Python::attach(|py| {
            let batch = to_python(py, &requests)?;
            let out = self.predict.bind(py).call1((batch,))?;
            let out = out.cast::<PyList>().map_err(|e| value_err(e.to_string()))?;
            out.iter().map(|item| item.extract::<Option<String>>()).collect()
        })
    }
}

impl ModelAdapter for CallableAdapter {
    fn predict_batch(&self, requests: &[PredictRequest]) -> Vec<Prediction> {
        let fail = |kind, message: String| Err(AdapterFailure { kind, message });
        match self.call(requests) {
            Ok(answers) if answers.len() == requests.len() => answers
                .into_iter()
                .map(|a| a.map_or_else(|| fail(FailureKind::Protocol, "no answer".into()), Ok))
                .collect(),
            Ok(answers) => {
                let msg = format!("{} answers for {} requests", answers.len(), requests.len());
                requests.iter().map(|_| fail(FailureKind::Protocol, msg.clone())).collect()
            }
            Err(e) => requests.iter().map(|_| fail(FailureKind::Transport, e.to_string())).collect(),
        }
    }

    fn describe(&self) -> String {
        "python callable".into()
    }
}

/// Asks `predict` about every seed and case. Returns a dict with
/// `records` (one per case) and `report` (inconsistency rates).
#[pyfunction]
#[pyo3(signature = (suite, seeds, schemas, predict, value_sensitive=false))]
fn run<'py>(
    py: Python<'py>,
    suite: &PySuite,
    seeds: Vec<PyRef<'py, PyExample>>,
    schemas: Vec<PyRef<'py, PySchema>>,
    predict: Py<PyAny>,
    value_sensitive: bool,
) -> PyResult<Bound<'py, PyAny>> {
    let adapter = CallableAdapter { predict };
    let (seeds, schemas) = (unwrap_examples(&seeds), unwrap_schemas(&schemas));
    let opts = MatchOptions { value_sensitive };
    let records = py
        .detach(|| harness::run(&adapter, &suite.inner, &seeds, &schemas, opts))
        .map_err(value_err)?;
    let report = Report::new(&records, &suite.inner.fingerprint(), &suite.inner.config_fingerprint);
    to_python(py, &serde_json::json!({"records": records, "report": report}))
}

#[pymodule]
fn sqlmorph(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySchema>()?;
    m.add_class::<PyExample>()?;
    m.add_class::<PyCase>()?;
    m.add_class::<PySuite>()?;
    m.add_function(wrap_pyfunction!(load_schemas, m)?)?;
    m.add_function(wrap_pyfunction!(load_examples, m)?)?;
    m.add_function(wrap_pyfunction!(validate_suite, m)?)?;
    m.add_function(wrap_pyfunction!(exact_set_match, m)?)?;
    m.add_function(wrap_pyfunction!(hardness, m)?)?;
    m.add_function(wrap_pyfunction!(sample, m)?)?;
    m.add_function(wrap_pyfunction!(fluency_stats, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    m.add("MRS", MrTag::ALL.iter().map(|m| m.code()).collect::<Vec<_>>())?;
    Ok(())
}
