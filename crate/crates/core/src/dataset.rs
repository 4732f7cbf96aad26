//! Spider-format schemas and examples.
//!
//! Schemas follow the `tables.json` layout verbatim: `column_names` is a list
//! of `[table_index, name]` pairs whose position is the column index, with
//! the star column `[-1, "*"]` at position 0. Loading preserves every
//! positional index exactly; serialization writes the same layout back.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::fingerprint::sha256_hex;
use crate::sql;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}:{column}: {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("schema `{db_id}`: {message}")]
    InvalidSchema { db_id: String, message: String },
    #[error("example {example_id}: {message}")]
    InvalidExample { example_id: String, message: String },
    #[error("example {example_id}: unknown db_id `{db_id}`")]
    UnknownDb { example_id: String, db_id: String },
}

impl DatasetError {
    fn parse(path: &Path, err: serde_json::Error) -> Self {
        DatasetError::Parse {
            path: path.display().to_string(),
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    fn io(path: &Path, source: std::io::Error) -> Self {
        DatasetError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnType {
    Text,
    Number,
    Time,
    Boolean,
    Others,
}

impl ColumnType {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnType::Text => "text",
            ColumnType::Number => "number",
            ColumnType::Time => "time",
            ColumnType::Boolean => "boolean",
            ColumnType::Others => "others",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "text" => ColumnType::Text,
            "number" => ColumnType::Number,
            "time" => ColumnType::Time,
            "boolean" => ColumnType::Boolean,
            "others" => ColumnType::Others,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Column {
    pub index: usize,
    /// `None` only for the star column.
    pub table_index: Option<usize>,
    pub name: String,
    pub original_name: String,
    pub col_type: ColumnType,
}

impl Column {
    pub fn is_star(&self) -> bool {
        self.table_index.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub index: usize,
    pub name: String,
    pub original_name: String,
    pub column_indices: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Schema {
    pub db_id: String,
    pub tables: Vec<Table>,
    pub columns: Vec<Column>,
    pub primary_keys: Vec<usize>,
    pub foreign_keys: Vec<(usize, usize)>,
}

/// On-disk `tables.json` entry.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpiderSchema {
    pub column_names: Vec<(i64, String)>,
    pub column_names_original: Vec<(i64, String)>,
    pub column_types: Vec<String>,
    pub db_id: String,
    pub foreign_keys: Vec<(usize, usize)>,
    pub primary_keys: Vec<PrimaryKeyEntry>,
    pub table_names: Vec<String>,
    pub table_names_original: Vec<String>,
}

/// Newer Spider releases write composite keys as nested lists.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PrimaryKeyEntry {
    Single(usize),
    Composite(Vec<usize>),
}

impl Schema {
    pub fn from_spider(raw: SpiderSchema) -> Result<Self, DatasetError> {
        let db_id = raw.db_id.clone();
        let invalid = |message: String| DatasetError::InvalidSchema {
            db_id: db_id.clone(),
            message,
        };

        if raw.table_names.len() != raw.table_names_original.len() {
            return Err(invalid(format!(
                "table_names has {} entries but table_names_original has {}",
                raw.table_names.len(),
                raw.table_names_original.len()
            )));
        }
        let n = raw.column_names.len();
        if raw.column_names_original.len() != n || raw.column_types.len() != n {
            return Err(invalid(format!(
                "column_names ({n}), column_names_original ({}) and column_types ({}) differ in length",
                raw.column_names_original.len(),
                raw.column_types.len()
            )));
        }

        let mut columns = Vec::with_capacity(n);
        for (i, ((t, name), ((t2, orig), ty))) in raw
            .column_names
            .into_iter()
            .zip(raw.column_names_original.into_iter().zip(&raw.column_types))
            .enumerate()
        {
            if t != t2 {
                return Err(invalid(format!(
                    "column {i}: table index {t} disagrees with original table index {t2}"
                )));
            }
            let table_index = if t < 0 {
                if t != -1 {
                    return Err(invalid(format!("column {i}: table index {t} out of range")));
                }
                None
            } else {
                Some(t as usize)
            };
            let col_type = ColumnType::parse(ty)
                .ok_or_else(|| invalid(format!("column {i}: unknown column type `{ty}`")))?;
            columns.push(Column {
                index: i,
                table_index,
                name,
                original_name: orig,
                col_type,
            });
        }

        let mut tables: Vec<Table> = raw
            .table_names
            .into_iter()
            .zip(raw.table_names_original)
            .enumerate()
            .map(|(index, (name, original_name))| Table {
                index,
                name,
                original_name,
                column_indices: Vec::new(),
            })
            .collect();
        for c in &columns {
            if let Some(t) = c.table_index {
                match tables.get_mut(t) {
                    Some(table) => table.column_indices.push(c.index),
                    None => {
                        return Err(invalid(format!(
                            "column {}: table index {t} out of range",
                            c.index
                        )))
                    }
                }
            }
        }

        let mut primary_keys = Vec::new();
        for entry in raw.primary_keys {
            match entry {
                PrimaryKeyEntry::Single(c) => primary_keys.push(c),
                PrimaryKeyEntry::Composite(cs) => primary_keys.extend(cs),
            }
        }

        let schema = Schema {
            db_id: raw.db_id,
            tables,
            columns,
            primary_keys,
            foreign_keys: raw.foreign_keys,
        };
        schema.validate()?;
        Ok(schema)
    }

    pub fn to_spider(&self) -> SpiderSchema {
        let ti = |c: &Column| c.table_index.map_or(-1, |t| t as i64);
        SpiderSchema {
            column_names: self.columns.iter().map(|c| (ti(c), c.name.clone())).collect(),
            column_names_original: self
                .columns
                .iter()
                .map(|c| (ti(c), c.original_name.clone()))
                .collect(),
            column_types: self
                .columns
                .iter()
                .map(|c| c.col_type.as_str().to_string())
                .collect(),
            db_id: self.db_id.clone(),
            foreign_keys: self.foreign_keys.clone(),
            primary_keys: self
                .primary_keys
                .iter()
                .map(|&c| PrimaryKeyEntry::Single(c))
                .collect(),
            table_names: self.tables.iter().map(|t| t.name.clone()).collect(),
            table_names_original: self.tables.iter().map(|t| t.original_name.clone()).collect(),
        }
    }

    /// Checks every structural invariant. All loaders and rewrites go
    /// through this before handing a schema out.
    pub fn validate(&self) -> Result<(), DatasetError> {
        let invalid = |message: String| DatasetError::InvalidSchema {
            db_id: self.db_id.clone(),
            message,
        };
        match self.columns.first() {
            Some(c) if c.is_star() => {}
            _ => return Err(invalid("column 0 must be the star column [-1, \"*\"]".into())),
        }
        for (i, c) in self.columns.iter().enumerate() {
            if c.index != i {
                return Err(invalid(format!("column {i} carries index {}", c.index)));
            }
            if i > 0 && c.is_star() {
                return Err(invalid(format!("column {i}: only column 0 may have table index -1")));
            }
            if let Some(t) = c.table_index {
                if t >= self.tables.len() {
                    return Err(invalid(format!("column {i}: table index {t} out of range")));
                }
            }
        }
        let mut seen_names = HashSet::new();
        for (i, t) in self.tables.iter().enumerate() {
            if t.index != i {
                return Err(invalid(format!("table {i} carries index {}", t.index)));
            }
            if t.column_indices.is_empty() {
                return Err(invalid(format!("table {i} (`{}`) has no columns", t.original_name)));
            }
            for &c in &t.column_indices {
                if self.columns.get(c).and_then(|c| c.table_index) != Some(i) {
                    return Err(invalid(format!(
                        "table {i} lists column {c} which does not belong to it"
                    )));
                }
            }
            if !seen_names.insert(t.original_name.to_lowercase()) {
                return Err(invalid(format!(
                    "duplicate table name `{}` (case-insensitive)",
                    t.original_name
                )));
            }
        }
        let owned: usize = self.tables.iter().map(|t| t.column_indices.len()).sum();
        if owned + 1 != self.columns.len() {
            return Err(invalid("table column lists do not cover every column".into()));
        }
        let mut pk_seen = HashSet::new();
        for &pk in &self.primary_keys {
            self.check_key_endpoint(pk, "primary key")?;
            if !pk_seen.insert(pk) {
                return Err(invalid(format!("primary key column {pk} listed twice")));
            }
        }
        for &(from, to) in &self.foreign_keys {
            self.check_key_endpoint(from, "foreign key endpoint")?;
            self.check_key_endpoint(to, "foreign key endpoint")?;
            if self.columns[from].table_index == self.columns[to].table_index {
                return Err(invalid(format!(
                    "foreign key ({from}, {to}) links columns of the same table"
                )));
            }
        }
        Ok(())
    }

    fn check_key_endpoint(&self, c: usize, what: &str) -> Result<(), DatasetError> {
        let invalid = |message: String| DatasetError::InvalidSchema {
            db_id: self.db_id.clone(),
            message,
        };
        match self.columns.get(c) {
            None => Err(invalid(format!("{what} index {c} out of range"))),
            Some(col) if col.is_star() => Err(invalid(format!("{what} is star column (index {c})"))),
            Some(_) => Ok(()),
        }
    }

    pub fn table_by_name(&self, name: &str) -> Option<&Table> {
        self.tables
            .iter()
            .find(|t| t.original_name.eq_ignore_ascii_case(name))
    }

    /// Looks a column up inside one table by original name, case-insensitively.
    pub fn column_in_table(&self, table: usize, name: &str) -> Option<&Column> {
        self.tables[table]
            .column_indices
            .iter()
            .map(|&c| &self.columns[c])
            .find(|c| c.original_name.eq_ignore_ascii_case(name))
    }

    pub fn table_of(&self, column: usize) -> Option<&Table> {
        self.columns[column].table_index.map(|t| &self.tables[t])
    }

    pub fn is_primary_key(&self, column: usize) -> bool {
        self.primary_keys.contains(&column)
    }

    pub fn is_fk_endpoint(&self, column: usize) -> bool {
        self.foreign_keys
            .iter()
            .any(|&(a, b)| a == column || b == column)
    }

    /// Primary-key or foreign-key participant.
    pub fn is_key(&self, column: usize) -> bool {
        self.is_primary_key(column) || self.is_fk_endpoint(column)
    }

    /// `"table.column"` with original names, lowercased.
    pub fn qualified_name(&self, column: usize) -> String {
        let c = &self.columns[column];
        match c.table_index {
            Some(t) => format!(
                "{}.{}",
                self.tables[t].original_name.to_lowercase(),
                c.original_name.to_lowercase()
            ),
            None => "*".to_string(),
        }
    }

    /// Multiset of (table, column, type) triples, sorted. Equal for schemas
    /// that differ only in table or column order.
    pub fn content_triples(&self) -> Vec<(String, String, ColumnType)> {
        let mut out: Vec<_> = self
            .columns
            .iter()
            .filter_map(|c| {
                c.table_index.map(|t| {
                    (
                        self.tables[t].original_name.to_lowercase(),
                        c.original_name.to_lowercase(),
                        c.col_type,
                    )
                })
            })
            .collect();
        out.sort();
        out
    }

    /// Foreign keys as sorted qualified-name pairs.
    pub fn named_foreign_keys(&self) -> BTreeSet<(String, String)> {
        self.foreign_keys
            .iter()
            .map(|&(a, b)| (self.qualified_name(a), self.qualified_name(b)))
            .collect()
    }

    pub fn named_primary_keys(&self) -> BTreeSet<String> {
        self.primary_keys.iter().map(|&c| self.qualified_name(c)).collect()
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(&serialize_schema(self))
    }
}

/// Compact JSON of one schema in Spider layout. Byte-stable: equal schemas
/// always yield equal bytes.
pub fn serialize_schema(schema: &Schema) -> Vec<u8> {
    serde_json::to_vec(&schema.to_spider()).expect("schema serialization is infallible")
}

pub fn parse_schema(bytes: &[u8]) -> Result<Schema, serde_json::Error> {
    let raw: SpiderSchema = serde_json::from_slice(bytes)?;
    Schema::from_spider(raw).map_err(serde::de::Error::custom)
}

/// Pretty JSON array, the layout of a `tables.json` file.
pub fn serialize_schemas(schemas: &[Schema]) -> Vec<u8> {
    let raw: Vec<SpiderSchema> = schemas.iter().map(Schema::to_spider).collect();
    let mut out = serde_json::to_vec_pretty(&raw).expect("schema serialization is infallible");
    out.push(b'\n');
    out
}

pub fn parse_schemas(bytes: &[u8], origin: &Path) -> Result<Vec<Schema>, DatasetError> {
    let raw: Vec<SpiderSchema> =
        serde_json::from_slice(bytes).map_err(|e| DatasetError::parse(origin, e))?;
    raw.into_iter().map(Schema::from_spider).collect()
}

pub fn load_schemas(path: impl AsRef<Path>) -> Result<Vec<Schema>, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    parse_schemas(&bytes, path)
}

pub fn write_schemas(path: impl AsRef<Path>, schemas: &[Schema]) -> Result<(), DatasetError> {
    let path = path.as_ref();
    fs::write(path, serialize_schemas(schemas)).map_err(|e| DatasetError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Example {
    pub example_id: String,
    pub db_id: String,
    pub utterance: String,
    pub gold_sql: String,
}

/// On-disk dataset entry. Extra Spider keys (`query_toks`, `sql`, ...) are
/// ignored on read.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpiderExample {
    pub db_id: String,
    pub query: String,
    pub question: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub example_id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SkipMode {
    /// Examples whose gold SQL fails to parse or bind are reported and left out.
    #[default]
    Skip,
    /// Any such example aborts the load.
    Strict,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedExample {
    pub example_id: String,
    pub db_id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkipReport {
    pub total: usize,
    pub accepted: usize,
    pub skipped: Vec<SkippedExample>,
}

impl SkipReport {
    pub fn to_json(&self) -> Vec<u8> {
        let mut out = serde_json::to_vec_pretty(self).expect("skip report serializes");
        out.push(b'\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct LoadedExamples {
    pub examples: Vec<Example>,
    pub report: SkipReport,
}

pub fn parse_examples(
    bytes: &[u8],
    origin: &Path,
    schemas: &[Schema],
    mode: SkipMode,
) -> Result<LoadedExamples, DatasetError> {
    let raw: Vec<SpiderExample> =
        serde_json::from_slice(bytes).map_err(|e| DatasetError::parse(origin, e))?;
    let by_id: HashMap<&str, &Schema> = schemas.iter().map(|s| (s.db_id.as_str(), s)).collect();

    let mut report = SkipReport {
        total: raw.len(),
        ..SkipReport::default()
    };
    let mut examples = Vec::with_capacity(raw.len());
    for (pos, r) in raw.into_iter().enumerate() {
        let example_id = r.example_id.unwrap_or_else(|| pos.to_string());
        if r.question.trim().is_empty() {
            return Err(DatasetError::InvalidExample {
                example_id,
                message: "empty question".into(),
            });
        }
        let Some(schema) = by_id.get(r.db_id.as_str()) else {
            return Err(DatasetError::UnknownDb {
                example_id,
                db_id: r.db_id,
            });
        };
        let check = sql::parse_sql(&r.query)
            .map_err(|e| format!("gold SQL does not parse: {e}"))
            .and_then(|q| {
                sql::bind_and_usage(&q, schema)
                    .map(|_| ())
                    .map_err(|e| format!("gold SQL does not bind: {e}"))
            });
        if let Err(reason) = check {
            match mode {
                SkipMode::Strict => {
                    return Err(DatasetError::InvalidExample {
                        example_id,
                        message: reason,
                    })
                }
                SkipMode::Skip => {
                    report.skipped.push(SkippedExample {
                        example_id,
                        db_id: r.db_id,
                        reason,
                    });
                    continue;
                }
            }
        }
        examples.push(Example {
            example_id,
            db_id: r.db_id,
            utterance: r.question,
            gold_sql: r.query,
        });
    }
    report.accepted = examples.len();
    Ok(LoadedExamples { examples, report })
}

pub fn load_examples(
    path: impl AsRef<Path>,
    schemas: &[Schema],
    mode: SkipMode,
) -> Result<LoadedExamples, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    parse_examples(&bytes, path, schemas, mode)
}

/// Reads a dataset file without checking gold SQL against any schema.
/// Ids default to the position in the file, as in [`parse_examples`].
pub fn load_examples_unbound(path: impl AsRef<Path>) -> Result<Vec<Example>, DatasetError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| DatasetError::io(path, e))?;
    let raw: Vec<SpiderExample> = serde_json::from_slice(&bytes).map_err(|e| DatasetError::parse(path, e))?;
    Ok(raw
        .into_iter()
        .enumerate()
        .map(|(pos, r)| Example {
            example_id: r.example_id.unwrap_or_else(|| pos.to_string()),
            db_id: r.db_id,
            utterance: r.question,
            gold_sql: r.query,
        })
        .collect())
}

pub fn serialize_examples(examples: &[Example]) -> Vec<u8> {
    let raw: Vec<SpiderExample> = examples
        .iter()
        .map(|e| SpiderExample {
            db_id: e.db_id.clone(),
            query: e.gold_sql.clone(),
            question: e.utterance.clone(),
            example_id: Some(e.example_id.clone()),
        })
        .collect();
    let mut out = serde_json::to_vec_pretty(&raw).expect("example serialization is infallible");
    out.push(b'\n');
    out
}

impl fmt::Display for Schema {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.db_id)?;
        for t in &self.tables {
            let cols: Vec<&str> = t
                .column_indices
                .iter()
                .map(|&c| self.columns[c].original_name.as_str())
                .collect();
            writeln!(f, "  {}({})", t.original_name, cols.join(", "))?;
        }
        for &(a, b) in &self.foreign_keys {
            writeln!(f, "  fk {} -> {}", self.qualified_name(a), self.qualified_name(b))?;
        }
        Ok(())
    }
}

/// Stable id-based editing view of a schema used by the rewrites. Column
/// ids are the original column indices; freshly added columns get ids past
/// the end. [`SchemaDraft::build`] reassigns positional indices with columns
/// grouped by table in table order.
#[derive(Debug, Clone)]
pub(crate) struct SchemaDraft {
    pub db_id: String,
    pub tables: Vec<DraftTable>,
    pub primary_keys: Vec<usize>,
    pub foreign_keys: Vec<(usize, usize)>,
    next_id: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct DraftTable {
    pub name: String,
    pub original_name: String,
    pub columns: Vec<DraftColumn>,
}

#[derive(Debug, Clone)]
pub(crate) struct DraftColumn {
    pub id: usize,
    pub name: String,
    pub original_name: String,
    pub col_type: ColumnType,
}

impl SchemaDraft {
    pub fn from_schema(schema: &Schema) -> Self {
        let tables = schema
            .tables
            .iter()
            .map(|t| DraftTable {
                name: t.name.clone(),
                original_name: t.original_name.clone(),
                columns: t
                    .column_indices
                    .iter()
                    .map(|&c| {
                        let col = &schema.columns[c];
                        DraftColumn {
                            id: c,
                            name: col.name.clone(),
                            original_name: col.original_name.clone(),
                            col_type: col.col_type,
                        }
                    })
                    .collect(),
            })
            .collect();
        SchemaDraft {
            db_id: schema.db_id.clone(),
            tables,
            primary_keys: schema.primary_keys.clone(),
            foreign_keys: schema.foreign_keys.clone(),
            next_id: schema.columns.len(),
        }
    }

    pub fn fresh_id(&mut self) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// (table position, column position) of a column id.
    pub fn locate(&self, id: usize) -> Option<(usize, usize)> {
        self.tables.iter().enumerate().find_map(|(ti, t)| {
            t.columns.iter().position(|c| c.id == id).map(|ci| (ti, ci))
        })
    }

    pub fn build(&self) -> Result<Schema, DatasetError> {
        let mut columns = vec![Column {
            index: 0,
            table_index: None,
            name: "*".into(),
            original_name: "*".into(),
            col_type: ColumnType::Text,
        }];
        let mut remap = HashMap::new();
        let mut tables = Vec::with_capacity(self.tables.len());
        for (ti, t) in self.tables.iter().enumerate() {
            let mut column_indices = Vec::with_capacity(t.columns.len());
            for c in &t.columns {
                let index = columns.len();
                remap.insert(c.id, index);
                column_indices.push(index);
                columns.push(Column {
                    index,
                    table_index: Some(ti),
                    name: c.name.clone(),
                    original_name: c.original_name.clone(),
                    col_type: c.col_type,
                });
            }
            tables.push(Table {
                index: ti,
                name: t.name.clone(),
                original_name: t.original_name.clone(),
                column_indices,
            });
        }
        let missing = |id: usize| DatasetError::InvalidSchema {
            db_id: self.db_id.clone(),
            message: format!("key refers to removed column id {id}"),
        };
        let primary_keys = self
            .primary_keys
            .iter()
            .map(|id| remap.get(id).copied().ok_or_else(|| missing(*id)))
            .collect::<Result<Vec<_>, _>>()?;
        let foreign_keys = self
            .foreign_keys
            .iter()
            .map(|(a, b)| {
                Ok((
                    *remap.get(a).ok_or_else(|| missing(*a))?,
                    *remap.get(b).ok_or_else(|| missing(*b))?,
                ))
            })
            .collect::<Result<Vec<_>, DatasetError>>()?;
        let schema = Schema {
            db_id: self.db_id.clone(),
            tables,
            columns,
            primary_keys,
            foreign_keys,
        };
        schema.validate()?;
        Ok(schema)
    }
}
