use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::ast::*;
use crate::dataset::Schema;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} (`{token}`)")]
pub struct BindError {
    pub token: String,
    pub message: String,
}

impl BindError {
    fn new(token: impl Into<String>, message: impl Into<String>) -> Self {
        BindError {
            token: token.into(),
            message: message.into(),
        }
    }
}

/// Schema elements a query touches. Indices refer to the schema the query
/// was bound against; the star column is tracked by `uses_star` only.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct UsageSet {
    pub used_tables: BTreeSet<usize>,
    pub used_columns: BTreeSet<usize>,
    pub used_fk_pairs: BTreeSet<(usize, usize)>,
    pub uses_star: bool,
}

/// Schema-independent view of a [`UsageSet`]: lowercase original names.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NamedUsage {
    pub tables: BTreeSet<String>,
    pub columns: BTreeSet<String>,
    pub uses_star: bool,
}

impl UsageSet {
    pub fn named(&self, schema: &Schema) -> NamedUsage {
        NamedUsage {
            tables: self
                .used_tables
                .iter()
                .map(|&t| schema.tables[t].original_name.to_lowercase())
                .collect(),
            columns: self
                .used_columns
                .iter()
                .map(|&c| schema.qualified_name(c))
                .collect(),
            uses_star: self.uses_star,
        }
    }

    pub fn uses_column(&self, column: usize) -> bool {
        self.used_columns.contains(&column)
    }

    pub fn uses_table(&self, table: usize) -> bool {
        self.used_tables.contains(&table)
    }
}

#[derive(Debug, Clone)]
enum Source {
    Table(usize),
    Derived,
}

#[derive(Debug, Clone)]
struct Entry {
    /// Lowercase names the entry answers to: the alias and the table name.
    keys: Vec<String>,
    source: Source,
}

struct Binder<'a> {
    schema: &'a Schema,
    usage: UsageSet,
}

/// Resolves every table and column name in `query` against `schema`
/// (case-insensitive, alias-aware, correlated subqueries see outer scopes)
/// and returns what the query uses.
pub fn bind_and_usage(query: &SqlQuery, schema: &Schema) -> Result<UsageSet, BindError> {
    let mut b = Binder {
        schema,
        usage: UsageSet::default(),
    };
    b.query(query, &[])?;
    Ok(b.usage)
}

impl<'a> Binder<'a> {
    fn query(&mut self, q: &SqlQuery, outer: &[Vec<Entry>]) -> Result<(), BindError> {
        let mut scope = Vec::with_capacity(q.from.tables.len());
        for t in &q.from.tables {
            let alias = t.alias.as_ref().map(|a| a.to_lowercase());
            match &t.source {
                TableSource::Named(name) => {
                    let table = self
                        .schema
                        .table_by_name(name)
                        .ok_or_else(|| BindError::new(name, "unknown table"))?;
                    self.usage.used_tables.insert(table.index);
                    let mut keys = vec![name.to_lowercase()];
                    keys.extend(alias);
                    scope.push(Entry {
                        keys,
                        source: Source::Table(table.index),
                    });
                }
                TableSource::Subquery(sub) => {
                    self.query(sub, outer)?;
                    scope.push(Entry {
                        keys: alias.into_iter().collect(),
                        source: Source::Derived,
                    });
                }
            }
        }
        let mut scopes = outer.to_vec();
        scopes.push(scope);

        for e in &q.select {
            self.expr(e, &scopes)?;
        }
        for (a, b) in &q.from.join_conditions {
            let ca = self.column(a, &scopes)?;
            let cb = self.column(b, &scopes)?;
            self.note_fk(ca, cb);
        }
        if let Some(c) = &q.where_clause {
            self.condition(c, &scopes)?;
        }
        for c in &q.group_by {
            self.column(c, &scopes)?;
        }
        if let Some(c) = &q.having {
            self.condition(c, &scopes)?;
        }
        for k in &q.order_by {
            self.expr(&k.expr, &scopes)?;
        }
        if let Some(s) = &q.set_op {
            self.query(&s.right, outer)?;
        }
        Ok(())
    }

    fn note_fk(&mut self, a: Option<usize>, b: Option<usize>) {
        if let (Some(a), Some(b)) = (a, b) {
            for &(x, y) in &self.schema.foreign_keys {
                if (x, y) == (a, b) || (x, y) == (b, a) {
                    self.usage.used_fk_pairs.insert((x, y));
                }
            }
        }
    }

    fn condition(&mut self, c: &Condition, scopes: &[Vec<Entry>]) -> Result<(), BindError> {
        for p in c.atoms() {
            let left = self.expr(&p.left, scopes)?;
            for op in std::iter::once(&p.right).chain(p.upper.as_ref()) {
                match op {
                    Operand::Column(e) => {
                        let right = self.expr(e, scopes)?;
                        if p.op == CompareOp::Eq && p.left.agg == Aggregate::None && e.agg == Aggregate::None {
                            self.note_fk(left, right);
                        }
                    }
                    Operand::Subquery(q) => self.query(q, scopes)?,
                    Operand::Literal(_) | Operand::List(_) => {}
                }
            }
        }
        Ok(())
    }

    fn expr(&mut self, e: &ColumnExpr, scopes: &[Vec<Entry>]) -> Result<Option<usize>, BindError> {
        let first = self.column(&e.column, scopes)?;
        if let Some((_, c)) = &e.arith {
            self.column(c, scopes)?;
        }
        Ok(first)
    }

    /// Resolves one column reference; `Some(index)` for a schema column,
    /// `None` for the star or a column of a derived table.
    fn column(&mut self, c: &ColumnRef, scopes: &[Vec<Entry>]) -> Result<Option<usize>, BindError> {
        let display = c.to_string();
        if let Some(q) = &c.qualifier {
            let q = q.to_lowercase();
            let entry = scopes
                .iter()
                .rev()
                .find_map(|s| s.iter().find(|e| e.keys.contains(&q)))
                .ok_or_else(|| BindError::new(&display, "unknown table or alias"))?;
            return match entry.source {
                Source::Derived => Ok(None),
                Source::Table(t) => {
                    if c.is_star() {
                        self.usage.uses_star = true;
                        return Ok(None);
                    }
                    let col = self
                        .schema
                        .column_in_table(t, &c.column)
                        .ok_or_else(|| BindError::new(&display, "unknown column"))?;
                    self.usage.used_columns.insert(col.index);
                    Ok(Some(col.index))
                }
            };
        }
        if c.is_star() {
            self.usage.uses_star = true;
            return Ok(None);
        }
        for scope in scopes.iter().rev() {
            let hits: Vec<usize> = scope
                .iter()
                .filter_map(|e| match e.source {
                    Source::Table(t) => self.schema.column_in_table(t, &c.column).map(|c| c.index),
                    Source::Derived => None,
                })
                .collect();
            match hits.len() {
                0 if scope.iter().any(|e| matches!(e.source, Source::Derived)) => return Ok(None),
                0 => continue,
                1 => {
                    self.usage.used_columns.insert(hits[0]);
                    return Ok(Some(hits[0]));
                }
                _ => return Err(BindError::new(&display, "ambiguous column")),
            }
        }
        Err(BindError::new(&display, "unknown column"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::parse_schemas;
    use crate::sql::parse_sql;
    use std::path::Path;

    fn concert() -> Schema {
        let json = r#"[{"db_id":"concert","table_names":["singer","concert","singer in concert"],
          "table_names_original":["singer","concert","singer_in_concert"],
          "column_names":[[-1,"*"],[0,"singer id"],[0,"name"],[0,"age"],[1,"concert id"],[1,"year"],[2,"singer id"],[2,"concert id"]],
          "column_names_original":[[-1,"*"],[0,"Singer_ID"],[0,"Name"],[0,"Age"],[1,"concert_ID"],[1,"Year"],[2,"Singer_ID"],[2,"concert_ID"]],
          "column_types":["text","number","text","number","number","text","number","number"],
          "primary_keys":[1,4],"foreign_keys":[[6,1],[7,4]]}]"#;
        parse_schemas(json.as_bytes(), Path::new("m")).unwrap().remove(0)
    }

    fn usage(sql: &str) -> Result<UsageSet, BindError> {
        bind_and_usage(&parse_sql(sql).unwrap(), &concert())
    }

    #[test]
    fn simple_usage() {
        let u = usage("SELECT age FROM singer").unwrap();
        assert_eq!(u.used_tables, BTreeSet::from([0]));
        assert_eq!(u.used_columns, BTreeSet::from([3]));
        assert!(!u.uses_star);
    }

    #[test]
    fn aliases_resolve() {
        let a = usage("SELECT t1.age FROM singer AS t1 WHERE T1.name = 'x'").unwrap();
        let b = usage("SELECT age FROM singer WHERE name = 'x'").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.used_columns, BTreeSet::from([2, 3]));
    }

    #[test]
    fn star_is_flagged_not_listed() {
        let u = usage("SELECT * FROM singer").unwrap();
        assert_eq!(u.used_tables, BTreeSet::from([0]));
        assert!(u.used_columns.is_empty());
        assert!(u.uses_star);
    }

    #[test]
    fn join_records_fk_pair_and_nested_usage() {
        let u = usage(
            "SELECT T1.name FROM singer AS T1 JOIN singer_in_concert AS T2 ON T1.singer_id = T2.singer_id \
             WHERE T2.concert_id IN (SELECT concert_id FROM concert WHERE year = 2014)",
        )
        .unwrap();
        assert_eq!(u.used_tables, BTreeSet::from([0, 1, 2]));
        assert_eq!(u.used_fk_pairs, BTreeSet::from([(6, 1)]));
        assert!(u.used_columns.contains(&5));
        assert!(u.used_columns.contains(&4));
    }

    #[test]
    fn correlated_subquery_sees_outer_scope() {
        let u = usage("SELECT name FROM singer AS s WHERE age > (SELECT avg(age) FROM singer WHERE singer_id = s.singer_id)");
        assert!(u.is_ok(), "{u:?}");
    }

    #[test]
    fn unresolved_names_identify_the_token() {
        let err = usage("SELECT salary FROM singer").unwrap_err();
        assert_eq!(err.token, "salary");
        let err = usage("SELECT name FROM band").unwrap_err();
        assert_eq!(err.token, "band");
        let err = usage("SELECT singer_id FROM singer JOIN singer_in_concert").unwrap_err();
        assert_eq!(err.message, "ambiguous column");
    }

    #[test]
    fn named_usage_is_schema_independent() {
        let s = concert();
        let u = usage("SELECT Age FROM Singer").unwrap();
        let n = u.named(&s);
        assert_eq!(n.columns, BTreeSet::from(["singer.age".to_string()]));
        assert_eq!(n.tables, BTreeSet::from(["singer".to_string()]));
    }
}
