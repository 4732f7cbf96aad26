//! Exact set match.
//!
//! Both queries are lowered to a canonical form in which aliases are
//! replaced by table names, SELECT items become a sorted multiset, AND
//! conjuncts and GROUP BY become sorted sets, OR branches keep their order,
//! and literals collapse to a placeholder unless value-sensitive matching is
//! requested. Two queries match iff their canonical forms are equal. DISTINCT
//! inside an aggregate call is compared structurally.

use serde::Serialize;

use super::ast::*;
use crate::dataset::Schema;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct MatchOptions {
    /// Compare literal values too. Off by default, as in Spider EM.
    pub value_sensitive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalColumn {
    pub table: Option<String>,
    pub column: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalExpr {
    pub agg: Aggregate,
    pub distinct: bool,
    pub column: CanonicalColumn,
    pub arith: Option<(ArithOp, CanonicalColumn)>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CanonicalOperand {
    /// `None` is the value placeholder.
    Value(Option<String>),
    Column(CanonicalExpr),
    Subquery(Box<CanonicalQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalPredicate {
    pub negated: bool,
    pub left: CanonicalExpr,
    pub op: CompareOp,
    pub right: CanonicalOperand,
    pub upper: Option<CanonicalOperand>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CanonicalCondition {
    /// Sorted and deduplicated.
    And(Vec<CanonicalCondition>),
    /// Original order.
    Or(Vec<CanonicalCondition>),
    Atom(CanonicalPredicate),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum CanonicalTable {
    Named(String),
    Subquery(Box<CanonicalQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct CanonicalQuery {
    pub distinct: bool,
    pub select: Vec<CanonicalExpr>,
    pub from_tables: Vec<CanonicalTable>,
    pub join_conditions: Vec<(CanonicalColumn, CanonicalColumn)>,
    pub where_clause: Option<CanonicalCondition>,
    pub group_by: Vec<CanonicalColumn>,
    pub having: Option<CanonicalCondition>,
    pub order_by: Vec<(CanonicalExpr, Direction)>,
    pub limit: Option<u64>,
    pub set_op: Option<(SetOpKind, Box<CanonicalQuery>)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    Select,
    From,
    Where,
    GroupBy,
    Having,
    OrderBy,
    Limit,
    SetOp,
}

impl Clause {
    pub fn name(self) -> &'static str {
        match self {
            Clause::Select => "SELECT",
            Clause::From => "FROM",
            Clause::Where => "WHERE",
            Clause::GroupBy => "GROUP BY",
            Clause::Having => "HAVING",
            Clause::OrderBy => "ORDER BY",
            Clause::Limit => "LIMIT",
            Clause::SetOp => "set operation",
        }
    }
}

const DERIVED: &str = "<derived>";

struct ScopeEntry {
    keys: Vec<String>,
    table: Option<String>,
    schema_table: Option<usize>,
}

struct Canonicalizer<'a> {
    schema: Option<&'a Schema>,
    opts: MatchOptions,
}

pub fn canonicalize(query: &SqlQuery, schema: Option<&Schema>, opts: MatchOptions) -> CanonicalQuery {
    Canonicalizer { schema, opts }.query(query, &[])
}

/// Exact set match with schema-free name resolution: aliases map to table
/// names and unqualified columns are qualified only when the query's own
/// FROM clause has a single table.
pub fn exact_set_match(a: &SqlQuery, b: &SqlQuery) -> bool {
    exact_set_match_with(a, None, b, None, MatchOptions::default())
}

/// Exact set match where each query may carry the schema it was written
/// against, which lets unqualified columns in joins resolve to their table.
pub fn exact_set_match_with(
    a: &SqlQuery,
    schema_a: Option<&Schema>,
    b: &SqlQuery,
    schema_b: Option<&Schema>,
    opts: MatchOptions,
) -> bool {
    canonicalize(a, schema_a, opts) == canonicalize(b, schema_b, opts)
}

/// The first clause whose canonical forms differ, or `None` on a match.
pub fn first_difference(a: &CanonicalQuery, b: &CanonicalQuery) -> Option<Clause> {
    if a.distinct != b.distinct || a.select != b.select {
        Some(Clause::Select)
    } else if a.from_tables != b.from_tables || a.join_conditions != b.join_conditions {
        Some(Clause::From)
    } else if a.where_clause != b.where_clause {
        Some(Clause::Where)
    } else if a.group_by != b.group_by {
        Some(Clause::GroupBy)
    } else if a.having != b.having {
        Some(Clause::Having)
    } else if a.order_by != b.order_by {
        Some(Clause::OrderBy)
    } else if a.limit != b.limit {
        Some(Clause::Limit)
    } else if a.set_op != b.set_op {
        Some(Clause::SetOp)
    } else {
        None
    }
}

impl<'a> Canonicalizer<'a> {
    fn query(&self, q: &SqlQuery, outer: &[&[ScopeEntry]]) -> CanonicalQuery {
        let mut scope = Vec::new();
        let mut from_tables = Vec::new();
        for t in &q.from.tables {
            let alias = t.alias.as_ref().map(|a| a.to_lowercase());
            match &t.source {
                TableSource::Named(name) => {
                    let lower = name.to_lowercase();
                    let schema_table = self
                        .schema
                        .and_then(|s| s.table_by_name(name))
                        .map(|t| t.index);
                    let mut keys = vec![lower.clone()];
                    keys.extend(alias);
                    scope.push(ScopeEntry {
                        keys,
                        table: Some(lower.clone()),
                        schema_table,
                    });
                    from_tables.push(CanonicalTable::Named(lower));
                }
                TableSource::Subquery(sub) => {
                    from_tables.push(CanonicalTable::Subquery(Box::new(self.query(sub, outer))));
                    scope.push(ScopeEntry {
                        keys: alias.into_iter().collect(),
                        table: None,
                        schema_table: None,
                    });
                }
            }
        }
        from_tables.sort();

        let mut scopes: Vec<&[ScopeEntry]> = outer.to_vec();
        scopes.push(&scope);

        let mut select: Vec<_> = q.select.iter().map(|e| self.expr(e, &scopes)).collect();
        select.sort();

        let mut join_conditions: Vec<_> = q
            .from
            .join_conditions
            .iter()
            .map(|(a, b)| {
                let (a, b) = (self.column(a, &scopes), self.column(b, &scopes));
                if a <= b {
                    (a, b)
                } else {
                    (b, a)
                }
            })
            .collect();
        join_conditions.sort();
        join_conditions.dedup();

        let mut group_by: Vec<_> = q.group_by.iter().map(|c| self.column(c, &scopes)).collect();
        group_by.sort();
        group_by.dedup();

        CanonicalQuery {
            distinct: q.distinct,
            select,
            from_tables,
            join_conditions,
            where_clause: q.where_clause.as_ref().map(|c| self.condition(c, &scopes)),
            group_by,
            having: q.having.as_ref().map(|c| self.condition(c, &scopes)),
            order_by: q
                .order_by
                .iter()
                .map(|k| (self.expr(&k.expr, &scopes), k.direction))
                .collect(),
            limit: q.limit,
            set_op: q
                .set_op
                .as_ref()
                .map(|s| (s.kind, Box::new(self.query(&s.right, outer)))),
        }
    }

    fn condition(&self, c: &Condition, scopes: &[&[ScopeEntry]]) -> CanonicalCondition {
        match c {
            Condition::Atom(p) => CanonicalCondition::Atom(self.predicate(p, scopes)),
            Condition::Or(cs) => {
                CanonicalCondition::Or(cs.iter().map(|c| self.condition(c, scopes)).collect())
            }
            Condition::And(cs) => {
                let mut parts: Vec<_> = cs.iter().map(|c| self.condition(c, scopes)).collect();
                parts.sort();
                parts.dedup();
                if parts.len() == 1 {
                    parts.pop().expect("one part")
                } else {
                    CanonicalCondition::And(parts)
                }
            }
        }
    }

    fn predicate(&self, p: &Predicate, scopes: &[&[ScopeEntry]]) -> CanonicalPredicate {
        CanonicalPredicate {
            negated: p.negated,
            left: self.expr(&p.left, scopes),
            op: p.op,
            right: self.operand(&p.right, scopes),
            upper: p.upper.as_ref().map(|u| self.operand(u, scopes)),
        }
    }

    fn operand(&self, o: &Operand, scopes: &[&[ScopeEntry]]) -> CanonicalOperand {
        let value = |s: String| CanonicalOperand::Value(self.opts.value_sensitive.then_some(s));
        match o {
            Operand::Literal(l) => value(literal_key(l)),
            Operand::List(items) => value(
                items
                    .iter()
                    .map(literal_key)
                    .collect::<Vec<_>>()
                    .join(","),
            ),
            Operand::Column(e) => CanonicalOperand::Column(self.expr(e, scopes)),
            Operand::Subquery(q) => CanonicalOperand::Subquery(Box::new(self.query(q, scopes))),
        }
    }

    fn expr(&self, e: &ColumnExpr, scopes: &[&[ScopeEntry]]) -> CanonicalExpr {
        CanonicalExpr {
            agg: e.agg,
            distinct: e.distinct,
            column: self.column(&e.column, scopes),
            arith: e.arith.as_ref().map(|(op, c)| (*op, self.column(c, scopes))),
        }
    }

    fn column(&self, c: &ColumnRef, scopes: &[&[ScopeEntry]]) -> CanonicalColumn {
        if c.is_star() {
            return CanonicalColumn {
                table: None,
                column: "*".into(),
            };
        }
        let column = c.column.to_lowercase();
        let table = match &c.qualifier {
            Some(q) => {
                let q = q.to_lowercase();
                match scopes
                    .iter()
                    .rev()
                    .find_map(|s| s.iter().find(|e| e.keys.contains(&q)))
                {
                    Some(e) => Some(e.table.clone().unwrap_or_else(|| DERIVED.to_string())),
                    None => Some(q),
                }
            }
            None => self.unqualified_owner(&column, scopes),
        };
        CanonicalColumn { table, column }
    }

    fn unqualified_owner(&self, column: &str, scopes: &[&[ScopeEntry]]) -> Option<String> {
        if let Some(schema) = self.schema {
            for scope in scopes.iter().rev() {
                let hits: Vec<&ScopeEntry> = scope
                    .iter()
                    .filter(|e| {
                        e.schema_table
                            .is_some_and(|t| schema.column_in_table(t, column).is_some())
                    })
                    .collect();
                match hits.len() {
                    0 => continue,
                    1 => return hits[0].table.clone(),
                    _ => return None,
                }
            }
            None
        } else {
            match scopes.last() {
                Some([only]) => only.table.clone(),
                _ => None,
            }
        }
    }
}

fn literal_key(l: &Literal) -> String {
    match l {
        Literal::Number(n) => n.clone(),
        Literal::String(s) => format!("'{s}'"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_sql;

    fn em(a: &str, b: &str) -> bool {
        exact_set_match(&parse_sql(a).unwrap(), &parse_sql(b).unwrap())
    }

    #[test]
    fn reflexive_and_order_insensitive_select() {
        assert!(em("SELECT a, b FROM t", "SELECT a, b FROM t"));
        assert!(em("SELECT a, b FROM t", "SELECT b, a FROM t"));
        assert!(!em("SELECT a, a FROM t", "SELECT a FROM t"));
    }

    #[test]
    fn aggregate_mismatch() {
        assert!(!em("SELECT sum(age) FROM singer", "SELECT count(*) FROM singer"));
        assert!(!em("SELECT count(name) FROM t", "SELECT count(DISTINCT name) FROM t"));
    }

    #[test]
    fn aliases_are_transparent() {
        assert!(em(
            "SELECT T1.name FROM singer AS T1 WHERE T1.age > 3",
            "SELECT name FROM singer WHERE age > 3"
        ));
        assert!(em(
            "SELECT T1.name FROM singer AS T1 JOIN concert AS T2 ON T1.id = T2.sid",
            "SELECT a.name FROM concert AS b JOIN singer AS a ON b.sid = a.id"
        ));
    }

    #[test]
    fn values_ignored_unless_requested() {
        let a = parse_sql("SELECT a FROM t WHERE b = 1").unwrap();
        let b = parse_sql("SELECT a FROM t WHERE b = 2").unwrap();
        assert!(exact_set_match(&a, &b));
        let strict = MatchOptions { value_sensitive: true };
        assert!(!exact_set_match_with(&a, None, &b, None, strict));
        assert!(exact_set_match_with(&a, None, &a, None, strict));
    }

    #[test]
    fn and_is_a_set_or_is_ordered() {
        assert!(em(
            "SELECT a FROM t WHERE b = 1 AND c > 2",
            "SELECT a FROM t WHERE c > 2 AND b = 1"
        ));
        assert!(!em(
            "SELECT a FROM t WHERE b = 1 OR c > 2",
            "SELECT a FROM t WHERE c > 2 OR b = 1"
        ));
    }

    #[test]
    fn order_by_is_ordered_and_direction_sensitive() {
        assert!(!em("SELECT a FROM t ORDER BY a, b", "SELECT a FROM t ORDER BY b, a"));
        assert!(!em("SELECT a FROM t ORDER BY a", "SELECT a FROM t ORDER BY a DESC"));
        assert!(!em("SELECT a FROM t LIMIT 1", "SELECT a FROM t LIMIT 2"));
        assert!(!em("SELECT a FROM t LIMIT 1", "SELECT a FROM t"));
    }

    #[test]
    fn first_difference_names_the_clause() {
        let c = |s: &str| canonicalize(&parse_sql(s).unwrap(), None, MatchOptions::default());
        assert_eq!(
            first_difference(&c("SELECT a FROM t WHERE b = 1"), &c("SELECT a FROM t WHERE b > 1")),
            Some(Clause::Where)
        );
        assert_eq!(first_difference(&c("SELECT a FROM t"), &c("SELECT a FROM t")), None);
        assert_eq!(
            first_difference(&c("SELECT a FROM t"), &c("SELECT a FROM t UNION SELECT a FROM s")),
            Some(Clause::SetOp)
        );
    }
}
