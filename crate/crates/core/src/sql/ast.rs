use std::fmt;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Aggregate {
    None,
    Min,
    Max,
    Count,
    Sum,
    Avg,
}

impl Aggregate {
    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "min" => Aggregate::Min,
            "max" => Aggregate::Max,
            "count" => Aggregate::Count,
            "sum" => Aggregate::Sum,
            "avg" => Aggregate::Avg,
            _ => return None,
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            Aggregate::None => "",
            Aggregate::Min => "min",
            Aggregate::Max => "max",
            Aggregate::Count => "count",
            Aggregate::Sum => "sum",
            Aggregate::Avg => "avg",
        }
    }
}

/// `[qualifier.]column`; `column == "*"` for the star.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnRef {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub qualifier: Option<String>,
    pub column: String,
}

impl ColumnRef {
    pub fn star() -> Self {
        ColumnRef {
            qualifier: None,
            column: "*".into(),
        }
    }

    pub fn is_star(&self) -> bool {
        self.column == "*"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ArithOp {
    #[serde(rename = "+")]
    Add,
    #[serde(rename = "-")]
    Sub,
    #[serde(rename = "*")]
    Mul,
    #[serde(rename = "/")]
    Div,
}

impl ArithOp {
    pub fn symbol(self) -> &'static str {
        match self {
            ArithOp::Add => "+",
            ArithOp::Sub => "-",
            ArithOp::Mul => "*",
            ArithOp::Div => "/",
        }
    }
}

/// `agg([DISTINCT] column [op column])`, the value unit of the Spider grammar.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ColumnExpr {
    pub agg: Aggregate,
    /// DISTINCT inside the aggregate call, as in `count(DISTINCT name)`.
    pub distinct: bool,
    pub column: ColumnRef,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub arith: Option<(ArithOp, ColumnRef)>,
}

impl ColumnExpr {
    pub fn plain(column: ColumnRef) -> Self {
        ColumnExpr {
            agg: Aggregate::None,
            distinct: false,
            column,
            arith: None,
        }
    }

    pub fn columns(&self) -> impl Iterator<Item = &ColumnRef> {
        std::iter::once(&self.column).chain(self.arith.as_ref().map(|(_, c)| c))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum CompareOp {
    #[serde(rename = "=")]
    Eq,
    #[serde(rename = "!=")]
    Ne,
    #[serde(rename = ">")]
    Gt,
    #[serde(rename = "<")]
    Lt,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = "LIKE")]
    Like,
    #[serde(rename = "IN")]
    In,
    #[serde(rename = "BETWEEN")]
    Between,
}

impl CompareOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompareOp::Eq => "=",
            CompareOp::Ne => "!=",
            CompareOp::Gt => ">",
            CompareOp::Lt => "<",
            CompareOp::Ge => ">=",
            CompareOp::Le => "<=",
            CompareOp::Like => "LIKE",
            CompareOp::In => "IN",
            CompareOp::Between => "BETWEEN",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Literal {
    Number(String),
    String(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Operand {
    Literal(Literal),
    Column(ColumnExpr),
    Subquery(Box<SqlQuery>),
    List(Vec<Literal>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Predicate {
    /// NOT IN / NOT LIKE / NOT BETWEEN. A leading NOT on a plain comparison
    /// is folded into the flipped operator at parse time, so this is only
    /// ever set for LIKE, IN and BETWEEN.
    pub negated: bool,
    pub left: ColumnExpr,
    pub op: CompareOp,
    pub right: Operand,
    /// Upper bound of BETWEEN.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper: Option<Operand>,
}

/// Condition tree. The parser flattens nested AND-in-AND and OR-in-OR, and
/// never produces a single-child node.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    And(Vec<Condition>),
    Or(Vec<Condition>),
    Atom(Predicate),
}

impl Condition {
    pub fn atoms(&self) -> Vec<&Predicate> {
        let mut out = Vec::new();
        self.collect_atoms(&mut out);
        out
    }

    fn collect_atoms<'a>(&'a self, out: &mut Vec<&'a Predicate>) {
        match self {
            Condition::And(cs) | Condition::Or(cs) => cs.iter().for_each(|c| c.collect_atoms(out)),
            Condition::Atom(p) => out.push(p),
        }
    }

    pub fn or_count(&self) -> usize {
        match self {
            Condition::And(cs) => cs.iter().map(Condition::or_count).sum(),
            Condition::Or(cs) => cs.len() - 1 + cs.iter().map(Condition::or_count).sum::<usize>(),
            Condition::Atom(_) => 0,
        }
    }

    /// Joins two conditions with AND, keeping the tree flat.
    pub fn and(self, other: Condition) -> Condition {
        let mut parts = match self {
            Condition::And(cs) => cs,
            c => vec![c],
        };
        match other {
            Condition::And(cs) => parts.extend(cs),
            c => parts.push(c),
        }
        Condition::And(parts)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum TableSource {
    Named(String),
    Subquery(Box<SqlQuery>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRef {
    pub source: TableSource,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FromClause {
    pub tables: Vec<TableRef>,
    pub join_conditions: Vec<(ColumnRef, ColumnRef)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Direction {
    Asc,
    Desc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderKey {
    pub expr: ColumnExpr,
    pub direction: Direction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SetOpKind {
    Union,
    Intersect,
    Except,
}

impl SetOpKind {
    pub fn keyword(self) -> &'static str {
        match self {
            SetOpKind::Union => "UNION",
            SetOpKind::Intersect => "INTERSECT",
            SetOpKind::Except => "EXCEPT",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SetOp {
    pub kind: SetOpKind,
    pub right: Box<SqlQuery>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SqlQuery {
    pub distinct: bool,
    pub select: Vec<ColumnExpr>,
    pub from: FromClause,
    #[serde(rename = "where")]
    pub where_clause: Option<Condition>,
    pub group_by: Vec<ColumnRef>,
    pub having: Option<Condition>,
    pub order_by: Vec<OrderKey>,
    pub limit: Option<u64>,
    pub set_op: Option<SetOp>,
}

impl SqlQuery {
    /// Subqueries nested directly in this query (FROM, WHERE, HAVING and the
    /// set-operation branch), not recursing further.
    pub fn nested(&self) -> Vec<&SqlQuery> {
        let mut out = Vec::new();
        for t in &self.from.tables {
            if let TableSource::Subquery(q) = &t.source {
                out.push(q.as_ref());
            }
        }
        for cond in [&self.where_clause, &self.having].into_iter().flatten() {
            for p in cond.atoms() {
                for op in std::iter::once(&p.right).chain(p.upper.as_ref()) {
                    if let Operand::Subquery(q) = op {
                        out.push(q.as_ref());
                    }
                }
            }
        }
        if let Some(s) = &self.set_op {
            out.push(s.right.as_ref());
        }
        out
    }
}

fn write_ident(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    let plain = s
        .chars()
        .next()
        .is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if plain && !super::lexer::is_reserved(s) {
        f.write_str(s)
    } else {
        write!(f, "`{}`", s.replace('`', "``"))
    }
}

impl fmt::Display for ColumnRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(q) = &self.qualifier {
            write_ident(f, q)?;
            f.write_str(".")?;
        }
        if self.is_star() {
            f.write_str("*")
        } else {
            write_ident(f, &self.column)
        }
    }
}

impl fmt::Display for ColumnExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let inner = |f: &mut fmt::Formatter<'_>| -> fmt::Result {
            if self.distinct {
                f.write_str("DISTINCT ")?;
            }
            write!(f, "{}", self.column)?;
            if let Some((op, c)) = &self.arith {
                write!(f, " {} {}", op.symbol(), c)?;
            }
            Ok(())
        };
        if self.agg == Aggregate::None {
            inner(f)
        } else {
            write!(f, "{}(", self.agg.keyword())?;
            inner(f)?;
            f.write_str(")")
        }
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Literal::Number(n) => f.write_str(n),
            Literal::String(s) => write!(f, "\"{}\"", s.replace('"', "\"\"")),
        }
    }
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Literal(l) => write!(f, "{l}"),
            Operand::Column(c) => write!(f, "{c}"),
            Operand::Subquery(q) => write!(f, "({q})"),
            Operand::List(items) => {
                f.write_str("(")?;
                for (i, l) in items.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{l}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.left)?;
        if self.negated {
            f.write_str("NOT ")?;
        }
        write!(f, "{} {}", self.op.symbol(), self.right)?;
        if let Some(u) = &self.upper {
            write!(f, " AND {u}")?;
        }
        Ok(())
    }
}

impl fmt::Display for Condition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Condition::Atom(p) => write!(f, "{p}"),
            Condition::And(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" AND ")?;
                    }
                    match c {
                        Condition::Or(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
            Condition::Or(cs) => {
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" OR ")?;
                    }
                    match c {
                        // Parenthesized so re-parsing cannot flatten it into us.
                        Condition::Or(_) => write!(f, "({c})")?,
                        _ => write!(f, "{c}")?,
                    }
                }
                Ok(())
            }
        }
    }
}

impl fmt::Display for TableRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.source {
            TableSource::Named(n) => write_ident(f, n)?,
            TableSource::Subquery(q) => write!(f, "({q})")?,
        }
        if let Some(a) = &self.alias {
            f.write_str(" AS ")?;
            write_ident(f, a)?;
        }
        Ok(())
    }
}

impl fmt::Display for SqlQuery {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SELECT ")?;
        if self.distinct {
            f.write_str("DISTINCT ")?;
        }
        for (i, item) in self.select.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{item}")?;
        }
        f.write_str(" FROM ")?;
        for (i, t) in self.from.tables.iter().enumerate() {
            if i > 0 {
                f.write_str(" JOIN ")?;
            }
            write!(f, "{t}")?;
        }
        for (i, (a, b)) in self.from.join_conditions.iter().enumerate() {
            f.write_str(if i == 0 { " ON " } else { " AND " })?;
            write!(f, "{a} = {b}")?;
        }
        if let Some(w) = &self.where_clause {
            write!(f, " WHERE {w}")?;
        }
        if !self.group_by.is_empty() {
            f.write_str(" GROUP BY ")?;
            for (i, c) in self.group_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{c}")?;
            }
        }
        if let Some(h) = &self.having {
            write!(f, " HAVING {h}")?;
        }
        if !self.order_by.is_empty() {
            f.write_str(" ORDER BY ")?;
            for (i, k) in self.order_by.iter().enumerate() {
                if i > 0 {
                    f.write_str(", ")?;
                }
                let dir = match k.direction {
                    Direction::Asc => "ASC",
                    Direction::Desc => "DESC",
                };
                write!(f, "{} {dir}", k.expr)?;
            }
        }
        if let Some(l) = self.limit {
            write!(f, " LIMIT {l}")?;
        }
        if let Some(s) = &self.set_op {
            write!(f, " {} {}", s.kind.keyword(), s.right)?;
        }
        Ok(())
    }
}
