//! Recursive-descent parser for the Spider SQL subset.
//!
//! ```text
//! query     := SELECT [DISTINCT] expr {, expr} FROM from [WHERE cond]
//!              [GROUP BY col {, col}] [HAVING cond] [ORDER BY expr [ASC|DESC] {, ...}]
//!              [LIMIT int] [(UNION|INTERSECT|EXCEPT) query]
//! from      := table { (, | [INNER] JOIN) table [ON col = col {AND col = col}] }
//! table     := name [[AS] alias] | ( query ) [[AS] alias]
//! expr      := agg ( [DISTINCT] unit ) | unit
//! unit      := col [(+|-|*|/) col]
//! cond      := conj {OR conj};  conj := atom {AND atom}
//! atom      := ( cond ) | NOT atom | expr op operand
//!            | expr [NOT] (LIKE operand | IN (query|list) | BETWEEN operand AND operand)
//! ```

use super::ast::*;
use super::lexer::{is_reserved, tokenize, Tok, Token};
use super::ParseError;

pub fn parse_sql(text: &str) -> Result<SqlQuery, ParseError> {
    if text.trim().is_empty() {
        return Err(ParseError::new(0, "empty query", "SELECT"));
    }
    let toks = tokenize(text)?;
    let mut p = Parser {
        toks,
        pos: 0,
        end: text.len(),
    };
    let q = p.query()?;
    while p.eat(&Tok::Semi) {}
    if let Some(t) = p.peek() {
        return Err(ParseError::new(
            t.offset,
            format!("unexpected {}", describe(&t.tok)),
            "end of query",
        ));
    }
    Ok(q)
}

struct Parser {
    toks: Vec<Token>,
    pos: usize,
    end: usize,
}

fn describe(t: &Tok) -> String {
    match t {
        Tok::Ident(s) => format!("`{s}`"),
        Tok::Quoted(s) => format!("quoted identifier `{s}`"),
        Tok::Number(n) => format!("number {n}"),
        Tok::Str(s) => format!("string \"{s}\""),
        other => format!("`{}`", symbol(other)),
    }
}

fn symbol(t: &Tok) -> &'static str {
    match t {
        Tok::LParen => "(",
        Tok::RParen => ")",
        Tok::Comma => ",",
        Tok::Dot => ".",
        Tok::Star => "*",
        Tok::Plus => "+",
        Tok::Minus => "-",
        Tok::Slash => "/",
        Tok::Eq => "=",
        Tok::Ne => "!=",
        Tok::Lt => "<",
        Tok::Gt => ">",
        Tok::Le => "<=",
        Tok::Ge => ">=",
        Tok::Semi => ";",
        _ => "token",
    }
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.toks.get(self.pos)
    }

    fn peek_tok(&self, ahead: usize) -> Option<&Tok> {
        self.toks.get(self.pos + ahead).map(|t| &t.tok)
    }

    fn offset(&self) -> usize {
        self.peek().map_or(self.end, |t| t.offset)
    }

    fn error(&self, expected: impl Into<String>) -> ParseError {
        let found = match self.peek() {
            Some(t) => format!("unexpected {}", describe(&t.tok)),
            None => "unexpected end of query".to_string(),
        };
        ParseError::new(self.offset(), found, expected)
    }

    fn eat(&mut self, tok: &Tok) -> bool {
        if self.peek_tok(0) == Some(tok) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &Tok) -> Result<(), ParseError> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.error(format!("`{}`", symbol(tok))))
        }
    }

    fn is_kw_at(&self, ahead: usize, kw: &str) -> bool {
        matches!(self.peek_tok(ahead), Some(Tok::Ident(s)) if s.eq_ignore_ascii_case(kw))
    }

    fn is_kw(&self, kw: &str) -> bool {
        self.is_kw_at(0, kw)
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.is_kw(kw) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_kw(&mut self, kw: &str) -> Result<(), ParseError> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error(kw.to_ascii_uppercase()))
        }
    }

    fn ident(&mut self) -> Result<String, ParseError> {
        match self.peek_tok(0) {
            Some(Tok::Ident(s)) if !is_reserved(s) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            Some(Tok::Quoted(s)) => {
                let s = s.clone();
                self.pos += 1;
                Ok(s)
            }
            _ => Err(self.error("identifier")),
        }
    }

    fn at_ident(&self, ahead: usize) -> bool {
        match self.peek_tok(ahead) {
            Some(Tok::Ident(s)) => !is_reserved(s),
            Some(Tok::Quoted(_)) => true,
            _ => false,
        }
    }

    fn query(&mut self) -> Result<SqlQuery, ParseError> {
        self.expect_kw("select")?;
        let distinct = self.eat_kw("distinct");
        let mut select = vec![self.column_expr()?];
        while self.eat(&Tok::Comma) {
            select.push(self.column_expr()?);
        }
        self.expect_kw("from")?;
        let from = self.from_clause()?;
        let where_clause = if self.eat_kw("where") {
            Some(self.condition()?)
        } else {
            None
        };
        let mut group_by = Vec::new();
        if self.eat_kw("group") {
            self.expect_kw("by")?;
            group_by.push(self.column_ref()?);
            while self.eat(&Tok::Comma) {
                group_by.push(self.column_ref()?);
            }
        }
        let having = if self.eat_kw("having") {
            Some(self.condition()?)
        } else {
            None
        };
        let mut order_by = Vec::new();
        if self.eat_kw("order") {
            self.expect_kw("by")?;
            loop {
                let expr = self.column_expr()?;
                let direction = if self.eat_kw("desc") {
                    Direction::Desc
                } else {
                    self.eat_kw("asc");
                    Direction::Asc
                };
                order_by.push(OrderKey { expr, direction });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        let limit = if self.eat_kw("limit") {
            match self.peek_tok(0) {
                Some(Tok::Number(n)) => {
                    let v = n
                        .parse::<u64>()
                        .map_err(|_| self.error("non-negative integer after LIMIT"))?;
                    self.pos += 1;
                    Some(v)
                }
                _ => return Err(self.error("non-negative integer after LIMIT")),
            }
        } else {
            None
        };
        let set_op = [
            ("union", SetOpKind::Union),
            ("intersect", SetOpKind::Intersect),
            ("except", SetOpKind::Except),
        ]
        .into_iter()
        .find(|(kw, _)| self.is_kw(kw))
        .map(|(_, kind)| kind);
        let set_op = match set_op {
            Some(kind) => {
                self.pos += 1;
                Some(SetOp {
                    kind,
                    right: Box::new(self.query()?),
                })
            }
            None => None,
        };
        Ok(SqlQuery {
            distinct,
            select,
            from,
            where_clause,
            group_by,
            having,
            order_by,
            limit,
            set_op,
        })
    }

    fn from_clause(&mut self) -> Result<FromClause, ParseError> {
        let mut tables = vec![self.table_ref()?];
        let mut join_conditions = Vec::new();
        loop {
            if self.eat(&Tok::Comma) {
                tables.push(self.table_ref()?);
                continue;
            }
            if self.is_kw("left") || self.is_kw("right") || self.is_kw("cross") || self.is_kw("outer") {
                return Err(self.error("JOIN or INNER JOIN (outer and cross joins are not supported)"));
            }
            let inner = self.is_kw("inner") && self.is_kw_at(1, "join");
            if inner || self.is_kw("join") {
                self.pos += if inner { 2 } else { 1 };
                tables.push(self.table_ref()?);
                if self.eat_kw("on") {
                    loop {
                        let a = self.column_ref()?;
                        self.expect(&Tok::Eq)?;
                        let b = self.column_ref()?;
                        join_conditions.push((a, b));
                        // An AND directly after a join condition belongs to the ON list.
                        if !(self.is_kw("and") && self.looks_like_join_pair(1)) {
                            break;
                        }
                        self.pos += 1;
                    }
                }
                continue;
            }
            break;
        }
        Ok(FromClause {
            tables,
            join_conditions,
        })
    }

    /// `col = col` starting `ahead` tokens from here.
    fn looks_like_join_pair(&self, ahead: usize) -> bool {
        let mut i = ahead;
        let col = |i: &mut usize| -> bool {
            if !self.at_ident(*i) {
                return false;
            }
            *i += 1;
            if self.peek_tok(*i) == Some(&Tok::Dot) {
                *i += 1;
                if !self.at_ident(*i) {
                    return false;
                }
                *i += 1;
            }
            true
        };
        if !col(&mut i) || self.peek_tok(i) != Some(&Tok::Eq) {
            return false;
        }
        i += 1;
        col(&mut i) && !matches!(self.peek_tok(i), Some(Tok::LParen))
    }

    fn table_ref(&mut self) -> Result<TableRef, ParseError> {
        let source = if self.eat(&Tok::LParen) {
            if !self.is_kw("select") {
                return Err(self.error("SELECT subquery"));
            }
            let q = self.query()?;
            self.expect(&Tok::RParen)?;
            TableSource::Subquery(Box::new(q))
        } else {
            TableSource::Named(self.ident()?)
        };
        let alias = if self.eat_kw("as") || self.at_ident(0) {
            Some(self.ident()?)
        } else {
            None
        };
        Ok(TableRef { source, alias })
    }

    fn column_ref(&mut self) -> Result<ColumnRef, ParseError> {
        if self.eat(&Tok::Star) {
            return Ok(ColumnRef::star());
        }
        let first = self.ident().map_err(|_| self.error("column name"))?;
        if self.eat(&Tok::Dot) {
            if self.eat(&Tok::Star) {
                return Ok(ColumnRef {
                    qualifier: Some(first),
                    column: "*".into(),
                });
            }
            let column = self.ident().map_err(|_| self.error("column name after `.`"))?;
            Ok(ColumnRef {
                qualifier: Some(first),
                column,
            })
        } else {
            Ok(ColumnRef {
                qualifier: None,
                column: first,
            })
        }
    }

    fn arith_tail(&mut self) -> Result<Option<(ArithOp, ColumnRef)>, ParseError> {
        let op = match self.peek_tok(0) {
            Some(Tok::Plus) => ArithOp::Add,
            Some(Tok::Minus) => ArithOp::Sub,
            Some(Tok::Slash) => ArithOp::Div,
            Some(Tok::Star) => ArithOp::Mul,
            _ => return Ok(None),
        };
        if !self.at_ident(1) {
            return Ok(None);
        }
        self.pos += 1;
        Ok(Some((op, self.column_ref()?)))
    }

    fn column_expr(&mut self) -> Result<ColumnExpr, ParseError> {
        let agg = match self.peek_tok(0) {
            Some(Tok::Ident(s)) if self.peek_tok(1) == Some(&Tok::LParen) => Aggregate::from_name(s),
            _ => None,
        };
        if let Some(agg) = agg {
            self.pos += 2;
            let distinct = self.eat_kw("distinct");
            let column = self.column_ref()?;
            let arith = self.arith_tail()?;
            self.expect(&Tok::RParen)?;
            return Ok(ColumnExpr {
                agg,
                distinct,
                column,
                arith,
            });
        }
        if matches!(self.peek_tok(0), Some(Tok::Ident(s)) if !is_reserved(s))
            && self.peek_tok(1) == Some(&Tok::LParen)
        {
            return Err(self.error("column or aggregate (MIN, MAX, COUNT, SUM, AVG)"));
        }
        let column = self.column_ref()?;
        let arith = self.arith_tail()?;
        Ok(ColumnExpr {
            agg: Aggregate::None,
            distinct: false,
            column,
            arith,
        })
    }

    fn literal(&mut self) -> Option<Literal> {
        match self.peek_tok(0) {
            Some(Tok::Number(n)) => {
                let n = n.clone();
                self.pos += 1;
                Some(Literal::Number(n))
            }
            Some(Tok::Str(s)) => {
                let s = s.clone();
                self.pos += 1;
                Some(Literal::String(s))
            }
            Some(Tok::Minus) => match self.peek_tok(1) {
                Some(Tok::Number(n)) => {
                    let n = format!("-{n}");
                    self.pos += 2;
                    Some(Literal::Number(n))
                }
                _ => None,
            },
            _ => None,
        }
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        if let Some(l) = self.literal() {
            return Ok(Operand::Literal(l));
        }
        if self.peek_tok(0) == Some(&Tok::LParen) {
            if self.is_kw_at(1, "select") {
                self.pos += 1;
                let q = self.query()?;
                self.expect(&Tok::RParen)?;
                return Ok(Operand::Subquery(Box::new(q)));
            }
            self.pos += 1;
            let mut items = Vec::new();
            loop {
                items.push(self.literal().ok_or_else(|| self.error("literal or subquery"))?);
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
            self.expect(&Tok::RParen)?;
            return Ok(Operand::List(items));
        }
        self.column_expr()
            .map(Operand::Column)
            .map_err(|_| self.error("literal, column or subquery"))
    }

    fn condition(&mut self) -> Result<Condition, ParseError> {
        let mut parts = vec![self.conjunction()?];
        while self.eat_kw("or") {
            parts.push(self.conjunction()?);
        }
        Ok(flatten(parts, false))
    }

    fn conjunction(&mut self) -> Result<Condition, ParseError> {
        let mut parts = vec![self.unary()?];
        while self.eat_kw("and") {
            parts.push(self.unary()?);
        }
        Ok(flatten(parts, true))
    }

    fn unary(&mut self) -> Result<Condition, ParseError> {
        if self.peek_tok(0) == Some(&Tok::LParen) && !self.is_kw_at(1, "select") {
            self.pos += 1;
            let c = self.condition()?;
            self.expect(&Tok::RParen)?;
            return Ok(c);
        }
        if self.is_kw("not") {
            let at = self.offset();
            self.pos += 1;
            return match self.unary()? {
                Condition::Atom(p) => Ok(Condition::Atom(negate(p))),
                _ => Err(ParseError::new(
                    at,
                    "NOT over a compound condition is not supported",
                    "NOT followed by a single predicate",
                )),
            };
        }
        self.predicate().map(Condition::Atom)
    }

    fn predicate(&mut self) -> Result<Predicate, ParseError> {
        let left = self.column_expr()?;
        let negated = self.eat_kw("not");
        let op = match self.peek_tok(0) {
            Some(Tok::Eq) if !negated => CompareOp::Eq,
            Some(Tok::Ne) if !negated => CompareOp::Ne,
            Some(Tok::Lt) if !negated => CompareOp::Lt,
            Some(Tok::Gt) if !negated => CompareOp::Gt,
            Some(Tok::Le) if !negated => CompareOp::Le,
            Some(Tok::Ge) if !negated => CompareOp::Ge,
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("like") => CompareOp::Like,
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("in") => CompareOp::In,
            Some(Tok::Ident(s)) if s.eq_ignore_ascii_case("between") => CompareOp::Between,
            _ if negated => return Err(self.error("LIKE, IN or BETWEEN after NOT")),
            _ => return Err(self.error("comparison operator")),
        };
        self.pos += 1;
        if op == CompareOp::In && self.peek_tok(0) != Some(&Tok::LParen) {
            return Err(self.error("`(` after IN"));
        }
        let right = self.operand()?;
        let upper = if op == CompareOp::Between {
            self.expect_kw("and")?;
            Some(self.operand()?)
        } else {
            None
        };
        Ok(Predicate {
            negated,
            left,
            op,
            right,
            upper,
        })
    }
}

fn flatten(parts: Vec<Condition>, and: bool) -> Condition {
    if parts.len() == 1 {
        return parts.into_iter().next().expect("one part");
    }
    let mut out = Vec::with_capacity(parts.len());
    for p in parts {
        match (p, and) {
            (Condition::And(cs), true) | (Condition::Or(cs), false) => out.extend(cs),
            (p, _) => out.push(p),
        }
    }
    if and {
        Condition::And(out)
    } else {
        Condition::Or(out)
    }
}

fn negate(mut p: Predicate) -> Predicate {
    p.op = match p.op {
        CompareOp::Eq => CompareOp::Ne,
        CompareOp::Ne => CompareOp::Eq,
        CompareOp::Gt => CompareOp::Le,
        CompareOp::Le => CompareOp::Gt,
        CompareOp::Lt => CompareOp::Ge,
        CompareOp::Ge => CompareOp::Lt,
        other => {
            p.negated = !p.negated;
            other
        }
    };
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(q: Option<&str>, c: &str) -> ColumnRef {
        ColumnRef {
            qualifier: q.map(str::to_string),
            column: c.to_string(),
        }
    }

    #[test]
    fn aggregate_select() {
        let q = parse_sql("SELECT max(age) FROM singer").unwrap();
        assert_eq!(q.select.len(), 1);
        assert_eq!(q.select[0].agg, Aggregate::Max);
        assert_eq!(q.select[0].column, col(None, "age"));
        assert_eq!(
            q.from.tables[0].source,
            TableSource::Named("singer".into())
        );
    }

    #[test]
    fn join_conditions_are_collected() {
        let q = parse_sql("SELECT name FROM car JOIN vendor ON car.vendor_id = vendor.vendor_id").unwrap();
        assert_eq!(q.from.tables.len(), 2);
        assert_eq!(
            q.from.join_conditions,
            vec![(col(Some("car"), "vendor_id"), col(Some("vendor"), "vendor_id"))]
        );
    }

    #[test]
    fn nested_in_subquery_matches_fixture() {
        let q = parse_sql("SELECT a FROM t WHERE b IN (SELECT b FROM s)").unwrap();
        let inner = SqlQuery {
            distinct: false,
            select: vec![ColumnExpr::plain(col(None, "b"))],
            from: FromClause {
                tables: vec![TableRef {
                    source: TableSource::Named("s".into()),
                    alias: None,
                }],
                join_conditions: vec![],
            },
            where_clause: None,
            group_by: vec![],
            having: None,
            order_by: vec![],
            limit: None,
            set_op: None,
        };
        let expected = SqlQuery {
            select: vec![ColumnExpr::plain(col(None, "a"))],
            from: FromClause {
                tables: vec![TableRef {
                    source: TableSource::Named("t".into()),
                    alias: None,
                }],
                join_conditions: vec![],
            },
            where_clause: Some(Condition::Atom(Predicate {
                negated: false,
                left: ColumnExpr::plain(col(None, "b")),
                op: CompareOp::In,
                right: Operand::Subquery(Box::new(inner.clone())),
                upper: None,
            })),
            ..inner
        };
        assert_eq!(q, expected);
    }

    #[test]
    fn keywords_are_case_insensitive() {
        let a = parse_sql("select count(*) from singer where age > 20 order by name desc limit 3").unwrap();
        let b = parse_sql("SELECT COUNT(*) FROM singer WHERE age > 20 ORDER BY name DESC LIMIT 3").unwrap();
        assert_eq!(a, b);
        assert_eq!(a.limit, Some(3));
        assert_eq!(a.order_by[0].direction, Direction::Desc);
    }

    #[test]
    fn between_and_does_not_split_the_conjunction() {
        let q = parse_sql("SELECT a FROM t WHERE b BETWEEN 1 AND 5 AND c = 'x'").unwrap();
        match q.where_clause.unwrap() {
            Condition::And(cs) => {
                assert_eq!(cs.len(), 2);
                match &cs[0] {
                    Condition::Atom(p) => {
                        assert_eq!(p.op, CompareOp::Between);
                        assert!(p.upper.is_some());
                    }
                    other => panic!("{other:?}"),
                }
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn and_binds_tighter_than_or() {
        let q = parse_sql("SELECT a FROM t WHERE b = 1 OR c = 2 AND d = 3").unwrap();
        match q.where_clause.unwrap() {
            Condition::Or(cs) => {
                assert!(matches!(cs[0], Condition::Atom(_)));
                assert!(matches!(&cs[1], Condition::And(x) if x.len() == 2));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn leading_not_flips_comparisons() {
        let q = parse_sql("SELECT a FROM t WHERE NOT b > 3 AND NOT c IN (1, 2)").unwrap();
        let atoms = q.where_clause.as_ref().unwrap().atoms();
        assert_eq!(atoms[0].op, CompareOp::Le);
        assert!(!atoms[0].negated);
        assert_eq!(atoms[1].op, CompareOp::In);
        assert!(atoms[1].negated);
    }

    #[test]
    fn set_ops_aliases_and_from_subqueries() {
        let q = parse_sql(
            "SELECT T1.name FROM singer AS T1 JOIN singer_in_concert T2 ON T1.singer_id = T2.singer_id \
             INTERSECT SELECT name FROM (SELECT name FROM singer) AS s",
        )
        .unwrap();
        assert_eq!(q.from.tables[1].alias.as_deref(), Some("T2"));
        let right = &q.set_op.as_ref().unwrap().right;
        assert!(matches!(right.from.tables[0].source, TableSource::Subquery(_)));
        assert_eq!(q.nested().len(), 1);
    }

    #[test]
    fn arithmetic_and_distinct_aggregates() {
        let q = parse_sql("SELECT count(DISTINCT name), max(a - b), c * d FROM t").unwrap();
        assert!(q.select[0].distinct);
        assert_eq!(q.select[1].arith, Some((ArithOp::Sub, col(None, "b"))));
        assert_eq!(q.select[2].arith, Some((ArithOp::Mul, col(None, "d"))));
    }

    #[test]
    fn errors_carry_offset_and_hint() {
        let err = parse_sql("SELECT name singer").unwrap_err();
        assert_eq!(err.offset, 12);
        assert!(err.expected.contains("FROM"), "{err}");

        let err = parse_sql("SELECT a FROM t WHERE").unwrap_err();
        assert_eq!(err.offset, 21);
        assert!(parse_sql("").is_err());
        assert!(parse_sql("SELECT a FROM t LEFT JOIN s").is_err());
        assert!(parse_sql("SELECT a FROM t LIMIT x").is_err());
    }

    #[test]
    fn print_then_parse_is_identity() {
        let cases = [
            "SELECT DISTINCT T1.name, count(*) FROM singer AS T1 JOIN concert AS T2 ON T1.id = T2.sid AND T1.x = T2.y WHERE T1.age > 20 AND (T2.year = 2014 OR T2.year = 2015) GROUP BY T1.name HAVING count(*) >= 2 ORDER BY count(*) DESC LIMIT 1",
            "SELECT name FROM t WHERE a NOT IN (SELECT a FROM s) AND b NOT LIKE '%x%' OR c BETWEEN 1 AND 2",
            "SELECT avg(price) FROM car EXCEPT SELECT avg(price) FROM car WHERE color = \"red\"",
            "SELECT `order` FROM `select` WHERE x IN (1, -2, 3.5)",
        ];
        for c in cases {
            let q = parse_sql(c).unwrap();
            let printed = q.to_string();
            let again = parse_sql(&printed).unwrap_or_else(|e| panic!("{printed}: {e}"));
            assert_eq!(q, again, "{printed}");
        }
    }
}
