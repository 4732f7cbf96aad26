//! Four-level query hardness following the Spider component-counting rules.
//!
//! Rule table (version [`HARDNESS_RULES_VERSION`]):
//!
//! | count       | what is counted                                                          |
//! |-------------|--------------------------------------------------------------------------|
//! | component1  | WHERE, GROUP BY, ORDER BY, LIMIT present (1 each); tables beyond the first; OR and LIKE in WHERE/HAVING |
//! | component2  | nested queries: FROM/WHERE/HAVING subqueries and the set-operation branch |
//! | others      | >1 aggregate overall; >1 SELECT item; >1 WHERE predicate; >1 GROUP BY column |
//!
//! | label  | condition (c1 = component1, c2 = component2, o = others)                   |
//! |--------|-----------------------------------------------------------------------------|
//! | Easy   | c1 <= 1, o == 0, c2 == 0                                                    |
//! | Medium | (o <= 2, c1 <= 1, c2 == 0) or (c1 <= 2, o < 2, c2 == 0)                     |
//! | Hard   | (o > 2, c1 <= 2, c2 == 0) or (c1 <= 3, o <= 2, c2 == 0) or (c1 <= 1, o == 0, c2 <= 1) |
//! | Extra  | everything else                                                             |
//!
//! The upstream Spider table bounds the second Hard clause below by
//! `2 < c1`, which labels (c1 = 2, o = 2) Extra but (c1 = 3, o = 2) Hard.
//! Dropping that lower bound makes the label monotone in every count.

use serde::{Deserialize, Serialize};

use super::ast::*;

pub const HARDNESS_RULES_VERSION: &str = "spider-monotone-1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Hardness {
    Easy,
    Medium,
    Hard,
    Extra,
}

impl Hardness {
    pub const ALL: [Hardness; 4] = [Hardness::Easy, Hardness::Medium, Hardness::Hard, Hardness::Extra];

    pub fn as_str(self) -> &'static str {
        match self {
            Hardness::Easy => "easy",
            Hardness::Medium => "medium",
            Hardness::Hard => "hard",
            Hardness::Extra => "extra",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ComponentCounts {
    pub component1: usize,
    pub component2: usize,
    pub others: usize,
}

pub fn component_counts(q: &SqlQuery) -> ComponentCounts {
    let mut c1 = 0;
    if q.where_clause.is_some() {
        c1 += 1;
    }
    if !q.group_by.is_empty() {
        c1 += 1;
    }
    if !q.order_by.is_empty() {
        c1 += 1;
    }
    if q.limit.is_some() {
        c1 += 1;
    }
    c1 += q.from.tables.len().saturating_sub(1);
    for cond in [&q.where_clause, &q.having].into_iter().flatten() {
        c1 += cond.or_count();
        c1 += cond.atoms().iter().filter(|p| p.op == CompareOp::Like).count();
    }

    let c2 = q.nested().len();

    let is_agg = |e: &ColumnExpr| e.agg != Aggregate::None;
    let mut aggs = q.select.iter().filter(|e| is_agg(e)).count();
    aggs += q.order_by.iter().filter(|k| is_agg(&k.expr)).count();
    for cond in [&q.where_clause, &q.having].into_iter().flatten() {
        aggs += cond.atoms().iter().filter(|p| is_agg(&p.left)).count();
    }
    let where_atoms = q.where_clause.as_ref().map_or(0, |c| c.atoms().len());
    let others = usize::from(aggs > 1)
        + usize::from(q.select.len() > 1)
        + usize::from(where_atoms > 1)
        + usize::from(q.group_by.len() > 1);

    ComponentCounts {
        component1: c1,
        component2: c2,
        others,
    }
}

pub fn hardness_from_counts(c: ComponentCounts) -> Hardness {
    let (c1, c2, o) = (c.component1, c.component2, c.others);
    if c1 <= 1 && o == 0 && c2 == 0 {
        Hardness::Easy
    } else if (o <= 2 && c1 <= 1 && c2 == 0) || (c1 <= 2 && o < 2 && c2 == 0) {
        Hardness::Medium
    } else if (o > 2 && c1 <= 2 && c2 == 0)
        || (c1 <= 3 && o <= 2 && c2 == 0)
        || (c1 <= 1 && o == 0 && c2 <= 1)
    {
        Hardness::Hard
    } else {
        Hardness::Extra
    }
}

pub fn classify_hardness(q: &SqlQuery) -> Hardness {
    hardness_from_counts(component_counts(q))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sql::parse_sql;
    use proptest::prelude::*;

    fn h(s: &str) -> Hardness {
        classify_hardness(&parse_sql(s).unwrap())
    }

    #[test]
    fn labels_on_reference_queries() {
        assert_eq!(h("SELECT name FROM singer"), Hardness::Easy);
        assert_eq!(h("SELECT count(*) FROM singer WHERE age > 20"), Hardness::Easy);
        assert_eq!(h("SELECT name, age FROM singer ORDER BY age"), Hardness::Medium);
        assert_eq!(
            h("SELECT name FROM singer WHERE age > (SELECT avg(age) FROM singer)"),
            Hardness::Hard
        );
        assert_eq!(
            h("SELECT name FROM singer WHERE age IN (SELECT age FROM s) UNION SELECT name FROM t"),
            Hardness::Extra
        );
    }

    #[test]
    fn adding_group_by_and_having_never_lowers() {
        let base = h("SELECT name, age FROM singer WHERE age > 3");
        let more = h("SELECT name, age FROM singer WHERE age > 3 GROUP BY name HAVING count(*) > 1");
        assert_eq!(base, Hardness::Medium);
        assert!(more >= base);
    }

    proptest! {
        #[test]
        fn label_is_monotone_in_every_count(c1 in 0usize..6, c2 in 0usize..4, o in 0usize..5, which in 0usize..3) {
            let base = ComponentCounts { component1: c1, component2: c2, others: o };
            let mut up = base;
            match which {
                0 => up.component1 += 1,
                1 => up.component2 += 1,
                _ => up.others += 1,
            }
            prop_assert!(hardness_from_counts(up) >= hardness_from_counts(base));
        }
    }
}
