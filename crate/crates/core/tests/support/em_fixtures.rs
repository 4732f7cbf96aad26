//! Hand-labelled query pairs and a brute-force comparison of random
//! single-table queries, shared with the CLI acceptance tests.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlmorph_core::sql::{exact_set_match, parse_sql};

pub fn em(a: &str, b: &str) -> bool {
    let pa = parse_sql(a).unwrap_or_else(|e| panic!("{a}: {e}"));
    let pb = parse_sql(b).unwrap_or_else(|e| panic!("{b}: {e}"));
    exact_set_match(&pa, &pb)
}

/// Labelled by hand from the comparison rules: SELECT items, FROM tables
/// and GROUP BY keys compare as sets (SELECT as a multiset), AND-conjuncts
/// as a set, OR and ORDER BY in order, literal values ignored, LIMIT and
/// set operations compared as written.
pub const HAND_PAIRS: &[(&str, &str, bool)] = &[
    ("SELECT a, b FROM t", "SELECT b, a FROM t", true),
    ("select A from T", "SELECT a FROM t", true),
    ("SELECT a FROM t WHERE b = 1", "SELECT a FROM t WHERE b = 99", true),
    ("SELECT a FROM t WHERE b = 'x' AND c > 2", "SELECT a FROM t WHERE c > 5 AND b = 'y'", true),
    ("SELECT T1.a FROM t AS T1", "SELECT a FROM t", true),
    ("SELECT count(*) FROM t", "SELECT COUNT(*) FROM t", true),
    ("SELECT a FROM t GROUP BY a, b", "SELECT a FROM t GROUP BY b, a", true),
    (
        "SELECT T1.x FROM s AS T1 JOIN u AS T2 ON T1.id = T2.sid",
        "SELECT T2.x FROM u AS T1 JOIN s AS T2 ON T1.sid = T2.id",
        true,
    ),
    (
        "SELECT a FROM t WHERE b IN (SELECT c FROM u)",
        "SELECT a  FROM t WHERE b IN ( SELECT c FROM u )",
        true,
    ),
    ("SELECT a FROM t LIMIT 3", "SELECT a FROM t LIMIT 3", true),
    ("SELECT a FROM t WHERE b BETWEEN 1 AND 5", "SELECT a FROM t WHERE b BETWEEN 2 AND 9", true),
    ("SELECT a FROM t WHERE b = 1 AND b = 2", "SELECT a FROM t WHERE b = 3", true),
    ("SELECT a FROM t UNION SELECT b FROM u", "SELECT a FROM t UNION SELECT b FROM u", true),
    ("SELECT DISTINCT a FROM t", "select distinct a from t", true),
    ("SELECT a FROM t WHERE b LIKE '%x%'", "SELECT a FROM t WHERE b LIKE '%y%'", true),
    ("SELECT max(a), min(b) FROM t", "SELECT min(b), max(a) FROM t", true),
    ("SELECT a FROM t ORDER BY b DESC LIMIT 1", "SELECT a FROM t ORDER BY b DESC LIMIT 1", true),
    ("SELECT a FROM t ORDER BY b", "SELECT a FROM t ORDER BY b ASC", true),
    ("SELECT a FROM t", "SELECT b FROM t", false),
    ("SELECT a, a FROM t", "SELECT a FROM t", false),
    ("SELECT sum(a) FROM t", "SELECT avg(a) FROM t", false),
    ("SELECT a FROM t WHERE b = 1 OR c = 2", "SELECT a FROM t WHERE c = 2 OR b = 1", false),
    ("SELECT a FROM t ORDER BY a", "SELECT a FROM t ORDER BY a DESC", false),
    ("SELECT a FROM t ORDER BY a, b", "SELECT a FROM t ORDER BY b, a", false),
    ("SELECT a FROM t LIMIT 1", "SELECT a FROM t", false),
    ("SELECT a FROM t LIMIT 1", "SELECT a FROM t LIMIT 2", false),
    ("SELECT a FROM t", "SELECT a FROM u", false),
    ("SELECT DISTINCT a FROM t", "SELECT a FROM t", false),
    ("SELECT a FROM t WHERE b > 1", "SELECT a FROM t WHERE b < 1", false),
    (
        "SELECT a FROM t WHERE b IN (SELECT c FROM u)",
        "SELECT a FROM t WHERE b NOT IN (SELECT c FROM u)",
        false,
    ),
    (
        "SELECT a FROM t UNION SELECT a FROM u",
        "SELECT a FROM t INTERSECT SELECT a FROM u",
        false,
    ),
    ("SELECT a FROM t GROUP BY a", "SELECT a FROM t GROUP BY a HAVING count(*) > 1", false),
    ("SELECT count(a) FROM t", "SELECT count(DISTINCT a) FROM t", false),
    ("SELECT a FROM t WHERE b = 1", "SELECT a FROM t", false),
    (
        "SELECT T1.x FROM s AS T1 JOIN u AS T2 ON T1.id = T2.sid",
        "SELECT T1.x FROM s AS T1 JOIN u AS T2 ON T1.id = T2.other",
        false,
    ),
    ("SELECT a FROM t UNION SELECT b FROM u", "SELECT b FROM u UNION SELECT a FROM t", false),
    ("SELECT a FROM t WHERE b IN (SELECT c FROM u)", "SELECT a FROM t WHERE b IN (SELECT d FROM u)", false),
];

/// Single-table query in structured form. The oracle below compares two of
/// these directly, without going through the parser.
#[derive(Debug, Clone)]
pub struct Spec {
    distinct: bool,
    select: Vec<(&'static str, &'static str)>,
    table: &'static str,
    conjuncts: Vec<(&'static str, &'static str, String)>,
    group: Vec<&'static str>,
    order: Vec<(&'static str, bool)>,
    limit: Option<u64>,
}

const COLS: &[&str] = &["a", "b", "c", "d", "e"];
const AGGS: &[&str] = &["", "max", "min", "count", "sum", "avg"];
const OPS: &[&str] = &["=", ">", "<", ">=", "<=", "!=", "LIKE"];
const TABLES: &[&str] = &["t", "u"];

pub fn random_spec(rng: &mut ChaCha8Rng) -> Spec {
    let value = |rng: &mut ChaCha8Rng| {
        if rng.gen_bool(0.5) {
            rng.gen_range(0..100).to_string()
        } else {
            format!("'v{}'", rng.gen_range(0..5))
        }
    };
    Spec {
        distinct: rng.gen_bool(0.2),
        select: (0..rng.gen_range(1..=4))
            .map(|_| (*AGGS.choose(rng).unwrap(), *COLS.choose(rng).unwrap()))
            .collect(),
        table: TABLES.choose(rng).unwrap(),
        conjuncts: (0..rng.gen_range(0..=4))
            .map(|_| (*COLS.choose(rng).unwrap(), *OPS.choose(rng).unwrap(), value(rng)))
            .collect(),
        group: (0..rng.gen_range(0..=2)).map(|_| *COLS.choose(rng).unwrap()).collect(),
        order: (0..rng.gen_range(0..=2))
            .map(|_| (*COLS.choose(rng).unwrap(), rng.gen_bool(0.5)))
            .collect(),
        limit: rng.gen_bool(0.3).then(|| rng.gen_range(1..4)),
    }
}

/// Renders with shuffled SELECT items and conjuncts, random keyword case
/// and optional aliasing.
pub fn render(s: &Spec, rng: &mut ChaCha8Rng) -> String {
    let kw = |k: &str, rng: &mut ChaCha8Rng| if rng.gen_bool(0.5) { k.to_lowercase() } else { k.to_string() };
    let alias = rng.gen_bool(0.5);
    let q = |c: &str| if alias { format!("T1.{c}") } else { c.to_string() };
    let mut select: Vec<String> = s
        .select
        .iter()
        .map(|(agg, c)| if agg.is_empty() { q(c) } else { format!("{agg}({})", q(c)) })
        .collect();
    select.shuffle(rng);
    let mut conj: Vec<String> =
        s.conjuncts.iter().map(|(c, op, v)| format!("{} {} {v}", q(c), kw(op, rng))).collect();
    conj.shuffle(rng);
    let mut out = format!(
        "{} {}{} {} {}{}",
        kw("SELECT", rng),
        if s.distinct { kw("DISTINCT ", rng) } else { String::new() },
        select.join(", "),
        kw("FROM", rng),
        s.table,
        if alias { " AS T1" } else { "" }
    );
    if !conj.is_empty() {
        let and = format!(" {} ", kw("AND", rng));
        out.push_str(&format!(" {} {}", kw("WHERE", rng), conj.join(&and)));
    }
    if !s.group.is_empty() {
        let mut g: Vec<String> = s.group.iter().map(|c| q(c)).collect();
        g.shuffle(rng);
        out.push_str(&format!(" {} {}", kw("GROUP BY", rng), g.join(", ")));
    }
    if !s.order.is_empty() {
        let o: Vec<String> = s
            .order
            .iter()
            .map(|(c, desc)| format!("{}{}", q(c), if *desc { " DESC" } else { "" }))
            .collect();
        out.push_str(&format!(" {} {}", kw("ORDER BY", rng), o.join(", ")));
    }
    if let Some(l) = s.limit {
        out.push_str(&format!(" {} {l}", kw("LIMIT", rng)));
    }
    out
}

fn same_multiset<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    a.len() == b.len()
        && a.iter().all(|x| {
            a.iter().filter(|y| *y == x).count() == b.iter().filter(|y| *y == x).count()
        })
}

fn same_set<T: PartialEq>(a: &[T], b: &[T]) -> bool {
    a.iter().all(|x| b.contains(x)) && b.iter().all(|x| a.contains(x))
}

pub fn oracle(a: &Spec, b: &Spec) -> bool {
    let conj = |s: &Spec| -> Vec<(&str, String)> {
        s.conjuncts.iter().map(|(c, op, _)| (*c, op.to_lowercase())).collect()
    };
    a.distinct == b.distinct
        && same_multiset(&a.select, &b.select)
        && a.table == b.table
        && same_set(&conj(a), &conj(b))
        && same_set(&a.group, &b.group)
        && a.order == b.order
        && a.limit == b.limit
}

pub fn mutate(s: &Spec, rng: &mut ChaCha8Rng) -> Spec {
    let mut m = s.clone();
    match rng.gen_range(0..8) {
        0 => {
            let i = rng.gen_range(0..m.select.len());
            m.select[i].1 = COLS.choose(rng).unwrap();
        }
        1 => {
            let i = rng.gen_range(0..m.select.len());
            m.select[i].0 = AGGS.choose(rng).unwrap();
        }
        2 => {
            if m.conjuncts.is_empty() {
                m.conjuncts.push(("a", "=", "1".into()));
            } else {
                let i = rng.gen_range(0..m.conjuncts.len());
                m.conjuncts.remove(i);
            }
        }
        3 => {
            if let Some(c) = m.conjuncts.first_mut() {
                c.1 = OPS.choose(rng).unwrap();
            }
        }
        4 => m.distinct = !m.distinct,
        5 => m.limit = if m.limit.is_some() { None } else { Some(1) },
        6 => match m.order.first_mut() {
            Some(o) => o.1 = !o.1,
            None => m.order.push(("a", false)),
        },
        _ => m.group.push(COLS.choose(rng).unwrap()),
    }
    m
}


/// Label, symmetry and reflexivity failures over [`HAND_PAIRS`].
pub fn hand_pair_failures() -> Vec<String> {
    let mut out = Vec::new();
    for (a, b, want) in HAND_PAIRS {
        if em(a, b) != *want {
            out.push(format!("label: {a}  vs  {b}"));
        }
        if em(b, a) != *want {
            out.push(format!("symmetry: {b}  vs  {a}"));
        }
        for q in [a, b] {
            if !em(q, q) {
                out.push(format!("reflexivity: {q}"));
            }
        }
    }
    out
}

/// Random pairs (half identical up to rendering, half mutated) checked
/// against [`oracle`]. Returns disagreements and how many pairs the oracle
/// called different.
pub fn permutation_disagreements(seed: u64, rounds: usize) -> (Vec<String>, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut disagreements = Vec::new();
    let mut different = 0;
    for _ in 0..rounds {
        let a = random_spec(&mut rng);
        let b = if rng.gen_bool(0.5) { a.clone() } else { mutate(&a, &mut rng) };
        let (sa, sb) = (render(&a, &mut rng), render(&b, &mut rng));
        let want = oracle(&a, &b);
        if !want {
            different += 1;
        }
        let got = em(&sa, &sb);
        if got != want || em(&sb, &sa) != got || !em(&sa, &sa) {
            disagreements.push(format!("{sa}  |  {sb}  oracle={want} em={got}"));
        }
    }
    (disagreements, different)
}
