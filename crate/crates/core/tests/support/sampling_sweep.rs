//! Sampler exactness over random (n, m_i, rates) configurations, shared
//! with the CLI acceptance tests.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sqlmorph_core::augment::{sample_adaptive, sample_random, sample_stratified, Sample};
use sqlmorph_core::dataset::{parse_schemas, Schema};
use sqlmorph_core::generate::{count_by_mr, TestSuite, TransformedCase};
use sqlmorph_core::mr::MrTag;

fn schema() -> Arc<Schema> {
    let raw = br#"[{"db_id":"d","table_names":["t"],"table_names_original":["t"],
        "column_names":[[-1,"*"],[0,"a"]],"column_names_original":[[-1,"*"],[0,"a"]],
        "column_types":["text","number"],"primary_keys":[],"foreign_keys":[]}]"#;
    Arc::new(parse_schemas(raw, std::path::Path::new("mem")).unwrap().remove(0))
}

/// Suite with `m[mr]` cases per relation, interleaved.
pub fn suite(m: &BTreeMap<MrTag, usize>) -> TestSuite {
    let s = schema();
    let mut cases = Vec::new();
    // Interleave relations so positions are not grouped by MR.
    let longest = m.values().copied().max().unwrap_or(0);
    for i in 0..longest {
        for (mr, count) in m {
            if i < *count {
                cases.push(TransformedCase {
                    case_id: format!("x:{}:{i}", mr.code()),
                    seed_id: "x".into(),
                    mr: *mr,
                    utterance: format!("u{i}"),
                    db_id: "d".into(),
                    schema: s.clone(),
                    gold_sql: "SELECT a FROM t".into(),
                    provenance: serde_json::Value::Null,
                });
            }
        }
    }
    TestSuite {
        counts_by_mr: count_by_mr(&cases),
        cases,
        seed_count: 1,
        config_fingerprint: String::new(),
        failures: Vec::new(),
    }
}

fn check_common(s: &Sample, suite: &TestSuite, n: usize) -> Result<(), String> {
    if s.cases.len() != n {
        return Err(format!("size {} != {n}", s.cases.len()));
    }
    let ids: BTreeSet<&str> = s.cases.iter().map(|c| c.case_id.as_str()).collect();
    if ids.len() != n {
        return Err("duplicate cases".into());
    }
    for (i, c) in s.indices.iter().zip(&s.cases) {
        if suite.cases.get(*i) != Some(c) {
            return Err(format!("case at {i} not from the suite"));
        }
    }
    if !s.indices.windows(2).all(|w| w[0] < w[1]) {
        return Err("indices not in suite order".into());
    }
    Ok(())
}

fn check_quotas(s: &Sample, m: &BTreeMap<MrTag, usize>, want: &BTreeMap<MrTag, usize>) -> Result<(), String> {
    let got = count_by_mr(&s.cases);
    for (mr, avail) in m {
        let q = want.get(mr).copied().unwrap_or(0);
        let sel = got.get(mr).copied().unwrap_or(0);
        if s.plan.per_mr_quota.get(mr).copied().unwrap_or(0) != q {
            return Err(format!("{mr}: plan quota {:?} != {q}", s.plan.per_mr_quota.get(mr)));
        }
        if sel < q || sel > *avail {
            return Err(format!("{mr}: selected {sel}, quota {q}, available {avail}"));
        }
    }
    Ok(())
}

/// Runs RS, SS and AS on `rounds` random configurations and returns every
/// violated property.
pub fn sweep(seed: u64, rounds: usize) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = MrTag::ALL.len();
    let mut failures = Vec::new();
    for round in 0..rounds {
        let mut m = BTreeMap::new();
        for mr in MrTag::ALL {
            if rng.gen_bool(0.85) {
                m.insert(mr, rng.gen_range(1..40usize));
            }
        }
        if m.is_empty() {
            continue;
        }
        let su = suite(&m);
        let total = su.cases.len();
        let n = rng.gen_range(0..=total);
        let seed = rng.gen::<u64>();
        let rates: BTreeMap<MrTag, f64> = MrTag::ALL
            .iter()
            .map(|mr| (*mr, if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..1.0) }))
            .collect();
        let rate_sum: f64 = rates.values().sum();

        let ss_want: BTreeMap<MrTag, usize> = m.iter().map(|(mr, a)| (*mr, (*a).min(n / k))).collect();
        let as_want: BTreeMap<MrTag, usize> = m
            .iter()
            .map(|(mr, a)| (*mr, (*a).min((rates[mr] / rate_sum * n as f64 + 1e-9).floor() as usize)))
            .collect();

        let mut check = |label: &str, r: Result<(), String>| {
            if let Err(e) = r {
                failures.push(format!("round {round} {label}: {e}"));
            }
        };
        let rs = sample_random(&su, n, seed).unwrap();
        check("rs", check_common(&rs, &su, n));
        check("rs determinism", (rs.indices == sample_random(&su, n, seed).unwrap().indices).then_some(()).ok_or("differs".into()));

        let ss = sample_stratified(&su, n, k, seed).unwrap();
        check("ss", check_common(&ss, &su, n));
        check("ss quotas", check_quotas(&ss, &m, &ss_want));
        check(
            "ss determinism",
            (ss.indices == sample_stratified(&su, n, k, seed).unwrap().indices).then_some(()).ok_or("differs".into()),
        );

        if rate_sum > 0.0 {
            let ad = sample_adaptive(&su, &rates, n, seed).unwrap();
            check("as", check_common(&ad, &su, n));
            check("as quotas", check_quotas(&ad, &m, &as_want));
            let norm: f64 = ad.plan.rates.as_ref().unwrap().values().sum();
            check("as normalized", ((norm - 1.0).abs() < 1e-9).then_some(()).ok_or(format!("sum {norm}")));
        }

        let uniform: BTreeMap<MrTag, f64> = MrTag::ALL.iter().map(|mr| (*mr, 1.0)).collect();
        let au = sample_adaptive(&su, &uniform, n, seed).unwrap();
        check(
            "uniform as = ss quotas",
            (au.plan.per_mr_quota == ss.plan.per_mr_quota)
                .then_some(())
                .ok_or(format!("{:?} vs {:?}", au.plan.per_mr_quota, ss.plan.per_mr_quota)),
        );
    }
    failures
}
