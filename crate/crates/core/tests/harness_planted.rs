//! Planted faults: an in-process model answers with the seed's gold SQL and
//! flips (or fails) a chosen set of cases. Reported rates must equal the
//! planted fractions.

mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sqlmorph_core::generate::{generate, GenerationConfig, Resources};
use sqlmorph_core::harness::{
    inconsistency_rate, rate_rows, run, seed_request_id, AdapterFailure, FailureKind, GroupBy, ModelAdapter,
    PredictRequest, Prediction, RateRow, Verdict,
};
use sqlmorph_core::sql::MatchOptions;
use sqlmorph_core::MrTag;

struct Planted {
    gold: HashMap<String, String>,
    flip: BTreeSet<String>,
    fail: BTreeSet<String>,
}

/// Drops a trailing `LIMIT n`, or adds one.
fn flip(sql: &str) -> String {
    match sql.rsplit_once(" LIMIT ") {
        Some((head, n)) if n.trim().parse::<u64>().is_ok() => head.to_string(),
        _ => format!("{sql} LIMIT 7"),
    }
}

impl ModelAdapter for Planted {
    fn predict_batch(&self, requests: &[PredictRequest]) -> Vec<Prediction> {
        requests
            .iter()
            .map(|r| {
                if self.fail.contains(&r.id) {
                    return Err(AdapterFailure {
                        kind: FailureKind::Timeout,
                        message: "planted".into(),
                    });
                }
                let gold = &self.gold[&r.id];
                Ok(if self.flip.contains(&r.id) {
                    flip(gold)
                } else {
                    gold.clone()
                })
            })
            .collect()
    }

    fn describe(&self) -> String {
        "planted".into()
    }
}

#[test]
fn reported_rates_equal_planted_fractions() {
    let (schemas, examples) = common::mini();
    let suite = generate(&examples, &schemas, &GenerationConfig::default(), &Resources::defaults()).unwrap();
    let mut gold: HashMap<String, String> =
        examples.iter().map(|e| (seed_request_id(&e.example_id), e.gold_sql.clone())).collect();
    for c in &suite.cases {
        gold.insert(c.case_id.clone(), c.gold_sql.clone());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut by_mr: BTreeMap<MrTag, Vec<&str>> = BTreeMap::new();
    for c in &suite.cases {
        by_mr.entry(c.mr).or_default().push(&c.case_id);
    }
    let mut flip = BTreeSet::new();
    let mut fail = BTreeSet::new();
    // (flipped, counted, failed) per MR as planted.
    let mut planted: BTreeMap<MrTag, (usize, usize, usize)> = BTreeMap::new();
    for (i, (mr, ids)) in by_mr.iter().enumerate() {
        let mut ids = ids.clone();
        ids.shuffle(&mut rng);
        let m = ids.len();
        let failed = m / 10;
        let flipped = (m - failed) * (i % 5) / 4;
        fail.extend(ids[..failed].iter().map(|s| s.to_string()));
        flip.extend(ids[failed..failed + flipped].iter().map(|s| s.to_string()));
        planted.insert(*mr, (flipped, m - failed, failed));
    }

    let adapter = Planted { gold, flip, fail };
    let records = run(&adapter, &suite, &examples, &schemas, MatchOptions::default()).unwrap();
    assert_eq!(records.len(), suite.cases.len());

    let rows: BTreeMap<String, RateRow> = rate_rows(&records, GroupBy::Mr).into_iter().map(|r| (r.group.clone(), r)).collect();
    for (mr, (flipped, counted, failed)) in &planted {
        let row = &rows[mr.code()];
        assert_eq!((row.inconsistent, row.counted, row.failures), (*flipped, *counted, *failed), "{mr}");
        assert_eq!(row.rate, Some(100.0 * *flipped as f64 / *counted as f64), "{mr}");
    }
    let total_flip: usize = planted.values().map(|p| p.0).sum();
    let total_counted: usize = planted.values().map(|p| p.1).sum();
    let overall = &rate_rows(&records, GroupBy::All)[0];
    assert_eq!((overall.inconsistent, overall.counted), (total_flip, total_counted));
    assert_eq!(overall.rate, Some(100.0 * total_flip as f64 / total_counted as f64));

    // Failures never count as consistent or inconsistent.
    for r in &records {
        assert_eq!(r.verdict == Verdict::ModelFailure, adapter.fail.contains(&r.case_id), "{}", r.case_id);
        assert_eq!(r.verdict == Verdict::Inconsistent, adapter.flip.contains(&r.case_id), "{}", r.case_id);
    }

    for by in [GroupBy::Mr, GroupBy::Hardness] {
        let rows = rate_rows(&records, by);
        let weighted: f64 = rows.iter().filter_map(|r| r.rate.map(|v| v * r.counted as f64)).sum::<f64>()
            / rows.iter().map(|r| r.counted).sum::<usize>() as f64;
        assert!((weighted - overall.rate.unwrap()).abs() < 1e-9, "{by:?}: {weighted}");
        let counted: usize = rows.iter().map(|r| r.counted).sum();
        assert_eq!(counted, total_counted);
    }
    assert_eq!(inconsistency_rate(&records, GroupBy::All)["all"], overall.rate.unwrap());
}

#[test]
fn failed_seed_fails_all_its_cases() {
    let (schemas, examples) = common::mini();
    let suite = generate(&examples, &schemas, &GenerationConfig::default(), &Resources::defaults()).unwrap();
    let mut gold: HashMap<String, String> =
        examples.iter().map(|e| (seed_request_id(&e.example_id), e.gold_sql.clone())).collect();
    for c in &suite.cases {
        gold.insert(c.case_id.clone(), c.gold_sql.clone());
    }
    let victim = suite.cases[0].seed_id.clone();
    let adapter = Planted {
        gold,
        flip: BTreeSet::new(),
        fail: BTreeSet::from([seed_request_id(&victim)]),
    };
    let records = run(&adapter, &suite, &examples, &schemas, MatchOptions::default()).unwrap();
    for r in &records {
        let want = if r.seed_id == victim { Verdict::ModelFailure } else { Verdict::Consistent };
        assert_eq!(r.verdict, want, "{}", r.case_id);
    }
    let overall = &rate_rows(&records, GroupBy::All)[0];
    assert_eq!(overall.rate, Some(0.0));
    assert!(overall.failures > 0);
}
