//! Sampler exactness over random (n, m_i, rates) configurations.

#[path = "support/sampling_sweep.rs"]
mod sampling_sweep;

use std::collections::BTreeMap;

use sampling_sweep::{suite, sweep};
use sqlmorph_core::augment::{sample_adaptive, sample_random, sample_stratified};
use sqlmorph_core::MrTag;

#[test]
fn thousand_random_configurations() {
    let failures = sweep(77, 1000);
    assert!(failures.is_empty(), "{}", failures[..failures.len().min(10)].join("\n"));
}

#[test]
fn oversized_requests_fail() {
    let m = BTreeMap::from([(MrTag::OpaqueKey, 3)]);
    let su = suite(&m);
    assert!(sample_random(&su, 4, 0).is_err());
    assert!(sample_stratified(&su, 4, 12, 0).is_err());
    assert!(sample_adaptive(&su, &BTreeMap::from([(MrTag::OpaqueKey, 1.0)]), 4, 0).is_err());
}
