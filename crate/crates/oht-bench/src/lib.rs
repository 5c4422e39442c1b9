//! Shared fixtures for the benchmark targets.

use oht_core::{max_outliers, Distribution, OutlierSet, Scenario};

/// The binary reference setup used across benchmarks: nominal mass
/// (0.8, 0.2), anomalous mass (0.2, 0.8), truth {1}.
pub fn reference(m: usize) -> (Scenario, OutlierSet) {
    let nominal = Distribution::bernoulli(0.2).expect("valid");
    let anomaly = Distribution::bernoulli(0.8).expect("valid");
    let scenario =
        Scenario::new(m, nominal, vec![anomaly; max_outliers(m)]).expect("valid scenario");
    let truth = OutlierSet::new(vec![1], m).expect("valid set");
    (scenario, truth)
}
