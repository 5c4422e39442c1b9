//! Detection of outlying i.i.d. sequences among a panel of finite-alphabet
//! observations, with unknown nominal and anomalous laws.
//!
//! The detector scores every candidate outlier set by how much the
//! remaining empirical distributions disperse around their pooled average,
//! then declares the strict minimizer when all rival scores clear a
//! threshold, rejecting otherwise. Companion modules provide the limiting
//! score values and Gaussian false-reject approximations ([`theory`]), the
//! constrained-divergence false-reject exponent ([`large_deviations`]), and
//! a reproducible trial harness ([`montecarlo`]).

pub mod distributions;
pub mod error;
pub mod hypothesis;
pub mod large_deviations;
pub mod montecarlo;
pub mod orthant;
pub mod scoring;
pub mod theory;

pub use distributions::{
    empirical, kl_divergence, mixture, uniform_mixture, Alphabet, Distribution,
    EmpiricalDistribution, Symbol,
};
pub use error::{Error, Result};
pub use hypothesis::{max_outliers, HypothesisSpace, OutlierSet};
pub use large_deviations::{
    false_reject_exponent, max_exponent_bound, pair_exponent, ExponentOptions, ExponentSolution,
};
pub use montecarlo::{
    estimate, fit_exponent, sample_panel, sample_sequence, wilson_interval, ErrorKind, Estimate,
    ExperimentSpec, ExponentFit, LambdaSpec, OutcomeCounts, TrialReport, TrialRow,
};
pub use orthant::{
    normal_upper_tail, orthant_q, orthant_q_mc, GaussianSampler, OrthantValue, SymMatrix,
};
pub use scoring::{decide, dispersion_score, run_test, score_table, ScoreTable, Verdict};
pub use theory::{
    asymptotic_score, asymptotic_score_expectation, common_anomaly_score, covariance_matrix,
    false_alarm_bound, false_reject_bound, info_density_anomalous, info_density_nominal,
    min_common_anomaly_score, misclassification_bound, orthant_margin, pooled_law, variance_sum,
    Margin, OrthantCfg, Scenario, TheoryProfile,
};
