//! Monte Carlo estimation of the detector's error probabilities, with
//! Wilson intervals and the matching theoretical bound columns.
//!
//! Trials derive independent generator streams from the experiment seed, so
//! reports are reproducible bit for bit regardless of thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::distributions::{empirical, Distribution, Symbol};
use crate::error::{Error, Result};
use crate::hypothesis::OutlierSet;
use crate::scoring::{decide, score_table, Verdict};
use crate::theory::{
    false_alarm_bound, false_reject_bound, misclassification_bound, OrthantCfg, Scenario,
    TheoryProfile,
};

/// Threshold choice for an experiment: a fixed value, or calibration to a
/// target false-reject level per sequence length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LambdaSpec {
    Fixed(f64),
    Auto { epsilon: f64 },
}

/// A full experiment description. `truth: None` runs the no-outlier null
/// model and estimates the false-alarm probability instead.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentSpec {
    pub scenario: Scenario,
    pub truth: Option<OutlierSet>,
    pub n_grid: Vec<usize>,
    pub lambda: LambdaSpec,
    pub trials: u64,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::InvalidParameter("trials must be >= 1".into()));
        }
        if self.n_grid.is_empty() || self.n_grid.iter().any(|&n| n < 1) {
            return Err(Error::InvalidParameter(
                "n grid must be nonempty with n >= 1".into(),
            ));
        }
        if let Some(truth) = &self.truth {
            if self.scenario.space().index_of(truth).is_none() {
                return Err(Error::SetNotInSpace(truth.clone()));
            }
        }
        match self.lambda {
            LambdaSpec::Fixed(l) if l <= 0.0 || l.is_nan() => Err(Error::NonPositiveThreshold(l)),
            LambdaSpec::Auto { .. } if self.truth.is_none() => Err(Error::InvalidParameter(
                "auto threshold calibration needs a truth hypothesis".into(),
            )),
            _ => Ok(()),
        }
    }
}

/// A point estimate with its Wilson 95% interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
}

impl Estimate {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }
}

/// Wilson score interval at 95% coverage.
pub fn wilson_interval(count: u64, trials: u64) -> Estimate {
    let z = 1.959963984540054_f64;
    let n = trials as f64;
    let p = count as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    Estimate {
        value: p,
        lo: if count == 0 { 0.0 } else { (center - half).max(0.0) },
        hi: if count == trials { 1.0 } else { (center + half).min(1.0) },
    }
}

/// Outcome counts for one `(n, lambda)` cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OutcomeCounts {
    pub correct: u64,
    pub misclassified: u64,
    pub rejected: u64,
    pub alarms: u64,
}

/// One report row: estimates are present where the hypothesis defines them
/// (misclassification and false reject under an outlier hypothesis, false
/// alarm under the null).
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRow {
    pub truth: Option<OutlierSet>,
    pub n: usize,
    pub lambda: f64,
    pub trials: u64,
    pub counts: OutcomeCounts,
    pub misclassification: Option<Estimate>,
    pub false_reject: Option<Estimate>,
    pub false_alarm: Option<Estimate>,
    pub bound_misclassification: Option<f64>,
    pub bound_false_alarm: Option<f64>,
    pub bound_false_reject: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialReport {
    pub rows: Vec<TrialRow>,
}

/// Which error probability a fit or lookup refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Misclassification,
    FalseReject,
    FalseAlarm,
}

/// Draw `n` symbols i.i.d. from `law`.
pub fn sample_sequence(law: &Distribution, n: usize, rng: &mut ChaCha8Rng) -> Vec<Symbol> {
    let mass = law.mass();
    (0..n)
        .map(|_| {
            let u: f64 = rng.random();
            let mut acc = 0.0;
            for (x, &p) in mass.iter().enumerate() {
                acc += p;
                if u < acc {
                    return x;
                }
            }
            mass.len() - 1
        })
        .collect()
}

/// Draw the panel for one trial: under `truth`, outlier positions follow
/// their rank-matched anomalous law and the rest the nominal law; under the
/// null every sequence is nominal.
pub fn sample_panel(
    scenario: &Scenario,
    truth: Option<&OutlierSet>,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<Symbol>> {
    (1..=scenario.m())
        .map(|i| {
            let law = match truth {
                Some(b) => scenario.law_under(b, i),
                None => scenario.nominal(),
            };
            sample_sequence(law, n, rng)
        })
        .collect()
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn trial_seed(base: u64, cell: u64, trial: u64) -> u64 {
    splitmix64(splitmix64(base ^ cell.wrapping_mul(0xA24B_AED4_963E_E407)) ^ trial)
}

/// Run the experiment and tabulate per-length estimates, intervals and the
/// corresponding theoretical bounds. Deterministic in `spec` (including the
/// seed); trials execute in parallel.
pub fn estimate(spec: &ExperimentSpec) -> Result<TrialReport> {
    spec.validate()?;
    let scenario = &spec.scenario;
    let space = scenario.space();
    let alphabet = scenario.nominal().alphabet();
    let orthant_cfg = OrthantCfg::default();

    let profile = match &spec.truth {
        Some(truth) => Some(TheoryProfile::compute(scenario, truth)?),
        None => None,
    };
    let auto_margin = match spec.lambda {
        LambdaSpec::Auto { epsilon } => {
            let profile = profile.as_ref().expect("validated above");
            Some(profile.second_order_margin(epsilon, &orthant_cfg)?.value)
        }
        LambdaSpec::Fixed(_) => None,
    };

    let mut rows = Vec::with_capacity(spec.n_grid.len());
    for (cell, &n) in spec.n_grid.iter().enumerate() {
        let lambda = match spec.lambda {
            LambdaSpec::Fixed(l) => l,
            LambdaSpec::Auto { .. } => {
                let profile = profile.as_ref().expect("validated above");
                let l = profile.score_floor() + auto_margin.unwrap() / (n as f64).sqrt();
                if l <= 0.0 || l.is_nan() {
                    return Err(Error::NonPositiveThreshold(l));
                }
                l
            }
        };
        let counts = (0..spec.trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(trial_seed(spec.seed, cell as u64, trial));
                let panel = sample_panel(scenario, spec.truth.as_ref(), n, &mut rng);
                let empiricals: Vec<_> = panel
                    .iter()
                    .map(|s| empirical(s, alphabet).expect("sampled symbols are in range"))
                    .collect();
                let table = score_table(&empiricals, space).expect("panel is well formed");
                let verdict = decide(&table, lambda);
                let mut c = OutcomeCounts::default();
                match (&spec.truth, verdict) {
                    (Some(truth), Verdict::Outliers(found)) if &found == truth => c.correct = 1,
                    (Some(_), Verdict::Outliers(_)) => c.misclassified = 1,
                    (Some(_), Verdict::Reject) => c.rejected = 1,
                    (None, Verdict::Reject) => c.correct = 1,
                    (None, Verdict::Outliers(_)) => c.alarms = 1,
                }
                c
            })
            .reduce(OutcomeCounts::default, |a, b| OutcomeCounts {
                correct: a.correct + b.correct,
                misclassified: a.misclassified + b.misclassified,
                rejected: a.rejected + b.rejected,
                alarms: a.alarms + b.alarms,
            });

        let row = match &spec.truth {
            Some(truth) => TrialRow {
                truth: Some(truth.clone()),
                n,
                lambda,
                trials: spec.trials,
                counts,
                misclassification: Some(wilson_interval(counts.misclassified, spec.trials)),
                false_reject: Some(wilson_interval(counts.rejected, spec.trials)),
                false_alarm: None,
                bound_misclassification: Some(misclassification_bound(
                    n,
                    lambda,
                    scenario.m(),
                    alphabet.size(),
                )),
                bound_false_alarm: None,
                bound_false_reject: Some(false_reject_bound(
                    profile.as_ref().expect("present under truth"),
                    lambda,
                    n,
                    &orthant_cfg,
                )?),
            },
            None => TrialRow {
                truth: None,
                n,
                lambda,
                trials: spec.trials,
                counts,
                misclassification: None,
                false_reject: None,
                false_alarm: Some(wilson_interval(counts.alarms, spec.trials)),
                bound_misclassification: None,
                bound_false_alarm: Some(false_alarm_bound(
                    n,
                    lambda,
                    scenario.m(),
                    alphabet.size(),
                    space.len(),
                )),
                bound_false_reject: None,
            },
        };
        rows.push(row);
    }
    Ok(TrialReport { rows })
}

/// Least-squares slope of `-ln(estimate)` against `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentFit {
    pub slope: f64,
    pub std_error: f64,
    pub points_used: usize,
    pub points_dropped: usize,
}

/// Fit the empirical decay exponent of one error kind over the report's
/// length grid. Rows with zero error counts carry no rate information and
/// are dropped (never imputed); at least three informative rows are needed.
pub fn fit_exponent(report: &TrialReport, kind: ErrorKind) -> Result<ExponentFit> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut dropped = 0usize;
    let mut max_n = 0usize;
    let mut trials = 0u64;
    for row in &report.rows {
        let est = match kind {
            ErrorKind::Misclassification => row.misclassification,
            ErrorKind::FalseReject => row.false_reject,
            ErrorKind::FalseAlarm => row.false_alarm,
        };
        let Some(est) = est else { continue };
        max_n = max_n.max(row.n);
        trials = trials.max(row.trials);
        if est.value > 0.0 {
            xs.push(row.n as f64);
            ys.push(-est.value.ln());
        } else {
            dropped += 1;
        }
    }
    if xs.len() < 3 {
        let resolvable = if max_n > 0 {
            ((2 * trials.max(1)) as f64).ln() / max_n as f64
        } else {
            f64::NAN
        };
        return Err(Error::InsufficientData(format!(
            "{} informative rows (need 3); exponents are only resolvable up to about {:.4} at this budget",
            xs.len(),
            resolvable
        )));
    }
    let k = xs.len() as f64;
    let mean_x = xs.iter().sum::<f64>() / k;
    let mean_y = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mean_x) * (x - mean_x)).sum();
    let sxy: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (x - mean_x) * (y - mean_y))
        .sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum();
    let dof = (xs.len() - 2).max(1) as f64;
    let std_error = (ss_res / dof / sxx).sqrt();
    Ok(ExponentFit {
        slope,
        std_error,
        points_used: xs.len(),
        points_dropped: dropped,
    })
}
