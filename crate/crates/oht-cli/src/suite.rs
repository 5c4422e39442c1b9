//! The reproduction suite behind `paper-suite`: ten numbered checks
//! covering the algebraic identities, the orthant and covariance oracles,
//! the exponent solver against brute force, hand-computed detections, the
//! phase transition, threshold calibration, exponent fitting, and byte
//! determinism. Each check is deterministic for a given seed and returns
//! its artifacts as CSV strings.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oht_core::{
    asymptotic_score, asymptotic_score_expectation, dispersion_score, false_reject_exponent,
    fit_exponent, info_density_anomalous, info_density_nominal, kl_divergence, max_outliers,
    normal_upper_tail, orthant_q, orthant_q_mc, run_test, Alphabet, Distribution, ErrorKind,
    ExperimentSpec, ExponentOptions, LambdaSpec, OutlierSet, Scenario, SymMatrix, TheoryProfile,
    TrialReport, Verdict,
};

/// Suite configuration. Quick mode cuts trial budgets for smoke runs and is
/// marked as such in summaries.
#[derive(Debug, Clone, Copy)]
pub struct SuiteCfg {
    pub quick: bool,
    pub seed: u64,
}

impl Default for SuiteCfg {
    fn default() -> Self {
        Self {
            quick: false,
            seed: 7,
        }
    }
}

/// Outcome of one numbered check.
#[derive(Debug, Clone)]
pub struct CheckResult {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    /// `(file name, CSV content)` artifacts for the output directory.
    pub artifacts: Vec<(String, String)>,
}

impl CheckResult {
    pub fn line(&self) -> String {
        format!(
            "{} criterion {:>2} ({}): {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

pub fn run_all(cfg: &SuiteCfg) -> Vec<CheckResult> {
    vec![
        check_1_score_identity(cfg),
        check_2_expectation_identity(cfg),
        check_3_orthant_oracles(cfg),
        check_4_covariance_oracle(cfg),
        check_5_exponent_brute_force(cfg),
        check_6_hand_detection(cfg),
        check_7_phase_transition(cfg),
        check_8_threshold_calibration(cfg),
        check_9_exponent_fit(cfg),
        check_10_determinism(cfg),
    ]
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

fn check_seed(cfg: &SuiteCfg, id: u64) -> u64 {
    splitmix64(cfg.seed ^ id.wrapping_mul(0xD134_2543_DE82_EF95))
}

fn random_scenario(m: usize, alphabet_size: usize, rng: &mut ChaCha8Rng) -> Scenario {
    let alphabet = Alphabet::new(alphabet_size).expect("size >= 2");
    let draw = |rng: &mut ChaCha8Rng| {
        let w: Vec<f64> = (0..alphabet_size)
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        Distribution::from_weights(alphabet, w).expect("positive weights")
    };
    let nominal = draw(rng);
    let anomalies: Vec<Distribution> = (0..max_outliers(m)).map(|_| draw(rng)).collect();
    Scenario::new(m, nominal, anomalies).expect("valid scenario")
}

/// The reference binary scenario used across the simulation checks:
/// four sequences, nominal mass (0.8, 0.2), anomalous mass (0.2, 0.8).
pub fn reference_scenario() -> (Scenario, OutlierSet) {
    let nominal = Distribution::bernoulli(0.2).expect("valid");
    let anomaly = Distribution::bernoulli(0.8).expect("valid");
    let scenario = Scenario::new(4, nominal, vec![anomaly]).expect("valid scenario");
    let truth = OutlierSet::new(vec![1], 4).expect("valid set");
    (scenario, truth)
}

/// 1. The limiting rival score equals the dispersion score of the rival
///    on the truth panel, to 1e-12, across random scenarios.
pub fn check_1_score_identity(cfg: &SuiteCfg) -> CheckResult {
    let scenarios = if cfg.quick { 20 } else { 200 };
    let mut rng = ChaCha8Rng::seed_from_u64(check_seed(cfg, 1));
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for s in 0..scenarios {
        let m = [3, 4, 5][s % 3];
        let k = [2, 3, 4][(s / 3) % 3];
        let scenario = random_scenario(m, k, &mut rng);
        for truth in scenario.space().sets() {
            let panel = scenario.truth_panel(truth);
            for rival in scenario.space().sets() {
                let lhs = asymptotic_score(truth, rival, &scenario).expect("scores exist");
                let rhs = dispersion_score(rival, &panel).expect("scores exist");
                worst = worst.max((lhs - rhs).abs());
                pairs += 1;
            }
        }
    }
    CheckResult {
        id: 1,
        name: "limit-score identity",
        pass: worst <= 1e-12,
        detail: format!("max |gap| {worst:.3e} over {pairs} pairs, tolerance 1e-12"),
        artifacts: vec![],
    }
}

/// 2. The limiting rival score equals the weighted expectation of the
///    information densities, to 1e-12, across the same sweep.
pub fn check_2_expectation_identity(cfg: &SuiteCfg) -> CheckResult {
    let scenarios = if cfg.quick { 20 } else { 200 };
    let mut rng = ChaCha8Rng::seed_from_u64(check_seed(cfg, 2));
    let mut worst = 0.0f64;
    let mut pairs = 0usize;
    for s in 0..scenarios {
        let m = [3, 4, 5][s % 3];
        let k = [2, 3, 4][(s / 3) % 3];
        let scenario = random_scenario(m, k, &mut rng);
        for truth in scenario.space().sets() {
            for rival in scenario.space().sets() {
                let direct = asymptotic_score(truth, rival, &scenario).expect("scores exist");
                let via = asymptotic_score_expectation(truth, rival, &scenario)
                    .expect("densities exist");
                worst = worst.max((direct - via).abs());
                pairs += 1;
            }
        }
    }
    CheckResult {
        id: 2,
        name: "density-expectation identity",
        pass: worst <= 1e-12,
        detail: format!("max |gap| {worst:.3e} over {pairs} pairs, tolerance 1e-12"),
        artifacts: vec![],
    }
}

/// 3. Orthant oracles: the univariate closed form, the bivariate arcsine
///    value at the origin, and diagonal factorization for k = 3, 4.
pub fn check_3_orthant_oracles(cfg: &SuiteCfg) -> CheckResult {
    let samples = if cfg.quick { 50_000 } else { 200_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(check_seed(cfg, 3));
    let mut fails = Vec::new();
    let mut details = Vec::new();

    let one = SymMatrix::from_rows(&[vec![1.0]]).expect("1x1");
    let q1 = orthant_q(&[0.0], &one, samples, &mut rng).expect("q1").value;
    if q1 != 0.5 {
        fails.push(format!("Q1(0) = {q1}, want exactly 0.5"));
    }

    // Arcsine value at the origin for correlation one half.
    let sheppard = 1.0 / 3.0;
    let sigma = SymMatrix::from_rows(&[vec![1.0, 0.5], vec![0.5, 1.0]]).expect("2x2");
    let q2 = orthant_q(&[0.0, 0.0], &sigma, samples, &mut rng).expect("q2").value;
    if (q2 - sheppard).abs() > 2e-3 {
        fails.push(format!("Q2 origin rho 0.5: {q2} vs {sheppard}"));
    }
    details.push(format!("Q2 gap {:.2e}", (q2 - sheppard).abs()));
    let q2_mc = orthant_q_mc(&[0.0, 0.0], &sigma, samples, &mut rng).expect("q2 mc");
    if (q2_mc.value - sheppard).abs() > (3.0 * q2_mc.std_error).max(2e-3) {
        fails.push(format!(
            "Q2 MC origin rho 0.5: {} vs {sheppard} (se {})",
            q2_mc.value, q2_mc.std_error
        ));
    }

    for k in [3usize, 4] {
        let mut sigma = SymMatrix::zeros(k);
        let x: Vec<f64> = (0..k).map(|i| -0.4 + 0.3 * i as f64).collect();
        for i in 0..k {
            sigma.set(i, i, 0.5 + 0.5 * i as f64);
        }
        let q = orthant_q(&x, &sigma, samples, &mut rng).expect("qk");
        let product: f64 = (0..k)
            .map(|i| normal_upper_tail(x[i], sigma.get(i, i)))
            .product();
        let tol = 3.0 * q.std_error;
        if (q.value - product).abs() > tol {
            fails.push(format!(
                "Q{k} diagonal: {} vs {product} (3 se = {tol:.2e})",
                q.value
            ));
        }
        details.push(format!("Q{k} gap {:.2e} (3 se {:.2e})", (q.value - product).abs(), tol));
    }

    CheckResult {
        id: 3,
        name: "orthant oracles",
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("Q1 exact; {}", details.join("; "))
        } else {
            fails.join("; ")
        },
        artifacts: vec![],
    }
}

/// 4. Covariance matrix against a Monte Carlo oracle built from the
///    public information-density functions, on random binary scenarios.
pub fn check_4_covariance_oracle(cfg: &SuiteCfg) -> CheckResult {
    let draws = if cfg.quick { 100_000 } else { 1_000_000 };
    let mut rng = ChaCha8Rng::seed_from_u64(check_seed(cfg, 4));
    let mut fails = Vec::new();
    let mut worst_ratio = 0.0f64;
    for s in 0..5 {
        let scenario = random_scenario(4, 2, &mut rng);
        let truth_index = rng.random_range(0..scenario.space().len());
        let truth = scenario.space().sets()[truth_index].clone();
        let profile = TheoryProfile::compute(&scenario, &truth).expect("profile");
        let rivals = profile.rivals().to_vec();
        let dim = rivals.len();

        // Density lookup tables from the public API.
        let mut tables: Vec<Vec<Option<Vec<f64>>>> = Vec::new();
        for rival in &rivals {
            let mut per_seq = Vec::new();
            for i in 1..=scenario.m() {
                if rival.contains(i) {
                    per_seq.push(None);
                } else {
                    let f: Vec<f64> = (0..2)
                        .map(|x| match truth.rank_of(i) {
                            Ok(rank) => {
                                info_density_anomalous(rank, x, &truth, rival, &scenario)
                                    .expect("density")
                            }
                            Err(_) => info_density_nominal(x, &truth, rival, &scenario)
                                .expect("density"),
                        })
                        .collect();
                    per_seq.push(Some(f));
                }
            }
            tables.push(per_seq);
        }
        let laws: Vec<&Distribution> = (1..=scenario.m())
            .map(|i| scenario.law_under(&truth, i))
            .collect();

        // Sample the density sums and accumulate moments.
        let mut mean = vec![0.0f64; dim];
        let mut cross = vec![0.0f64; dim * dim];
        let mut samples: Vec<Vec<f64>> = Vec::with_capacity(draws);
        for _ in 0..draws {
            let symbols: Vec<usize> = laws
                .iter()
                .map(|law| if rng.random::<f64>() < law.prob(0) { 0 } else { 1 })
                .collect();
            let mut iota = vec![0.0f64; dim];
            for (a, table) in tables.iter().enumerate() {
                for (j, entry) in table.iter().enumerate() {
                    if let Some(f) = entry {
                        iota[a] += f[symbols[j]];
                    }
                }
            }
            for a in 0..dim {
                mean[a] += iota[a];
                for b in 0..dim {
                    cross[a * dim + b] += iota[a] * iota[b];
                }
            }
            samples.push(iota);
        }
        for v in &mut mean {
            *v /= draws as f64;
        }
        for a in 0..dim {
            for b in a..dim {
                let cov = cross[a * dim + b] / draws as f64 - mean[a] * mean[b];
                // Standard error of the covariance estimate via the sample
                // fourth moments.
                let mut m22 = 0.0;
                for s in &samples {
                    let da = s[a] - mean[a];
                    let db = s[b] - mean[b];
                    m22 += (da * db) * (da * db);
                }
                m22 /= draws as f64;
                let se = ((m22 - cov * cov).max(0.0) / draws as f64).sqrt();
                let analytic = profile.covariance().get(a, b);
                let tol = 3.0 * se + 1e-9;
                let gap = (cov - analytic).abs();
                if gap > tol {
                    fails.push(format!(
                        "scenario {s} entry ({a},{b}): sampled {cov:.6} vs {analytic:.6} (3 se {tol:.2e})"
                    ));
                }
                if se > 0.0 {
                    worst_ratio = worst_ratio.max(gap / (3.0 * se + 1e-12));
                }
            }
        }
    }
    CheckResult {
        id: 4,
        name: "covariance vs sampling oracle",
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!("all entries within 3 se of {draws}-draw oracle (worst ratio {worst_ratio:.2})")
        } else {
            fails.join("; ")
        },
        artifacts: vec![],
    }
}

/// Brute-force exponent oracle on a binary grid with the given resolution.
fn exponent_grid_oracle(
    scenario: &Scenario,
    truth: &OutlierSet,
    lambda: f64,
    step: f64,
) -> f64 {
    let m = scenario.m();
    let alphabet = scenario.nominal().alphabet();
    let count = (1.0 / step).round() as usize;
    let grid: Vec<Distribution> = (0..=count)
        .map(|i| {
            let p = (i as f64 * step).min(1.0);
            Distribution::new(alphabet, vec![p, 1.0 - p]).expect("valid mass")
        })
        .collect();
    let sets = scenario.space().sets();
    let truth_panel = scenario.truth_panel(truth);
    let mut best = f64::INFINITY;
    let mut idx = vec![0usize; m];
    loop {
        let panel: Vec<Distribution> = idx.iter().map(|&i| grid[i].clone()).collect();
        let admitted = sets
            .iter()
            .filter(|c| dispersion_score(c, &panel).expect("finite") <= lambda)
            .count();
        if admitted >= 2 {
            let mut objective = 0.0;
            for (q, r) in panel.iter().zip(&truth_panel) {
                objective += kl_divergence(q, r).expect("full support");
            }
            best = best.min(objective);
        }
        let mut pos = 0;
        loop {
            idx[pos] += 1;
            if idx[pos] <= count {
                break;
            }
            idx[pos] = 0;
            pos += 1;
            if pos == m {
                return best;
            }
        }
    }
}

/// 5. Exponent solver against the grid oracle, plus the positivity
///    characterization around the score floor.
pub fn check_5_exponent_brute_force(cfg: &SuiteCfg) -> CheckResult {
    let (scenario, truth) = reference_scenario();
    let profile = TheoryProfile::compute(&scenario, &truth).expect("profile");
    let floor = profile.score_floor();
    let (step, tol) = if cfg.quick { (0.05, 0.08) } else { (0.02, 0.03) };
    let opts = ExponentOptions::default();
    let mut fails = Vec::new();
    let mut rows = vec!["lambda,solver,oracle,gap".to_string()];
    for frac in [0.25, 0.5, 0.75] {
        let lambda = frac * floor;
        let solver = false_reject_exponent(&truth, &scenario, lambda, &opts)
            .expect("solver run")
            .value;
        let oracle = exponent_grid_oracle(&scenario, &truth, lambda, step);
        let gap = (solver - oracle).abs();
        rows.push(format!("{lambda:.6},{solver:.6},{oracle:.6},{gap:.2e}"));
        if gap > tol {
            fails.push(format!("lambda {lambda:.4}: solver {solver:.5} vs grid {oracle:.5}"));
        }
        if solver > oracle + 1e-6 {
            fails.push(format!(
                "lambda {lambda:.4}: solver {solver:.6} above grid oracle {oracle:.6}"
            ));
        }
    }
    let above = false_reject_exponent(&truth, &scenario, 1.1 * floor, &opts)
        .expect("solver run")
        .value;
    if above > 1e-4 {
        fails.push(format!("exponent {above:.2e} at 1.1 floor, want <= 1e-4"));
    }
    let below = false_reject_exponent(&truth, &scenario, 0.9 * floor, &opts)
        .expect("solver run")
        .value;
    if below <= 1e-3 {
        fails.push(format!("exponent {below:.2e} at 0.9 floor, want > 1e-3"));
    }
    CheckResult {
        id: 5,
        name: "exponent vs grid oracle",
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!(
                "solver within {tol} of {step}-grid oracle; boundary values {above:.1e} / {below:.3e}"
            )
        } else {
            fails.join("; ")
        },
        artifacts: vec![("exponent_oracle.csv".into(), rows.join("\n") + "\n")],
    }
}

/// 6. Hand-computed detection outcomes, exact.
pub fn check_6_hand_detection(_cfg: &SuiteCfg) -> CheckResult {
    let alphabet = Alphabet::new(2).expect("binary");
    let seqs: Vec<Vec<usize>> = ["aaaa", "bbbb", "bbbb", "bbbb"]
        .iter()
        .map(|s| alphabet.parse_str(s).expect("parses"))
        .collect();
    let expected = OutlierSet::new(vec![1], 4).expect("valid");
    let mut fails = Vec::new();
    match run_test(&seqs, alphabet, 1.0) {
        Ok(Verdict::Outliers(b)) if b == expected => {}
        other => fails.push(format!("lambda 1.0: {other:?}, want outliers {{1}}")),
    }
    match run_test(&seqs, alphabet, 2.5) {
        Ok(Verdict::Reject) => {}
        other => fails.push(format!("lambda 2.5: {other:?}, want reject")),
    }
    CheckResult {
        id: 6,
        name: "hand-computed detection",
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            "panel (aaaa,bbbb,bbbb,bbbb): outliers {1} at lambda 1, reject at 2.5".into()
        } else {
            fails.join("; ")
        },
        artifacts: vec![],
    }
}

fn run_experiment(
    scenario: &Scenario,
    truth: Option<&OutlierSet>,
    n_grid: &[usize],
    lambda: LambdaSpec,
    trials: u64,
    seed: u64,
) -> TrialReport {
    let spec = ExperimentSpec {
        scenario: scenario.clone(),
        truth: truth.cloned(),
        n_grid: n_grid.to_vec(),
        lambda,
        trials,
        seed,
    };
    oht_core::estimate(&spec).expect("experiment runs")
}

/// 7. Phase transition around the score floor, with bound domination.
pub fn check_7_phase_transition(cfg: &SuiteCfg) -> CheckResult {
    let (scenario, truth) = reference_scenario();
    let profile = TheoryProfile::compute(&scenario, &truth).expect("profile");
    let floor = profile.score_floor();
    let trials = if cfg.quick { 1_000 } else { 10_000 };
    let n_grid = [100usize, 300, 1000];
    let seed = check_seed(cfg, 7);
    let mut fails = Vec::new();
    let mut artifacts = Vec::new();

    let mut rejects = Vec::new();
    for (tag, frac) in [("below", 0.5f64), ("above", 1.5f64)] {
        let lambda = frac * floor;
        let report = run_experiment(
            &scenario,
            Some(&truth),
            &n_grid,
            LambdaSpec::Fixed(lambda),
            trials,
            splitmix64(seed ^ frac.to_bits()),
        );
        let null_report = run_experiment(
            &scenario,
            None,
            &n_grid,
            LambdaSpec::Fixed(lambda),
            trials,
            splitmix64(seed ^ frac.to_bits() ^ 1),
        );
        let series: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.false_reject.expect("truth row").value)
            .collect();
        rejects.push((tag, series.clone()));

        // Theoretical bounds dominate the empirical points wherever they bite.
        for row in &report.rows {
            let bound = row.bound_misclassification.expect("truth row");
            let est = row.misclassification.expect("truth row").value;
            if bound < 1.0 && est > bound {
                fails.push(format!(
                    "misclassification {est} above bound {bound:.2e} at n {} ({tag})",
                    row.n
                ));
            }
        }
        for row in &null_report.rows {
            let bound = row.bound_false_alarm.expect("null row");
            let est = row.false_alarm.expect("null row").value;
            if bound < 1.0 && est > bound {
                fails.push(format!(
                    "false alarm {est} above bound {bound:.2e} at n {} ({tag})",
                    row.n
                ));
            }
        }
        artifacts.push((
            format!("phase_transition_{tag}.csv"),
            crate::io::report_csv(&report),
        ));
        artifacts.push((
            format!("phase_transition_{tag}_null.csv"),
            crate::io::report_csv(&null_report),
        ));
    }

    let below = &rejects[0].1;
    let above = &rejects[1].1;
    if below[2] > 0.05 {
        fails.push(format!("false reject {} at n=1000, lambda below floor", below[2]));
    }
    if above[2] < 0.95 {
        fails.push(format!("false reject {} at n=1000, lambda above floor", above[2]));
    }
    // Monotone trend across the n grid.
    if !(below[0] >= below[1] && below[1] >= below[2]) {
        fails.push(format!("below-floor series not decreasing: {below:?}"));
    }
    if !(above[0] <= above[1] + 0.01 && above[1] <= above[2] + 0.01) {
        fails.push(format!("above-floor series not increasing: {above:?}"));
    }

    CheckResult {
        id: 7,
        name: "phase transition",
        pass: fails.is_empty(),
        detail: if fails.is_empty() {
            format!(
                "false reject at n=1000: {:.4} below floor, {:.4} above; bounds dominate",
                below[2], above[2]
            )
        } else {
            fails.join("; ")
        },
        artifacts,
    }
}

/// 8. Calibrated threshold hits the target false-reject level.
pub fn check_8_threshold_calibration(cfg: &SuiteCfg) -> CheckResult {
    let (scenario, truth) = reference_scenario();
    let trials = if cfg.quick { 1_000 } else { 10_000 };
    let epsilon = 0.2;
    let report = run_experiment(
        &scenario,
        Some(&truth),
        &[100, 300, 1000],
        LambdaSpec::Auto { epsilon },
        trials,
        check_seed(cfg, 8),
    );
    let last = report.rows.last().expect("rows exist");
    let est = last.false_reject.expect("truth row");
    let limit = epsilon + 3.0 * est.half_width();
    let pass = est.value <= limit;
    CheckResult {
        id: 8,
        name: "threshold calibration",
        pass,
        detail: format!(
            "false reject {:.4} at n=1000 with auto threshold {:.4}, limit {limit:.4}",
            est.value, last.lambda
        ),
        artifacts: vec![("calibration.csv".into(), crate::io::report_csv(&report))],
    }
}

/// 9. Fitted false-reject decay slope against the solved exponent.
pub fn check_9_exponent_fit(cfg: &SuiteCfg) -> CheckResult {
    let (scenario, truth) = reference_scenario();
    let profile = TheoryProfile::compute(&scenario, &truth).expect("profile");
    let lambda = 0.5 * profile.score_floor();
    let trials = if cfg.quick { 10_000 } else { 100_000 };
    // The smoke budget resolves fewer decades, so it fits on shorter
    // sequences.
    let n_grid: Vec<usize> = if cfg.quick {
        (1..=5).map(|i| 30 * i).collect()
    } else {
        (1..=8).map(|i| 50 * i).collect()
    };
    let report = run_experiment(
        &scenario,
        Some(&truth),
        &n_grid,
        LambdaSpec::Fixed(lambda),
        trials,
        check_seed(cfg, 9),
    );
    let predicted = false_reject_exponent(&truth, &scenario, lambda, &ExponentOptions::default())
        .expect("solver run")
        .value;
    let artifacts = vec![("exponent_fit.csv".into(), crate::io::report_csv(&report))];
    match fit_exponent(&report, ErrorKind::FalseReject) {
        Ok(fit) => {
            let ratio = fit.slope / predicted;
            let pass = (0.5..=1.5).contains(&ratio);
            CheckResult {
                id: 9,
                name: "exponent fit",
                pass,
                detail: format!(
                    "slope {:.4} (se {:.4}, {} points, {} dropped) vs predicted {predicted:.4}; ratio {ratio:.2}",
                    fit.slope, fit.std_error, fit.points_used, fit.points_dropped
                ),
                artifacts,
            }
        }
        Err(e) => CheckResult {
            id: 9,
            name: "exponent fit",
            pass: false,
            detail: format!("fit failed: {e}"),
            artifacts,
        },
    }
}

/// 10. Byte determinism: the same seeded experiment twice, identical
///     CSV.
pub fn check_10_determinism(cfg: &SuiteCfg) -> CheckResult {
    let (scenario, truth) = reference_scenario();
    let profile = TheoryProfile::compute(&scenario, &truth).expect("profile");
    let lambda = 0.5 * profile.score_floor();
    let run = || {
        let report = run_experiment(
            &scenario,
            Some(&truth),
            &[50, 150],
            LambdaSpec::Fixed(lambda),
            if cfg.quick { 500 } else { 2_000 },
            check_seed(cfg, 10),
        );
        crate::io::report_csv(&report)
    };
    let a = run();
    let b = run();
    let pass = a == b;
    CheckResult {
        id: 10,
        name: "determinism",
        pass,
        detail: if pass {
            format!("repeated runs byte-identical ({} bytes)", a.len())
        } else {
            "repeated runs differ".into()
        },
        artifacts: vec![("determinism.csv".into(), a)],
    }
}

/// Summary CSV across checks.
pub fn summary_csv(results: &[CheckResult], cfg: &SuiteCfg) -> String {
    let mut out = String::from("criterion,name,mode,pass,detail\n");
    let mode = if cfg.quick { "smoke" } else { "full" };
    for r in results {
        let detail = r.detail.replace(',', ";");
        out.push_str(&format!(
            "{},{},{mode},{},{detail}\n",
            r.id,
            r.name,
            if r.pass { "pass" } else { "fail" }
        ));
    }
    out
}
