//! Closed-form performance quantities for the threshold test: the limiting
//! rival scores under each hypothesis, information densities and their
//! variance/covariance matrix, the exponential misclassification and
//! false-alarm bounds, the Gaussian false-reject approximation, and the
//! second-order threshold calibration.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::distributions::{kl_divergence, mixture, Distribution, Symbol};
use crate::error::{Error, Result};
use crate::hypothesis::{max_outliers, HypothesisSpace, OutlierSet};
use crate::orthant::{normal_upper_tail, orthant_q, GaussianSampler, OrthantValue, SymMatrix};

/// A panel model: nominal law plus one anomalous law per possible outlier
/// slot, all strictly positive on a shared alphabet.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    space: HypothesisSpace,
    nominal: Distribution,
    anomalies: Vec<Distribution>,
}

impl Scenario {
    /// `anomalies` must hold exactly [`max_outliers`]`(m)` distributions.
    /// Anomalies equal to the nominal law are accepted (the limiting scores
    /// they produce are zero); see [`Scenario::degenerate_anomalies`].
    pub fn new(m: usize, nominal: Distribution, anomalies: Vec<Distribution>) -> Result<Self> {
        let space = HypothesisSpace::enumerate(m)?;
        let expected = max_outliers(m);
        if anomalies.len() != expected {
            return Err(Error::AnomalyCount {
                expected,
                got: anomalies.len(),
            });
        }
        Self::require_strictly_positive(&nominal)?;
        for a in &anomalies {
            nominal.same_alphabet(a)?;
            Self::require_strictly_positive(a)?;
        }
        Ok(Self {
            space,
            nominal,
            anomalies,
        })
    }

    fn require_strictly_positive(d: &Distribution) -> Result<()> {
        if let Some(i) = d.mass().iter().position(|&m| m <= 0.0) {
            return Err(Error::NotStrictlyPositive(i));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.space.m()
    }

    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    pub fn nominal(&self) -> &Distribution {
        &self.nominal
    }

    pub fn anomalies(&self) -> &[Distribution] {
        &self.anomalies
    }

    /// 1-based slots of anomalous laws that coincide with the nominal law.
    /// Such slots make hypotheses indistinguishable in the limit; callers
    /// may want to warn.
    pub fn degenerate_anomalies(&self) -> Vec<usize> {
        self.anomalies
            .iter()
            .enumerate()
            .filter(|(_, a)| *a == &self.nominal)
            .map(|(i, _)| i + 1)
            .collect()
    }

    /// Law of sequence `i` under the hypothesis that `truth` is the outlier
    /// set: the rank-matched anomaly inside `truth`, the nominal law outside.
    pub fn law_under<'a>(&'a self, truth: &OutlierSet, i: usize) -> &'a Distribution {
        match truth.rank_of(i) {
            Ok(rank) => &self.anomalies[rank - 1],
            Err(_) => &self.nominal,
        }
    }

    /// The per-sequence laws under hypothesis `truth`, as a length-M panel.
    pub fn truth_panel(&self, truth: &OutlierSet) -> Vec<Distribution> {
        (1..=self.m())
            .map(|i| self.law_under(truth, i).clone())
            .collect()
    }
}

/// The limiting average law of the sequences outside `candidate`, under the
/// hypothesis that `truth` is the outlier set.
pub fn pooled_law(
    truth: &OutlierSet,
    candidate: &OutlierSet,
    scenario: &Scenario,
) -> Result<Distribution> {
    let rest = candidate.complement();
    let k = rest.len();
    let alphabet = scenario.nominal.alphabet();
    let mut mass = vec![0.0; alphabet.size()];
    let mut nominal_count = 0usize;
    for &i in &rest {
        if truth.contains(i) {
            let law = scenario.law_under(truth, i);
            for (m, &p) in mass.iter_mut().zip(law.mass()) {
                *m += p;
            }
        } else {
            nominal_count += 1;
        }
    }
    for (m, &p) in mass.iter_mut().zip(scenario.nominal.mass()) {
        *m += nominal_count as f64 * p;
    }
    for m in &mut mass {
        *m /= k as f64;
    }
    Distribution::from_weights(alphabet, mass)
}

/// Limiting score of `rival` when `truth` generated the panel: the sum of
/// KL divergences of the off-rival laws from their pooled average. Zero
/// when `rival == truth`, and also zero when `truth` is a strict subset of
/// `rival` (every pooled sequence is then nominal).
pub fn asymptotic_score(
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<f64> {
    let rest = rival.complement();
    // Identical pool laws give an exact zero (the superset-rival case).
    let nominal_mass = scenario.nominal.mass();
    if rest
        .iter()
        .all(|&i| scenario.law_under(truth, i).mass() == nominal_mass)
    {
        return Ok(0.0);
    }
    let pooled = pooled_law(truth, rival, scenario)?;
    let mut score = 0.0;
    let mut nominal_count = 0usize;
    for &i in &rest {
        if truth.contains(i) {
            score += kl_divergence(scenario.law_under(truth, i), &pooled)?;
        } else {
            nominal_count += 1;
        }
    }
    score += nominal_count as f64 * kl_divergence(&scenario.nominal, &pooled)?;
    Ok(score)
}

/// Log-likelihood ratio of anomaly slot `rank` against the pooled law.
pub fn info_density_anomalous(
    rank: usize,
    x: Symbol,
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<f64> {
    if rank == 0 || rank > truth.len() {
        return Err(Error::IndexOutOfRange {
            index: rank,
            m: truth.len(),
        });
    }
    let num = scenario.anomalies[rank - 1].prob(x);
    log_ratio(num, x, truth, rival, scenario)
}

/// Log-likelihood ratio of the nominal law against the pooled law.
pub fn info_density_nominal(
    x: Symbol,
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<f64> {
    log_ratio(scenario.nominal.prob(x), x, truth, rival, scenario)
}

fn log_ratio(
    num: f64,
    x: Symbol,
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<f64> {
    if num <= 0.0 {
        return Err(Error::NonPositiveMass(x));
    }
    let pooled = pooled_law(truth, rival, scenario)?;
    let den = pooled.prob(x);
    if den <= 0.0 {
        return Err(Error::NonPositiveMass(x));
    }
    Ok((num / den).ln())
}

/// [`asymptotic_score`] recomputed through expectations of the information
/// densities. An independent algebraic route used for cross-checks.
pub fn asymptotic_score_expectation(
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<f64> {
    let alphabet = scenario.nominal.alphabet();
    let mut total = 0.0;
    for &i in &rival.complement() {
        if let Ok(rank) = truth.rank_of(i) {
            let law = &scenario.anomalies[rank - 1];
            for x in 0..alphabet.size() {
                total += law.prob(x) * info_density_anomalous(rank, x, truth, rival, scenario)?;
            }
        } else {
            for x in 0..alphabet.size() {
                total += scenario.nominal.prob(x) * info_density_nominal(x, truth, rival, scenario)?;
            }
        }
    }
    Ok(total)
}

/// Sum over the off-rival sequences of the variance of their information
/// density under their own law.
pub fn variance_sum(truth: &OutlierSet, rival: &OutlierSet, scenario: &Scenario) -> Result<f64> {
    let alphabet = scenario.nominal.alphabet();
    let mut total = 0.0;
    for &i in &rival.complement() {
        let law = scenario.law_under(truth, i);
        let mut mean = 0.0;
        let mut second = 0.0;
        for x in 0..alphabet.size() {
            let f = match truth.rank_of(i) {
                Ok(rank) => info_density_anomalous(rank, x, truth, rival, scenario)?,
                Err(_) => info_density_nominal(x, truth, rival, scenario)?,
            };
            mean += law.prob(x) * f;
            second += law.prob(x) * f * f;
        }
        total += (second - mean * mean).max(0.0);
    }
    Ok(total)
}

/// Per-symbol log-ratio table and its mean under the sequence's own law.
type DensityTable = Option<(Vec<f64>, f64)>;

/// Per-sequence density tables for one rival: `table[i-1]` holds, for each
/// symbol, the log-ratio of sequence i's own law to the rival's pooled law,
/// or `None` for sequences inside the rival set.
fn density_tables(
    truth: &OutlierSet,
    rival: &OutlierSet,
    scenario: &Scenario,
) -> Result<Vec<DensityTable>> {
    let alphabet = scenario.nominal.alphabet();
    let pooled = pooled_law(truth, rival, scenario)?;
    let mut tables = vec![None; scenario.m()];
    for &i in &rival.complement() {
        let law = scenario.law_under(truth, i);
        let mut f = vec![0.0; alphabet.size()];
        let mut mean = 0.0;
        for (x, fx) in f.iter_mut().enumerate() {
            let num = law.prob(x);
            let den = pooled.prob(x);
            if num <= 0.0 || den <= 0.0 {
                return Err(Error::NonPositiveMass(x));
            }
            *fx = (num / den).ln();
            mean += num * *fx;
        }
        tables[i - 1] = Some((f, mean));
    }
    Ok(tables)
}

/// Covariance matrix of the per-symbol density sums across rivals of
/// `truth`, in the canonical rival order. Diagonal entries equal
/// [`variance_sum`]; off-diagonal entries sum the per-sequence covariances
/// of the two density tables (sequences are independent, so only shared
/// indices contribute).
pub fn covariance_matrix(truth: &OutlierSet, scenario: &Scenario) -> Result<SymMatrix> {
    let rivals = scenario.space().rivals(truth)?;
    let alphabet = scenario.nominal.alphabet();
    let tables = rivals
        .iter()
        .map(|r| density_tables(truth, r, scenario))
        .collect::<Result<Vec<_>>>()?;
    let dim = rivals.len();
    let mut v = SymMatrix::zeros(dim);
    for a in 0..dim {
        for b in a..dim {
            let mut cov = 0.0;
            for i in 1..=scenario.m() {
                let (Some((fa, ma)), Some((fb, mb))) = (&tables[a][i - 1], &tables[b][i - 1])
                else {
                    continue;
                };
                let law = scenario.law_under(truth, i);
                let mut cross = 0.0;
                for x in 0..alphabet.size() {
                    cross += law.prob(x) * fa[x] * fb[x];
                }
                cov += cross - ma * mb;
            }
            v.set(a, b, cov);
        }
    }
    Ok(v)
}

/// Settings for the Monte Carlo orthant evaluations inside bounds and
/// calibration. Fixed seed, so repeated computations agree bit for bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OrthantCfg {
    pub mc_samples: usize,
    pub seed: u64,
}

impl Default for OrthantCfg {
    fn default() -> Self {
        Self {
            mc_samples: crate::orthant::DEFAULT_MC_SAMPLES,
            seed: 0x6f72_7468,
        }
    }
}

/// Limiting rival scores, their floor and multiplicity, and the rival
/// covariance matrix for one hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryProfile {
    truth: OutlierSet,
    rivals: Vec<OutlierSet>,
    scores: Vec<f64>,
    score_floor: f64,
    floor_indices: Vec<usize>,
    cov: SymMatrix,
}

impl TheoryProfile {
    pub fn compute(scenario: &Scenario, truth: &OutlierSet) -> Result<Self> {
        let rivals: Vec<OutlierSet> = scenario
            .space()
            .rivals(truth)?
            .into_iter()
            .cloned()
            .collect();
        let scores = rivals
            .iter()
            .map(|r| asymptotic_score(truth, r, scenario))
            .collect::<Result<Vec<f64>>>()?;
        let score_floor = scores.iter().copied().fold(f64::INFINITY, f64::min);
        // Relative tolerance for "attains the floor".
        let cutoff = score_floor * (1.0 + 1e-9);
        let floor_indices: Vec<usize> = scores
            .iter()
            .enumerate()
            .filter(|(_, &s)| s <= cutoff)
            .map(|(i, _)| i)
            .collect();
        let cov = covariance_matrix(truth, scenario)?;
        Ok(Self {
            truth: truth.clone(),
            rivals,
            scores,
            score_floor,
            floor_indices,
            cov,
        })
    }

    pub fn truth(&self) -> &OutlierSet {
        &self.truth
    }

    pub fn rivals(&self) -> &[OutlierSet] {
        &self.rivals
    }

    /// Limiting rival scores, parallel to [`TheoryProfile::rivals`].
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score_of(&self, rival: &OutlierSet) -> Option<f64> {
        self.rivals.iter().position(|r| r == rival).map(|i| self.scores[i])
    }

    /// The smallest limiting rival score. Thresholds below it make the
    /// hypothesis identifiable in the limit.
    pub fn score_floor(&self) -> f64 {
        self.score_floor
    }

    /// Number of rivals attaining the floor (within 1e-9 relative).
    pub fn floor_multiplicity(&self) -> usize {
        self.floor_indices.len()
    }

    pub fn floor_indices(&self) -> &[usize] {
        &self.floor_indices
    }

    /// Rival covariance matrix in canonical rival order.
    pub fn covariance(&self) -> &SymMatrix {
        &self.cov
    }

    /// The second-order threshold margin: the largest `L` such that the
    /// orthant probability of the floor-rival Gaussian block at `L` on every
    /// coordinate still reaches `1 - epsilon`.
    pub fn second_order_margin(&self, epsilon: f64, cfg: &OrthantCfg) -> Result<Margin> {
        let v_sub = self.cov.principal_submatrix(&self.floor_indices);
        orthant_margin(&v_sub, epsilon, cfg)
    }

    /// Threshold calibrated so the asymptotic false-reject level is
    /// `epsilon`: floor plus the second-order margin scaled by `1/sqrt(n)`.
    pub fn calibrated_threshold(&self, n: usize, epsilon: f64, cfg: &OrthantCfg) -> Result<f64> {
        let margin = self.second_order_margin(epsilon, cfg)?;
        let lambda = self.score_floor + margin.value / (n as f64).sqrt();
        if lambda <= 0.0 || lambda.is_nan() {
            return Err(Error::NonPositiveThreshold(lambda));
        }
        Ok(lambda)
    }
}

/// Result of the margin search. `degenerate` marks an all-zero covariance
/// block, where the Gaussian collapses to a point mass and the margin is 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Margin {
    pub value: f64,
    pub degenerate: bool,
}

/// Largest `L` with `Q_d(L, ..., L; V) >= 1 - epsilon`, by bisection.
pub fn orthant_margin(v_sub: &SymMatrix, epsilon: f64, cfg: &OrthantCfg) -> Result<Margin> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "epsilon must lie in (0,1), got {epsilon}"
        )));
    }
    if v_sub.max_abs() < 1e-12 {
        return Ok(Margin {
            value: 0.0,
            degenerate: true,
        });
    }
    let d = v_sub.dim();
    let target = 1.0 - epsilon;

    // Deterministic evaluator of L -> Q_d(L * 1; V). For d >= 3 one fixed
    // batch of Gaussian draws is reused, making the map a nonincreasing step
    // function of L.
    let mins: Option<Vec<f64>> = if d >= 3 {
        let sampler = GaussianSampler::new(v_sub)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut xi = vec![0.0; d];
        let mut z = vec![0.0; d];
        let mut mins = Vec::with_capacity(cfg.mc_samples);
        for _ in 0..cfg.mc_samples {
            sampler.sample_into(&mut rng, &mut xi, &mut z);
            mins.push(z.iter().copied().fold(f64::INFINITY, f64::min));
        }
        mins.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Some(mins)
    } else {
        None
    };
    let eval = |level: f64| -> Result<f64> {
        match d {
            1 => Ok(normal_upper_tail(level, v_sub.get(0, 0))),
            2 => {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                Ok(orthant_q(&[level, level], v_sub, 0, &mut rng)?.value)
            }
            _ => {
                let mins = mins.as_ref().unwrap();
                let above = mins.partition_point(|&m| m <= level);
                Ok((mins.len() - above) as f64 / mins.len() as f64)
            }
        }
    };

    let scale = (0..d)
        .map(|i| v_sub.get(i, i))
        .fold(0.0f64, f64::max)
        .sqrt()
        .max(1e-6);
    let mut lo = -60.0 * scale;
    let mut hi = 60.0 * scale;
    for _ in 0..60 {
        if eval(lo)? >= target {
            break;
        }
        lo *= 2.0;
    }
    for _ in 0..200 {
        if hi - lo < 1e-10 * scale.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if eval(mid)? >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Margin {
        value: lo,
        degenerate: false,
    })
}

/// Exponential misclassification bound: `exp(-n lambda + |X| ln((M-1)n + 1))`.
/// Can exceed 1 for small `n`; reported as-is.
pub fn misclassification_bound(n: usize, lambda: f64, m: usize, alphabet_size: usize) -> f64 {
    let exponent =
        -(n as f64) * lambda + alphabet_size as f64 * (((m - 1) * n + 1) as f64).ln();
    exponent.exp()
}

/// False-alarm version of the exponential bound: the misclassification
/// bound scaled by the squared hypothesis count.
pub fn false_alarm_bound(
    n: usize,
    lambda: f64,
    m: usize,
    alphabet_size: usize,
    space_len: usize,
) -> f64 {
    (space_len * space_len) as f64 * misclassification_bound(n, lambda, m, alphabet_size)
}

/// Gaussian approximation of the false-reject probability at threshold
/// `lambda` and length `n`: one minus the orthant probability of the rival
/// score vector, clamped to `[0, 1]`. Vanishing-order correction terms are
/// dropped, so this is the asymptotic-form value.
pub fn false_reject_bound(
    profile: &TheoryProfile,
    lambda: f64,
    n: usize,
    cfg: &OrthantCfg,
) -> Result<f64> {
    let sqrt_n = (n as f64).sqrt();
    let x: Vec<f64> = profile
        .scores()
        .iter()
        .map(|&g| sqrt_n * (lambda - g))
        .collect();
    let q = orthant_with_cfg(&x, profile.covariance(), cfg)?;
    Ok((1.0 - q.value).clamp(0.0, 1.0))
}

/// Orthant probability with a fresh generator seeded from the config.
pub fn orthant_with_cfg(x: &[f64], sigma: &SymMatrix, cfg: &OrthantCfg) -> Result<OrthantValue> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    orthant_q(x, sigma, cfg.mc_samples, &mut rng)
}

/// Limiting rival score when every outlier follows one common anomalous law:
/// a rival missing `l` of the outliers, of size `t`, pools `l` anomalous and
/// `m - t - l` nominal sequences.
pub fn common_anomaly_score(
    m: usize,
    t: usize,
    l: usize,
    nominal: &Distribution,
    anomaly: &Distribution,
) -> Result<f64> {
    let t_max = max_outliers(m);
    if t == 0 || t > t_max {
        return Err(Error::InvalidParameter(format!(
            "rival size t = {t} outside 1..={t_max} for m = {m}"
        )));
    }
    if l == 0 || l + t > m {
        return Err(Error::InvalidParameter(format!(
            "missed-outlier count l = {l} invalid for m = {m}, t = {t}"
        )));
    }
    let pool = (m - t) as f64;
    let pooled = mixture(
        &[l as f64 / pool, (m - t - l) as f64 / pool],
        &[anomaly.clone(), nominal.clone()],
    )?;
    Ok(l as f64 * kl_divergence(anomaly, &pooled)?
        + (m - t - l) as f64 * kl_divergence(nominal, &pooled)?)
}

/// Minimum of [`common_anomaly_score`] over rival sizes and missed-outlier
/// counts, for a true outlier set of size `b_len`. Matches the generic
/// rival-score floor when `b_len` equals the maximum outlier count (no
/// strict superset rivals exist in that case).
pub fn min_common_anomaly_score(
    b_len: usize,
    m: usize,
    nominal: &Distribution,
    anomaly: &Distribution,
) -> Result<f64> {
    let t_max = max_outliers(m);
    if b_len == 0 || b_len > t_max {
        return Err(Error::InvalidParameter(format!(
            "outlier count {b_len} outside 1..={t_max} for m = {m}"
        )));
    }
    let mut best = f64::INFINITY;
    for t in 1..=t_max {
        for l in 1..=b_len {
            best = best.min(common_anomaly_score(m, t, l, nominal, anomaly)?);
        }
    }
    Ok(best)
}
