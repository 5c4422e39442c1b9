//! Dispersion scoring of candidate outlier sets and the threshold test.
//!
//! The score of a candidate set sums, over the sequences outside the set,
//! the KL divergence of each empirical distribution from their pooled
//! average. It is zero exactly when those empiricals coincide, so under the
//! true hypothesis the candidate's own score collapses while every rival
//! keeps a positive limit.

use crate::distributions::{
    empirical, kl_divergence, uniform_mixture, Alphabet, Distribution, EmpiricalDistribution,
    Symbol,
};
use crate::error::{Error, Result};
use crate::hypothesis::{HypothesisSpace, OutlierSet};

/// Scores of every candidate set in a hypothesis space, in canonical order.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreTable {
    space: HypothesisSpace,
    scores: Vec<f64>,
}

impl ScoreTable {
    pub fn space(&self) -> &HypothesisSpace {
        &self.space
    }

    /// Scores parallel to `space().sets()`.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    pub fn score_of(&self, set: &OutlierSet) -> Option<f64> {
        self.space.index_of(set).map(|i| self.scores[i])
    }
}

/// Outcome of the threshold test: a specific outlier set, or the rejection
/// verdict meaning "no outlier identified".
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Outliers(OutlierSet),
    Reject,
}

impl Verdict {
    pub fn is_reject(&self) -> bool {
        matches!(self, Verdict::Reject)
    }
}

/// Dispersion score of `candidate` given per-sequence distributions:
/// the sum over sequences outside the candidate set of the KL divergence
/// from their pooled average.
///
/// Bounded by `(M - |candidate|) * ln(M - |candidate|)`; zero iff all
/// off-candidate distributions are equal.
pub fn dispersion_score(candidate: &OutlierSet, dists: &[Distribution]) -> Result<f64> {
    if dists.len() != candidate.m() {
        return Err(Error::PanelLength {
            expected: candidate.m(),
            got: dists.len(),
        });
    }
    let rest: Vec<Distribution> = candidate
        .complement()
        .iter()
        .map(|&i| dists[i - 1].clone())
        .collect();
    // Identical pool members score exactly zero; short-circuiting keeps the
    // "zero iff equal" contract free of averaging round-off.
    if rest.iter().all(|q| q.mass() == rest[0].mass()) {
        return Ok(0.0);
    }
    let pooled = uniform_mixture(&rest)?;
    let mut score = 0.0;
    for q in &rest {
        score += kl_divergence(q, &pooled)?;
    }
    Ok(score)
}

/// Score every candidate set of `space` on a panel of empirical
/// distributions. All sequences must share one length.
pub fn score_table(panel: &[EmpiricalDistribution], space: &HypothesisSpace) -> Result<ScoreTable> {
    if panel.len() != space.m() {
        return Err(Error::PanelLength {
            expected: space.m(),
            got: panel.len(),
        });
    }
    let n = panel[0].n();
    for e in panel {
        if e.n() != n {
            return Err(Error::LengthMismatch(n, e.n()));
        }
    }
    let dists: Vec<Distribution> = panel.iter().map(|e| e.to_distribution()).collect();
    let scores = space
        .sets()
        .iter()
        .map(|c| dispersion_score(c, &dists))
        .collect::<Result<Vec<f64>>>()?;
    Ok(ScoreTable {
        space: space.clone(),
        scores,
    })
}

/// Threshold test over a score table: declare the candidate whose score is
/// the unique strict minimum when every rival scores above `lambda`;
/// otherwise reject.
///
/// Both conditions are strict, so any tie — a shared minimum, or a rival
/// minimum exactly at `lambda` — rejects. `lambda` is expected positive;
/// the comparison itself is well defined for any value.
pub fn decide(table: &ScoreTable, lambda: f64) -> Verdict {
    let scores = table.scores();
    debug_assert!(scores.len() >= 2);
    let mut best = 0usize;
    for (i, &s) in scores.iter().enumerate() {
        if s < scores[best] {
            best = i;
        }
    }
    // Smallest rival score: the minimum over everything except `best`.
    let mut rival_min = f64::INFINITY;
    for (i, &s) in scores.iter().enumerate() {
        if i != best && s < rival_min {
            rival_min = s;
        }
    }
    if scores[best] < rival_min && rival_min > lambda {
        Verdict::Outliers(table.space.sets()[best].clone())
    } else {
        Verdict::Reject
    }
}

/// End-to-end test on raw sequences: empirical distributions, score table,
/// threshold decision.
pub fn run_test(sequences: &[Vec<Symbol>], alphabet: Alphabet, lambda: f64) -> Result<Verdict> {
    if lambda <= 0.0 || lambda.is_nan() {
        return Err(Error::NonPositiveThreshold(lambda));
    }
    let m = sequences.len();
    let space = HypothesisSpace::enumerate(m)?;
    let panel = sequences
        .iter()
        .map(|s| empirical(s, alphabet))
        .collect::<Result<Vec<_>>>()?;
    let table = score_table(&panel, &space)?;
    Ok(decide(&table, lambda))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    const DELTA_PANEL_SCORE: f64 = 1.9095425048844386; // ln 3 + 2 ln 1.5

    fn set(members: &[usize], m: usize) -> OutlierSet {
        OutlierSet::new(members.to_vec(), m).unwrap()
    }

    fn delta_panel(alphabet: Alphabet) -> Vec<Distribution> {
        vec![
            Distribution::point_mass(alphabet, 0).unwrap(),
            Distribution::point_mass(alphabet, 1).unwrap(),
            Distribution::point_mass(alphabet, 1).unwrap(),
            Distribution::point_mass(alphabet, 1).unwrap(),
        ]
    }

    fn str_panel(rows: &[&str], alphabet: Alphabet) -> Vec<Vec<Symbol>> {
        rows.iter().map(|r| alphabet.parse_str(r).unwrap()).collect()
    }

    #[test]
    fn score_zero_for_identical_distributions() {
        let alphabet = Alphabet::new(2).unwrap();
        let q = Distribution::new(alphabet, vec![0.3, 0.7]).unwrap();
        let dists = vec![q; 4];
        let space = HypothesisSpace::enumerate(4).unwrap();
        for b in space.sets() {
            assert_eq!(dispersion_score(b, &dists).unwrap(), 0.0);
        }
    }

    #[test]
    fn score_zero_when_remaining_agree() {
        let alphabet = Alphabet::new(2).unwrap();
        let dists = delta_panel(alphabet);
        assert_eq!(dispersion_score(&set(&[1], 4), &dists).unwrap(), 0.0);
    }

    #[test]
    fn score_hand_value_for_delta_panel() {
        let alphabet = Alphabet::new(2).unwrap();
        let dists = delta_panel(alphabet);
        let got = dispersion_score(&set(&[2], 4), &dists).unwrap();
        assert!((got - DELTA_PANEL_SCORE).abs() < 1e-12, "{got}");
    }

    #[test]
    fn score_table_on_delta_panel() {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let panel: Vec<_> = str_panel(&["aaaa", "bbbb", "bbbb", "bbbb"], alphabet)
            .iter()
            .map(|s| empirical(s, alphabet).unwrap())
            .collect();
        let table = score_table(&panel, &space).unwrap();
        assert_eq!(table.score_of(&set(&[1], 4)).unwrap(), 0.0);
        for b in [&set(&[2], 4), &set(&[3], 4), &set(&[4], 4)] {
            let s = table.score_of(b).unwrap();
            assert!((s - DELTA_PANEL_SCORE).abs() < 1e-12);
        }
    }

    #[test]
    fn score_table_full_for_m5() {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(5).unwrap();
        let mut rng = StdRng::seed_from_u64(3);
        let panel: Vec<_> = (0..5)
            .map(|_| {
                let seq: Vec<Symbol> = (0..40).map(|_| rng.random_range(0..2)).collect();
                empirical(&seq, alphabet).unwrap()
            })
            .collect();
        let table = score_table(&panel, &space).unwrap();
        assert_eq!(table.scores().len(), 15);
        assert!(table.scores().iter().all(|s| s.is_finite()));
    }

    #[test]
    fn score_table_rejects_ragged_panel() {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(3).unwrap();
        let panel = vec![
            empirical(&alphabet.parse_str("aaa").unwrap(), alphabet).unwrap(),
            empirical(&alphabet.parse_str("ab").unwrap(), alphabet).unwrap(),
            empirical(&alphabet.parse_str("aba").unwrap(), alphabet).unwrap(),
        ];
        assert!(matches!(
            score_table(&panel, &space),
            Err(Error::LengthMismatch(3, 2))
        ));
    }

    #[test]
    fn decide_all_zero_rejects() {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let panel: Vec<_> = str_panel(&["abab", "baba", "abba", "baab"], alphabet)
            .iter()
            .map(|s| empirical(s, alphabet).unwrap())
            .collect();
        let table = score_table(&panel, &space).unwrap();
        assert_eq!(decide(&table, 0.1), Verdict::Reject);
    }

    #[test]
    fn run_test_hand_cases() {
        let alphabet = Alphabet::new(2).unwrap();
        let seqs = str_panel(&["aaaa", "bbbb", "bbbb", "bbbb"], alphabet);
        assert_eq!(
            run_test(&seqs, alphabet, 1.0).unwrap(),
            Verdict::Outliers(set(&[1], 4))
        );
        // Threshold above the rival minimum 1.9095...: reject.
        assert_eq!(run_test(&seqs, alphabet, 2.5).unwrap(), Verdict::Reject);
        // Threshold above the hard score bound M ln M: always reject.
        assert_eq!(run_test(&seqs, alphabet, 10.0).unwrap(), Verdict::Reject);
    }

    #[test]
    fn run_test_validates_inputs() {
        let alphabet = Alphabet::new(2).unwrap();
        let seqs = str_panel(&["aa", "bb", "ab"], alphabet);
        assert!(matches!(
            run_test(&seqs, alphabet, 0.0),
            Err(Error::NonPositiveThreshold(_))
        ));
        let two = str_panel(&["aa", "bb"], alphabet);
        assert!(matches!(run_test(&two, alphabet, 1.0), Err(Error::MTooSmall(2))));
    }

    #[test]
    fn winner_is_unique_strict_minimum() {
        let alphabet = Alphabet::new(3).unwrap();
        let space = HypothesisSpace::enumerate(5).unwrap();
        let mut rng = StdRng::seed_from_u64(17);
        for _ in 0..200 {
            let panel: Vec<_> = (0..5)
                .map(|_| {
                    let seq: Vec<Symbol> = (0..30).map(|_| rng.random_range(0..3)).collect();
                    empirical(&seq, alphabet).unwrap()
                })
                .collect();
            let table = score_table(&panel, &space).unwrap();
            if let Verdict::Outliers(b) = decide(&table, 0.05) {
                let win = table.score_of(&b).unwrap();
                for (c, &s) in space.sets().iter().zip(table.scores()) {
                    if *c != b {
                        assert!(win < s);
                    }
                }
            }
        }
    }

    #[test]
    fn scores_bounded_by_pool_size_log() {
        let alphabet = Alphabet::new(4).unwrap();
        let space = HypothesisSpace::enumerate(6).unwrap();
        let mut rng = StdRng::seed_from_u64(23);
        for _ in 0..50 {
            let panel: Vec<_> = (0..6)
                .map(|_| {
                    let seq: Vec<Symbol> = (0..20).map(|_| rng.random_range(0..4)).collect();
                    empirical(&seq, alphabet).unwrap()
                })
                .collect();
            let table = score_table(&panel, &space).unwrap();
            for (b, &s) in space.sets().iter().zip(table.scores()) {
                let pool = (6 - b.len()) as f64;
                assert!(s <= pool * pool.ln() + 1e-9);
            }
        }
    }

    #[test]
    fn permutation_equivariance() {
        let alphabet = Alphabet::new(3).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let mut rng = StdRng::seed_from_u64(29);
        // perm maps index i (1-based) to perm[i-1].
        let perms: [[usize; 4]; 3] = [[2, 1, 4, 3], [4, 3, 2, 1], [2, 3, 4, 1]];
        for perm in perms {
            let seqs: Vec<Vec<Symbol>> = (0..4)
                .map(|_| (0..24).map(|_| rng.random_range(0..3)).collect())
                .collect();
            let mut permuted = vec![Vec::new(); 4];
            for (i, s) in seqs.iter().enumerate() {
                permuted[perm[i] - 1] = s.clone();
            }
            let panel: Vec<_> = seqs.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
            let panel_p: Vec<_> =
                permuted.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
            let t = score_table(&panel, &space).unwrap();
            let tp = score_table(&panel_p, &space).unwrap();
            for b in space.sets() {
                let image = OutlierSet::new(
                    b.members().iter().map(|&i| perm[i - 1]).collect(),
                    4,
                )
                .unwrap();
                assert!((t.score_of(b).unwrap() - tp.score_of(&image).unwrap()).abs() < 1e-12);
            }
            // Verdicts map through the permutation as well.
            match (decide(&t, 0.2), decide(&tp, 0.2)) {
                (Verdict::Reject, Verdict::Reject) => {}
                (Verdict::Outliers(b), Verdict::Outliers(bp)) => {
                    let image = OutlierSet::new(
                        b.members().iter().map(|&i| perm[i - 1]).collect(),
                        4,
                    )
                    .unwrap();
                    assert_eq!(bp, image);
                }
                (a, b) => panic!("verdicts diverge under permutation: {a:?} vs {b:?}"),
            }
        }
    }

    #[test]
    fn zero_score_iff_equal_counts() {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let mut rng = StdRng::seed_from_u64(31);
        for _ in 0..100 {
            let panel: Vec<_> = (0..4)
                .map(|_| {
                    let seq: Vec<Symbol> = (0..12).map(|_| rng.random_range(0..2)).collect();
                    empirical(&seq, alphabet).unwrap()
                })
                .collect();
            let table = score_table(&panel, &space).unwrap();
            for (b, &s) in space.sets().iter().zip(table.scores()) {
                let rest = b.complement();
                let all_equal = rest
                    .windows(2)
                    .all(|w| panel[w[0] - 1].counts() == panel[w[1] - 1].counts());
                assert_eq!(s == 0.0, all_equal, "set {b}");
            }
        }
    }

    #[test]
    fn statistical_consistency_at_small_threshold() {
        // Truth {1} with well-separated laws: correct verdicts dominate once
        // n is large and lambda sits below the rival score floor.
        let alphabet = Alphabet::new(2).unwrap();
        let p_anom = Distribution::new(alphabet, vec![0.8, 0.2]).unwrap();
        let p_nom = Distribution::new(alphabet, vec![0.2, 0.8]).unwrap();
        let mut rng = StdRng::seed_from_u64(37);
        let n = 2000;
        let mut correct = 0;
        let trials = 100;
        for _ in 0..trials {
            let mut seqs = Vec::new();
            for i in 0..3 {
                let d = if i == 0 { &p_anom } else { &p_nom };
                let seq: Vec<Symbol> = (0..n)
                    .map(|_| if rng.random::<f64>() < d.prob(1) { 1 } else { 0 })
                    .collect();
                seqs.push(seq);
            }
            if run_test(&seqs, alphabet, 0.2).unwrap() == Verdict::Outliers(set(&[1], 3)) {
                correct += 1;
            }
        }
        assert!(correct >= 95, "only {correct}/{trials} correct");
    }
}
