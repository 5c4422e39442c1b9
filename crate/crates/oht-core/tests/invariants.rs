//! Property tests for the structural invariants: divergence positivity,
//! score bounds and equivariance, detector homogeneity, and orthant
//! monotonicity.

use proptest::prelude::*;

use oht_core::{
    decide, dispersion_score, empirical, kl_divergence, max_outliers, orthant_q, score_table,
    uniform_mixture, Alphabet, Distribution, HypothesisSpace, OutlierSet, SymMatrix, Verdict,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mass_vector(k: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.02f64..1.0, k)
}

fn distribution(k: usize) -> impl Strategy<Value = Distribution> {
    mass_vector(k).prop_map(move |w| {
        Distribution::from_weights(Alphabet::new(k).unwrap(), w).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kl_nonnegative_zero_iff_equal(p in distribution(4), q in distribution(4)) {
        let d = kl_divergence(&p, &q).unwrap();
        prop_assert!(d >= 0.0);
        prop_assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
        if d == 0.0 {
            for (a, b) in p.mass().iter().zip(q.mass()) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn uniform_mixture_divergence_bounded(qs in prop::collection::vec(distribution(3), 2..6)) {
        let m = uniform_mixture(&qs).unwrap();
        let bound = (qs.len() as f64).ln();
        for q in &qs {
            prop_assert!(kl_divergence(q, &m).unwrap() <= bound + 1e-12);
        }
    }

    #[test]
    fn scores_bounded_and_nonnegative(
        seqs in prop::collection::vec(prop::collection::vec(0usize..3, 12), 5),
    ) {
        let alphabet = Alphabet::new(3).unwrap();
        let space = HypothesisSpace::enumerate(5).unwrap();
        let panel: Vec<_> = seqs.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
        let table = score_table(&panel, &space).unwrap();
        for (set, &score) in space.sets().iter().zip(table.scores()) {
            let pool = (5 - set.len()) as f64;
            prop_assert!(score >= 0.0);
            prop_assert!(score <= pool * pool.ln() + 1e-9);
        }
    }

    #[test]
    fn detector_winner_is_strict_minimum(
        seqs in prop::collection::vec(prop::collection::vec(0usize..2, 10), 4),
        lambda in 0.01f64..1.0,
    ) {
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let panel: Vec<_> = seqs.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
        let table = score_table(&panel, &space).unwrap();
        if let Verdict::Outliers(b) = decide(&table, lambda) {
            let win = table.score_of(&b).unwrap();
            let mut rival_min = f64::INFINITY;
            for (set, &s) in space.sets().iter().zip(table.scores()) {
                if *set != b {
                    rival_min = rival_min.min(s);
                }
            }
            prop_assert!(win < rival_min);
            prop_assert!(rival_min > lambda);
        }
    }

    #[test]
    fn score_permutation_equivariance(
        seqs in prop::collection::vec(prop::collection::vec(0usize..2, 8), 4),
        rotation in 0usize..4,
    ) {
        // Cyclic rotations are enough to exercise relabeling.
        let perm: Vec<usize> = (0..4).map(|i| (i + rotation) % 4 + 1).collect();
        let alphabet = Alphabet::new(2).unwrap();
        let space = HypothesisSpace::enumerate(4).unwrap();
        let mut permuted = vec![Vec::new(); 4];
        for (i, s) in seqs.iter().enumerate() {
            permuted[perm[i] - 1] = s.clone();
        }
        let panel: Vec<_> = seqs.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
        let panel_p: Vec<_> = permuted.iter().map(|s| empirical(s, alphabet).unwrap()).collect();
        let dists: Vec<Distribution> = panel.iter().map(|e| e.to_distribution()).collect();
        let dists_p: Vec<Distribution> = panel_p.iter().map(|e| e.to_distribution()).collect();
        for b in space.sets() {
            let image = OutlierSet::new(
                b.members().iter().map(|&i| perm[i - 1]).collect(),
                4,
            ).unwrap();
            let s = dispersion_score(b, &dists).unwrap();
            let sp = dispersion_score(&image, &dists_p).unwrap();
            prop_assert!((s - sp).abs() < 1e-12);
        }
    }

    #[test]
    fn enumeration_matches_binomial_sums(m in 3usize..9) {
        let space = HypothesisSpace::enumerate(m).unwrap();
        let mut expected = 0usize;
        for t in 1..=max_outliers(m) {
            let mut c = 1usize;
            for i in 0..t {
                c = c * (m - i) / (i + 1);
            }
            expected += c;
        }
        prop_assert_eq!(space.len(), expected);
    }

    #[test]
    fn orthant_monotone_in_threshold(
        x1 in -2.0f64..2.0,
        x2 in -2.0f64..2.0,
        rho in -0.9f64..0.9,
        bump in 0.01f64..1.5,
    ) {
        let sigma = SymMatrix::from_rows(&[vec![1.0, rho], vec![rho, 1.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let q1 = orthant_q(&[x1, x2], &sigma, 0, &mut rng).unwrap().value;
        let q2 = orthant_q(&[x1 + bump, x2], &sigma, 0, &mut rng).unwrap().value;
        prop_assert!(q2 <= q1 + 1e-9);
        prop_assert!((0.0..=1.0).contains(&q1));
    }
}
