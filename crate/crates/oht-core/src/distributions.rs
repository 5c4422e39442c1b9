//! Finite-alphabet probability vectors, empirical distributions, KL
//! divergence and mixtures. Everything here is in nats.

use crate::error::{Error, Result};

/// Tolerance for accepting a mass vector as normalized. Vectors within this
/// of unit sum are renormalized exactly; anything further off is rejected.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Symbols are indices `0..size` into a finite alphabet.
pub type Symbol = usize;

/// A finite alphabet of at least two symbols, labeled `0..size`.
///
/// For text ingestion the symbols carry the labels `'a'`, `'b'`, ... in
/// index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alphabet {
    size: usize,
}

impl Alphabet {
    pub fn new(size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::AlphabetTooSmall(size));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    /// Label of symbol `i`: `'a'` for 0, `'b'` for 1, and so on.
    pub fn label(&self, i: Symbol) -> Result<char> {
        if i >= self.size || i >= 26 {
            return Err(Error::UnknownSymbol(i, self.size));
        }
        Ok((b'a' + i as u8) as char)
    }

    /// Parse a text sequence where `'a'` means symbol 0, `'b'` symbol 1, ...
    pub fn parse_str(&self, s: &str) -> Result<Vec<Symbol>> {
        s.chars()
            .map(|c| {
                let i = (c as u32).wrapping_sub('a' as u32) as usize;
                if c.is_ascii_lowercase() && i < self.size {
                    Ok(i)
                } else {
                    Err(Error::UnknownChar(c))
                }
            })
            .collect()
    }
}

/// A probability vector over an [`Alphabet`].
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    alphabet: Alphabet,
    mass: Vec<f64>,
    strictly_positive: bool,
}

impl Distribution {
    /// Build from a mass vector. Entries must be non-negative and sum to 1
    /// within [`NORMALIZATION_TOL`]; the vector is renormalized exactly.
    pub fn new(alphabet: Alphabet, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != alphabet.size() {
            return Err(Error::MassLength {
                expected: alphabet.size(),
                got: mass.len(),
            });
        }
        for (index, &m) in mass.iter().enumerate() {
            if m < 0.0 || m.is_nan() {
                return Err(Error::NegativeMass { index, mass: m });
            }
        }
        let sum: f64 = mass.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self::normalized(alphabet, mass, sum))
    }

    /// Build from raw non-negative weights, normalizing whatever they sum to.
    pub fn from_weights(alphabet: Alphabet, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != alphabet.size() {
            return Err(Error::MassLength {
                expected: alphabet.size(),
                got: weights.len(),
            });
        }
        for (index, &m) in weights.iter().enumerate() {
            if m < 0.0 || m.is_nan() {
                return Err(Error::NegativeMass { index, mass: m });
            }
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 || sum.is_nan() {
            return Err(Error::NotNormalized(sum));
        }
        Ok(Self::normalized(alphabet, weights, sum))
    }

    fn normalized(alphabet: Alphabet, mut mass: Vec<f64>, sum: f64) -> Self {
        if sum != 1.0 {
            for m in &mut mass {
                *m /= sum;
            }
        }
        let strictly_positive = mass.iter().all(|&m| m > 0.0);
        Self {
            alphabet,
            mass,
            strictly_positive,
        }
    }

    pub fn uniform(alphabet: Alphabet) -> Self {
        let k = alphabet.size();
        Self::normalized(alphabet, vec![1.0 / k as f64; k], 1.0)
    }

    pub fn point_mass(alphabet: Alphabet, symbol: Symbol) -> Result<Self> {
        if symbol >= alphabet.size() {
            return Err(Error::UnknownSymbol(symbol, alphabet.size()));
        }
        let mut mass = vec![0.0; alphabet.size()];
        mass[symbol] = 1.0;
        Ok(Self::normalized(alphabet, mass, 1.0))
    }

    /// Bernoulli-style shorthand for a binary alphabet: mass `p` on symbol 1.
    pub fn bernoulli(p: f64) -> Result<Self> {
        Distribution::new(Alphabet::new(2)?, vec![1.0 - p, p])
    }

    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn prob(&self, x: Symbol) -> f64 {
        self.mass[x]
    }

    /// True iff every symbol has positive mass.
    pub fn is_strictly_positive(&self) -> bool {
        self.strictly_positive
    }

    pub(crate) fn same_alphabet(&self, other: &Distribution) -> Result<()> {
        if self.alphabet != other.alphabet {
            return Err(Error::AlphabetMismatch(
                self.alphabet.size(),
                other.alphabet.size(),
            ));
        }
        Ok(())
    }
}

/// Symbol counts of an observed sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EmpiricalDistribution {
    alphabet: Alphabet,
    counts: Vec<u64>,
    n: usize,
}

impl EmpiricalDistribution {
    pub fn alphabet(&self) -> Alphabet {
        self.alphabet
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// The relative-frequency vector `counts / n` as a [`Distribution`].
    pub fn to_distribution(&self) -> Distribution {
        let n = self.n as f64;
        let mass = self.counts.iter().map(|&c| c as f64 / n).collect();
        Distribution::normalized(self.alphabet, mass, 1.0)
    }
}

/// Count symbol occurrences of a nonempty sequence.
pub fn empirical(sequence: &[Symbol], alphabet: Alphabet) -> Result<EmpiricalDistribution> {
    if sequence.is_empty() {
        return Err(Error::EmptySequence);
    }
    let mut counts = vec![0u64; alphabet.size()];
    for &x in sequence {
        if x >= alphabet.size() {
            return Err(Error::UnknownSymbol(x, alphabet.size()));
        }
        counts[x] += 1;
    }
    Ok(EmpiricalDistribution {
        alphabet,
        counts,
        n: sequence.len(),
    })
}

/// KL divergence `D(p || q)` in nats, with the convention `0 log(0/q) = 0`.
///
/// `p(x) > 0` with `q(x) = 0` is a support violation and reported as an
/// error rather than returned as infinity: every in-scope caller divides by
/// mixtures that contain `p`, so an infinite value would signal a bug.
pub fn kl_divergence(p: &Distribution, q: &Distribution) -> Result<f64> {
    p.same_alphabet(q)?;
    let mut sum = 0.0;
    for (index, (&pi, &qi)) in p.mass.iter().zip(&q.mass).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                return Err(Error::SupportViolation { index, p: pi });
            }
            sum += pi * (pi / qi).ln();
        }
    }
    // Rounding can leave a tiny negative residue. Clamp so callers can rely on >= 0.
    Ok(sum.max(0.0))
}

/// Pointwise weighted average of distributions on a shared alphabet.
pub fn mixture(weights: &[f64], components: &[Distribution]) -> Result<Distribution> {
    if components.is_empty() {
        return Err(Error::EmptyMixture);
    }
    if weights.len() != components.len() {
        return Err(Error::MixtureArity {
            weights: weights.len(),
            components: components.len(),
        });
    }
    let alphabet = components[0].alphabet();
    for c in &components[1..] {
        components[0].same_alphabet(c)?;
    }
    for (index, &w) in weights.iter().enumerate() {
        if w < 0.0 || w.is_nan() {
            return Err(Error::NegativeMass { index, mass: w });
        }
    }
    let wsum: f64 = weights.iter().sum();
    if (wsum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::WeightSumViolation(wsum));
    }
    let mut mass = vec![0.0; alphabet.size()];
    for (w, c) in weights.iter().zip(components) {
        for (m, &cm) in mass.iter_mut().zip(c.mass()) {
            *m += w * cm;
        }
    }
    let sum = mass.iter().sum();
    Ok(Distribution::normalized(alphabet, mass, sum))
}

/// Uniform average of the given distributions.
pub fn uniform_mixture(components: &[Distribution]) -> Result<Distribution> {
    let k = components.len();
    if k == 0 {
        return Err(Error::EmptyMixture);
    }
    let weights = vec![1.0 / k as f64; k];
    mixture(&weights, components)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    fn dist(mass: &[f64]) -> Distribution {
        Distribution::new(Alphabet::new(mass.len()).unwrap(), mass.to_vec()).unwrap()
    }

    fn random_distribution(alphabet: Alphabet, rng: &mut StdRng) -> Distribution {
        let weights: Vec<f64> = (0..alphabet.size())
            .map(|_| rng.random_range(0.01..1.0))
            .collect();
        Distribution::from_weights(alphabet, weights).unwrap()
    }

    #[test]
    fn kl_identical_is_zero() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_hand_values() {
        // D((1,0) || (1/3,2/3)) = ln 3
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[1.0 / 3.0, 2.0 / 3.0]);
        let got = kl_divergence(&p, &q).unwrap();
        assert!((got - 1.0986122886681098).abs() < 1e-12, "{got}");

        // D((0.9,0.1) || (0.5,0.5)) = 0.9 ln 1.8 + 0.1 ln 0.2
        let p = dist(&[0.9, 0.1]);
        let q = dist(&[0.5, 0.5]);
        let got = kl_divergence(&p, &q).unwrap();
        assert!((got - 0.3680642071684971).abs() < 1e-12, "{got}");
    }

    #[test]
    fn kl_support_violation() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[1.0, 0.0]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::SupportViolation { index: 1, .. })
        ));
    }

    #[test]
    fn kl_alphabet_mismatch() {
        let p = dist(&[0.5, 0.5]);
        let q = dist(&[0.4, 0.3, 0.3]);
        assert!(matches!(
            kl_divergence(&p, &q),
            Err(Error::AlphabetMismatch(2, 3))
        ));
    }

    #[test]
    fn gibbs_inequality_random_pairs() {
        let alphabet = Alphabet::new(4).unwrap();
        let mut rng = StdRng::seed_from_u64(11);
        for _ in 0..1000 {
            let p = random_distribution(alphabet, &mut rng);
            let q = random_distribution(alphabet, &mut rng);
            let d = kl_divergence(&p, &q).unwrap();
            assert!(d >= 0.0);
            if p != q {
                assert!(d > 0.0);
            }
        }
        let p = random_distribution(alphabet, &mut rng);
        assert_eq!(kl_divergence(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn kl_against_uniform_mixture_bounded_by_log_k() {
        let alphabet = Alphabet::new(3).unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        for k in 2..6usize {
            for _ in 0..50 {
                let qs: Vec<Distribution> =
                    (0..k).map(|_| random_distribution(alphabet, &mut rng)).collect();
                let m = uniform_mixture(&qs).unwrap();
                for q in &qs {
                    let d = kl_divergence(q, &m).unwrap();
                    assert!(d <= (k as f64).ln() + 1e-12, "{d} > ln {k}");
                }
            }
        }
    }

    #[test]
    fn empirical_counts() {
        let alphabet = Alphabet::new(2).unwrap();
        let seq = alphabet.parse_str("aab").unwrap();
        let e = empirical(&seq, alphabet).unwrap();
        assert_eq!(e.counts(), &[2, 1]);
        assert_eq!(e.n(), 3);

        let seq = alphabet.parse_str("bbbb").unwrap();
        let e = empirical(&seq, alphabet).unwrap();
        assert_eq!(e.counts(), &[0, 4]);
    }

    #[test]
    fn empirical_rejects_empty_and_unknown() {
        let alphabet = Alphabet::new(2).unwrap();
        assert!(matches!(empirical(&[], alphabet), Err(Error::EmptySequence)));
        assert!(matches!(
            empirical(&[0, 2], alphabet),
            Err(Error::UnknownSymbol(2, 2))
        ));
        assert!(matches!(alphabet.parse_str("abc"), Err(Error::UnknownChar('c'))));
    }

    #[test]
    fn mixture_idempotent_on_copies() {
        let p = dist(&[0.3, 0.7]);
        let m = mixture(&[0.5, 0.5], &[p.clone(), p.clone()]).unwrap();
        for (a, b) in m.mass().iter().zip(p.mass()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn mixture_of_point_masses() {
        let alphabet = Alphabet::new(2).unwrap();
        let d0 = Distribution::point_mass(alphabet, 0).unwrap();
        let d1 = Distribution::point_mass(alphabet, 1).unwrap();
        let m = mixture(&[1.0 / 3.0, 2.0 / 3.0], &[d0, d1]).unwrap();
        assert!((m.prob(0) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.prob(1) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn mixture_matches_pooled_law_example() {
        // Pooling one (0.8,0.2) component with two nominal (0.2,0.8)
        // components gives (0.4,0.6).
        let pa = dist(&[0.8, 0.2]);
        let pn = dist(&[0.2, 0.8]);
        let m = mixture(&[1.0 / 3.0, 2.0 / 3.0], &[pa, pn]).unwrap();
        assert!((m.prob(0) - 0.4).abs() < 1e-12);
        assert!((m.prob(1) - 0.6).abs() < 1e-12);
    }

    #[test]
    fn mixture_weight_violations() {
        let p = dist(&[0.3, 0.7]);
        let q = dist(&[0.6, 0.4]);
        assert!(matches!(
            mixture(&[0.5, 0.4], &[p.clone(), q.clone()]),
            Err(Error::WeightSumViolation(_))
        ));
        assert!(matches!(
            mixture(&[1.0], &[p, q]),
            Err(Error::MixtureArity { .. })
        ));
    }

    #[test]
    fn mixture_permutation_invariant() {
        let mut rng = StdRng::seed_from_u64(13);
        let alphabet = Alphabet::new(3).unwrap();
        let comps: Vec<Distribution> =
            (0..4).map(|_| random_distribution(alphabet, &mut rng)).collect();
        let weights = [0.1, 0.2, 0.3, 0.4];
        let m1 = mixture(&weights, &comps).unwrap();
        let perm = [2usize, 0, 3, 1];
        let wp: Vec<f64> = perm.iter().map(|&i| weights[i]).collect();
        let cp: Vec<Distribution> = perm.iter().map(|&i| comps[i].clone()).collect();
        let m2 = mixture(&wp, &cp).unwrap();
        for (a, b) in m1.mass().iter().zip(m2.mass()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn construction_tolerance() {
        let alphabet = Alphabet::new(2).unwrap();
        // Within tolerance: renormalized.
        let d = Distribution::new(alphabet, vec![0.5, 0.5 + 5e-13]).unwrap();
        let sum: f64 = d.mass().iter().sum();
        assert_eq!(sum, 1.0);
        // Outside tolerance: rejected.
        assert!(matches!(
            Distribution::new(alphabet, vec![0.5, 0.6]),
            Err(Error::NotNormalized(_))
        ));
        assert!(matches!(
            Distribution::new(alphabet, vec![-0.1, 1.1]),
            Err(Error::NegativeMass { index: 0, .. })
        ));
    }

    #[test]
    fn strict_positivity_flag() {
        assert!(dist(&[0.5, 0.5]).is_strictly_positive());
        assert!(!dist(&[1.0, 0.0]).is_strictly_positive());
    }
}
