//! Candidate outlier sets and their enumeration.
//!
//! For a panel of `M` sequences the candidate outlier sets are all nonempty
//! subsets of `{1..M}` of size at most `T = ceil(M/2 - 1)`, ordered by size
//! and then lexicographically. The ordering is part of the contract: the
//! covariance matrix in [`crate::theory`] indexes rivals by it.

use std::fmt;

use crate::error::{Error, Result};

/// Default cap on `M` for full enumeration; the hypothesis count grows
/// exponentially in `T`.
pub const DEFAULT_MAX_M: usize = 16;

/// Maximum number of outliers for a panel of `m` sequences: `ceil(m/2 - 1)`.
pub fn max_outliers(m: usize) -> usize {
    (m.saturating_sub(1)) / 2
}

/// A candidate set of outlier indices, a nonempty subset of `{1..m}` of size
/// at most [`max_outliers`]`(m)`. Indices are 1-based and kept sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OutlierSet {
    members: Vec<usize>,
    m: usize,
}

impl OutlierSet {
    pub fn new(mut members: Vec<usize>, m: usize) -> Result<Self> {
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptyOutlierSet);
        }
        for &i in &members {
            if i == 0 || i > m {
                return Err(Error::IndexOutOfRange { index: i, m });
            }
        }
        let max = max_outliers(m);
        if members.len() > max {
            return Err(Error::TooManyOutliers {
                got: members.len(),
                max,
                m,
            });
        }
        Ok(Self { members, m })
    }

    /// Sorted 1-based member indices.
    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    /// The complementary index list `{1..m} \ self`, ascending.
    pub fn complement(&self) -> Vec<usize> {
        (1..=self.m).filter(|&i| !self.contains(i)).collect()
    }

    /// 1-based rank of `i` within the set: `j` when `i` is the j-th smallest
    /// member. This is the mapping that assigns anomalous distributions to
    /// outlier positions.
    pub fn rank_of(&self, i: usize) -> Result<usize> {
        match self.members.binary_search(&i) {
            Ok(pos) => Ok(pos + 1),
            Err(_) => Err(Error::IndexNotInSet(i)),
        }
    }
}

impl fmt::Display for OutlierSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, i) in self.members.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, "}}")
    }
}

/// All candidate outlier sets for a panel of `m` sequences, in canonical
/// order (ascending size, then lexicographic).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HypothesisSpace {
    m: usize,
    t: usize,
    sets: Vec<OutlierSet>,
}

impl HypothesisSpace {
    /// Enumerate with the [`DEFAULT_MAX_M`] guard.
    pub fn enumerate(m: usize) -> Result<Self> {
        Self::enumerate_guarded(m, DEFAULT_MAX_M)
    }

    /// Enumerate with an explicit cap on `m`.
    pub fn enumerate_guarded(m: usize, max_m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::MTooSmall(m));
        }
        if m > max_m {
            return Err(Error::MTooLarge(m, max_m));
        }
        let t = max_outliers(m);
        let mut sets = Vec::new();
        let mut current = Vec::new();
        for size in 1..=t {
            subsets_of_size(m, size, 1, &mut current, &mut sets);
        }
        Ok(Self { m, t, sets })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Maximum outlier-set size `T`.
    pub fn max_size(&self) -> usize {
        self.t
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn sets(&self) -> &[OutlierSet] {
        &self.sets
    }

    /// Position of `set` in canonical order.
    pub fn index_of(&self, set: &OutlierSet) -> Option<usize> {
        self.sets
            .binary_search_by(|s| {
                s.len()
                    .cmp(&set.len())
                    .then_with(|| s.members().cmp(set.members()))
            })
            .ok()
    }

    /// Every candidate set except `b`, in canonical order.
    pub fn rivals(&self, b: &OutlierSet) -> Result<Vec<&OutlierSet>> {
        if self.index_of(b).is_none() {
            return Err(Error::SetNotInSpace(b.clone()));
        }
        Ok(self.sets.iter().filter(|s| *s != b).collect())
    }
}

fn subsets_of_size(
    m: usize,
    size: usize,
    from: usize,
    current: &mut Vec<usize>,
    out: &mut Vec<OutlierSet>,
) {
    if current.len() == size {
        out.push(OutlierSet {
            members: current.clone(),
            m,
        });
        return;
    }
    let remaining = size - current.len();
    for i in from..=(m + 1 - remaining) {
        current.push(i);
        subsets_of_size(m, size, i + 1, current, out);
        current.pop();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(members: &[usize], m: usize) -> OutlierSet {
        OutlierSet::new(members.to_vec(), m).unwrap()
    }

    fn binomial(n: usize, k: usize) -> usize {
        if k > n {
            return 0;
        }
        let mut r = 1usize;
        for i in 0..k {
            r = r * (n - i) / (i + 1);
        }
        r
    }

    #[test]
    fn max_outliers_values() {
        assert_eq!(max_outliers(3), 1);
        assert_eq!(max_outliers(4), 1);
        assert_eq!(max_outliers(5), 2);
        assert_eq!(max_outliers(6), 2);
        assert_eq!(max_outliers(7), 3);
        assert_eq!(max_outliers(10), 4);
    }

    #[test]
    fn enumerate_small_panels() {
        let s = HypothesisSpace::enumerate(4).unwrap();
        assert_eq!(s.max_size(), 1);
        assert_eq!(s.len(), 4);
        let sets: Vec<&[usize]> = s.sets().iter().map(|b| b.members()).collect();
        assert_eq!(sets, vec![&[1][..], &[2], &[3], &[4]]);

        let s = HypothesisSpace::enumerate(5).unwrap();
        assert_eq!(s.max_size(), 2);
        assert_eq!(s.len(), 15);

        let s = HypothesisSpace::enumerate(3).unwrap();
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn enumerate_matches_closed_form() {
        for m in 3..=10 {
            let s = HypothesisSpace::enumerate(m).unwrap();
            let expected: usize = (1..=max_outliers(m)).map(|t| binomial(m, t)).sum();
            assert_eq!(s.len(), expected, "m = {m}");
        }
    }

    #[test]
    fn enumerate_guards() {
        assert!(matches!(HypothesisSpace::enumerate(2), Err(Error::MTooSmall(2))));
        assert!(matches!(
            HypothesisSpace::enumerate(17),
            Err(Error::MTooLarge(17, 16))
        ));
        assert!(HypothesisSpace::enumerate_guarded(17, 17).is_ok());
    }

    #[test]
    fn canonical_order_is_size_then_lex() {
        let s = HypothesisSpace::enumerate(5).unwrap();
        let sets = s.sets();
        for w in sets.windows(2) {
            let key = |b: &OutlierSet| (b.len(), b.members().to_vec());
            assert!(key(&w[0]) < key(&w[1]));
        }
        // Deterministic across runs.
        assert_eq!(s, HypothesisSpace::enumerate(5).unwrap());
    }

    #[test]
    fn complement_examples() {
        assert_eq!(set(&[2], 4).complement(), vec![1, 3, 4]);
        assert_eq!(set(&[2, 5], 5).complement(), vec![1, 3, 4]);
        assert_eq!(set(&[1], 3).complement(), vec![2, 3]);
    }

    #[test]
    fn rank_of_examples() {
        let b = set(&[2, 3, 6], 10);
        assert_eq!(b.rank_of(3).unwrap(), 2);
        assert_eq!(b.rank_of(2).unwrap(), 1);
        assert_eq!(b.rank_of(6).unwrap(), 3);
        assert!(matches!(b.rank_of(4), Err(Error::IndexNotInSet(4))));
        assert_eq!(set(&[7], 15).rank_of(7).unwrap(), 1);
    }

    #[test]
    fn rank_is_increasing_bijection() {
        let b = set(&[1, 4, 5], 10);
        let ranks: Vec<usize> = b.members().iter().map(|&i| b.rank_of(i).unwrap()).collect();
        assert_eq!(ranks, vec![1, 2, 3]);
    }

    #[test]
    fn rivals_examples() {
        let s = HypothesisSpace::enumerate(4).unwrap();
        let r = s.rivals(&set(&[1], 4)).unwrap();
        let members: Vec<&[usize]> = r.iter().map(|b| b.members()).collect();
        assert_eq!(members, vec![&[2][..], &[3], &[4]]);

        let s = HypothesisSpace::enumerate(5).unwrap();
        assert_eq!(s.rivals(&set(&[1, 2], 5)).unwrap().len(), 14);

        let s = HypothesisSpace::enumerate(3).unwrap();
        let r = s.rivals(&set(&[3], 3)).unwrap();
        let members: Vec<&[usize]> = r.iter().map(|b| b.members()).collect();
        assert_eq!(members, vec![&[1][..], &[2]]);

        let stranger = set(&[1, 2], 6);
        assert!(matches!(
            s.rivals(&stranger),
            Err(Error::SetNotInSpace(_))
        ));
    }

    #[test]
    fn construction_guards() {
        assert!(matches!(OutlierSet::new(vec![], 4), Err(Error::EmptyOutlierSet)));
        assert!(matches!(
            OutlierSet::new(vec![5], 4),
            Err(Error::IndexOutOfRange { index: 5, m: 4 })
        ));
        assert!(matches!(
            OutlierSet::new(vec![0], 4),
            Err(Error::IndexOutOfRange { index: 0, m: 4 })
        ));
        assert!(matches!(
            OutlierSet::new(vec![1, 2], 4),
            Err(Error::TooManyOutliers { got: 2, max: 1, m: 4 })
        ));
    }

    #[test]
    fn index_lookup_round_trips() {
        let s = HypothesisSpace::enumerate(6).unwrap();
        for (i, b) in s.sets().iter().enumerate() {
            assert_eq!(s.index_of(b), Some(i));
        }
    }
}
