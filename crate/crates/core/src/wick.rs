//! Pair partitions, crossings and the q-Wick formula for vacuum moments of
//! q-Gaussian words.

use std::fmt;

/// Largest `2k` accepted by the partition enumerators (15!! = 2 027 025 partitions).
pub const MAX_POINTS: usize = 16;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum WickError {
    #[error("pair partitions need an even number of points, got {0}")]
    OddPoints(usize),
    #[error("{0} points exceeds the enumeration budget of {MAX_POINTS}")]
    Budget(usize),
    #[error("not a permutation of 0..{0}")]
    NotPermutation(usize),
    #[error("vector {index} has dimension {found}, expected {expected}")]
    Dimension { index: usize, expected: usize, found: usize },
    #[error("invalid pair partition: {0}")]
    InvalidPartition(String),
}

/// A pairing of `{0, …, 2k−1}` stored as pairs `(i, j)` with `i < j`, sorted by `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PairPartition {
    pairs: Vec<(usize, usize)>,
}

impl PairPartition {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self, WickError> {
        let n = 2 * pairs.len();
        let mut seen = vec![false; n];
        let mut normalized = Vec::with_capacity(pairs.len());
        for (a, b) in pairs {
            let (i, j) = if a < b { (a, b) } else { (b, a) };
            if i == j || j >= n || seen[i] || seen[j] {
                return Err(WickError::InvalidPartition(format!("bad pair ({a}, {b})")));
            }
            seen[i] = true;
            seen[j] = true;
            normalized.push((i, j));
        }
        normalized.sort_unstable();
        Ok(Self { pairs: normalized })
    }

    /// Builds a partition from 1-based pairs, as written in the literature.
    pub fn from_one_based(pairs: &[(usize, usize)]) -> Result<Self, WickError> {
        if pairs.iter().any(|&(a, b)| a == 0 || b == 0) {
            return Err(WickError::InvalidPartition("index 0 in a 1-based partition".into()));
        }
        Self::new(pairs.iter().map(|&(a, b)| (a - 1, b - 1)).collect())
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn points(&self) -> usize {
        2 * self.pairs.len()
    }
}

impl fmt::Display for PairPartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (k, (i, j)) in self.pairs.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "({},{})", i + 1, j + 1)?;
        }
        f.write_str("}")
    }
}

fn check_points(two_k: usize) -> Result<(), WickError> {
    if two_k % 2 == 1 {
        return Err(WickError::OddPoints(two_k));
    }
    if two_k > MAX_POINTS {
        return Err(WickError::Budget(two_k));
    }
    Ok(())
}

/// `(2k−1)!!`, the number of pair partitions of `2k` points.
pub fn double_factorial_count(two_k: usize) -> u64 {
    (1..two_k as u64).step_by(2).product()
}

/// All pair partitions of `{0, …, two_k−1}`, in canonical order: the smallest unpaired
/// point is matched with each larger unpaired point in increasing order, recursively.
pub fn enumerate_pair_partitions(two_k: usize) -> Result<Vec<PairPartition>, WickError> {
    check_points(two_k)?;
    let mut out = Vec::with_capacity(double_factorial_count(two_k) as usize);
    let mut used = vec![false; two_k];
    let mut current = Vec::with_capacity(two_k / 2);
    fn rec(used: &mut [bool], current: &mut Vec<(usize, usize)>, out: &mut Vec<PairPartition>) {
        let Some(i) = used.iter().position(|u| !u) else {
            out.push(PairPartition { pairs: current.clone() });
            return;
        };
        used[i] = true;
        for j in i + 1..used.len() {
            if used[j] {
                continue;
            }
            used[j] = true;
            current.push((i, j));
            rec(used, current, out);
            current.pop();
            used[j] = false;
        }
        used[i] = false;
    }
    rec(&mut used, &mut current, &mut out);
    Ok(out)
}

/// Number of pairs of blocks `(i,j)`, `(k,l)` with `i < k < j < l`.
pub fn crossings(v: &PairPartition) -> usize {
    let p = &v.pairs;
    let mut count = 0;
    for (a, &(i, j)) in p.iter().enumerate() {
        for &(k, l) in &p[a + 1..] {
            if (i < k && k < j && j < l) || (k < i && i < l && l < j) {
                count += 1;
            }
        }
    }
    count
}

/// Number of inversions of a permutation of `0..n` given in one-line notation.
pub fn inversions(sigma: &[usize]) -> Result<usize, WickError> {
    let n = sigma.len();
    let mut seen = vec![false; n];
    for &s in sigma {
        if s >= n || seen[s] {
            return Err(WickError::NotPermutation(n));
        }
        seen[s] = true;
    }
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            if sigma[i] > sigma[j] {
                count += 1;
            }
        }
    }
    Ok(count)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Vacuum moment `τ(s_q(f_1)⋯s_q(f_m))` through the q-Wick formula
/// `Σ_V q^{c(V)} Π_{(i,j)∈V} ⟨f_i, f_j⟩`; odd words have zero moment.
///
/// The sum walks the same canonical recursion as [`enumerate_pair_partitions`] but
/// accumulates crossings and inner products on the fly.
pub fn wick_trace(q: f64, vectors: &[Vec<f64>]) -> Result<f64, WickError> {
    let m = vectors.len();
    if let Some(first) = vectors.first() {
        let d = first.len();
        if let Some((index, v)) = vectors.iter().enumerate().find(|(_, v)| v.len() != d) {
            return Err(WickError::Dimension { index, expected: d, found: v.len() });
        }
    }
    if m % 2 == 1 {
        return Ok(0.0);
    }
    check_points(m)?;
    let gram: Vec<Vec<f64>> = vectors
        .iter()
        .map(|a| vectors.iter().map(|b| dot(a, b)).collect())
        .collect();

    // `partner[p]` is the closing point of the block opened at `p`, for blocks placed so far.
    fn rec(
        q: f64,
        gram: &[Vec<f64>],
        partner: &mut [Option<usize>],
        used: &mut [bool],
        weight: f64,
    ) -> f64 {
        let Some(i) = used.iter().position(|u| !u) else {
            return weight;
        };
        used[i] = true;
        let mut total = 0.0;
        for j in i + 1..used.len() {
            if used[j] || gram[i][j] == 0.0 {
                continue;
            }
            // Earlier blocks (a, b) have a < i; they cross (i, j) iff i < b < j.
            let c = partner[..i]
                .iter()
                .filter(|b| matches!(b, Some(b) if i < *b && *b < j))
                .count();
            used[j] = true;
            partner[i] = Some(j);
            total += rec(q, gram, partner, used, weight * gram[i][j] * q.powi(c as i32));
            partner[i] = None;
            used[j] = false;
        }
        used[i] = false;
        total
    }
    let mut partner = vec![None; m];
    let mut used = vec![false; m];
    Ok(rec(q, &gram, &mut partner, &mut used, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_pair_partitions(0).unwrap().len(), 1);
        let two = enumerate_pair_partitions(2).unwrap();
        assert_eq!(two, vec![PairPartition::from_one_based(&[(1, 2)]).unwrap()]);
        assert_eq!(enumerate_pair_partitions(4).unwrap().len(), 3);
        assert_eq!(enumerate_pair_partitions(8).unwrap().len(), 105);
        for two_k in (0..=10).step_by(2) {
            let parts = enumerate_pair_partitions(two_k).unwrap();
            assert_eq!(parts.len() as u64, double_factorial_count(two_k));
            let distinct: std::collections::HashSet<_> = parts.iter().collect();
            assert_eq!(distinct.len(), parts.len());
        }
    }

    #[test]
    fn partition_errors() {
        assert_eq!(enumerate_pair_partitions(5), Err(WickError::OddPoints(5)));
        assert_eq!(enumerate_pair_partitions(18), Err(WickError::Budget(18)));
        assert!(PairPartition::from_one_based(&[(1, 2), (2, 3)]).is_err());
    }

    #[test]
    fn crossing_examples() {
        let c = |p: &[(usize, usize)]| crossings(&PairPartition::from_one_based(p).unwrap());
        assert_eq!(c(&[(1, 2), (3, 4)]), 0);
        assert_eq!(c(&[(1, 3), (2, 4)]), 1);
        assert_eq!(c(&[(1, 4), (2, 5), (3, 6)]), 3);
        assert_eq!(c(&[(1, 4), (2, 3)]), 0);
    }

    #[test]
    fn crossing_bound() {
        for two_k in [2, 4, 6, 8] {
            let k = two_k / 2;
            for v in enumerate_pair_partitions(two_k).unwrap() {
                assert!(crossings(&v) <= k * (k - 1) / 2);
            }
        }
    }

    #[test]
    fn inversion_examples() {
        assert_eq!(inversions(&[0, 1, 2, 3]).unwrap(), 0);
        assert_eq!(inversions(&[1, 0]).unwrap(), 1);
        assert_eq!(inversions(&[3, 2, 1, 0]).unwrap(), 6);
        assert_eq!(inversions(&[0, 0]), Err(WickError::NotPermutation(2)));
        assert_eq!(inversions(&[0, 5]), Err(WickError::NotPermutation(2)));
    }

    #[test]
    fn wick_examples() {
        let e = vec![1.0, 0.0];
        let f = vec![0.3, 0.7];
        for q in [-1.0, -0.3, 0.0, 0.5, 1.0] {
            assert!((wick_trace(q, &[e.clone(), f.clone()]).unwrap() - 0.3).abs() < 1e-15);
            assert_eq!(wick_trace(q, &[e.clone(), e.clone(), e.clone()]).unwrap(), 0.0);
            let four = wick_trace(q, &vec![e.clone(); 4]).unwrap();
            assert!((four - (2.0 + q)).abs() < 1e-14);
        }
        assert!((wick_trace(1.0, &vec![e.clone(); 4]).unwrap() - 3.0).abs() < 1e-14);
        for len in [2, 4, 6, 8] {
            assert!((wick_trace(-1.0, &vec![e.clone(); len]).unwrap() - 1.0).abs() < 1e-12);
        }
        assert_eq!(wick_trace(0.0, &[]).unwrap(), 1.0);
    }

    #[test]
    fn wick_errors() {
        let err = wick_trace(0.0, &[vec![1.0], vec![1.0, 0.0]]).unwrap_err();
        assert_eq!(err, WickError::Dimension { index: 1, expected: 1, found: 2 });
        assert_eq!(wick_trace(0.0, &vec![vec![1.0]; 18]), Err(WickError::Budget(18)));
    }

    /// The on-the-fly recursion agrees with summing over the explicit partition list.
    #[test]
    fn recursion_matches_enumeration() {
        let vs: Vec<Vec<f64>> = (0..6).map(|k| vec![(k as f64).sin(), (k as f64 * 0.7).cos(), 0.2]).collect();
        for q in [-0.8f64, 0.1, 0.9] {
            let explicit: f64 = enumerate_pair_partitions(6)
                .unwrap()
                .iter()
                .map(|v| {
                    q.powi(crossings(v) as i32)
                        * v.pairs().iter().map(|&(i, j)| dot(&vs[i], &vs[j])).product::<f64>()
                })
                .sum();
            assert!((wick_trace(q, &vs).unwrap() - explicit).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn reversal_symmetry(q in -1.0f64..=1.0, raw in prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), 0..=8)) {
            let rev: Vec<Vec<f64>> = raw.iter().rev().cloned().collect();
            let a = wick_trace(q, &raw).unwrap();
            let b = wick_trace(q, &rev).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }
}
