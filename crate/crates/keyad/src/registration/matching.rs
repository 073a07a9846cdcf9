//! Nearest-neighbor correspondence search in FPFH feature space.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{FeatureKind, FeatureMatrix};

/// Source-to-target index pairs with unique source indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorrespondenceSet {
    pairs: Vec<(usize, usize)>,
}

impl CorrespondenceSet {
    pub fn new(pairs: Vec<(usize, usize)>, src_len: usize, dst_len: usize) -> Result<Self> {
        let mut seen = vec![false; src_len];
        for &(s, d) in &pairs {
            if s >= src_len || d >= dst_len {
                return Err(Error::invalid_argument(format!(
                    "correspondence ({s},{d}) out of range ({src_len},{dst_len})"
                )));
            }
            if seen[s] {
                return Err(Error::invalid_argument(format!(
                    "duplicate source index {s} in correspondences"
                )));
            }
            seen[s] = true;
        }
        Ok(CorrespondenceSet { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        acc += d * d;
    }
    acc
}

/// Index of the nearest row of `feats` to `query`, ties to the lowest index.
fn nearest_row(feats: &FeatureMatrix, query: &[f64]) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, row) in feats.rows().enumerate() {
        let d = dist2(query, row);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

/// For every source row, the nearest destination row in L2 feature
/// distance. With `mutual` set, keeps only pairs where the destination's
/// nearest source is the same row again.
pub fn match_features(
    src: &FeatureMatrix,
    dst: &FeatureMatrix,
    mutual: bool,
) -> Result<CorrespondenceSet> {
    if src.is_empty() || dst.is_empty() {
        return Err(Error::EmptyInput("match_features"));
    }
    if src.kind() != FeatureKind::Fpfh || dst.kind() != FeatureKind::Fpfh {
        return Err(Error::invalid_argument(
            "match_features expects FPFH feature matrices",
        ));
    }
    let forward: Vec<usize> = (0..src.len())
        .into_par_iter()
        .map(|i| nearest_row(dst, src.row(i)))
        .collect();
    let pairs: Vec<(usize, usize)> = if mutual {
        let backward: Vec<usize> = (0..dst.len())
            .into_par_iter()
            .map(|j| nearest_row(src, dst.row(j)))
            .collect();
        forward
            .iter()
            .enumerate()
            .filter(|&(i, &j)| backward[j] == i)
            .map(|(i, &j)| (i, j))
            .collect()
    } else {
        forward.iter().enumerate().map(|(i, &j)| (i, j)).collect()
    };
    CorrespondenceSet::new(pairs, src.len(), dst.len())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_fpfh(n: usize, seed: u64) -> FeatureMatrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..n * 33).map(|_| rng.random_range(0.0..10.0)).collect();
        FeatureMatrix::new(FeatureKind::Fpfh, data).unwrap()
    }

    #[test]
    fn identical_matrices_pair_identically() {
        let m = random_fpfh(20, 3);
        let c = match_features(&m, &m, false).unwrap();
        for (i, &(s, d)) in c.pairs().iter().enumerate() {
            assert_eq!((s, d), (i, i));
        }
    }

    #[test]
    fn permutation_is_recovered() {
        let m = random_fpfh(30, 4);
        let mut perm: Vec<usize> = (0..30).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        perm.shuffle(&mut rng);
        let permuted = m.select(&perm);
        // permuted row j equals m row perm[j], so matching m -> permuted
        // must send perm[j] to j.
        let c = match_features(&m, &permuted, false).unwrap();
        for &(s, d) in c.pairs() {
            assert_eq!(perm[d], s);
        }
        assert_eq!(c.len(), 30);
    }

    #[test]
    fn matches_equal_brute_force_argmin() {
        let src = random_fpfh(50, 11);
        let dst = random_fpfh(50, 12);
        let c = match_features(&src, &dst, false).unwrap();
        for &(s, d) in c.pairs() {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for j in 0..dst.len() {
                let dd = dist2(src.row(s), dst.row(j));
                if dd < best_d {
                    best_d = dd;
                    best = j;
                }
            }
            assert_eq!(d, best);
        }
    }

    #[test]
    fn mutual_filter_is_a_subset_and_symmetric() {
        let src = random_fpfh(40, 21);
        let dst = random_fpfh(35, 22);
        let all = match_features(&src, &dst, false).unwrap();
        let mutual = match_features(&src, &dst, true).unwrap();
        assert!(mutual.len() <= all.len());
        for &(s, d) in mutual.pairs() {
            assert_eq!(nearest_row(&dst, src.row(s)), d);
            assert_eq!(nearest_row(&src, dst.row(d)), s);
        }
    }

    #[test]
    fn empty_input_is_rejected() {
        let m = random_fpfh(5, 0);
        let empty = FeatureMatrix::new(FeatureKind::Fpfh, Vec::new()).unwrap();
        assert!(matches!(
            match_features(&m, &empty, false),
            Err(Error::EmptyInput(_))
        ));
        assert!(matches!(
            match_features(&empty, &m, false),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn raw_kind_is_rejected() {
        let raw = FeatureMatrix::new(FeatureKind::Raw, vec![0.0; 9]).unwrap();
        assert!(match_features(&raw, &raw, false).is_err());
    }
}
