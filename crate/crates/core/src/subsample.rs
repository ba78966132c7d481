//! Outlier-robust subsampling: a k-nearest-neighbour density filter followed
//! by greedy maxmin (farthest point) selection.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::util::quantile;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubsampleParams {
    pub k: usize,
    pub q: f64,
    pub target_size: usize,
}

impl Default for SubsampleParams {
    fn default() -> Self {
        Self {
            k: 10,
            q: 0.9,
            target_size: 150,
        }
    }
}

impl SubsampleParams {
    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(Error::param("k must be at least 1"));
        }
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::param("q must lie in (0, 1)"));
        }
        if self.target_size < 1 {
            return Err(Error::param("target_size must be at least 1"));
        }
        Ok(())
    }
}

/// Mean distance from each point to its `k` nearest other points.
pub fn knn_mean_distances(dist: &DistanceMatrix, k: usize) -> Vec<f64> {
    let n = dist.len();
    let mut scratch = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            scratch.clear();
            scratch.extend((0..n).filter(|&j| j != i).map(|j| dist.get(i, j)));
            scratch.select_nth_unstable_by(k - 1, f64::total_cmp);
            scratch[..k].iter().sum::<f64>() / k as f64
        })
        .collect()
}

/// Keeps points whose mean k-NN distance lies below the `q`-quantile of all
/// such means. When ties at the threshold would remove more than
/// `ceil((1 - q) n)` points, points at the threshold are kept as well.
pub fn knn_filter(dist: &DistanceMatrix, k: usize, q: f64) -> Result<Vec<usize>> {
    let n = dist.len();
    if k == 0 || k >= n {
        return Err(Error::param(format!("k = {k} needs 1 <= k < n = {n}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::param("q must lie in (0, 1)"));
    }
    let means = knn_mean_distances(dist, k);
    let tau = quantile(&means, q).expect("n > k >= 1");
    let strict: Vec<usize> = (0..n).filter(|&i| means[i] < tau).collect();
    let max_removed = ((1.0 - q) * n as f64).ceil() as usize;
    if n - strict.len() <= max_removed && !strict.is_empty() {
        Ok(strict)
    } else {
        Ok((0..n).filter(|&i| means[i] <= tau).collect())
    }
}

/// Greedy maxmin selection seeded at `first`; each next pick maximises the
/// distance to the chosen set, ties to the lowest index.
pub fn maxmin_from(dist: &DistanceMatrix, kept: &[usize], target_size: usize, first: usize) -> Result<Vec<usize>> {
    if target_size > kept.len() {
        return Err(Error::param(format!(
            "target_size {target_size} exceeds {} candidates",
            kept.len()
        )));
    }
    if target_size == 0 {
        return Ok(Vec::new());
    }
    let mut pool: Vec<usize> = kept.to_vec();
    pool.sort_unstable();
    pool.dedup();
    let mut gap: Vec<f64> = pool.iter().map(|&i| dist.get(first, i)).collect();
    let mut taken = vec![false; pool.len()];
    if let Ok(pos) = pool.binary_search(&first) {
        taken[pos] = true;
    }
    let mut chosen = vec![first];
    while chosen.len() < target_size {
        let mut best: Option<usize> = None;
        for (pos, &g) in gap.iter().enumerate() {
            if taken[pos] {
                continue;
            }
            if best.is_none_or(|b| g > gap[b]) {
                best = Some(pos);
            }
        }
        let Some(pos) = best else { break };
        taken[pos] = true;
        let pick = pool[pos];
        chosen.push(pick);
        for (p, g) in gap.iter_mut().enumerate() {
            *g = g.min(dist.get(pick, pool[p]));
        }
    }
    Ok(chosen)
}

/// Maxmin subsample with a seed-chosen first point.
pub fn maxmin_subsample(dist: &DistanceMatrix, kept: &[usize], target_size: usize, seed: u64) -> Result<Vec<usize>> {
    if target_size > kept.len() {
        return Err(Error::param(format!(
            "target_size {target_size} exceeds {} candidates",
            kept.len()
        )));
    }
    if kept.is_empty() {
        return Ok(Vec::new());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let first = kept[rng.random_range(0..kept.len())];
    maxmin_from(dist, kept, target_size, first)
}

/// Largest distance from a candidate to its nearest chosen point.
pub fn covering_radius(dist: &DistanceMatrix, kept: &[usize], sample: &[usize]) -> f64 {
    kept.iter()
        .map(|&i| sample.iter().map(|&s| dist.get(i, s)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(xs: &[f64]) -> DistanceMatrix {
        DistanceMatrix::from_fn(xs.len(), |i, j| (xs[i] - xs[j]).abs())
    }

    #[test]
    fn far_point_is_filtered() {
        let d = line(&[0.0, 0.1, 0.2, 100.0]);
        let means = knn_mean_distances(&d, 1);
        assert!((means[3] - 99.8).abs() < 1e-9);
        assert_eq!(knn_filter(&d, 1, 0.75).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn identical_points_all_survive() {
        let d = DistanceMatrix::zeros(6);
        assert_eq!(knn_filter(&d, 2, 0.5).unwrap().len(), 6);
    }

    #[test]
    fn high_quantile_keeps_uniform_cloud() {
        let d = line(&(0..20).map(|i| i as f64).collect::<Vec<_>>());
        let kept = knn_filter(&d, 1, 0.99).unwrap();
        assert_eq!(kept.len(), 20);
        assert!(knn_filter(&d, 20, 0.5).is_err());
    }

    #[test]
    fn maxmin_goes_to_the_far_end() {
        let d = line(&[0.0, 1.0, 10.0]);
        assert_eq!(maxmin_from(&d, &[0, 1, 2], 2, 0).unwrap(), vec![0, 2]);
        let all = maxmin_from(&d, &[0, 1, 2], 3, 0).unwrap();
        assert_eq!(all, vec![0, 2, 1]);
        assert!(maxmin_subsample(&d, &[0, 1], 3, 0).is_err());
    }

    #[test]
    fn maxmin_is_seed_deterministic() {
        let d = line(&(0..30).map(|i| (i * i) as f64 * 0.1).collect::<Vec<_>>());
        let kept: Vec<usize> = (0..30).collect();
        assert_eq!(
            maxmin_subsample(&d, &kept, 8, 4).unwrap(),
            maxmin_subsample(&d, &kept, 8, 4).unwrap()
        );
    }

    proptest! {
        #[test]
        fn filter_removes_bounded_share(xs in prop::collection::vec(0.0f64..50.0, 5..40), q in 0.05f64..0.95) {
            let d = line(&xs);
            let kept = knn_filter(&d, 2, q).unwrap();
            let removed = xs.len() - kept.len();
            prop_assert!(removed <= ((1.0 - q) * xs.len() as f64).ceil() as usize);
            prop_assert!(!kept.is_empty());
        }

        #[test]
        fn covering_radius_shrinks(xs in prop::collection::vec(0.0f64..50.0, 6..30)) {
            let d = line(&xs);
            let kept: Vec<usize> = (0..xs.len()).collect();
            let full = maxmin_from(&d, &kept, xs.len(), 0).unwrap();
            let mut prev = f64::INFINITY;
            for m in 1..=xs.len() {
                let r = covering_radius(&d, &kept, &full[..m]);
                prop_assert!(r <= prev);
                prev = r;
            }
        }
    }
}
