//! Bottleneck distance between persistence diagrams and Hausdorff distance
//! between point sets.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::persistence::{Feature, PersistenceDiagram};

/// One matched pair; `None` stands for the diagonal.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedPair {
    pub a: Option<Feature>,
    pub b: Option<Feature>,
    #[serde(with = "crate::util::real")]
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchingResult {
    #[serde(with = "crate::util::real")]
    pub distance: f64,
    /// Diagonal-to-diagonal pairs are omitted.
    pub matching: Vec<MatchedPair>,
}

fn linf(p: &Feature, q: &Feature) -> f64 {
    (p.birth - q.birth).abs().max((p.death - q.death).abs())
}

/// L∞ distance from a point to its diagonal projection.
pub fn diagonal_gap(p: &Feature) -> f64 {
    (p.death - p.birth) / 2.0
}

/// Diagonal-augmented bipartite problem between two finite diagrams.
struct Augmented<'a> {
    a: &'a [Feature],
    b: &'a [Feature],
}

impl Augmented<'_> {
    fn size(&self) -> usize {
        self.a.len() + self.b.len()
    }

    /// Left nodes: `a` then diagonal copies of `b`. Right nodes: `b` then
    /// diagonal copies of `a`.
    fn cost(&self, l: usize, r: usize) -> f64 {
        let (n, m) = (self.a.len(), self.b.len());
        match (l < n, r < m) {
            (true, true) => linf(&self.a[l], &self.b[r]),
            (true, false) if r - m == l => diagonal_gap(&self.a[l]),
            (false, true) if l - n == r => diagonal_gap(&self.b[r]),
            (false, false) => 0.0,
            _ => f64::INFINITY,
        }
    }

    /// Kuhn's augmenting paths on the edges of cost at most `threshold`;
    /// the right partner of every left node when a perfect matching exists.
    fn perfect_matching(&self, threshold: f64) -> Option<Vec<usize>> {
        let size = self.size();
        let adj: Vec<Vec<usize>> = (0..size)
            .map(|l| (0..size).filter(|&r| self.cost(l, r) <= threshold).collect())
            .collect();
        let mut right_of = vec![usize::MAX; size];
        let mut left_of = vec![usize::MAX; size];
        for l in 0..size {
            let mut seen = vec![false; size];
            if !augment(l, &adj, &mut seen, &mut left_of) {
                return None;
            }
        }
        for (r, &l) in left_of.iter().enumerate() {
            right_of[l] = r;
        }
        Some(right_of)
    }
}

fn augment(l: usize, adj: &[Vec<usize>], seen: &mut [bool], left_of: &mut [usize]) -> bool {
    for &r in &adj[l] {
        if seen[r] {
            continue;
        }
        seen[r] = true;
        if left_of[r] == usize::MAX || augment(left_of[r], adj, seen, left_of) {
            left_of[r] = l;
            return true;
        }
    }
    false
}

/// Exact bottleneck distance between the `dim` parts of two diagrams.
/// Essential features are matched among themselves by sorted birth; a
/// different number of them gives an infinite distance.
pub fn bottleneck_distance(a: &PersistenceDiagram, b: &PersistenceDiagram, dim: usize) -> MatchingResult {
    let split = |d: &PersistenceDiagram| {
        let (ess, fin): (Vec<Feature>, Vec<Feature>) = d.in_dim(dim).copied().partition(Feature::is_essential);
        (ess, fin)
    };
    let (mut ess_a, fin_a) = split(a);
    let (mut ess_b, fin_b) = split(b);
    if ess_a.len() != ess_b.len() {
        return MatchingResult { distance: f64::INFINITY, matching: Vec::new() };
    }
    ess_a.sort_by(|p, q| p.birth.total_cmp(&q.birth));
    ess_b.sort_by(|p, q| p.birth.total_cmp(&q.birth));
    let mut matching: Vec<MatchedPair> = ess_a
        .iter()
        .zip(&ess_b)
        .map(|(p, q)| MatchedPair { a: Some(*p), b: Some(*q), cost: (p.birth - q.birth).abs() })
        .collect();
    let essential_cost = matching.iter().map(|m| m.cost).fold(0.0, f64::max);

    let g = Augmented { a: &fin_a, b: &fin_b };
    let size = g.size();
    let mut candidates: Vec<f64> = vec![0.0];
    for l in 0..size {
        for r in 0..size {
            let c = g.cost(l, r);
            if c.is_finite() {
                candidates.push(c);
            }
        }
    }
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();
    // the largest candidate always admits the all-diagonal matching
    let (mut lo, mut hi) = (0, candidates.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if g.perfect_matching(candidates[mid]).is_some() {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    let right_of = g.perfect_matching(candidates[lo]).expect("feasible threshold");
    let (n, m) = (fin_a.len(), fin_b.len());
    for (l, &r) in right_of.iter().enumerate() {
        if l >= n && r >= m {
            continue;
        }
        matching.push(MatchedPair {
            a: (l < n).then(|| fin_a[l]),
            b: (r < m).then(|| fin_b[r]),
            cost: g.cost(l, r),
        });
    }
    MatchingResult { distance: candidates[lo].max(essential_cost), matching }
}

/// Symmetric Hausdorff distance under an arbitrary metric.
pub fn hausdorff_distance<P, F>(x: &[P], y: &[P], metric: F) -> Result<f64>
where
    F: Fn(&P, &P) -> f64,
{
    if x.is_empty() || y.is_empty() {
        return Err(Error::Empty("point set"));
    }
    let directed = |from: &[P], to: &[P]| {
        from.iter()
            .map(|p| to.iter().map(|q| metric(p, q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    Ok(directed(x, y).max(directed(y, x)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pd(points: &[(f64, f64)]) -> PersistenceDiagram {
        PersistenceDiagram::new(points.iter().map(|&(birth, death)| Feature { dim: 1, birth, death }).collect())
    }

    #[test]
    fn lone_point_goes_to_the_diagonal() {
        let r = bottleneck_distance(&pd(&[(0.0, 1.0)]), &pd(&[]), 1);
        assert_eq!(r.distance, 0.5);
        assert_eq!(r.matching.len(), 1);
        assert!(r.matching[0].b.is_none());
    }

    #[test]
    fn direct_match_beats_double_diagonal() {
        let r = bottleneck_distance(&pd(&[(0.0, 2.0)]), &pd(&[(0.0, 1.0)]), 1);
        assert_eq!(r.distance, 1.0);
    }

    #[test]
    fn identical_diagrams_are_at_zero() {
        let a = pd(&[(0.0, 1.0), (0.5, 3.0), (1.0, 1.2)]);
        let r = bottleneck_distance(&a, &a, 1);
        assert_eq!(r.distance, 0.0);
        assert!(r.matching.iter().all(|m| m.a == m.b));
    }

    #[test]
    fn essential_mismatch_is_infinite() {
        let a = PersistenceDiagram::new(vec![Feature { dim: 0, birth: 0.0, death: f64::INFINITY }]);
        let r = bottleneck_distance(&a, &PersistenceDiagram::default(), 0);
        assert!(r.distance.is_infinite());
        let b = PersistenceDiagram::new(vec![Feature { dim: 0, birth: 0.25, death: f64::INFINITY }]);
        assert_eq!(bottleneck_distance(&a, &b, 0).distance, 0.25);
    }

    #[test]
    fn other_dimensions_are_ignored() {
        let mut a = pd(&[(0.0, 1.0)]);
        a.features.push(Feature { dim: 0, birth: 0.0, death: 9.0 });
        assert_eq!(bottleneck_distance(&a, &pd(&[(0.0, 1.0)]), 1).distance, 0.0);
    }

    #[test]
    fn hausdorff_on_a_line() {
        let d = |a: &f64, b: &f64| (a - b).abs();
        assert_eq!(hausdorff_distance(&[0.0], &[0.0, 5.0], d).unwrap(), 5.0);
        assert_eq!(hausdorff_distance(&[1.0, 2.0], &[2.0, 1.0], d).unwrap(), 0.0);
        assert!(hausdorff_distance(&[], &[1.0], d).is_err());
    }
}
