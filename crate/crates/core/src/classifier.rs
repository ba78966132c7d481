//! Separating persistent features from noise with a quantile-normalised
//! threshold, plus training and evaluation metrics.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagram_metrics::bottleneck_distance;
use crate::error::{Error, Result};
use crate::persistence::{Feature, PersistenceDiagram};
use crate::util::quantile;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    pub q: f64,
    pub delta: f64,
    pub tau: f64,
    /// Sigmoid sharpness, used only while training.
    pub alpha: f64,
}

impl ClassifierParams {
    pub fn new(q: f64, delta: f64, tau: f64, alpha: f64) -> Result<Self> {
        let p = Self { q, delta, tau, alpha };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q > 0.0 && self.q < 1.0) {
            return Err(Error::param("q must lie in (0, 1)"));
        }
        if !(self.delta >= 0.0) || !self.delta.is_finite() {
            return Err(Error::param("delta must be finite and non-negative"));
        }
        if !(self.tau > 0.0) || !(self.alpha > 0.0) {
            return Err(Error::param("tau and alpha must be positive"));
        }
        Ok(())
    }

    /// Untrained defaults: components use tau = 25, holes tau = 30.
    pub fn preset(dim: usize) -> Self {
        Self {
            q: 0.5,
            delta: 0.7,
            tau: if dim == 0 { 25.0 } else { 30.0 },
            alpha: 20.0,
        }
    }
}

/// Lengths of the finite persistence intervals of one dimension.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IntervalSet {
    pub lengths: Vec<f64>,
}

impl IntervalSet {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.iter().any(|l| !(*l >= 0.0) || !l.is_finite()) {
            return Err(Error::param("interval lengths must be finite and non-negative"));
        }
        Ok(Self { lengths })
    }

    /// Finite features of `dim`, in diagram order.
    pub fn from_diagram(pd: &PersistenceDiagram, dim: usize) -> Self {
        Self { lengths: pd.finite_lengths(dim) }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { lengths: self.lengths.iter().map(|l| l * c).collect() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationOutcome {
    pub beta_hat: usize,
    pub signal_indices: Vec<usize>,
    pub noise_indices: Vec<usize>,
    #[serde(with = "crate::util::real::vec")]
    pub normalized_scores: Vec<f64>,
}

impl ClassificationOutcome {
    /// Ground-truth style split: the `k` longest intervals are signal.
    pub fn top_k(intervals: &IntervalSet, k: usize) -> Self {
        let mut order: Vec<usize> = (0..intervals.lengths.len()).collect();
        order.sort_by(|&a, &b| intervals.lengths[b].total_cmp(&intervals.lengths[a]).then(a.cmp(&b)));
        let mut signal: Vec<usize> = order.iter().take(k).copied().collect();
        let mut noise: Vec<usize> = order.iter().skip(k).copied().collect();
        signal.sort_unstable();
        noise.sort_unstable();
        Self {
            beta_hat: signal.len(),
            signal_indices: signal,
            noise_indices: noise,
            normalized_scores: Vec::new(),
        }
    }
}

fn normalizer(lengths: &[f64], q: f64, delta: f64) -> f64 {
    quantile(lengths, q).unwrap_or(0.0) + delta
}

fn score(r: f64, norm: f64) -> f64 {
    if norm > 0.0 {
        r / norm
    } else if r > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

/// A feature is signal when `r / (r_q + delta) > tau`.
pub fn estimate_betti(intervals: &IntervalSet, params: &ClassifierParams) -> ClassificationOutcome {
    let norm = normalizer(&intervals.lengths, params.q, params.delta);
    let scores: Vec<f64> = intervals.lengths.iter().map(|&r| score(r, norm)).collect();
    let (signal, noise): (Vec<usize>, Vec<usize>) = (0..scores.len()).partition(|&k| scores[k] > params.tau);
    ClassificationOutcome {
        beta_hat: signal.len(),
        signal_indices: signal,
        noise_indices: noise,
        normalized_scores: scores,
    }
}

/// Betti estimate for a whole diagram: essential classes always count.
pub fn estimate_diagram_betti(pd: &PersistenceDiagram, dim: usize, params: &ClassifierParams) -> (usize, ClassificationOutcome) {
    let outcome = estimate_betti(&IntervalSet::from_diagram(pd, dim), params);
    (pd.essential_count(dim) + outcome.beta_hat, outcome)
}

/// Mean absolute deviation of the per-run estimates from `truth`.
pub fn betti_error(estimates: &[usize], truth: usize) -> f64 {
    if estimates.is_empty() {
        return 0.0;
    }
    estimates.iter().map(|&b| b.abs_diff(truth) as f64).sum::<f64>() / estimates.len() as f64
}

/// One training run: finite intervals, essential classes counted
/// separately, and the true Betti number.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub intervals: IntervalSet,
    pub essential: usize,
    pub truth: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParameterGrid {
    pub qs: Vec<f64>,
    pub deltas: Vec<f64>,
    pub taus: Vec<f64>,
}

impl Default for ParameterGrid {
    fn default() -> Self {
        Self {
            qs: (3..=9).map(|k| k as f64 / 10.0).collect(),
            deltas: (0..=10).map(|k| k as f64 / 10.0).collect(),
            taus: (1..=50).map(f64::from).collect(),
        }
    }
}

impl ParameterGrid {
    pub fn len(&self) -> usize {
        self.qs.len() * self.deltas.len() * self.taus.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingResult {
    pub params: ClassifierParams,
    pub smoothed_error: f64,
    pub hard_error: f64,
}

fn sigmoid(alpha: f64, x: f64) -> f64 {
    1.0 / (1.0 + (-alpha * x).exp())
}

/// Smoothed and hard mean errors of one parameter point.
pub fn training_errors(samples: &[TrainingSample], params: &ClassifierParams) -> (f64, f64) {
    let mut smooth = 0.0;
    let mut hard = 0.0;
    for s in samples {
        let norm = normalizer(&s.intervals.lengths, params.q, params.delta);
        let mut soft = s.essential as f64;
        let mut count = s.essential;
        for &r in &s.intervals.lengths {
            let x = score(r, norm) - params.tau;
            soft += sigmoid(params.alpha, x);
            count += usize::from(x > 0.0);
        }
        smooth += (soft - s.truth as f64).abs();
        hard += count.abs_diff(s.truth) as f64;
    }
    let n = samples.len() as f64;
    (smooth / n, hard / n)
}

/// Brute-force search for the grid point with the smallest smoothed error;
/// ties go to the first point in `(q, delta, tau)` order.
pub fn train(samples: &[TrainingSample], grid: &ParameterGrid, alpha: f64) -> Result<TrainingResult> {
    if grid.is_empty() {
        return Err(Error::param("empty parameter grid"));
    }
    if samples.len() < 2 {
        return Err(Error::param("training needs at least two runs"));
    }
    if !(alpha > 0.0) {
        return Err(Error::param("alpha must be positive"));
    }
    let points: Vec<ClassifierParams> = grid
        .qs
        .iter()
        .flat_map(|&q| {
            grid.deltas.iter().flat_map(move |&delta| {
                grid.taus.iter().map(move |&tau| ClassifierParams { q, delta, tau, alpha })
            })
        })
        .collect();
    for p in &points {
        p.validate()?;
    }
    let errors: Vec<(f64, f64)> = points.par_iter().map(|p| training_errors(samples, p)).collect();
    let best = (0..points.len())
        .min_by(|&a, &b| errors[a].0.total_cmp(&errors[b].0).then(a.cmp(&b)))
        .expect("non-empty grid");
    Ok(TrainingResult {
        params: points[best],
        smoothed_error: errors[best].0,
        hard_error: errors[best].1,
    })
}

/// Serialised form of a trained classifier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedParams {
    pub dim: usize,
    pub q: f64,
    pub delta: f64,
    pub tau: f64,
    pub alpha: f64,
    pub error: f64,
}

impl TrainedParams {
    pub fn from_result(dim: usize, r: &TrainingResult) -> Self {
        Self {
            dim,
            q: r.params.q,
            delta: r.params.delta,
            tau: r.params.tau,
            alpha: r.params.alpha,
            error: r.hard_error,
        }
    }

    pub fn params(&self) -> Result<ClassifierParams> {
        ClassifierParams::new(self.q, self.delta, self.tau, self.alpha)
    }
}

fn mean_power(lengths: &[f64], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        0.0
    } else {
        idx.iter().map(|&k| lengths[k] * lengths[k]).sum::<f64>() / idx.len() as f64
    }
}

/// Ratio of mean signal power to mean noise power across runs. Runs with
/// an empty set contribute zero power to that side.
pub fn snr(runs: &[(IntervalSet, ClassificationOutcome)]) -> Result<f64> {
    if runs.is_empty() {
        return Err(Error::Empty("runs"));
    }
    let n = runs.len() as f64;
    let ps = runs.iter().map(|(i, o)| mean_power(&i.lengths, &o.signal_indices)).sum::<f64>() / n;
    let pn = runs.iter().map(|(i, o)| mean_power(&i.lengths, &o.noise_indices)).sum::<f64>() / n;
    Ok(if pn == 0.0 { f64::INFINITY } else { ps / pn })
}

/// Pooled `TP / (TP + FN)` over `(tp, fn)` pairs.
pub fn sensitivity(detections: &[(usize, usize)]) -> Result<f64> {
    let tp: usize = detections.iter().map(|d| d.0).sum();
    let fneg: usize = detections.iter().map(|d| d.1).sum();
    if tp + fneg == 0 {
        return Err(Error::param("sensitivity needs TP + FN > 0"));
    }
    Ok(tp as f64 / (tp + fneg) as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Detections {
    pub true_positives: usize,
    pub false_negatives: usize,
    pub false_positives: usize,
}

/// Attributes signal features to true holes through an optimal bottleneck
/// matching against a reference diagram whose `holes` longest dim-1
/// features are the true holes.
pub fn attribute_detections(
    estimated: &PersistenceDiagram,
    outcome: &ClassificationOutcome,
    reference: &PersistenceDiagram,
    holes: usize,
) -> Detections {
    let finite: Vec<Feature> = estimated.in_dim(1).filter(|f| !f.is_essential()).copied().collect();
    let signals: Vec<Feature> = outcome.signal_indices.iter().map(|&k| finite[k]).collect();
    let mut truth: Vec<Feature> = reference.in_dim(1).copied().collect();
    truth.sort_by(|a, b| b.length().total_cmp(&a.length()));
    truth.truncate(holes);
    let matching = bottleneck_distance(estimated, reference, 1).matching;
    let mut used = vec![false; signals.len()];
    let mut tp = 0;
    for hole in &truth {
        let partner = matching.iter().find(|m| m.b.as_ref() == Some(hole)).and_then(|m| m.a);
        let hit = partner.and_then(|p| (0..signals.len()).find(|&k| !used[k] && signals[k] == p));
        if let Some(k) = hit {
            used[k] = true;
            tp += 1;
        }
    }
    Detections {
        true_positives: tp,
        false_negatives: truth.len() - tp,
        false_positives: used.iter().filter(|u| !**u).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(v: &[f64]) -> IntervalSet {
        IntervalSet::new(v.to_vec()).unwrap()
    }

    #[test]
    fn hand_computed_example() {
        let p = ClassifierParams::new(0.5, 0.7, 2.0, 20.0).unwrap();
        let o = estimate_betti(&set(&[5.0, 0.2, 0.1]), &p);
        assert_eq!(o.beta_hat, 1);
        assert_eq!(o.signal_indices, vec![0]);
        let expect = [5.0 / 0.9, 0.2 / 0.9, 0.1 / 0.9];
        for (s, e) in o.normalized_scores.iter().zip(expect) {
            assert!((s - e).abs() < 1e-12);
        }
        assert_eq!(estimate_betti(&set(&[]), &p).beta_hat, 0);
        assert_eq!(estimate_betti(&set(&[1.0; 4]), &p).beta_hat, 0);
    }

    #[test]
    fn errors_and_metrics() {
        assert_eq!(betti_error(&[2, 2, 3, 1], 2), 0.5);
        assert_eq!(betti_error(&[1, 1], 1), 0.0);
        assert_eq!(sensitivity(&[(9, 1)]).unwrap(), 0.9);
        assert_eq!(sensitivity(&[(3, 0), (2, 0)]).unwrap(), 1.0);
        assert!(sensitivity(&[(0, 0)]).is_err());
        let run = |signal: f64, noise: f64| {
            let i = set(&[signal, noise]);
            let o = ClassificationOutcome::top_k(&i, 1);
            (i, o)
        };
        assert_eq!(snr(&[run(2.0, 1.0)]).unwrap(), 4.0);
        assert_eq!(snr(&[run(1.0, 1.0)]).unwrap(), 1.0);
        assert!(snr(&[run(1.0, 0.0)]).unwrap().is_infinite());
        assert!(ClassifierParams::new(1.0, 0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn separable_ensemble_trains_to_zero() {
        let samples: Vec<TrainingSample> = (0..6)
            .map(|k| TrainingSample {
                intervals: set(&[10.0 + k as f64, 1.0, 0.9, 1.1, 0.8, 1.0]),
                essential: 0,
                truth: 1,
            })
            .collect();
        let r = train(&samples, &ParameterGrid::default(), 20.0).unwrap();
        assert_eq!(r.hard_error, 0.0);
        let sharp = train(&samples, &ParameterGrid::default(), 200.0).unwrap();
        assert_eq!(sharp.hard_error, 0.0);
        assert!(train(&samples[..1], &ParameterGrid::default(), 20.0).is_err());
        let empty = ParameterGrid { qs: vec![], ..ParameterGrid::default() };
        assert!(train(&samples, &empty, 20.0).is_err());
    }

    #[test]
    fn sharp_sigmoid_approaches_hard_error() {
        let samples = vec![
            TrainingSample { intervals: set(&[3.0, 0.5, 0.4]), essential: 0, truth: 1 },
            TrainingSample { intervals: set(&[0.6, 0.5, 0.4]), essential: 1, truth: 1 },
        ];
        let p = ClassifierParams { q: 0.5, delta: 0.1, tau: 2.0, alpha: 1e4 };
        let (soft, hard) = training_errors(&samples, &p);
        assert!((soft - hard).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn scale_invariance(v in prop::collection::vec(0.0f64..10.0, 1..30), c in 0.1f64..100.0,
                            q in 0.05f64..0.95, tau in 0.5f64..20.0) {
            let p = ClassifierParams { q, delta: 0.0, tau, alpha: 20.0 };
            let a = estimate_betti(&set(&v), &p).beta_hat;
            let b = estimate_betti(&set(&v).scaled(c), &p).beta_hat;
            prop_assert_eq!(a, b);
            let co = ClassifierParams { delta: 0.3 * c, ..p };
            let with_delta = ClassifierParams { delta: 0.3, ..p };
            prop_assert_eq!(
                estimate_betti(&set(&v), &with_delta).beta_hat,
                estimate_betti(&set(&v).scaled(c), &co).beta_hat
            );
        }

        #[test]
        fn monotone_in_tau_and_delta(v in prop::collection::vec(0.0f64..10.0, 1..30),
                                     tau in 0.5f64..20.0, delta in 0.0f64..2.0) {
            let base = ClassifierParams { q: 0.5, delta, tau, alpha: 20.0 };
            let b = estimate_betti(&set(&v), &base).beta_hat;
            let more_tau = ClassifierParams { tau: tau + 1.0, ..base };
            let more_delta = ClassifierParams { delta: delta + 0.5, ..base };
            prop_assert!(estimate_betti(&set(&v), &more_tau).beta_hat <= b);
            prop_assert!(estimate_betti(&set(&v), &more_delta).beta_hat <= b);
        }
    }
}
