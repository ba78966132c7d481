//! Encounter graph over events, the landmark-collapsed shortest-path metric
//! and its convergence estimate against ground truth.
//!
//! Two events are adjacent when they share an agent. The edge weight is the
//! distance that agent could have travelled between the two midpoint times,
//! `speed * |t_i - t_j|`, or zero when both events belong to the same landmark
//! community.
//!
//! Along any one agent's timeline these weights are additive, so the
//! shortest paths of the full graph are already realised on the chain that
//! links each event to its temporal neighbours on both agents' timelines.
//! The search runs on that chain; [`EncounterGraph::edges`] still enumerates
//! every adjacency.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::sim::{AgentId, EncounterEvent, LandmarkCommunity};
use crate::util::{quantile, OrdF64};

#[derive(Clone, Debug)]
pub struct EncounterGraph {
    times: Vec<f64>,
    ids: Vec<[AgentId; 2]>,
    /// Communities each event belongs to (at most two).
    membership: Vec<Vec<usize>>,
    /// Events of each agent ordered by midpoint time.
    timelines: BTreeMap<AgentId, Vec<usize>>,
    speed: f64,
    chain: Vec<Vec<(usize, f64)>>,
}

impl EncounterGraph {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn midpoint_time(&self, i: usize) -> f64 {
        self.times[i]
    }

    fn share_community(&self, i: usize, j: usize) -> bool {
        self.membership[i]
            .iter()
            .any(|c| self.membership[j].contains(c))
    }

    /// Weight of edge `(i, j)`, or `None` when the events share no agent.
    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        let [a, b] = self.ids[i];
        if !self.ids[j].contains(&a) && !self.ids[j].contains(&b) {
            return None;
        }
        if self.share_community(i, j) {
            Some(0.0)
        } else {
            Some(self.speed * (self.times[i] - self.times[j]).abs())
        }
    }

    /// Every edge `(i, j, w)` with `i < j`.
    pub fn edges(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for i in 0..self.len() {
            let mut partners: Vec<usize> = self.ids[i]
                .iter()
                .flat_map(|a| self.timelines[a].iter().copied())
                .filter(|&j| j > i)
                .collect();
            partners.sort_unstable();
            partners.dedup();
            for j in partners {
                out.push((i, j, self.weight(i, j).expect("shares an agent")));
            }
        }
        out
    }

    /// Sparse adjacency on which shortest paths are computed.
    pub fn chain_adjacency(&self) -> &[Vec<(usize, f64)>] {
        &self.chain
    }

    /// Shortest-path distances from a set of zero-distance sources.
    pub fn distances_from(&self, sources: &[usize]) -> Vec<f64> {
        let mut dist = vec![f64::INFINITY; self.len()];
        let mut heap = BinaryHeap::new();
        for &s in sources {
            dist[s] = 0.0;
            heap.push(Reverse((OrdF64(0.0), s)));
        }
        while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            for &(v, w) in &self.chain[u] {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    heap.push(Reverse((OrdF64(nd), v)));
                }
            }
        }
        dist
    }
}

/// Builds the encounter graph. Community membership must be consistent with
/// the events' agent ids.
pub fn build_encounter_graph(
    events: &[EncounterEvent],
    communities: &[LandmarkCommunity],
    speed: f64,
) -> Result<EncounterGraph> {
    if !(speed > 0.0) {
        return Err(Error::param("speed must be positive"));
    }
    let n = events.len();
    let mut membership = vec![Vec::new(); n];
    for (c, com) in communities.iter().enumerate() {
        let mut seen = std::collections::BTreeSet::new();
        for &i in &com.event_indices {
            if !seen.insert(i) {
                return Err(Error::DuplicateEvent(i));
            }
            let e = events
                .get(i)
                .ok_or_else(|| Error::param(format!("community refers to missing event {i}")))?;
            if !e.involves(com.landmark_id) {
                return Err(Error::param(format!(
                    "event {i} does not involve landmark {}",
                    com.landmark_id
                )));
            }
            membership[i].push(c);
        }
    }
    let times: Vec<f64> = events.iter().map(EncounterEvent::midpoint_time).collect();
    let ids: Vec<[AgentId; 2]> = events.iter().map(|e| [e.id_a, e.id_b]).collect();
    let mut timelines: BTreeMap<AgentId, Vec<usize>> = BTreeMap::new();
    for (i, e) in events.iter().enumerate() {
        if e.id_a == e.id_b {
            return Err(Error::param(format!("event {i} pairs an agent with itself")));
        }
        timelines.entry(e.id_a).or_default().push(i);
        timelines.entry(e.id_b).or_default().push(i);
    }
    for line in timelines.values_mut() {
        line.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then(a.cmp(&b)));
    }
    let mut graph = EncounterGraph {
        times,
        ids,
        membership,
        timelines,
        speed,
        chain: vec![Vec::new(); n],
    };
    let mut chain = vec![Vec::new(); n];
    for line in graph.timelines.values() {
        for w in line.windows(2) {
            let weight = graph.weight(w[0], w[1]).expect("same agent");
            chain[w[0]].push((w[1], weight));
            chain[w[1]].push((w[0], weight));
        }
    }
    graph.chain = chain;
    Ok(graph)
}

/// All-pairs shortest-path metric over the encounter graph (`inf` across
/// components), one single-source search per event.
pub fn shortest_path_metric(graph: &EncounterGraph) -> DistanceMatrix {
    let n = graph.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|s| graph.distances_from(&[s]))
        .collect();
    let mut m = DistanceMatrix::zeros(n);
    for i in 0..n {
        for j in i + 1..n {
            // both searches agree up to summation order; keep it exactly symmetric
            let d = rows[i][j].min(rows[j][i]);
            m.set(i, j, d);
        }
    }
    m
}

/// Community-to-community distances from an event-level matrix.
pub fn community_distances(dist: &DistanceMatrix, communities: &[LandmarkCommunity]) -> Result<DistanceMatrix> {
    if let Some(c) = communities.iter().find(|c| c.event_indices.is_empty()) {
        return Err(Error::param(format!("community of landmark {} is empty", c.landmark_id)));
    }
    let k = communities.len();
    let mut out = DistanceMatrix::zeros(k);
    for a in 0..k {
        for b in a + 1..k {
            let mut best = f64::INFINITY;
            for &i in &communities[a].event_indices {
                for &j in &communities[b].event_indices {
                    best = best.min(dist.get(i, j));
                }
            }
            out.set(a, b, best);
        }
    }
    Ok(out)
}

/// Same result as [`community_distances`] computed with one multi-source
/// search per community instead of a full event matrix.
pub fn community_distances_on_graph(
    graph: &EncounterGraph,
    communities: &[LandmarkCommunity],
) -> Result<DistanceMatrix> {
    if let Some(c) = communities.iter().find(|c| c.event_indices.is_empty()) {
        return Err(Error::param(format!("community of landmark {} is empty", c.landmark_id)));
    }
    let k = communities.len();
    let rows: Vec<Vec<f64>> = communities
        .par_iter()
        .map(|c| {
            let d = graph.distances_from(&c.event_indices);
            communities
                .iter()
                .map(|o| o.event_indices.iter().map(|&j| d[j]).fold(f64::INFINITY, f64::min))
                .collect()
        })
        .collect();
    Ok(DistanceMatrix::from_fn(k, |a, b| rows[a][b].min(rows[b][a])))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub lambda3_hat: f64,
    pub percentile_used: f64,
    pub pair_count: usize,
    pub relative_errors: Vec<f64>,
}

/// Relative overestimates `est / truth - 1` over pairs with finite positive
/// truth; the reported factor is their `percentile`, floored at zero.
pub fn estimate_lambda3(est: &DistanceMatrix, truth: &DistanceMatrix, percentile: f64) -> Result<ConvergenceEstimate> {
    if est.len() != truth.len() {
        return Err(Error::Matrix("estimate and truth differ in size".into()));
    }
    if !(0.0..=1.0).contains(&percentile) {
        return Err(Error::param("percentile must lie in [0, 1]"));
    }
    let n = est.len();
    let mut relative_errors = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            let t = truth.get(i, j);
            let e = est.get(i, j);
            if t.is_finite() && t > 0.0 && e.is_finite() {
                relative_errors.push(e / t - 1.0);
            }
        }
    }
    let q = quantile(&relative_errors, percentile).ok_or(Error::Empty("valid distance pairs"))?;
    Ok(ConvergenceEstimate {
        lambda3_hat: q.max(0.0),
        percentile_used: percentile,
        pair_count: relative_errors.len(),
        relative_errors,
    })
}
