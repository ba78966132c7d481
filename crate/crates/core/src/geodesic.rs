//! Ground-truth geodesic distances in the free space of a [`Domain`], the
//! lifted space-time distance, reference point clouds and sampling-density
//! estimates.
//!
//! Shortest obstacle-avoiding paths in a polygonal domain bend only at
//! obstacle vertices, so the free-space graph is the visibility graph over
//! those vertices. Query points are attached to it on demand.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::distance::DistanceMatrix;
use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};
use crate::sim::{EncounterEvent, LandmarkCommunity};
use crate::util::OrdF64;

/// Visibility graph of obstacle vertices with all-pairs shortest paths.
#[derive(Clone, Debug)]
pub struct FreeSpaceGraph {
    pub nodes: Vec<Point>,
    /// `(i, j, length)` for mutually visible node pairs, `i < j`.
    pub edges: Vec<(usize, usize, f64)>,
    shortest: Vec<f64>,
}

impl FreeSpaceGraph {
    pub fn build(domain: &Domain) -> Self {
        let nodes = domain.obstacle_vertices();
        let n = nodes.len();
        let mut edges = Vec::new();
        let mut adj = vec![Vec::new(); n];
        for i in 0..n {
            for j in i + 1..n {
                if domain.segment_free(nodes[i], nodes[j]) {
                    let w = nodes[i].dist(nodes[j]);
                    edges.push((i, j, w));
                    adj[i].push((j, w));
                    adj[j].push((i, w));
                }
            }
        }
        let mut shortest = vec![f64::INFINITY; n * n];
        for s in 0..n {
            let row = dijkstra(&adj, s);
            shortest[s * n..(s + 1) * n].copy_from_slice(&row);
        }
        Self {
            nodes,
            edges,
            shortest,
        }
    }

    fn between(&self, i: usize, j: usize) -> f64 {
        self.shortest[i * self.nodes.len() + j]
    }
}

fn dijkstra(adj: &[Vec<(usize, f64)>], source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; adj.len()];
    dist[source] = 0.0;
    let mut heap = BinaryHeap::from([Reverse((OrdF64(0.0), source))]);
    while let Some(Reverse((OrdF64(d), u))) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for &(v, w) in &adj[u] {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Reverse((OrdF64(nd), v)));
            }
        }
    }
    dist
}

/// A free point together with the graph nodes it can see.
#[derive(Clone, Debug)]
pub struct Anchor {
    pub point: Point,
    visible: Vec<(usize, f64)>,
}

#[derive(Clone, Debug)]
pub struct GeodesicOracle {
    domain: Domain,
    graph: FreeSpaceGraph,
}

impl GeodesicOracle {
    pub fn new(domain: &Domain) -> Result<Self> {
        domain.validate()?;
        Ok(Self {
            domain: domain.clone(),
            graph: FreeSpaceGraph::build(domain),
        })
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn graph(&self) -> &FreeSpaceGraph {
        &self.graph
    }

    pub fn anchor(&self, p: Point) -> Result<Anchor> {
        if !self.domain.is_free(p) {
            return Err(Error::NotFree { x: p.x, y: p.y });
        }
        let visible = self
            .graph
            .nodes
            .iter()
            .enumerate()
            .filter(|(_, v)| self.domain.segment_free(p, **v))
            .map(|(i, v)| (i, p.dist(*v)))
            .collect();
        Ok(Anchor { point: p, visible })
    }

    pub fn between(&self, a: &Anchor, b: &Anchor) -> f64 {
        if a.point == b.point {
            return 0.0;
        }
        // fixed evaluation order keeps the result exactly symmetric
        let (a, b) = if (b.point.x, b.point.y) < (a.point.x, a.point.y) { (b, a) } else { (a, b) };
        if self.domain.segment_free(a.point, b.point) {
            return a.point.dist(b.point);
        }
        let mut best = f64::INFINITY;
        for &(u, du) in &a.visible {
            for &(v, dv) in &b.visible {
                best = best.min(du + self.graph.between(u, v) + dv);
            }
        }
        best
    }

    /// Geodesic length; `inf` when no obstacle-avoiding path exists.
    pub fn distance(&self, p: Point, q: Point) -> Result<f64> {
        Ok(self.between(&self.anchor(p)?, &self.anchor(q)?))
    }

    /// Pairwise geodesics among free points.
    pub fn matrix(&self, points: &[Point]) -> Result<DistanceMatrix> {
        let anchors = points
            .iter()
            .map(|p| self.anchor(*p))
            .collect::<Result<Vec<_>>>()?;
        Ok(DistanceMatrix::from_fn(points.len(), |i, j| {
            self.between(&anchors[i], &anchors[j])
        }))
    }
}

/// Shortest obstacle-avoiding distance between two free points. The
/// visibility construction is exact, so `resolution` only has to be positive.
pub fn geodesic_distance(domain: &Domain, p: Point, q: Point, resolution: f64) -> Result<f64> {
    if !(resolution > 0.0) {
        return Err(Error::param("resolution must be positive"));
    }
    GeodesicOracle::new(domain)?.distance(p, q)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub position: Point,
    pub time: f64,
}

/// Distance in the space-time lift under unit speed: spatial and temporal
/// displacement must both be covered, so the larger one dominates.
pub fn space_time_distance(oracle: &GeodesicOracle, a: SpaceTimePoint, b: SpaceTimePoint) -> Result<f64> {
    let spatial = oracle.distance(a.position, b.position)?;
    Ok(spatial.max((a.time - b.time).abs()))
}

/// Grid samples of the free space (plus obstacle boundary samples) with
/// their pairwise geodesics.
pub fn reference_point_cloud(domain: &Domain, spacing: f64) -> Result<(Vec<Point>, DistanceMatrix)> {
    let points = reference_points(domain, spacing)?;
    let oracle = GeodesicOracle::new(domain)?;
    let dist = oracle.matrix(&points)?;
    Ok((points, dist))
}

pub fn reference_points(domain: &Domain, spacing: f64) -> Result<Vec<Point>> {
    if !(spacing > 0.0) {
        return Err(Error::param("spacing must be positive"));
    }
    if spacing > domain.width.min(domain.height) {
        return Err(Error::param("spacing larger than the domain"));
    }
    let axis = |len: f64| {
        let k = (len / spacing + 1e-9).floor() as usize;
        let mut v: Vec<f64> = (0..=k).map(|i| i as f64 * spacing).collect();
        if len - v[k] > 1e-9 * len {
            v.push(len);
        }
        v
    };
    let xs = axis(domain.width);
    let ys = axis(domain.height);
    let mut points = Vec::with_capacity(xs.len() * ys.len());
    for &y in &ys {
        for &x in &xs {
            let p = Point::new(x, y);
            if domain.is_free(p) {
                points.push(p);
            }
        }
    }
    let near = |pts: &[Point], p: Point| pts.iter().any(|q| q.dist(p) < 1e-9 * (1.0 + spacing));
    for obs in &domain.obstacles {
        for (a, b) in obs.edges() {
            let pieces = (a.dist(b) / spacing).ceil().max(1.0) as usize;
            for s in 0..pieces {
                let p = a.lerp(b, s as f64 / pieces as f64);
                if domain.is_free(p) && !near(&points, p) {
                    points.push(p);
                }
            }
        }
    }
    Ok(points)
}

/// Sampling density estimates: `delta_e` is the largest geodesic gap from a
/// free grid point to the nearest event location, `delta_l` the largest
/// geodesic distance from a landmark community to its nearest neighbour.
pub fn estimate_deltas(
    events: &[EncounterEvent],
    communities: &[LandmarkCommunity],
    domain: &Domain,
    spacing: f64,
) -> Result<(f64, f64)> {
    let oracle = GeodesicOracle::new(domain)?;
    let positions = events
        .iter()
        .map(|e| {
            e.truth_position
                .map(|p| domain.snap_free(p))
                .ok_or_else(|| Error::param("event without truth position"))
        })
        .collect::<Result<Vec<_>>>()?;
    let centroids = communities
        .iter()
        .map(|c| c.centroid.map(|p| domain.snap_free(p)).ok_or(Error::Empty("landmark community")))
        .collect::<Result<Vec<_>>>()?;
    let delta_e = covering_radius(&oracle, &domain.grid_points(spacing), &positions)?;
    let delta_l = landmark_spread(&oracle, &centroids)?;
    Ok((delta_e, delta_l))
}

/// Largest geodesic distance from any probe point to its nearest sample.
pub fn covering_radius(oracle: &GeodesicOracle, probes: &[Point], samples: &[Point]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("sample set"));
    }
    let anchors = samples
        .iter()
        .map(|p| oracle.anchor(*p))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 0.0;
    for &g in probes {
        let ga = oracle.anchor(g)?;
        let euclid: Vec<f64> = samples.iter().map(|s| s.dist(g)).collect();
        let nearest = (0..samples.len())
            .min_by(|&a, &b| euclid[a].total_cmp(&euclid[b]))
            .expect("non-empty");
        let mut best = oracle.between(&ga, &anchors[nearest]);
        if best > euclid[nearest] {
            for (k, &e) in euclid.iter().enumerate() {
                if e < best {
                    best = best.min(oracle.between(&ga, &anchors[k]));
                }
            }
        }
        worst = worst.max(best);
    }
    Ok(worst)
}

pub fn landmark_spread(oracle: &GeodesicOracle, centroids: &[Point]) -> Result<f64> {
    if centroids.len() < 2 {
        return Err(Error::param("need at least two landmarks"));
    }
    let m = oracle.matrix(centroids)?;
    Ok((0..m.len())
        .map(|i| {
            (0..m.len())
                .filter(|&j| j != i)
                .map(|j| m.get(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Polygon;
    use proptest::prelude::*;

    fn holed() -> Domain {
        Domain::new(10.0, 10.0, vec![Polygon::rect(3.0, 3.0, 4.0, 4.0)]).unwrap()
    }

    #[test]
    fn straight_line_in_empty_square() {
        let d = Domain::empty(1.0, 1.0);
        let g = geodesic_distance(&d, Point::new(0.0, 0.0), Point::new(1.0, 1.0), 0.01).unwrap();
        assert!((g - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(geodesic_distance(&d, Point::new(0.3, 0.3), Point::new(0.3, 0.3), 0.01).unwrap(), 0.0);
    }

    #[test]
    fn wraps_around_centered_obstacle() {
        let d = holed();
        let g = geodesic_distance(&d, Point::new(0.0, 5.0), Point::new(10.0, 5.0), 0.05).unwrap();
        let expect = 2.0 * (9.0f64 + 4.0).sqrt() + 4.0;
        assert!((g - expect).abs() < 1e-9, "{g} vs {expect}");
    }

    #[test]
    fn rejects_points_inside_obstacles() {
        let d = holed();
        assert!(geodesic_distance(&d, Point::new(5.0, 5.0), Point::new(0.0, 0.0), 0.1).is_err());
        assert!(geodesic_distance(&d, Point::new(1.0, 1.0), Point::new(0.0, 0.0), 0.0).is_err());
    }

    #[test]
    fn space_time_takes_the_larger_displacement() {
        let d = Domain::empty(10.0, 10.0);
        let o = GeodesicOracle::new(&d).unwrap();
        let a = SpaceTimePoint { position: Point::new(1.0, 1.0), time: 0.0 };
        let b = SpaceTimePoint { position: Point::new(4.0, 1.0), time: 5.0 };
        assert_eq!(space_time_distance(&o, a, b).unwrap(), 5.0);
        let c = SpaceTimePoint { time: 3.0, ..b };
        assert_eq!(space_time_distance(&o, a, c).unwrap(), 3.0);
        assert_eq!(space_time_distance(&o, a, a).unwrap(), 0.0);
    }

    /// Breadth-first search over unit-speed lifted lattice curves: each step
    /// moves time by exactly one unit (either direction) and space by at most
    /// one taxicab unit (standing still stands for back-and-forth padding).
    /// Coordinates are doubled so that parity never blocks arrival.
    fn lattice_space_time(dx: i64, dy: i64, dt: i64) -> i64 {
        use std::collections::{HashSet, VecDeque};
        let target = (2 * dx, 2 * dy, 2 * dt);
        let bound = 2 * (dx.abs() + dy.abs() + dt.abs()) + 2;
        let mut seen = HashSet::from([(0i64, 0i64, 0i64)]);
        let mut queue = VecDeque::from([((0i64, 0i64, 0i64), 0i64)]);
        while let Some((s, steps)) = queue.pop_front() {
            if s == target {
                return steps / 2;
            }
            for (mx, my) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
                for mt in [1, -1] {
                    let n = (s.0 + mx, s.1 + my, s.2 + mt);
                    if n.0.abs() <= bound && n.1.abs() <= bound && n.2.abs() <= bound && seen.insert(n) {
                        queue.push_back((n, steps + 1));
                    }
                }
            }
        }
        unreachable!()
    }

    #[test]
    fn space_time_matches_lattice_search() {
        // taxicab lattice: the spatial part is |dx| + |dy|
        for (dx, dy, dt) in [(3i64, 0i64, 5i64), (3, 0, 3), (2, 2, 1), (0, 0, 4), (1, 3, -2), (2, 0, 0)] {
            let spatial = dx.abs() + dy.abs();
            assert_eq!(lattice_space_time(dx, dy, dt), spatial.max(dt.abs()));
        }
    }

    #[test]
    fn reference_grid_counts() {
        let (pts, m) = reference_point_cloud(&Domain::empty(10.0, 10.0), 1.0).unwrap();
        assert_eq!(pts.len(), 121);
        assert!(m.is_finite());
        assert!(reference_point_cloud(&Domain::empty(10.0, 10.0), 11.0).is_err());
    }

    #[test]
    fn covering_radius_halves_with_spacing() {
        let d = holed();
        let probes = d.grid_points(0.1);
        let o = GeodesicOracle::new(&d).unwrap();
        for spacing in [1.0, 0.5] {
            let pts = reference_points(&d, spacing).unwrap();
            let r = covering_radius(&o, &probes, &pts).unwrap();
            assert!(r <= spacing * 2f64.sqrt() / 2.0 + 1e-9, "spacing {spacing}: {r}");
            assert!(r >= spacing * 2f64.sqrt() / 2.0 - 0.1);
        }
    }

    #[test]
    fn landmark_spread_of_two() {
        let d = Domain::empty(20.0, 20.0);
        let o = GeodesicOracle::new(&d).unwrap();
        let r = landmark_spread(&o, &[Point::new(2.0, 2.0), Point::new(9.27, 2.0)]).unwrap();
        assert!((r - 7.27).abs() < 1e-12);
        assert!(landmark_spread(&o, &[Point::new(2.0, 2.0)]).is_err());
    }

    #[test]
    fn single_event_covering_radius_is_farthest_grid_point() {
        let d = holed();
        let o = GeodesicOracle::new(&d).unwrap();
        let event = Point::new(1.0, 1.0);
        let probes = d.grid_points(0.5);
        let brute = probes
            .iter()
            .map(|p| o.distance(*p, event).unwrap())
            .fold(0.0, f64::max);
        assert_eq!(covering_radius(&o, &probes, &[event]).unwrap(), brute);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn geodesic_metric_axioms(ax in 0.0f64..10.0, ay in 0.0f64..10.0,
                                  bx in 0.0f64..10.0, by in 0.0f64..10.0,
                                  cx in 0.0f64..10.0, cy in 0.0f64..10.0) {
            let d = holed();
            let o = GeodesicOracle::new(&d).unwrap();
            let (a, b, c) = (Point::new(ax, ay), Point::new(bx, by), Point::new(cx, cy));
            prop_assume!(d.is_free(a) && d.is_free(b) && d.is_free(c));
            let ab = o.distance(a, b).unwrap();
            let ba = o.distance(b, a).unwrap();
            let bc = o.distance(b, c).unwrap();
            let ac = o.distance(a, c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(ab >= a.dist(b) - 1e-12);
            prop_assert!(ac <= ab + bc + 1e-9);
        }
    }
}
