//! Seeded simulation of agents switching between a correlated random walk and
//! a static mode inside a bounded obstacle domain. Pairwise proximity produces
//! encounter events; static landmark agents define event communities.

use std::collections::VecDeque;
use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Domain, Point};

pub type AgentId = u32;

/// Correlated random walk parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CrwParams {
    /// Mean segment length of the exponential length distribution (m).
    pub char_length: f64,
    /// Linear speed while walking (m/s).
    pub speed: f64,
    #[serde(default)]
    pub stop_prob_per_segment: f64,
    #[serde(default = "default_stop_duration")]
    pub stop_duration_mean: f64,
}

fn default_stop_duration() -> f64 {
    5.0
}

impl CrwParams {
    pub fn new(char_length: f64, speed: f64) -> Self {
        Self {
            char_length,
            speed,
            stop_prob_per_segment: 0.0,
            stop_duration_mean: default_stop_duration(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.char_length > 0.0) {
            return Err(Error::param("char_length must be positive"));
        }
        if !(self.speed > 0.0) {
            return Err(Error::param("speed must be positive"));
        }
        if !(0.0..=1.0).contains(&self.stop_prob_per_segment) {
            return Err(Error::param("stop_prob_per_segment must lie in [0, 1]"));
        }
        if !(self.stop_duration_mean > 0.0) {
            return Err(Error::param("stop_duration_mean must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensingParams {
    pub detection_radius: f64,
    /// Simulation time step. `None` picks `duration * 1e-4`, capped so that
    /// no agent pair can step across the detection disc in one step.
    #[serde(default)]
    pub sample_interval: Option<f64>,
    /// Radius of the communication graph used for landmark selection.
    #[serde(default = "default_comm_radius")]
    pub communication_radius: f64,
}

fn default_comm_radius() -> f64 {
    5.0
}

impl SensingParams {
    pub fn new(detection_radius: f64) -> Self {
        Self {
            detection_radius,
            sample_interval: None,
            communication_radius: default_comm_radius(),
        }
    }

    pub fn max_interval(&self, speed: f64) -> f64 {
        self.detection_radius / (2.0 * speed)
    }

    pub fn resolve_interval(&self, duration: f64, speed: f64) -> Result<f64> {
        if !(self.detection_radius > 0.0) {
            return Err(Error::param("detection_radius must be positive"));
        }
        let cap = self.max_interval(speed);
        match self.sample_interval {
            Some(dt) if !(dt > 0.0) => Err(Error::param("sample_interval must be positive")),
            Some(dt) if dt > cap * (1.0 + 1e-12) => Err(Error::param(format!(
                "sample_interval {dt} exceeds detection_radius / (2 * speed) = {cap}"
            ))),
            Some(dt) => Ok(dt),
            None => Ok((duration * 1e-4).min(cap)),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Crw,
    Static,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Crw => "CRW",
            Mode::Static => "S",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgentState {
    pub id: AgentId,
    pub position: Point,
    pub heading: f64,
    pub mode: Mode,
    pub segment_remaining: f64,
    pub stop_remaining: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EncounterEvent {
    pub t_start: f64,
    pub t_end: f64,
    pub id_a: AgentId,
    pub id_b: AgentId,
    /// Mean meeting location; ground truth for evaluation only.
    pub truth_position: Option<Point>,
}

impl EncounterEvent {
    pub fn midpoint_time(&self) -> f64 {
        0.5 * (self.t_start + self.t_end)
    }

    pub fn involves(&self, id: AgentId) -> bool {
        self.id_a == id || self.id_b == id
    }

    pub fn shares_agent(&self, other: &EncounterEvent) -> bool {
        self.involves(other.id_a) || self.involves(other.id_b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandmarkCommunity {
    pub landmark_id: AgentId,
    pub event_indices: Vec<usize>,
    pub centroid: Option<Point>,
}

/// Groups events by landmark; the centroid is the mean truth position when
/// every member event carries one.
pub fn build_communities(events: &[EncounterEvent], landmarks: &[AgentId]) -> Vec<LandmarkCommunity> {
    landmarks
        .iter()
        .map(|&l| {
            let event_indices: Vec<usize> = events
                .iter()
                .enumerate()
                .filter(|(_, e)| e.involves(l))
                .map(|(i, _)| i)
                .collect();
            let truths: Option<Vec<Point>> = event_indices
                .iter()
                .map(|&i| events[i].truth_position)
                .collect();
            let centroid = truths.filter(|t| !t.is_empty()).map(|t| {
                let s = t.iter().fold(Point::default(), |acc, p| acc.add(*p));
                s.scale(1.0 / t.len() as f64)
            });
            LandmarkCommunity {
                landmark_id: l,
                event_indices,
                centroid,
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub t: f64,
    pub id: AgentId,
    pub position: Point,
    pub mode: Mode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub domain: Domain,
    pub n_agents: usize,
    pub crw: CrwParams,
    pub sensing: SensingParams,
    pub duration: f64,
    pub landmark_count: usize,
    pub dispersion_time: f64,
    pub seed: u64,
    /// Fixed starting positions instead of uniform random placement.
    #[serde(default)]
    pub initial_positions: Option<Vec<Point>>,
    /// Record every agent each `n` steps when set.
    #[serde(default)]
    pub trajectory_stride: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimOutput {
    pub events: Vec<EncounterEvent>,
    pub communities: Vec<LandmarkCommunity>,
    pub landmarks: Vec<AgentId>,
    pub landmark_positions: Vec<Point>,
    pub trajectories: Vec<TrajectorySample>,
    pub sample_interval: f64,
    pub warnings: Vec<String>,
}

/// Draws one CRW segment length from the exponential law with mean `char_length`.
pub fn sample_segment_length<R: Rng + ?Sized>(crw: &CrwParams, rng: &mut R) -> f64 {
    Exp::new(1.0 / crw.char_length)
        .expect("char_length is positive")
        .sample(rng)
}

fn isotropic_heading<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.random_range(0.0..TAU)
}

/// New heading drawn uniformly from the directions pointing into free space
/// for every contact normal (half-circle for one wall, quarter-circle in a
/// right-angle corner).
pub fn reflect_heading<R: Rng + ?Sized>(inward_normals: &[Point], rng: &mut R) -> f64 {
    let Some(first) = inward_normals.first() else {
        return isotropic_heading(rng);
    };
    let base = first.y.atan2(first.x);
    for _ in 0..256 {
        let h = base + rng.random_range(-PI / 2.0..PI / 2.0);
        let dir = Point::new(h.cos(), h.sin());
        if inward_normals.iter().all(|n| n.dot(dir) > 0.0) {
            return h.rem_euclid(TAU);
        }
    }
    let sum = inward_normals
        .iter()
        .fold(Point::default(), |acc, n| acc.add(*n));
    if sum.norm() > 0.0 {
        sum.y.atan2(sum.x).rem_euclid(TAU)
    } else {
        base.rem_euclid(TAU)
    }
}

/// Maxmin landmark choice by hop distance starting from `first`. Ties go to
/// the lowest node index.
pub fn maxmin_hops(adjacency: &[Vec<usize>], nodes: &[usize], k: usize, first: usize) -> Vec<usize> {
    let n = adjacency.len();
    let mut min_hops = vec![usize::MAX; n];
    let mut chosen = Vec::with_capacity(k);
    let mut next = first;
    while chosen.len() < k {
        chosen.push(next);
        let hops = bfs_hops(adjacency, next);
        for &v in nodes {
            min_hops[v] = min_hops[v].min(hops[v]);
        }
        let candidate = nodes
            .iter()
            .copied()
            .filter(|v| !chosen.contains(v))
            .max_by(|&a, &b| min_hops[a].cmp(&min_hops[b]).then(b.cmp(&a)));
        match candidate {
            Some(c) => next = c,
            None => break,
        }
    }
    chosen
}

fn bfs_hops(adjacency: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut hops = vec![usize::MAX; adjacency.len()];
    hops[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for &v in &adjacency[u] {
            if hops[v] == usize::MAX {
                hops[v] = hops[u] + 1;
                queue.push_back(v);
            }
        }
    }
    hops
}

pub fn graph_components(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut seen = vec![false; adjacency.len()];
    let mut comps = Vec::new();
    for s in 0..adjacency.len() {
        if seen[s] {
            continue;
        }
        let hops = bfs_hops(adjacency, s);
        let members: Vec<usize> = (0..adjacency.len()).filter(|&v| hops[v] != usize::MAX).collect();
        for &v in &members {
            seen[v] = true;
        }
        comps.push(members);
    }
    comps
}

/// Chooses `landmark_count` nodes of the communication graph. Connected
/// graphs use maxmin hop selection from a random first node; otherwise each
/// landmark is assigned to a cluster with probability equal to the cluster's
/// share of agents, and maxmin runs inside each cluster.
pub fn select_landmarks<R: Rng + ?Sized>(
    adjacency: &[Vec<usize>],
    landmark_count: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    let n = adjacency.len();
    if landmark_count > n {
        return Err(Error::param(format!(
            "cannot select {landmark_count} landmarks from {n} agents"
        )));
    }
    if landmark_count == 0 {
        return Ok(Vec::new());
    }
    let comps = graph_components(adjacency);
    let mut alloc = vec![0usize; comps.len()];
    for _ in 0..landmark_count {
        let open: Vec<usize> = (0..comps.len()).filter(|&c| alloc[c] < comps[c].len()).collect();
        let total: usize = open.iter().map(|&c| comps[c].len()).sum();
        let mut pick = rng.random_range(0..total);
        for &c in &open {
            if pick < comps[c].len() {
                alloc[c] += 1;
                break;
            }
            pick -= comps[c].len();
        }
    }
    let mut chosen = Vec::with_capacity(landmark_count);
    for (c, members) in comps.iter().enumerate() {
        if alloc[c] == 0 {
            continue;
        }
        let first = members[rng.random_range(0..members.len())];
        chosen.extend(maxmin_hops(adjacency, members, alloc[c], first));
    }
    chosen.sort_unstable();
    Ok(chosen)
}

fn random_free_point<R: Rng + ?Sized>(domain: &Domain, rng: &mut R) -> Result<Point> {
    for _ in 0..100_000 {
        let p = Point::new(
            rng.random_range(0.0..domain.width),
            rng.random_range(0.0..domain.height),
        );
        if domain.is_free(p) {
            return Ok(p);
        }
    }
    Err(Error::InvalidDomain("free space is empty".into()))
}

/// Number of 4-connected components of free cells on a grid of pitch `h`.
fn free_space_components(domain: &Domain, h: f64) -> usize {
    let nx = (domain.width / h).ceil().max(1.0) as usize;
    let ny = (domain.height / h).ceil().max(1.0) as usize;
    let cx = domain.width / nx as f64;
    let cy = domain.height / ny as f64;
    let free: Vec<bool> = (0..nx * ny)
        .map(|k| {
            let (i, j) = (k % nx, k / nx);
            domain.is_free(Point::new((i as f64 + 0.5) * cx, (j as f64 + 0.5) * cy))
        })
        .collect();
    let mut label = vec![false; nx * ny];
    let mut comps = 0;
    for s in 0..nx * ny {
        if !free[s] || label[s] {
            continue;
        }
        comps += 1;
        label[s] = true;
        let mut stack = vec![s];
        while let Some(k) = stack.pop() {
            let (i, j) = (k % nx, k / nx);
            let mut push = |ii: usize, jj: usize| {
                let kk = jj * nx + ii;
                if free[kk] && !label[kk] {
                    label[kk] = true;
                    stack.push(kk);
                }
            };
            if i > 0 {
                push(i - 1, j);
            }
            if i + 1 < nx {
                push(i + 1, j);
            }
            if j > 0 {
                push(i, j - 1);
            }
            if j + 1 < ny {
                push(i, j + 1);
            }
        }
    }
    comps
}

struct OpenEncounter {
    t_start: f64,
    t_last: f64,
    mid_sum: Point,
    samples: usize,
}

struct Simulator<'a> {
    cfg: &'a SimConfig,
    rng: ChaCha8Rng,
    agents: Vec<AgentState>,
    dt: f64,
}

impl Simulator<'_> {
    fn new_segment(&mut self, i: usize) {
        let len = sample_segment_length(&self.cfg.crw, &mut self.rng);
        let a = &mut self.agents[i];
        a.segment_remaining = len;
    }

    /// Segment exhausted: reorient, and possibly pause.
    fn reorient(&mut self, i: usize) {
        let heading = isotropic_heading(&mut self.rng);
        self.agents[i].heading = heading;
        self.new_segment(i);
        let p = self.cfg.crw.stop_prob_per_segment;
        if p > 0.0 && self.rng.random_bool(p) {
            let pause = Exp::new(1.0 / self.cfg.crw.stop_duration_mean)
                .expect("positive stop duration")
                .sample(&mut self.rng);
            let a = &mut self.agents[i];
            a.mode = Mode::Static;
            a.stop_remaining = pause;
        }
    }

    fn advance(&mut self, i: usize) {
        let cfg = self.cfg;
        let domain = &cfg.domain;
        if self.agents[i].mode == Mode::Static {
            let a = &mut self.agents[i];
            if a.stop_remaining.is_finite() {
                a.stop_remaining -= self.dt;
                if a.stop_remaining <= 0.0 {
                    a.stop_remaining = 0.0;
                    a.mode = Mode::Crw;
                    self.new_segment(i);
                }
            }
            return;
        }
        let mut budget = cfg.crw.speed * self.dt;
        let mut guard = 0;
        while budget > 1e-15 && guard < 64 {
            guard += 1;
            let a = &self.agents[i];
            let step = budget.min(a.segment_remaining);
            let dir = Point::new(a.heading.cos(), a.heading.sin());
            let target = a.position.add(dir.scale(step));
            if domain.segment_free(a.position, target) {
                let a = &mut self.agents[i];
                a.position = target;
                a.segment_remaining -= step;
                budget -= step;
                if a.segment_remaining <= 1e-15 {
                    self.reorient(i);
                    if self.agents[i].mode == Mode::Static {
                        break;
                    }
                }
            } else {
                let normals = domain.contact_normals(a.position, step + 1e-9);
                let h = reflect_heading(&normals, &mut self.rng);
                self.agents[i].heading = h;
                break;
            }
        }
    }
}

fn validate_config(cfg: &SimConfig) -> Result<()> {
    cfg.domain.validate()?;
    cfg.crw.validate()?;
    if cfg.n_agents >= 2 && cfg.landmark_count >= cfg.n_agents {
        return Err(Error::param(format!(
            "landmark_count {} must be below n_agents {}",
            cfg.landmark_count, cfg.n_agents
        )));
    }
    if cfg.n_agents < 2 && cfg.landmark_count > 0 {
        return Err(Error::param("landmarks need at least two agents"));
    }
    if !(cfg.duration > cfg.dispersion_time && cfg.dispersion_time >= 0.0) {
        return Err(Error::param("need duration > dispersion_time >= 0"));
    }
    if let Some(pos) = &cfg.initial_positions {
        if pos.len() != cfg.n_agents {
            return Err(Error::param("initial_positions length differs from n_agents"));
        }
        if let Some(p) = pos.iter().find(|p| !cfg.domain.is_free(**p)) {
            return Err(Error::NotFree { x: p.x, y: p.y });
        }
    }
    Ok(())
}

/// Runs one simulation. Events are only recorded once the dispersion stage is
/// over and landmarks have stopped.
pub fn simulate(cfg: &SimConfig) -> Result<SimOutput> {
    validate_config(cfg)?;
    let dt = cfg.sensing.resolve_interval(cfg.duration, cfg.crw.speed)?;
    let mut warnings = Vec::new();
    if cfg.domain.free_area_estimate() <= 0.0 {
        return Err(Error::InvalidDomain("free space is empty".into()));
    }
    let comps = free_space_components(&cfg.domain, cfg.sensing.detection_radius);
    if comps == 0 {
        return Err(Error::InvalidDomain("free space is empty at agent scale".into()));
    }
    if comps > 1 {
        let msg = format!("free space splits into {comps} components at agent scale");
        log::warn!("{msg}");
        warnings.push(msg);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut agents = Vec::with_capacity(cfg.n_agents);
    for i in 0..cfg.n_agents {
        let position = match &cfg.initial_positions {
            Some(p) => p[i],
            None => random_free_point(&cfg.domain, &mut rng)?,
        };
        let heading = isotropic_heading(&mut rng);
        let segment_remaining = sample_segment_length(&cfg.crw, &mut rng);
        agents.push(AgentState {
            id: i as AgentId + 1,
            position,
            heading,
            mode: Mode::Crw,
            segment_remaining,
            stop_remaining: 0.0,
        });
    }
    let mut sim = Simulator { cfg, rng, agents, dt };

    let n = cfg.n_agents;
    let r2 = cfg.sensing.detection_radius * cfg.sensing.detection_radius;
    let steps = (cfg.duration / dt - 1e-9).ceil() as usize;
    let disperse_step = (cfg.dispersion_time / dt - 1e-9).ceil() as usize;
    let mut open: Vec<Option<OpenEncounter>> = (0..n * n).map(|_| None).collect();
    let mut events = Vec::new();
    let mut landmarks: Vec<AgentId> = Vec::new();
    let mut trajectories = Vec::new();

    for step in 0..=steps {
        let t = (step as f64 * dt).min(cfg.duration);
        if step == disperse_step {
            let comm2 = cfg.sensing.communication_radius.powi(2);
            let adjacency: Vec<Vec<usize>> = (0..n)
                .map(|i| {
                    (0..n)
                        .filter(|&j| {
                            j != i && {
                                let d = sim.agents[i].position.sub(sim.agents[j].position);
                                d.dot(d) <= comm2
                            }
                        })
                        .collect()
                })
                .collect();
            let comps = graph_components(&adjacency);
            if comps.len() > 1 {
                let msg = format!(
                    "communication graph has {} clusters after dispersion",
                    comps.len()
                );
                log::info!("{msg}");
                warnings.push(msg);
            }
            let chosen = select_landmarks(&adjacency, cfg.landmark_count, &mut sim.rng)?;
            for &i in &chosen {
                let a = &mut sim.agents[i];
                a.mode = Mode::Static;
                a.stop_remaining = f64::INFINITY;
            }
            landmarks = chosen.iter().map(|&i| i as AgentId + 1).collect();
        }

        if let Some(stride) = cfg.trajectory_stride {
            if stride > 0 && step % stride == 0 {
                trajectories.extend(sim.agents.iter().map(|a| TrajectorySample {
                    t,
                    id: a.id,
                    position: a.position,
                    mode: a.mode,
                }));
            }
        }

        if step >= disperse_step {
            for i in 0..n {
                for j in i + 1..n {
                    let pi = sim.agents[i].position;
                    let pj = sim.agents[j].position;
                    let d = pi.sub(pj);
                    let slot = &mut open[i * n + j];
                    if d.dot(d) <= r2 {
                        let mid = pi.lerp(pj, 0.5);
                        match slot {
                            Some(enc) => {
                                enc.t_last = t;
                                enc.mid_sum = enc.mid_sum.add(mid);
                                enc.samples += 1;
                            }
                            None => {
                                *slot = Some(OpenEncounter {
                                    t_start: t,
                                    t_last: t,
                                    mid_sum: mid,
                                    samples: 1,
                                });
                                for k in [i, j] {
                                    if sim.agents[k].mode == Mode::Crw {
                                        let h = isotropic_heading(&mut sim.rng);
                                        sim.agents[k].heading = h;
                                    }
                                }
                            }
                        }
                    } else if let Some(enc) = slot.take() {
                        events.push(close(enc, i, j));
                    }
                }
            }
        }

        if step < steps {
            for i in 0..n {
                sim.advance(i);
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if let Some(enc) = open[i * n + j].take() {
                events.push(close(enc, i, j));
            }
        }
    }
    events.sort_by(|a: &EncounterEvent, b: &EncounterEvent| {
        a.t_start
            .total_cmp(&b.t_start)
            .then(a.id_a.cmp(&b.id_a))
            .then(a.id_b.cmp(&b.id_b))
    });
    let communities = build_communities(&events, &landmarks);
    let landmark_positions = landmarks
        .iter()
        .map(|&l| sim.agents[l as usize - 1].position)
        .collect();
    Ok(SimOutput {
        events,
        communities,
        landmarks,
        landmark_positions,
        trajectories,
        sample_interval: dt,
        warnings,
    })
}

fn close(enc: OpenEncounter, i: usize, j: usize) -> EncounterEvent {
    EncounterEvent {
        t_start: enc.t_start,
        t_end: enc.t_last,
        id_a: i as AgentId + 1,
        id_b: j as AgentId + 1,
        truth_position: Some(enc.mid_sum.scale(1.0 / enc.samples as f64)),
    }
}
