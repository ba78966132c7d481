//! End-to-end scenario runs: simulation, metric reconstruction, topological
//! inference, evaluation against ground truth, and artifact emission.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::{
    estimate_diagram_betti, ClassificationOutcome, ClassifierParams, IntervalSet, TrainingSample,
};
use crate::diagram_metrics::bottleneck_distance;
use crate::distance::DistanceMatrix;
use crate::embedding::{classical_mds, Embedding2D};
use crate::encounter::{
    build_encounter_graph, community_distances_on_graph, estimate_lambda3, shortest_path_metric,
};
use crate::error::{Error, Result};
use crate::geodesic::{estimate_deltas, reference_points, GeodesicOracle};
use crate::geometry::{Domain, Point, Polygon};
use crate::io;
use crate::persistence::{rips_persistence, PersistenceDiagram};
use crate::sim::{simulate, CrwParams, LandmarkCommunity, SensingParams, SimConfig, SimOutput};
use crate::subsample::{knn_filter, maxmin_subsample, SubsampleParams};
use crate::svg;

/// Per-dimension classifier settings used when inferring Betti numbers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSet {
    pub dim0: ClassifierParams,
    pub dim1: ClassifierParams,
}

impl Default for ClassifierSet {
    fn default() -> Self {
        Self { dim0: ClassifierParams::preset(0), dim1: ClassifierParams::preset(1) }
    }
}

fn default_reference_spacing() -> f64 {
    2.5
}

fn default_delta_spacing() -> f64 {
    1.0
}

fn default_percentile() -> f64 {
    0.95
}

fn default_dispersion() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: String,
    pub domain: Domain,
    /// Agents that keep moving after dispersion; landmarks come on top.
    pub n_agents: usize,
    pub n_landmarks: usize,
    pub duration: f64,
    #[serde(default = "default_dispersion")]
    pub dispersion_time: f64,
    pub crw: CrwParams,
    pub sensing: SensingParams,
    #[serde(default)]
    pub subsample: SubsampleParams,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Grid pitch of the free-space reference cloud behind `PD_M`.
    #[serde(default = "default_reference_spacing")]
    pub reference_spacing: f64,
    /// Probe pitch for the event covering radius.
    #[serde(default = "default_delta_spacing")]
    pub delta_spacing: f64,
    #[serde(default = "default_percentile")]
    pub lambda_percentile: f64,
    #[serde(default)]
    pub classifier: ClassifierSet,
    #[serde(default)]
    pub write_trajectories: bool,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.crw.validate()?;
        self.subsample.validate()?;
        self.classifier.dim0.validate()?;
        self.classifier.dim1.validate()?;
        if self.seeds.is_empty() {
            return Err(Error::param("seeds must not be empty"));
        }
        if self.n_agents < 1 {
            return Err(Error::param("at least one moving agent is required"));
        }
        if !(self.duration > self.dispersion_time && self.dispersion_time >= 0.0) {
            return Err(Error::param("duration must exceed dispersion_time >= 0"));
        }
        if !(self.reference_spacing > 0.0 && self.delta_spacing > 0.0) {
            return Err(Error::param("spacings must be positive"));
        }
        self.sensing.resolve_interval(self.duration, self.crw.speed)?;
        Ok(())
    }

    /// Ground-truth hole count: one per obstacle.
    pub fn true_holes(&self) -> usize {
        self.domain.obstacles.len()
    }

    pub fn sim_config(&self, seed: u64) -> SimConfig {
        SimConfig {
            domain: self.domain.clone(),
            n_agents: self.n_agents + self.n_landmarks,
            crw: self.crw.clone(),
            sensing: self.sensing.clone(),
            duration: self.duration,
            landmark_count: self.n_landmarks,
            dispersion_time: self.dispersion_time,
            seed,
            initial_positions: None,
            trajectory_stride: self.write_trajectories.then_some(50),
        }
    }

    /// Desk-scale presets: 30 m square, 80 moving agents, 12 landmarks,
    /// 300 s. Scenario 1 has no obstacle, 2 one central 8 m square, 3 two
    /// 6 m squares.
    pub fn desk(scenario: u8) -> Result<Self> {
        let obstacles = match scenario {
            1 => vec![],
            2 => vec![Polygon::rect(11.0, 11.0, 8.0, 8.0)],
            3 => vec![Polygon::rect(4.5, 12.0, 6.0, 6.0), Polygon::rect(19.5, 12.0, 6.0, 6.0)],
            _ => return Err(Error::param(format!("unknown scenario {scenario}"))),
        };
        Ok(Self {
            name: format!("desk-{scenario}"),
            domain: Domain::new(30.0, 30.0, obstacles)?,
            n_agents: 80,
            n_landmarks: 12,
            duration: 300.0,
            dispersion_time: default_dispersion(),
            crw: CrwParams::new(10.0, 1.0),
            sensing: SensingParams::new(0.5),
            subsample: SubsampleParams::default(),
            seeds: (0..20).collect(),
            output_dir: PathBuf::from("out"),
            reference_spacing: default_reference_spacing(),
            delta_spacing: default_delta_spacing(),
            lambda_percentile: default_percentile(),
            classifier: ClassifierSet::default(),
            write_trajectories: false,
        })
    }

    /// Full-size setup: 50 m square, 150 agents of which 20 landmarks,
    /// `l* = 0.3 m`, `v = 0.1 m/s`, 200 s. Slow.
    pub fn full_scale(scenario: u8) -> Result<Self> {
        let obstacles = match scenario {
            1 => vec![],
            2 => vec![Polygon::rect(18.0, 18.0, 14.0, 14.0)],
            3 => vec![Polygon::rect(7.0, 20.0, 10.0, 10.0), Polygon::rect(33.0, 20.0, 10.0, 10.0)],
            _ => return Err(Error::param(format!("unknown scenario {scenario}"))),
        };
        Ok(Self {
            name: format!("full-{scenario}"),
            domain: Domain::new(50.0, 50.0, obstacles)?,
            n_agents: 130,
            n_landmarks: 20,
            duration: 200.0,
            crw: CrwParams::new(0.3, 0.1),
            reference_spacing: 4.0,
            delta_spacing: 2.0,
            ..Self::desk(1)?
        })
    }
}

/// Free-space reference cloud with its geodesic Rips diagram `PD_M`.
#[derive(Clone, Debug)]
pub struct Reference {
    pub points: Vec<Point>,
    pub dist: DistanceMatrix,
    pub diagram: PersistenceDiagram,
    pub diameter: f64,
}

impl Reference {
    pub fn build(domain: &Domain, spacing: f64) -> Result<Self> {
        let points = reference_points(domain, spacing)?;
        let dist = GeodesicOracle::new(domain)?.matrix(&points)?;
        let diagram = rips_persistence(&dist, None)?;
        let diameter = dist.max_finite();
        Ok(Self { points, dist, diagram, diameter })
    }
}

/// Encounter-metric reconstruction of one run.
#[derive(Clone, Debug)]
pub struct MetricStage {
    /// All-pairs event distances; only built when topology is requested.
    pub dist: Option<DistanceMatrix>,
    /// Communities that recorded at least one event.
    pub communities: Vec<LandmarkCommunity>,
    pub landmark_dist: DistanceMatrix,
    pub warnings: Vec<String>,
}

pub fn metric_stage(cfg: &ScenarioConfig, sim: &SimOutput, full: bool) -> Result<MetricStage> {
    let mut warnings = Vec::new();
    let graph = build_encounter_graph(&sim.events, &sim.communities, cfg.crw.speed)?;
    let communities: Vec<LandmarkCommunity> = sim
        .communities
        .iter()
        .filter(|c| {
            let keep = !c.event_indices.is_empty();
            if !keep {
                warnings.push(format!("landmark {} recorded no events", c.landmark_id));
            }
            keep
        })
        .cloned()
        .collect();
    let landmark_dist = community_distances_on_graph(&graph, &communities)?;
    let dist = full.then(|| shortest_path_metric(&graph));
    Ok(MetricStage { dist, communities, landmark_dist, warnings })
}

/// Ground-truth evaluation of the reconstructed metric.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruthStats {
    pub lambda3: f64,
    pub lambda_pairs: usize,
    /// Share of landmark pairs with `d_G^L >= d_M - 2 r_d`.
    pub lower_bound_fraction: f64,
    pub delta_e: f64,
    pub delta_l: f64,
}

pub fn truth_stage(cfg: &ScenarioConfig, sim: &SimOutput, metric: &MetricStage) -> Result<TruthStats> {
    let oracle = GeodesicOracle::new(&cfg.domain)?;
    let centroids = metric
        .communities
        .iter()
        .map(|c| c.centroid.map(|p| cfg.domain.snap_free(p)).ok_or(Error::Empty("landmark community")))
        .collect::<Result<Vec<_>>>()?;
    let truth = oracle.matrix(&centroids)?;
    let est = &metric.landmark_dist;
    let lambda = estimate_lambda3(est, &truth, cfg.lambda_percentile)?;
    let slack = 2.0 * cfg.sensing.detection_radius;
    let k = est.len();
    let (mut ok, mut total) = (0usize, 0usize);
    for a in 0..k {
        for b in a + 1..k {
            total += 1;
            ok += usize::from(est.get(a, b) >= truth.get(a, b) - slack);
        }
    }
    let (delta_e, delta_l) = estimate_deltas(&sim.events, &metric.communities, &cfg.domain, cfg.delta_spacing)?;
    Ok(TruthStats {
        lambda3: lambda.lambda3_hat,
        lambda_pairs: lambda.pair_count,
        lower_bound_fraction: if total == 0 { 1.0 } else { ok as f64 / total as f64 },
        delta_e,
        delta_l,
    })
}

#[derive(Clone, Debug)]
pub struct Subsampled {
    pub kept: Vec<usize>,
    pub sample: Vec<usize>,
    pub dist: DistanceMatrix,
    pub diagram: PersistenceDiagram,
}

/// Optional KNN filter, maxmin subsample, then Rips persistence up to the
/// subsample diameter.
pub fn subsample_diagram(dist: &DistanceMatrix, params: &SubsampleParams, seed: u64, filter: bool) -> Result<Subsampled> {
    let kept = if filter {
        knn_filter(dist, params.k, params.q)?
    } else {
        (0..dist.len()).collect()
    };
    let target = params.target_size.min(kept.len());
    let sample = maxmin_subsample(dist, &kept, target, seed)?;
    let sub = dist.submatrix(&sample);
    let diagram = rips_persistence(&sub, None)?;
    Ok(Subsampled { kept, sample, dist: sub, diagram })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimDistances {
    #[serde(with = "crate::util::real")]
    pub dim0: f64,
    #[serde(with = "crate::util::real")]
    pub dim1: f64,
    #[serde(with = "crate::util::real")]
    pub max: f64,
}

impl DimDistances {
    pub fn between(a: &PersistenceDiagram, b: &PersistenceDiagram) -> Self {
        let dim0 = bottleneck_distance(a, b, 0).distance;
        let dim1 = bottleneck_distance(a, b, 1).distance;
        Self { dim0, dim1, max: dim0.max(dim1) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DimOutcome {
    /// Estimate including essential classes.
    pub betti: usize,
    #[serde(with = "crate::util::real")]
    pub threshold: f64,
    pub outcome: ClassificationOutcome,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedReport {
    pub seed: u64,
    pub n_events: usize,
    pub n_communities: usize,
    pub sample_interval: f64,
    pub n_kept: usize,
    pub n_sample: usize,
    pub truth: Option<TruthStats>,
    pub bottleneck_mp: Option<DimDistances>,
    pub bottleneck_ml: Option<DimDistances>,
    pub max_pairwise_distance: Option<f64>,
    pub beta0: usize,
    pub beta1: usize,
    pub true_beta1: usize,
    /// `d_B(PD_M, PD_P) <= (1 + lambda3) (2 delta_l + delta_e)`.
    pub stability_holds: Option<bool>,
    pub classification: [DimOutcome; 2],
    pub warnings: Vec<String>,
}

impl SeedReport {
    pub fn betti_correct(&self) -> bool {
        self.beta0 == 1 && self.beta1 == self.true_beta1
    }
}

#[derive(Clone, Debug)]
pub struct SeedAnalysis {
    pub report: SeedReport,
    pub sim: SimOutput,
    pub metric: MetricStage,
    pub topology: Subsampled,
    pub landmark_diagram: PersistenceDiagram,
    pub embedding: Option<Embedding2D>,
}

fn classify(pd: &PersistenceDiagram, dim: usize, params: &ClassifierParams) -> DimOutcome {
    let (betti, outcome) = estimate_diagram_betti(pd, dim, params);
    let lengths = IntervalSet::from_diagram(pd, dim).lengths;
    let norm = crate::util::quantile(&lengths, params.q).unwrap_or(0.0) + params.delta;
    DimOutcome { betti, threshold: params.tau * norm, outcome }
}

/// Every stage for one seed; `reference` enables the `PD_M` comparisons.
pub fn analyze_seed(cfg: &ScenarioConfig, seed: u64, reference: Option<&Reference>, withhold_truth: bool) -> Result<SeedAnalysis> {
    let sim = simulate(&cfg.sim_config(seed))?;
    let metric = metric_stage(cfg, &sim, true)?;
    let dist = metric.dist.as_ref().expect("full metric requested");
    let topology = subsample_diagram(dist, &cfg.subsample, seed, true)?;
    let landmark_diagram = rips_persistence(&metric.landmark_dist, None)?;
    let mut warnings = sim.warnings.clone();
    warnings.extend(metric.warnings.iter().cloned());
    if topology.sample.len() < cfg.subsample.target_size {
        warnings.push(format!("only {} points available for subsampling", topology.sample.len()));
    }
    let embedding = if topology.dist.is_finite() {
        Some(classical_mds(&topology.dist, 2)?)
    } else {
        warnings.push("subsample is disconnected; embedding skipped".into());
        None
    };
    let truth = if withhold_truth { None } else { Some(truth_stage(cfg, &sim, &metric)?) };
    let bottleneck_mp = reference.map(|r| DimDistances::between(&r.diagram, &topology.diagram));
    let bottleneck_ml = reference.map(|r| DimDistances::between(&r.diagram, &landmark_diagram));
    let stability_holds = match (&truth, &bottleneck_mp) {
        (Some(t), Some(b)) => Some(b.max <= (1.0 + t.lambda3) * (2.0 * t.delta_l + t.delta_e)),
        _ => None,
    };
    let c0 = classify(&topology.diagram, 0, &cfg.classifier.dim0);
    let c1 = classify(&topology.diagram, 1, &cfg.classifier.dim1);
    let report = SeedReport {
        seed,
        n_events: sim.events.len(),
        n_communities: metric.communities.len(),
        sample_interval: sim.sample_interval,
        n_kept: topology.kept.len(),
        n_sample: topology.sample.len(),
        truth,
        bottleneck_mp,
        bottleneck_ml,
        max_pairwise_distance: reference.map(|r| r.diameter),
        beta0: c0.betti,
        beta1: c1.betti,
        true_beta1: cfg.true_holes(),
        stability_holds,
        classification: [c0, c1],
        warnings,
    };
    Ok(SeedAnalysis { report, sim, metric, topology, landmark_diagram, embedding })
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    io::write_file(path, |w| {
        use std::io::Write;
        w.write_all(text.as_bytes())?;
        Ok(())
    })
}

/// Writes every artifact of one seed into `dir`.
pub fn write_seed_artifacts(dir: &Path, a: &SeedAnalysis, withhold_truth: bool) -> Result<()> {
    fs::create_dir_all(dir)?;
    io::write_file(&dir.join("events.csv"), |w| io::write_events(w, &a.sim.events, withhold_truth))?;
    if !a.sim.trajectories.is_empty() {
        io::write_file(&dir.join("trajectories.csv"), |w| io::write_trajectories(w, &a.sim.trajectories))?;
    }
    io::write_json(&dir.join("communities.json"), &io::community_map(&a.metric.communities))?;
    io::write_json(&dir.join("kept.json"), &a.topology.kept)?;
    io::write_json(&dir.join("sample.json"), &a.topology.sample)?;
    io::write_file(&dir.join("sample_distances.csv"), |w| a.topology.dist.write_csv(w))?;
    io::write_file(&dir.join("landmark_distances.csv"), |w| a.metric.landmark_dist.write_csv(w))?;
    io::write_file(&dir.join("diagram_P.csv"), |w| a.topology.diagram.write_csv(w))?;
    io::write_file(&dir.join("diagram_L.csv"), |w| a.landmark_diagram.write_csv(w))?;
    let [c0, c1] = &a.report.classification;
    write_text(
        &dir.join("diagram_P.svg"),
        &svg::diagram(
            &format!("PD_P seed {}", a.report.seed),
            &a.topology.diagram,
            &[(0, c0.threshold), (1, c1.threshold)],
        ),
    )?;
    if let Some(e) = &a.embedding {
        io::write_file(&dir.join("coordinates.csv"), |w| io::write_coordinates(w, &e.coordinates))?;
        let landmark_events: std::collections::HashSet<usize> =
            a.metric.communities.iter().flat_map(|c| c.event_indices.iter().copied()).collect();
        let groups: Vec<usize> = a.topology.sample.iter().map(|i| usize::from(landmark_events.contains(i))).collect();
        let pts: Vec<(f64, f64)> = e.coordinates.iter().map(|c| (c[0], c[1])).collect();
        write_text(
            &dir.join("embedding.svg"),
            &svg::scatter(&format!("MDS embedding seed {}", a.report.seed), &pts, Some(&groups)),
        )?;
    }
    io::write_json(&dir.join("classification.json"), &a.report.classification)?;
    io::write_json(&dir.join("report.json"), &a.report)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub kind: String,
    pub message: String,
}

impl From<&Error> for ErrorReport {
    fn from(e: &Error) -> Self {
        Self { kind: e.kind().to_string(), message: e.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedStatus {
    pub seed: u64,
    pub ok: bool,
    pub error: Option<ErrorReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArtifactEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: String,
    pub seeds: Vec<SeedStatus>,
    pub artifacts: Vec<ArtifactEntry>,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    Ok(hex::encode(Sha256::digest(fs::read(path)?)))
}

fn collect_files(root: &Path, dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        if path.is_dir() {
            collect_files(root, &path, out)?;
        } else if path.file_name().is_some_and(|n| n != "manifest.json") {
            out.push(path);
        }
    }
    Ok(())
}

/// Hashes every file under `root` except the manifest itself.
pub fn hash_artifacts(root: &Path) -> Result<Vec<ArtifactEntry>> {
    let mut files = Vec::new();
    collect_files(root, root, &mut files)?;
    let mut entries = files
        .iter()
        .map(|p| {
            let rel = p.strip_prefix(root).expect("under root").to_string_lossy().replace('\\', "/");
            Ok(ArtifactEntry { path: rel, sha256: sha256_file(p)? })
        })
        .collect::<Result<Vec<_>>>()?;
    entries.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(entries)
}

#[derive(Clone, Debug)]
pub struct PipelineSummary {
    pub root: PathBuf,
    pub manifest: Manifest,
    pub reports: Vec<SeedReport>,
}

/// Runs every seed of a scenario and writes its artifacts under
/// `output_dir/name`. Failed seeds leave an `error.json` and are marked in
/// the manifest; the other seeds are kept.
pub fn run_pipeline(cfg: &ScenarioConfig, withhold_truth: bool) -> Result<PipelineSummary> {
    cfg.validate()?;
    let root = cfg.output_dir.join(&cfg.name);
    if root.exists() {
        fs::remove_dir_all(&root)?;
    }
    fs::create_dir_all(&root)?;
    io::write_json(&root.join("config.json"), cfg)?;
    let reference = Reference::build(&cfg.domain, cfg.reference_spacing)?;
    io::write_file(&root.join("diagram_M.csv"), |w| reference.diagram.write_csv(w))?;
    write_text(&root.join("diagram_M.svg"), &svg::diagram("PD_M", &reference.diagram, &[]))?;

    let results: Vec<(u64, Result<SeedReport>)> = cfg
        .seeds
        .par_iter()
        .map(|&seed| {
            let dir = root.join(format!("seed_{seed}"));
            let res = analyze_seed(cfg, seed, Some(&reference), withhold_truth).and_then(|a| {
                write_seed_artifacts(&dir, &a, withhold_truth)?;
                Ok(a.report)
            });
            if let Err(e) = &res {
                log::error!("seed {seed} failed: {e}");
                let _ = fs::create_dir_all(&dir);
                let _ = io::write_json(&dir.join("error.json"), &ErrorReport::from(e));
            }
            (seed, res)
        })
        .collect();
    let mut seeds = Vec::new();
    let mut reports = Vec::new();
    for (seed, res) in results {
        match res {
            Ok(r) => {
                seeds.push(SeedStatus { seed, ok: true, error: None });
                reports.push(r);
            }
            Err(e) => seeds.push(SeedStatus { seed, ok: false, error: Some(ErrorReport::from(&e)) }),
        }
    }
    io::write_json(&root.join("summary.json"), &reports)?;
    let manifest = Manifest { scenario: cfg.name.clone(), seeds, artifacts: hash_artifacts(&root)? };
    io::write_json(&root.join("manifest.json"), &manifest)?;
    Ok(PipelineSummary { root, manifest, reports })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepParameter {
    NAgentsMoving,
    NLandmarks,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: usize,
    /// `None` on aggregate rows.
    pub seed: Option<u64>,
    #[serde(with = "crate::util::real")]
    pub lambda3: f64,
    #[serde(with = "crate::util::real")]
    pub db_mp: f64,
    #[serde(with = "crate::util::real")]
    pub db_ml: f64,
    #[serde(with = "crate::util::real")]
    pub delta_e: f64,
    #[serde(with = "crate::util::real")]
    pub delta_l: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub parameter: SweepParameter,
    pub means: Vec<SweepRow>,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "kind,value,seed,lambda3,db_mp,db_ml,delta_e,delta_l")?;
        for (kind, rows) in [("mean", &self.means), ("seed", &self.rows)] {
            for r in rows {
                let seed = r.seed.map(|s| s.to_string()).unwrap_or_default();
                writeln!(
                    w,
                    "{kind},{},{seed},{},{},{},{},{}",
                    r.value, r.lambda3, r.db_mp, r.db_ml, r.delta_e, r.delta_l
                )?;
            }
        }
        Ok(())
    }
}

fn sweep_seeds(base: &[u64], count: usize) -> Vec<u64> {
    let start = base.first().copied().unwrap_or(0);
    (0..count)
        .map(|i| base.get(i).copied().unwrap_or(start + i as u64))
        .collect()
}

/// Varies the moving-agent or landmark count and averages the metric and
/// topology errors over seeds.
pub fn run_sweep(base: &ScenarioConfig, parameter: SweepParameter, values: &[usize], seeds_per_value: usize) -> Result<SweepTable> {
    if values.len() < 2 {
        return Err(Error::param("a sweep needs at least two values"));
    }
    if seeds_per_value == 0 {
        return Err(Error::param("seeds_per_value must be positive"));
    }
    base.validate()?;
    let reference = Reference::build(&base.domain, base.reference_spacing)?;
    let seeds = sweep_seeds(&base.seeds, seeds_per_value);
    let jobs: Vec<(usize, u64)> = values.iter().flat_map(|&v| seeds.iter().map(move |&s| (v, s))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(value, seed)| {
            let mut cfg = base.clone();
            match parameter {
                SweepParameter::NAgentsMoving => cfg.n_agents = value,
                SweepParameter::NLandmarks => cfg.n_landmarks = value,
            }
            let a = analyze_seed(&cfg, seed, Some(&reference), false)?;
            let t = a.report.truth.expect("truth requested");
            Ok(SweepRow {
                value,
                seed: Some(seed),
                lambda3: t.lambda3,
                db_mp: a.report.bottleneck_mp.expect("reference given").max,
                db_ml: a.report.bottleneck_ml.expect("reference given").max,
                delta_e: t.delta_e,
                delta_l: t.delta_l,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let means = values
        .iter()
        .map(|&value| {
            let rs: Vec<&SweepRow> = rows.iter().filter(|r| r.value == value).collect();
            let avg = |f: fn(&SweepRow) -> f64| rs.iter().map(|r| f(r)).sum::<f64>() / rs.len() as f64;
            SweepRow {
                value,
                seed: None,
                lambda3: avg(|r| r.lambda3),
                db_mp: avg(|r| r.db_mp),
                db_ml: avg(|r| r.db_ml),
                delta_e: avg(|r| r.delta_e),
                delta_l: avg(|r| r.delta_l),
            }
        })
        .collect::<Vec<_>>();
    let table = SweepTable { parameter, means, rows };

    let tag = match parameter {
        SweepParameter::NAgentsMoving => "n_agents_moving",
        SweepParameter::NLandmarks => "n_landmarks",
    };
    let root = base.output_dir.join(format!("{}-sweep-{tag}", base.name));
    fs::create_dir_all(&root)?;
    io::write_file(&root.join("sweep.csv"), |w| table.write_csv(w))?;
    let xs: Vec<f64> = table.means.iter().map(|r| r.value as f64).collect();
    let series = |name: &str, f: fn(&SweepRow) -> f64| (name.to_string(), table.means.iter().map(f).collect::<Vec<_>>());
    write_text(
        &root.join("lambda3.svg"),
        &svg::trend("mean lambda3", tag, &xs, &[series("lambda3", |r| r.lambda3)]),
    )?;
    write_text(
        &root.join("bottleneck.svg"),
        &svg::trend(
            "mean bottleneck distance",
            tag,
            &xs,
            &[series("d_B(PD_M, PD_P)", |r| r.db_mp), series("d_B(PD_M, PD_L)", |r| r.db_ml)],
        ),
    )?;
    write_text(
        &root.join("deltas.svg"),
        &svg::trend("mean covering radii", tag, &xs, &[series("delta_e", |r| r.delta_e), series("delta_l", |r| r.delta_l)]),
    )?;
    Ok(table)
}

/// Domain with `count` axis-aligned squares of side `side` placed uniformly
/// at random, at least `gap` apart from each other and from the walls.
pub fn random_square_domain(width: f64, height: f64, count: usize, side: f64, gap: f64, seed: u64) -> Result<Domain> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (xmax, ymax) = (width - side - gap, height - side - gap);
    if !(xmax > gap && ymax > gap) {
        return Err(Error::param("squares do not fit in the domain"));
    }
    let mut corners: Vec<(f64, f64)> = Vec::with_capacity(count);
    for _ in 0..100_000 {
        if corners.len() == count {
            break;
        }
        let c = (rng.random_range(gap..xmax), rng.random_range(gap..ymax));
        let clear = corners
            .iter()
            .all(|o| (c.0 - o.0).abs() >= side + gap || (c.1 - o.1).abs() >= side + gap);
        if clear {
            corners.push(c);
        }
    }
    if corners.len() < count {
        return Err(Error::param("could not place all squares"));
    }
    Domain::new(width, height, corners.iter().map(|&(x, y)| Polygon::rect(x, y, side, side)).collect())
}

/// One labelled training run taken from a diagram.
pub fn training_sample(pd: &PersistenceDiagram, dim: usize, truth: usize) -> TrainingSample {
    TrainingSample {
        intervals: IntervalSet::from_diagram(pd, dim),
        essential: pd.essential_count(dim),
        truth,
    }
}

/// Event-level diagrams for `seeds`, keyed by seed; no ground truth used.
pub fn diagrams_for_seeds(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<BTreeMap<u64, PersistenceDiagram>> {
    seeds
        .par_iter()
        .map(|&seed| {
            let sim = simulate(&cfg.sim_config(seed))?;
            let metric = metric_stage(cfg, &sim, true)?;
            let d = subsample_diagram(metric.dist.as_ref().expect("full"), &cfg.subsample, seed, true)?;
            Ok((seed, d.diagram))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(scenario: u8) -> ScenarioConfig {
        let mut cfg = ScenarioConfig::desk(scenario).unwrap();
        cfg.n_agents = 30;
        cfg.n_landmarks = 4;
        cfg.duration = 60.0;
        cfg.subsample.target_size = 40;
        cfg.reference_spacing = 5.0;
        cfg.delta_spacing = 3.0;
        cfg.seeds = vec![1, 2];
        cfg
    }

    #[test]
    fn presets_are_valid() {
        for s in 1..=3 {
            ScenarioConfig::desk(s).unwrap().validate().unwrap();
            ScenarioConfig::full_scale(s).unwrap().validate().unwrap();
        }
        assert!(ScenarioConfig::desk(4).is_err());
        let mut cfg = tiny(1);
        cfg.seeds.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_json_round_trip() {
        let cfg = ScenarioConfig::desk(2).unwrap();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ScenarioConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn seed_analysis_is_consistent() {
        let cfg = tiny(2);
        let a = analyze_seed(&cfg, 3, None, false).unwrap();
        assert_eq!(a.report.n_events, a.sim.events.len());
        assert!(a.report.n_sample <= 40);
        let t = a.report.truth.as_ref().unwrap();
        assert!(t.lambda3 >= 0.0 && t.delta_e > 0.0);
        assert!(a.report.bottleneck_mp.is_none());
        let hidden = analyze_seed(&cfg, 3, None, true).unwrap();
        assert!(hidden.report.truth.is_none());
        assert_eq!(hidden.topology.diagram, a.topology.diagram);
    }

    #[test]
    fn random_squares_keep_their_distance() {
        let d = random_square_domain(30.0, 30.0, 2, 5.0, 2.0, 9).unwrap();
        assert_eq!(d.obstacles.len(), 2);
        assert!(random_square_domain(10.0, 10.0, 1, 9.0, 1.0, 0).is_err());
    }

    #[test]
    fn sweep_seed_list_extends() {
        assert_eq!(sweep_seeds(&[4, 9], 3), vec![4, 9, 6]);
    }
}
