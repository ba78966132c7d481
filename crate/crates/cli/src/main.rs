//! `swarmtopo` command-line front end.
//!
//! Every subcommand prints one JSON object on stdout. Failures print
//! `{"ok": false, "error": {"kind", "message"}}` and exit nonzero.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use swarmtopo::classifier::{estimate_diagram_betti, train, ParameterGrid, TrainedParams};
use swarmtopo::diagram_metrics::bottleneck_distance;
use swarmtopo::embedding::classical_mds;
use swarmtopo::encounter::{build_encounter_graph, community_distances_on_graph, shortest_path_metric};
use swarmtopo::io;
use swarmtopo::persistence::{rips_persistence, PersistenceDiagram};
use swarmtopo::pipeline::{run_pipeline, run_sweep, training_sample, ErrorReport, ScenarioConfig, SweepParameter};
use swarmtopo::sim::simulate;
use swarmtopo::subsample::{knn_filter, maxmin_subsample};
use swarmtopo::{svg, DistanceMatrix, Error};

/// Overrides the output directory of the configuration (but not `--out`).
const OUT_ENV: &str = "SWARMTOPO_OUT";

#[derive(Parser)]
#[command(name = "swarmtopo", version, about = "Environment topology from agent encounters")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// Scenario JSON file, or a preset: desk-1..3, full-1..3.
    #[arg(long, default_value = "desk-2")]
    config: String,
    /// Single seed to use instead of the configured seed list.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (overrides the config and the environment).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave ground-truth positions out of every artifact.
    #[arg(long)]
    withhold_truth: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one seed and write events, communities and landmarks.
    Simulate(Common),
    /// Encounter-graph distances from an events file.
    Metric {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        events: PathBuf,
        #[arg(long)]
        communities: PathBuf,
        /// Skip the all-pairs event matrix.
        #[arg(long)]
        landmarks_only: bool,
    },
    /// Classical MDS of a distance matrix.
    Embed {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distances: PathBuf,
    },
    /// KNN filter plus maxmin subsample of a distance matrix.
    Subsample {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distances: PathBuf,
        /// Skip the density filter.
        #[arg(long)]
        no_filter: bool,
    },
    /// Rips persistence diagram of a distance matrix.
    Persist {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        distances: PathBuf,
        /// Largest filtration value (default: the diameter).
        #[arg(long)]
        max_scale: Option<f64>,
    },
    /// Bottleneck distance between two diagram files.
    Bottleneck {
        #[command(flatten)]
        common: Common,
        a: PathBuf,
        b: PathBuf,
        #[arg(long, default_value_t = 1)]
        dim: usize,
    },
    /// Fit classifier parameters on labelled diagrams.
    ClassifyTrain {
        #[command(flatten)]
        common: Common,
        /// Diagram CSV files.
        #[arg(required = true)]
        diagrams: Vec<PathBuf>,
        /// True Betti number: one value for all diagrams or one per diagram.
        #[arg(long, value_delimiter = ',', required = true)]
        truth: Vec<usize>,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 20.0)]
        alpha: f64,
    },
    /// Classify the features of one diagram.
    ClassifyEval {
        #[command(flatten)]
        common: Common,
        diagram: PathBuf,
        /// Trained parameter files; dimensions not covered use the config.
        #[arg(long)]
        params: Vec<PathBuf>,
    },
    /// Full pipeline over every configured seed.
    Pipeline(Common),
    /// Vary the moving-agent or landmark count.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        parameter: Parameter,
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        seeds_per_value: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Parameter {
    NAgentsMoving,
    NLandmarks,
}

type Outcome = Result<Value, Error>;

fn preset(name: &str) -> Option<swarmtopo::Result<ScenarioConfig>> {
    let (kind, n) = name.split_once('-')?;
    let n: u8 = n.parse().ok()?;
    match kind {
        "desk" => Some(ScenarioConfig::desk(n)),
        "full" => Some(ScenarioConfig::full_scale(n)),
        _ => None,
    }
}

fn load_config(c: &Common) -> swarmtopo::Result<ScenarioConfig> {
    let path = Path::new(&c.config);
    let mut cfg = match preset(&c.config) {
        Some(p) if !path.exists() => p?,
        _ => io::read_json(path)?,
    };
    if let Some(dir) = std::env::var_os(OUT_ENV) {
        cfg.output_dir = dir.into();
    }
    if let Some(dir) = &c.out {
        cfg.output_dir = dir.clone();
    }
    if let Some(seed) = c.seed {
        cfg.seeds = vec![seed];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn first_seed(cfg: &ScenarioConfig) -> u64 {
    cfg.seeds[0]
}

fn read_matrix(path: &Path) -> swarmtopo::Result<DistanceMatrix> {
    DistanceMatrix::read_csv(io::open(path)?)
}

fn read_diagram(path: &Path) -> swarmtopo::Result<PersistenceDiagram> {
    PersistenceDiagram::read_csv(io::open(path)?)
}

fn write_text(path: &Path, text: &str) -> swarmtopo::Result<()> {
    io::write_file(path, |w| {
        use std::io::Write;
        w.write_all(text.as_bytes())?;
        Ok(())
    })
}

fn shown(p: &Path) -> String {
    p.display().to_string()
}

fn cmd_simulate(c: &Common) -> Outcome {
    let cfg = load_config(c)?;
    let seed = first_seed(&cfg);
    let sim = simulate(&cfg.sim_config(seed))?;
    let dir = cfg.output_dir.join(&cfg.name).join(format!("seed_{seed}"));
    fs::create_dir_all(&dir)?;
    io::write_file(&dir.join("events.csv"), |w| io::write_events(w, &sim.events, c.withhold_truth))?;
    io::write_json(&dir.join("communities.json"), &io::community_map(&sim.communities))?;
    let positions = (!c.withhold_truth).then_some(&sim.landmark_positions);
    io::write_json(&dir.join("landmarks.json"), &json!({ "ids": sim.landmarks, "positions": positions }))?;
    if !sim.trajectories.is_empty() {
        io::write_file(&dir.join("trajectories.csv"), |w| io::write_trajectories(w, &sim.trajectories))?;
    }
    Ok(json!({
        "dir": shown(&dir),
        "seed": seed,
        "events": sim.events.len(),
        "sample_interval": sim.sample_interval,
        "warnings": sim.warnings,
    }))
}

fn cmd_metric(c: &Common, events: &Path, communities: &Path, landmarks_only: bool) -> Outcome {
    let cfg = load_config(c)?;
    let events = io::read_events(io::open(events)?)?;
    let map: BTreeMap<String, Vec<usize>> = io::read_json(communities)?;
    let communities: Vec<_> = io::communities_from_map(&map, &events)?
        .into_iter()
        .filter(|com| !com.event_indices.is_empty())
        .collect();
    let graph = build_encounter_graph(&events, &communities, cfg.crw.speed)?;
    let out = cfg.output_dir.clone();
    fs::create_dir_all(&out)?;
    let landmark = community_distances_on_graph(&graph, &communities)?;
    let landmark_path = out.join("landmark_distances.csv");
    io::write_file(&landmark_path, |w| landmark.write_csv(w))?;
    let mut files = vec![shown(&landmark_path)];
    if !landmarks_only {
        let path = out.join("distances.csv");
        let full = shortest_path_metric(&graph);
        io::write_file(&path, |w| full.write_csv(w))?;
        files.push(shown(&path));
    }
    Ok(json!({ "events": events.len(), "communities": communities.len(), "files": files }))
}

fn cmd_embed(c: &Common, distances: &Path) -> Outcome {
    let cfg = load_config(c)?;
    let dist = read_matrix(distances)?;
    let emb = classical_mds(&dist, 2)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let coords = cfg.output_dir.join("coordinates.csv");
    io::write_file(&coords, |w| io::write_coordinates(w, &emb.coordinates))?;
    let pts: Vec<(f64, f64)> = emb.coordinates.iter().map(|p| (p[0], p[1])).collect();
    write_text(&cfg.output_dir.join("embedding.svg"), &svg::scatter("MDS embedding", &pts, None))?;
    Ok(json!({ "coordinates": shown(&coords), "eigenvalues": emb.eigenvalues_used, "stress": emb.stress }))
}

fn cmd_subsample(c: &Common, distances: &Path, no_filter: bool) -> Outcome {
    let cfg = load_config(c)?;
    let dist = read_matrix(distances)?;
    let p = &cfg.subsample;
    let kept = if no_filter { (0..dist.len()).collect() } else { knn_filter(&dist, p.k, p.q)? };
    let sample = maxmin_subsample(&dist, &kept, p.target_size.min(kept.len()), first_seed(&cfg))?;
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    io::write_json(&out.join("kept.json"), &kept)?;
    io::write_json(&out.join("sample.json"), &sample)?;
    let sub = dist.submatrix(&sample);
    io::write_file(&out.join("sample_distances.csv"), |w| sub.write_csv(w))?;
    Ok(json!({ "kept": kept.len(), "sample": sample.len(), "dir": shown(out) }))
}

fn cmd_persist(c: &Common, distances: &Path, max_scale: Option<f64>) -> Outcome {
    let cfg = load_config(c)?;
    let dist = read_matrix(distances)?;
    let pd = rips_persistence(&dist, max_scale)?;
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("diagram.csv");
    io::write_file(&path, |w| pd.write_csv(w))?;
    write_text(&cfg.output_dir.join("diagram.svg"), &svg::diagram("persistence diagram", &pd, &[]))?;
    let count = |d| pd.in_dim(d).count();
    Ok(json!({ "diagram": shown(&path), "features": [count(0), count(1)] }))
}

fn cmd_bottleneck(c: &Common, a: &Path, b: &Path, dim: usize) -> Outcome {
    let cfg = load_config(c)?;
    let m = bottleneck_distance(&read_diagram(a)?, &read_diagram(b)?, dim);
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("bottleneck.json");
    io::write_json(&path, &m)?;
    Ok(json!({ "file": shown(&path), "distance": serde_json::to_value(&m)?["distance"].take() }))
}

fn cmd_classify_train(c: &Common, diagrams: &[PathBuf], truth: &[usize], dim: usize, alpha: f64) -> Outcome {
    let cfg = load_config(c)?;
    if truth.len() != 1 && truth.len() != diagrams.len() {
        return Err(Error::param("give one --truth value or one per diagram"));
    }
    let samples = diagrams
        .iter()
        .enumerate()
        .map(|(k, p)| Ok(training_sample(&read_diagram(p)?, dim, truth[k.min(truth.len() - 1)])))
        .collect::<swarmtopo::Result<Vec<_>>>()?;
    let result = train(&samples, &ParameterGrid::default(), alpha)?;
    let trained = TrainedParams::from_result(dim, &result);
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join(format!("trained_dim{dim}.json"));
    io::write_json(&path, &trained)?;
    Ok(json!({ "file": shown(&path), "params": trained, "smoothed_error": result.smoothed_error }))
}

fn cmd_classify_eval(c: &Common, diagram: &Path, params: &[PathBuf]) -> Outcome {
    let cfg = load_config(c)?;
    let pd = read_diagram(diagram)?;
    let mut set = [cfg.classifier.dim0, cfg.classifier.dim1];
    for p in params {
        let t: TrainedParams = io::read_json(p)?;
        let slot = set
            .get_mut(t.dim)
            .ok_or_else(|| Error::param(format!("trained dimension {} is not 0 or 1", t.dim)))?;
        *slot = t.params()?;
    }
    let dims: Vec<Value> = set
        .iter()
        .enumerate()
        .map(|(dim, p)| {
            let (betti, outcome) = estimate_diagram_betti(&pd, dim, p);
            json!({ "dim": dim, "betti": betti, "params": p, "outcome": outcome })
        })
        .collect();
    let report = json!({ "diagram": shown(diagram), "dims": dims });
    fs::create_dir_all(&cfg.output_dir)?;
    let path = cfg.output_dir.join("classification.json");
    io::write_json(&path, &report)?;
    Ok(report)
}

fn cmd_pipeline(c: &Common) -> Outcome {
    let cfg = load_config(c)?;
    let summary = run_pipeline(&cfg, c.withhold_truth)?;
    let failed: Vec<&ErrorReport> = summary.manifest.seeds.iter().filter_map(|s| s.error.as_ref()).collect();
    if !failed.is_empty() {
        return Err(Error::param(format!(
            "{} of {} seeds failed; see {}",
            failed.len(),
            summary.manifest.seeds.len(),
            summary.root.join("manifest.json").display()
        )));
    }
    let correct = summary.reports.iter().filter(|r| r.betti_correct()).count();
    Ok(json!({
        "root": shown(&summary.root),
        "seeds": summary.reports.len(),
        "betti_correct": correct,
        "artifacts": summary.manifest.artifacts.len(),
    }))
}

fn cmd_sweep(c: &Common, parameter: Parameter, values: &[usize], seeds_per_value: usize) -> Outcome {
    let cfg = load_config(c)?;
    let parameter = match parameter {
        Parameter::NAgentsMoving => SweepParameter::NAgentsMoving,
        Parameter::NLandmarks => SweepParameter::NLandmarks,
    };
    let table = run_sweep(&cfg, parameter, values, seeds_per_value)?;
    Ok(json!({ "output_dir": shown(&cfg.output_dir), "means": table.means }))
}

fn dispatch(cli: Cli) -> Outcome {
    match cli.command {
        Command::Simulate(c) => cmd_simulate(&c),
        Command::Metric { common, events, communities, landmarks_only } => {
            cmd_metric(&common, &events, &communities, landmarks_only)
        }
        Command::Embed { common, distances } => cmd_embed(&common, &distances),
        Command::Subsample { common, distances, no_filter } => cmd_subsample(&common, &distances, no_filter),
        Command::Persist { common, distances, max_scale } => cmd_persist(&common, &distances, max_scale),
        Command::Bottleneck { common, a, b, dim } => cmd_bottleneck(&common, &a, &b, dim),
        Command::ClassifyTrain { common, diagrams, truth, dim, alpha } => {
            cmd_classify_train(&common, &diagrams, &truth, dim, alpha)
        }
        Command::ClassifyEval { common, diagram, params } => cmd_classify_eval(&common, &diagram, &params),
        Command::Pipeline(c) => cmd_pipeline(&c),
        Command::Sweep { common, parameter, values, seeds_per_value } => {
            cmd_sweep(&common, parameter, &values, seeds_per_value)
        }
    }
}

fn fail(kind: &str, message: String) -> ExitCode {
    println!("{}", json!({ "ok": false, "error": { "kind": kind, "message": message } }));
    ExitCode::FAILURE
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => e.exit(),
        Err(e) => return fail("usage", e.to_string()),
    };
    match dispatch(cli) {
        Ok(mut v) => {
            if let Value::Object(m) = &mut v {
                m.insert("ok".into(), Value::Bool(true));
            }
            println!("{v}");
            ExitCode::SUCCESS
        }
        Err(e) => fail(e.kind(), e.to_string()),
    }
}
