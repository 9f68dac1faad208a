//! Command-line interface behind the `impulses` binary.

use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::filter::{FilterSpec, ImpulseTrain, ViewHistory};
use crate::graph::{VideoGraph, VideoId};
use crate::harness::{generate_synthetic, run_experiment, ExperimentPlan, Scope, SyntheticSpec};
use crate::inference::{
    fit_prior, knn_baseline, lbp_predict, regression_baseline, GmrfParams, Method,
};
use crate::io::{self, write_atomic, PredictionRow};
use crate::longevity::{raw_longevity, score_corpus, LongevityConfig, ScoredVideo};
use crate::nnls::{deconvolve, DEFAULT_TOLERANCE};
use crate::stats::{feature_score_correlation, neighbor_difference_test, score_histogram};

#[derive(Debug, Parser)]
#[command(
    name = "impulses",
    version,
    about = "Impulse deconvolution, longevity scoring and score inference for video corpora"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recover non-negative impulse trains from view histories.
    Deconvolve(DeconvolveArgs),
    /// Turn impulse trains into longevity scores in 0..=100.
    Score(ScoreArgs),
    /// Predict scores of unlabeled nodes.
    Predict(PredictArgs),
    /// Run the masking experiment and report mean squared errors.
    Eval(EvalArgs),
    /// Write a seeded synthetic corpus.
    GenSynth(GenSynthArgs),
    /// Feature correlations, neighbor similarity and score histograms.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct DeconvolveArgs {
    /// History table (increments or cumulative layout).
    pub histories: PathBuf,
    /// Decay rate of the exponential response.
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    /// Relative optimality tolerance of the solver.
    #[arg(long, default_value_t = DEFAULT_TOLERANCE)]
    pub tolerance: f64,
    /// Impulse table to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    /// Impulse table written by `deconvolve`.
    pub impulses: PathBuf,
    /// Minimum strength counted as an impulse; 0 counts any positive value.
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Score table to write, sorted by video_id.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GraphInput {
    /// Node table; an empty observed_score marks an unlabeled video.
    #[arg(long)]
    pub nodes: PathBuf,
    /// Edge list of related-video pairs.
    #[arg(long)]
    pub edges: PathBuf,
    /// Score table overriding the node file's observed scores.
    #[arg(long)]
    pub scores: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GmrfArgs {
    /// Prior mean; fitted from labeled scores when omitted.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Prior standard deviation; fitted from labeled scores when omitted.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Cap on belief-propagation sweeps.
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Largest belief change that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    pub convergence_tol: f64,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// gmrf_lbp, regression or knn.
    #[arg(long, default_value = "gmrf_lbp")]
    pub method: Method,
    /// Neighborhood sizes for knn; one row set per k.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
    pub k_set: Vec<usize>,
    #[command(flatten)]
    pub gmrf: GmrfArgs,
    /// Where to write solver diagnostics as JSON; standard error otherwise.
    #[arg(long)]
    pub diagnostics: Option<PathBuf>,
    /// Prediction table to write.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// Fractions of nodes hidden in each trial.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5")]
    pub ratios: Vec<f64>,
    /// Independent masks per ratio.
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    /// Seed from which every trial mask is derived.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Methods to compare.
    #[arg(long, value_delimiter = ',', default_value = "gmrf_lbp,regression,knn")]
    pub method: Vec<Method>,
    /// KNN neighborhood sizes; the best one is reported per trial.
    #[arg(long, value_delimiter = ',', default_value = "1,3,5,7,9")]
    pub k_set: Vec<usize>,
    /// Restrict to one category's induced subgraph.
    #[arg(long)]
    pub category: Option<String>,
    /// Cap on belief-propagation sweeps.
    #[arg(long, default_value_t = 100)]
    pub max_iterations: usize,
    /// Largest belief change that counts as converged.
    #[arg(long, default_value_t = 1e-6)]
    pub convergence_tol: f64,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
    /// Mean-MSE series per method and ratio, as CSV.
    #[arg(long)]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenSynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub num_videos: usize,
    #[arg(long, default_value_t = 99)]
    pub horizon: usize,
    /// Mean number of impulses per video.
    #[arg(long, default_value_t = 15.0)]
    pub impulse_rate: f64,
    #[arg(long, default_value_t = 50.0)]
    pub strength_min: f64,
    #[arg(long, default_value_t = 500.0)]
    pub strength_max: f64,
    #[arg(long, default_value_t = 0.0)]
    pub noise_std: f64,
    /// Decay rate used to synthesize histories.
    #[arg(long, default_value_t = 0.3)]
    pub gamma: f64,
    #[arg(long, default_value_t = 20)]
    pub community_size: usize,
    #[arg(long, default_value_t = 0.25)]
    pub intra_prob: f64,
    #[arg(long, default_value_t = 0.0005)]
    pub inter_prob: f64,
    #[arg(long, default_value_t = 0.12)]
    pub coupling: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Output directory; receives nodes.csv, edges.csv, histories.csv,
    /// impulses.csv and scores.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[command(flatten)]
    pub graph: GraphInput,
    /// Histories to rescore at each `--gamma` for the histograms.
    #[arg(long)]
    pub histories: Option<PathBuf>,
    /// Decay rates to rescore histories at.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.3,0.6")]
    pub gamma: Vec<f64>,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Seed for the random pairs of the neighbor test.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report JSON.
    #[arg(long)]
    pub out: PathBuf,
}

/// Parses the process arguments and runs the chosen subcommand.
pub fn run() -> anyhow::Result<()> {
    execute(Cli::parse())
}

pub fn execute(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Deconvolve(a) => cmd_deconvolve(&a),
        Command::Score(a) => cmd_score(&a),
        Command::Predict(a) => cmd_predict(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::GenSynth(a) => cmd_gen_synth(&a),
        Command::Stats(a) => cmd_stats(&a),
    }
}

fn cmd_deconvolve(a: &DeconvolveArgs) -> anyhow::Result<()> {
    let histories = io::read_histories(&a.histories)?;
    let (trains, failures) = deconvolve_all(&histories, a.gamma, a.tolerance);
    if !failures.is_empty() {
        for (id, e) in &failures {
            eprintln!("{id}: {e}");
        }
        bail!(
            "{} of {} videos failed; nothing written",
            failures.len(),
            histories.len()
        );
    }
    write_atomic(&a.out, |w| io::write_impulses(w, &trains))?;
    Ok(())
}

fn deconvolve_all(
    histories: &[ViewHistory],
    gamma: f64,
    tolerance: f64,
) -> (Vec<ImpulseTrain>, Vec<(VideoId, String)>) {
    let mut trains = Vec::with_capacity(histories.len());
    let mut failures = Vec::new();
    for h in histories {
        let result =
            FilterSpec::new(gamma, h.len()).and_then(|spec| deconvolve(h, &spec, tolerance));
        match result {
            Ok(t) => trains.push(t),
            Err(e) => failures.push((h.video_id.clone(), e.to_string())),
        }
    }
    (trains, failures)
}

fn score_trains(trains: &[ImpulseTrain], epsilon: f64) -> anyhow::Result<Vec<ScoredVideo>> {
    let cfg = LongevityConfig::new(epsilon)?;
    let mut raws = BTreeMap::new();
    for t in trains {
        if raws
            .insert(t.video_id.clone(), raw_longevity(&t.impulses, &cfg))
            .is_some()
        {
            bail!("duplicate video_id {}", t.video_id);
        }
    }
    Ok(score_corpus(&raws)?.videos.into_values().collect())
}

fn cmd_score(a: &ScoreArgs) -> anyhow::Result<()> {
    let trains = io::read_impulses(&a.impulses)?;
    let scored = score_trains(&trains, a.epsilon)?;
    write_atomic(&a.out, |w| io::write_scores(w, &scored))?;
    Ok(())
}

fn load_graph(input: &GraphInput) -> anyhow::Result<VideoGraph> {
    let mut nodes = io::read_nodes(&input.nodes)?;
    let edges = io::read_edges(&input.edges)?;
    if let Some(path) = &input.scores {
        let scores: BTreeMap<VideoId, u8> = io::read_scores(path)?
            .into_iter()
            .map(|s| (s.video_id, s.score))
            .collect();
        for n in &mut nodes {
            n.observed_score =
                Some(*scores.get(&n.video_id).with_context(|| {
                    format!("{} has no score for {}", path.display(), n.video_id)
                })?);
        }
    }
    Ok(VideoGraph::new(nodes, &edges)?)
}

fn labeled_scores(graph: &VideoGraph) -> Vec<f64> {
    graph
        .labeled()
        .filter_map(|i| graph.node(i).observed_score.map(f64::from))
        .collect()
}

fn rows(
    method: &str,
    predictions: BTreeMap<VideoId, u8>,
) -> impl Iterator<Item = PredictionRow> + '_ {
    predictions
        .into_iter()
        .map(move |(video_id, predicted_score)| PredictionRow {
            video_id,
            method: method.to_owned(),
            predicted_score,
            true_score: None,
        })
}

fn cmd_predict(a: &PredictArgs) -> anyhow::Result<()> {
    let graph = load_graph(&a.graph)?;
    let mut out = Vec::new();
    if graph.unlabeled().next().is_none() {
        log::info!("every node is labeled; nothing to predict");
    } else {
        match a.method {
            Method::GmrfLbp => {
                let mut params = match (a.gmrf.mu, a.gmrf.sigma) {
                    (Some(mu), Some(sigma)) => GmrfParams::new(mu, sigma)?,
                    (mu, sigma) => {
                        let fit = fit_prior(&labeled_scores(&graph))?;
                        GmrfParams::new(mu.unwrap_or(fit.mu), sigma.unwrap_or(fit.sigma))?
                    }
                };
                params.max_iterations = a.gmrf.max_iterations;
                params.convergence_tol = a.gmrf.convergence_tol;
                let result = lbp_predict(&graph, &params)?;
                #[derive(Serialize)]
                struct Diagnostics<'a> {
                    mu: f64,
                    sigma: f64,
                    #[serde(flatten)]
                    lbp: &'a crate::inference::LbpDiagnostics,
                }
                let json = serde_json::to_string(&Diagnostics {
                    mu: params.mu,
                    sigma: params.sigma,
                    lbp: &result.diagnostics,
                })?;
                match &a.diagnostics {
                    Some(p) => write_atomic(p, |w| {
                        writeln!(w, "{json}").map_err(|e| crate::Error::io(p, e))
                    })?,
                    None => eprintln!("{json}"),
                }
                out.extend(rows(a.method.name(), result.predictions));
            }
            Method::Regression => {
                out.extend(rows(
                    a.method.name(),
                    regression_baseline(&graph)?.predictions,
                ));
            }
            Method::Knn => {
                let result = knn_baseline(&graph, &a.k_set)?;
                for (k, preds) in result.per_k {
                    out.extend(rows(&format!("knn@{k}"), preds).collect::<Vec<_>>());
                }
            }
        }
    }
    write_atomic(&a.out, |w| io::write_predictions(w, &out))?;
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> anyhow::Result<()> {
    let graph = load_graph(&a.graph)?;
    if let Some(n) = graph.nodes().iter().find(|n| n.observed_score.is_none()) {
        bail!(
            "evaluation needs every node scored; {} has no score",
            n.video_id
        );
    }
    let plan = ExperimentPlan {
        unlabeled_ratios: a.ratios.clone(),
        trials: a.trials,
        rng_seed: a.seed,
        methods: a.method.clone(),
        scope: a
            .category
            .clone()
            .map_or(Scope::WholeNetwork, Scope::Category),
        k_candidates: a.k_set.clone(),
        max_iterations: a.max_iterations,
        convergence_tol: a.convergence_tol,
        ..Default::default()
    };
    let report = run_experiment(&plan, &graph)?;
    let json = report.to_json()?;
    write_atomic(&a.out, |w| {
        w.write_all(json.as_bytes())
            .map_err(|e| crate::Error::io(&a.out, e))
    })?;
    if let Some(p) = &a.series {
        let csv = report.mse_series_csv();
        write_atomic(p, |w| {
            w.write_all(csv.as_bytes())
                .map_err(|e| crate::Error::io(p, e))
        })?;
    }
    Ok(())
}

fn cmd_gen_synth(a: &GenSynthArgs) -> anyhow::Result<()> {
    let spec = SyntheticSpec {
        num_videos: a.num_videos,
        horizon: a.horizon,
        impulse_rate: a.impulse_rate,
        impulse_strength_range: (a.strength_min, a.strength_max),
        noise_std: a.noise_std,
        gamma_true: a.gamma,
        community_size: a.community_size,
        intra_edge_prob: a.intra_prob,
        inter_edge_prob: a.inter_prob,
        feature_coupling: a.coupling,
        rng_seed: a.seed,
    };
    let corpus = generate_synthetic(&spec)?;
    std::fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let path = |name: &str| a.out.join(name);
    let scored: Vec<ScoredVideo> = corpus.scores.videos.values().cloned().collect();
    write_atomic(&path("nodes.csv"), |w| {
        io::write_nodes(w, corpus.graph.nodes())
    })?;
    write_atomic(&path("edges.csv"), |w| io::write_edges(w, &corpus.edges))?;
    write_atomic(&path("histories.csv"), |w| {
        io::write_increments(w, &corpus.histories)
    })?;
    write_atomic(&path("impulses.csv"), |w| {
        io::write_impulses(w, &corpus.trains)
    })?;
    write_atomic(&path("scores.csv"), |w| io::write_scores(w, &scored))?;
    Ok(())
}

#[derive(Serialize)]
struct StatsReport {
    correlations: Vec<crate::stats::FeatureCorrelation>,
    neighbor_difference: crate::stats::NeighborReport,
    /// Score histogram (101 bins) keyed by the decay rate it was scored at,
    /// or by `observed` when no histories were given.
    histograms: BTreeMap<String, Vec<u64>>,
}

fn cmd_stats(a: &StatsArgs) -> anyhow::Result<()> {
    let graph = load_graph(&a.graph)?;
    let scores: BTreeMap<VideoId, u8> = graph
        .nodes()
        .iter()
        .filter_map(|n| n.observed_score.map(|s| (n.video_id.clone(), s)))
        .collect();
    let mut histograms = BTreeMap::new();
    match &a.histories {
        Some(p) => {
            let histories = io::read_histories(p)?;
            for &gamma in &a.gamma {
                let (trains, failures) = deconvolve_all(&histories, gamma, DEFAULT_TOLERANCE);
                if let Some((id, e)) = failures.first() {
                    bail!("deconvolution at gamma {gamma} failed for {id}: {e}");
                }
                let scored = score_trains(&trains, a.epsilon)?;
                histograms.insert(
                    gamma.to_string(),
                    score_histogram(scored.iter().map(|s| s.score)),
                );
            }
        }
        None => {
            histograms.insert(
                "observed".to_owned(),
                score_histogram(scores.values().copied()),
            );
        }
    }
    let report = StatsReport {
        correlations: feature_score_correlation(&graph, &scores)?,
        neighbor_difference: neighbor_difference_test(&graph, &scores, a.seed)?,
        histograms,
    };
    let json = serde_json::to_string_pretty(&report)? + "\n";
    write_atomic(&a.out, |w| {
        w.write_all(json.as_bytes())
            .map_err(|e| crate::Error::io(&a.out, e))
    })?;
    Ok(())
}
