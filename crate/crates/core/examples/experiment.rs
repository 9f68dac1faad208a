//! Masking experiment on a synthetic homophilous corpus.
//!
//! `cargo run --release --example experiment -- [trials] [num_videos]`

use std::time::Instant;

use impulses::harness::{generate_synthetic, run_experiment, ExperimentPlan, SyntheticSpec};
use impulses::stats::neighbor_difference_test;

fn main() -> impulses::Result<()> {
    let mut args = std::env::args().skip(1);
    let trials = args.next().map_or(5, |s| s.parse().expect("trials"));
    let num_videos = args.next().map_or(2000, |s| s.parse().expect("num_videos"));

    let corpus = generate_synthetic(&SyntheticSpec {
        num_videos,
        ..Default::default()
    })?;
    let truth = corpus.true_scores();
    let neighbors = neighbor_difference_test(&corpus.graph, &truth, 1)?;
    println!(
        "{} videos, {} edges; neighbor msd {:.1} vs random {:.1}",
        corpus.graph.len(),
        corpus.graph.num_edges(),
        neighbors.whole.neighbor_mean_sq_diff,
        neighbors.whole.random_mean_sq_diff
    );

    let plan = ExperimentPlan {
        trials,
        rng_seed: 42,
        ..Default::default()
    };
    let start = Instant::now();
    let report = run_experiment(&plan, &corpus.graph)?;
    for s in &report.results {
        let iters: Vec<usize> = s
            .trials
            .iter()
            .filter_map(|t| t.lbp.map(|d| d.iterations))
            .collect();
        println!(
            "{:<10} ratio {:.1}  mean mse {:>8.2}  failed {}  lbp iterations {:?}",
            s.method,
            s.ratio,
            s.mean_mse.unwrap_or(f64::NAN),
            s.failed_trials,
            iters
        );
    }
    println!("ratio stability {:?}", report.ratio_stability);
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
