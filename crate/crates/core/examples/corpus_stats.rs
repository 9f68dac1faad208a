//! Feature correlations, neighbor similarity and score histograms.

use impulses::filter::FilterSpec;
use impulses::harness::{generate_synthetic, SyntheticSpec};
use impulses::longevity::{raw_longevity, score_corpus, LongevityConfig};
use impulses::nnls::{deconvolve, DEFAULT_TOLERANCE};
use impulses::stats::{feature_score_correlation, neighbor_difference_test, score_histogram};

fn main() -> impulses::Result<()> {
    let corpus = generate_synthetic(&SyntheticSpec {
        num_videos: 1000,
        ..Default::default()
    })?;
    let truth = corpus.true_scores();

    for c in feature_score_correlation(&corpus.graph, &truth)? {
        println!("{:<16} {:>7.3}", c.feature, c.pearson.unwrap_or(f64::NAN));
    }

    let report = neighbor_difference_test(&corpus.graph, &truth, 3)?;
    println!(
        "neighbors {:.1} vs random pairs {:.1}",
        report.whole.neighbor_mean_sq_diff, report.whole.random_mean_sq_diff
    );
    for (cat, d) in &report.per_category {
        println!(
            "  {cat:<11} {:>4} edges  {:.1} vs {:.1}",
            d.edge_count, d.neighbor_mean_sq_diff, d.random_mean_sq_diff
        );
    }

    let cfg = LongevityConfig::default();
    for gamma in [0.1, 0.3, 0.6] {
        let spec = FilterSpec::new(gamma, corpus.spec.horizon)?;
        let mut raws = std::collections::BTreeMap::new();
        for h in &corpus.histories {
            let t = deconvolve(h, &spec, DEFAULT_TOLERANCE)?;
            raws.insert(h.video_id.clone(), raw_longevity(&t.impulses, &cfg));
        }
        let scores = score_corpus(&raws)?;
        let hist = score_histogram(scores.videos.values().map(|s| s.score));
        let deciles: Vec<u64> = hist.chunks(10).map(|c| c.iter().sum()).collect();
        println!("gamma {gamma}: counts per decile {deciles:?}");
    }
    Ok(())
}
