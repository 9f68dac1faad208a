//! Score inference on a small related-video graph with loopy belief
//! propagation.

use impulses::graph::{Features, VideoGraph, VideoId, VideoNode};
use impulses::inference::{fit_prior, lbp_predict};

fn node(id: &str, views: f64, rating: f64, score: Option<u8>) -> impulses::Result<VideoNode> {
    VideoNode::new(
        id,
        "Music",
        Features::from_array([
            views,
            views / 400.0,
            rating,
            240.0,
            views / 150.0,
            views / 3000.0,
        ]),
        score,
    )
}

fn main() -> impulses::Result<()> {
    let nodes = vec![
        node("a", 120_000.0, 4.6, Some(72))?,
        node("b", 90_000.0, 4.4, Some(65))?,
        node("c", 150_000.0, 4.8, Some(80))?,
        node("d", 20_000.0, 3.9, Some(25))?,
        node("e", 110_000.0, 4.5, None)?,
        node("f", 25_000.0, 4.0, None)?,
    ];
    let edges: Vec<(VideoId, VideoId)> =
        [("a", "e"), ("b", "e"), ("c", "e"), ("d", "f"), ("e", "f")]
            .iter()
            .map(|(x, y)| (VideoId::from(*x), VideoId::from(*y)))
            .collect();
    let graph = VideoGraph::new(nodes, &edges)?;
    for e in graph.edges() {
        println!(
            "edge {} - {}  weight {:.4}",
            graph.node(e.a).video_id,
            graph.node(e.b).video_id,
            e.weight
        );
    }

    let labeled: Vec<f64> = graph
        .nodes()
        .iter()
        .filter_map(|n| n.observed_score.map(f64::from))
        .collect();
    let prior = fit_prior(&labeled)?;
    println!("prior mean {:.2}, sd {:.2}", prior.mu, prior.sigma);

    let out = lbp_predict(&graph, &prior.params())?;
    println!(
        "{} iterations, converged {}",
        out.diagnostics.iterations, out.diagnostics.converged
    );
    for (id, score) in &out.predictions {
        let i = graph.index_of(id).expect("predicted node exists");
        let peak = out.beliefs.belief(i)[usize::from(*score)];
        println!("{id}: predicted {score} (belief {peak:.3})");
    }
    Ok(())
}
