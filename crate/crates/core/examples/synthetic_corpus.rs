//! Generate a synthetic corpus and write it as CSV tables.
//!
//! `cargo run --example synthetic_corpus -- <out-dir>`

use std::fs::File;
use std::path::PathBuf;

use impulses::harness::{generate_synthetic, SyntheticSpec};
use impulses::io;

fn main() -> impulses::Result<()> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("impulses-synthetic"));
    std::fs::create_dir_all(&dir).map_err(|e| impulses::Error::Io {
        path: dir.clone(),
        source: e,
    })?;

    let spec = SyntheticSpec {
        num_videos: 200,
        noise_std: 2.0,
        ..Default::default()
    };
    let corpus = generate_synthetic(&spec)?;
    let create = |name: &str| {
        let path = dir.join(name);
        File::create(&path).map_err(|e| impulses::Error::Io { path, source: e })
    };
    io::write_nodes(create("nodes.csv")?, corpus.graph.nodes())?;
    io::write_edges(create("edges.csv")?, &corpus.edges)?;
    io::write_increments(create("histories.csv")?, &corpus.histories)?;

    let scores: Vec<u8> = corpus.scores.videos.values().map(|s| s.score).collect();
    let mean = scores.iter().map(|&s| f64::from(s)).sum::<f64>() / scores.len() as f64;
    println!(
        "{} videos, {} edges, mean score {mean:.1}, written to {}",
        corpus.graph.len(),
        corpus.graph.num_edges(),
        dir.display()
    );
    Ok(())
}
