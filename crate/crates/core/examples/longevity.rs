//! Longevity scores for a handful of impulse trains.

use std::collections::BTreeMap;

use impulses::graph::VideoId;
use impulses::longevity::{raw_longevity, score_corpus, LongevityConfig};

fn main() -> impulses::Result<()> {
    let trains = [
        (
            "early_burst",
            vec![900.0, 40.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        ),
        (
            "late_revival",
            vec![300.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 80.0],
        ),
        ("steady", vec![20.0; 8]),
        ("faint", vec![0.0, 0.05, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0]),
    ];
    for epsilon in [0.0, 0.1] {
        let cfg = LongevityConfig::new(epsilon)?;
        let raws: BTreeMap<VideoId, f64> = trains
            .iter()
            .map(|(id, x)| (VideoId::from(*id), raw_longevity(x, &cfg)))
            .collect();
        let scores = score_corpus(&raws)?;
        println!("epsilon = {epsilon}");
        for s in scores.videos.values() {
            println!(
                "  {:<13} raw {:>7.3}  score {:>3}",
                s.video_id, s.raw_value, s.score
            );
        }
    }
    Ok(())
}
