use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{VideoGraph, VideoId};

#[derive(Debug, Clone)]
pub struct MaskedGraph {
    pub graph: VideoGraph,
    /// True scores of the hidden nodes.
    pub truth: BTreeMap<VideoId, u8>,
    /// Node indices that were hidden, ascending.
    pub hidden: Vec<usize>,
}

/// Hides exactly `round(ratio * |V|)` scores chosen by a seeded shuffle.
pub fn mask_labels(graph: &VideoGraph, ratio: f64, seed: u64) -> Result<MaskedGraph> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "unlabeled ratio must lie strictly between 0 and 1, got {ratio}"
        )));
    }
    if let Some(n) = graph.nodes().iter().find(|n| n.observed_score.is_none()) {
        return Err(Error::Insufficient(format!(
            "masking needs every node scored; {} has no score",
            n.video_id
        )));
    }
    let n = graph.len();
    let count = (ratio * n as f64).round() as usize;
    if count == 0 || count == n {
        return Err(Error::InvalidParameter(format!(
            "ratio {ratio} on {n} nodes would hide {count} nodes"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut hidden = order[..count].to_vec();
    hidden.sort_unstable();
    let truth = hidden
        .iter()
        .map(|&i| {
            let node = graph.node(i);
            (
                node.video_id.clone(),
                node.observed_score.unwrap_or_default(),
            )
        })
        .collect();
    Ok(MaskedGraph {
        graph: graph.with_hidden(&hidden),
        truth,
        hidden,
    })
}
