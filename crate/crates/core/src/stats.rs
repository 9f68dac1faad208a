//! Corpus statistics: feature/score correlations, neighbour-versus-random
//! score differences, and score histograms.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{Features, VideoGraph, VideoId, NUM_FEATURES};

/// Pearson correlation; `None` when either side has zero variance.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len();
    if n < 2 || n != ys.len() {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureCorrelation {
    pub feature: String,
    /// `None` when the feature or the scores are constant.
    pub pearson: Option<f64>,
}

/// Pearson correlation of each raw feature with the score, over nodes that
/// appear in `scores`.
pub fn feature_score_correlation(
    graph: &VideoGraph,
    scores: &BTreeMap<VideoId, u8>,
) -> Result<Vec<FeatureCorrelation>> {
    let scored: Vec<(usize, f64)> = graph
        .nodes()
        .iter()
        .enumerate()
        .filter_map(|(i, n)| scores.get(&n.video_id).map(|s| (i, f64::from(*s))))
        .collect();
    if scored.len() < 2 {
        return Err(Error::Insufficient(format!(
            "correlation needs at least 2 scored nodes, got {}",
            scored.len()
        )));
    }
    let ys: Vec<f64> = scored.iter().map(|(_, s)| *s).collect();
    Ok((0..NUM_FEATURES)
        .map(|k| {
            let xs: Vec<f64> = scored
                .iter()
                .map(|(i, _)| graph.node(*i).features.to_array()[k])
                .collect();
            FeatureCorrelation {
                feature: Features::NAMES[k].to_owned(),
                pearson: pearson(&xs, &ys),
            }
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairDifference {
    pub edge_count: usize,
    pub neighbor_mean_sq_diff: f64,
    pub random_mean_sq_diff: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborReport {
    #[serde(flatten)]
    pub whole: PairDifference,
    /// Induced per-category subgraphs that have at least one edge.
    pub per_category: BTreeMap<String, PairDifference>,
}

fn pair_difference(
    graph: &VideoGraph,
    scores: &[f64],
    rng: &mut ChaCha8Rng,
) -> Option<PairDifference> {
    let m = graph.num_edges();
    let n = graph.len();
    if m == 0 || n < 2 {
        return None;
    }
    let sq = |a: usize, b: usize| (scores[a] - scores[b]).powi(2);
    let neighbor = graph.edges().iter().map(|e| sq(e.a, e.b)).sum::<f64>() / m as f64;
    let mut random = 0.0;
    for _ in 0..m {
        let a = rng.gen_range(0..n);
        // uniform over the other n - 1 nodes
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        random += sq(a, b);
    }
    Some(PairDifference {
        edge_count: m,
        neighbor_mean_sq_diff: neighbor,
        random_mean_sq_diff: random / m as f64,
    })
}

fn scores_for(graph: &VideoGraph, scores: &BTreeMap<VideoId, u8>) -> Result<Vec<f64>> {
    graph
        .nodes()
        .iter()
        .map(|n| {
            scores
                .get(&n.video_id)
                .map(|s| f64::from(*s))
                .ok_or_else(|| Error::Insufficient(format!("node {} has no score", n.video_id)))
        })
        .collect()
}

/// Mean squared score difference across edges versus across as many
/// uniformly drawn node pairs, for the whole graph and each category.
pub fn neighbor_difference_test(
    graph: &VideoGraph,
    scores: &BTreeMap<VideoId, u8>,
    seed: u64,
) -> Result<NeighborReport> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let all = scores_for(graph, scores)?;
    let whole = pair_difference(graph, &all, &mut rng).ok_or_else(|| {
        Error::Insufficient("neighbor difference test needs at least one edge".into())
    })?;
    let mut per_category = BTreeMap::new();
    for cat in graph.categories() {
        let sub = graph.induced_by_category(&cat);
        let sub_scores = scores_for(&sub, scores)?;
        if let Some(diff) = pair_difference(&sub, &sub_scores, &mut rng) {
            per_category.insert(cat, diff);
        }
    }
    Ok(NeighborReport {
        whole,
        per_category,
    })
}

/// Counts of each integer score 0..=100.
pub fn score_histogram(scores: impl IntoIterator<Item = u8>) -> Vec<u64> {
    let mut h = vec![0u64; 101];
    for s in scores {
        h[usize::from(s.min(100))] += 1;
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VideoNode;

    fn graph(features: &[f64], edges: &[(&str, &str)]) -> VideoGraph {
        let nodes = features
            .iter()
            .enumerate()
            .map(|(i, f)| {
                VideoNode::new(
                    format!("n{i}"),
                    "Music",
                    Features::from_array([*f, 1.0, 3.0, *f * 2.0, 0.0, 0.0]),
                    None,
                )
                .unwrap()
            })
            .collect();
        let edges: Vec<_> = edges
            .iter()
            .map(|(a, b)| (VideoId::from(*a), VideoId::from(*b)))
            .collect();
        VideoGraph::new(nodes, &edges).unwrap()
    }

    fn score_map(s: &[u8]) -> BTreeMap<VideoId, u8> {
        s.iter()
            .enumerate()
            .map(|(i, v)| (VideoId(format!("n{i}")), *v))
            .collect()
    }

    #[test]
    fn pearson_hand_computed() {
        let r = pearson(&[1.0, 2.0, 3.0, 4.0], &[10.0, 10.0, 20.0, 20.0]).unwrap();
        assert!((r - 0.894_427_190_999_915_9).abs() < 1e-9);
    }

    #[test]
    fn perfect_and_undefined_correlations() {
        let g = graph(&[10.0, 20.0, 30.0], &[]);
        let c = feature_score_correlation(&g, &score_map(&[10, 20, 30])).unwrap();
        assert!((c[0].pearson.unwrap() - 1.0).abs() < 1e-12);
        assert!((c[3].pearson.unwrap() - 1.0).abs() < 1e-12);
        // constant feature is undefined, not zero
        assert_eq!(c[1].pearson, None);
        let neg = graph(&[30.0, 20.0, 10.0], &[]);
        let c = feature_score_correlation(&neg, &score_map(&[10, 20, 30])).unwrap();
        assert!((c[0].pearson.unwrap() + 1.0).abs() < 1e-12);
        assert!(feature_score_correlation(&neg, &score_map(&[10])).is_err());
    }

    #[test]
    fn path_graph_neighbor_mean() {
        let g = graph(&[1.0, 2.0, 3.0], &[("n0", "n1"), ("n1", "n2")]);
        let r = neighbor_difference_test(&g, &score_map(&[10, 10, 50]), 7).unwrap();
        assert_eq!(r.whole.neighbor_mean_sq_diff, 800.0);
        assert_eq!(r.whole.edge_count, 2);
        assert_eq!(
            r,
            neighbor_difference_test(&g, &score_map(&[10, 10, 50]), 7).unwrap()
        );
    }

    #[test]
    fn equal_scores_give_zero_means() {
        let g = graph(&[1.0, 2.0, 3.0, 4.0], &[("n0", "n1"), ("n2", "n3")]);
        let r = neighbor_difference_test(&g, &score_map(&[33, 33, 33, 33]), 1).unwrap();
        assert_eq!(r.whole.neighbor_mean_sq_diff, 0.0);
        assert_eq!(r.whole.random_mean_sq_diff, 0.0);
    }

    #[test]
    fn empty_edge_set_rejected() {
        let g = graph(&[1.0, 2.0], &[]);
        assert!(neighbor_difference_test(&g, &score_map(&[1, 2]), 0).is_err());
    }

    #[test]
    fn histogram_counts() {
        let h = score_histogram([0, 100, 100, 50]);
        assert_eq!(h.len(), 101);
        assert_eq!((h[0], h[50], h[100]), (1, 1, 2));
    }
}
