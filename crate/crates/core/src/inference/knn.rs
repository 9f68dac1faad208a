//! Graph k-nearest-neighbour baseline.
//!
//! Labeled nodes are ranked per unlabeled node by hop distance, then by
//! variance-scaled feature distance, then by id. The prediction is the mode
//! of the top-k observed scores.

use std::collections::BTreeMap;

use super::{mode_lowest, to_score, Predictions};
use crate::error::{Error, Result};
use crate::graph::{feature_distance, VideoGraph, VideoId};

pub const DEFAULT_K_CANDIDATES: [usize; 5] = [1, 3, 5, 7, 9];

#[derive(Debug, Clone)]
pub struct KnnOutput {
    /// Predictions for every candidate k.
    pub per_k: BTreeMap<usize, Predictions>,
}

/// Labeled nodes nearest to `source`, at least `want` of them if reachable.
/// Whole hop levels are collected so the feature tie-break sees every
/// candidate at the boundary distance.
fn nearest_labeled(
    graph: &VideoGraph,
    source: usize,
    want: usize,
    stamp: &mut [usize],
    round: usize,
) -> Vec<u8> {
    let variances = graph.feature_variances();
    let src = &graph.node(source).features;
    let mut found: Vec<u8> = Vec::new();
    let mut frontier = vec![source];
    stamp[source] = round;
    while !frontier.is_empty() && found.len() < want {
        let mut next = Vec::new();
        for &u in &frontier {
            for &(v, _) in graph.neighbors(u) {
                if stamp[v] != round {
                    stamp[v] = round;
                    next.push(v);
                }
            }
        }
        let mut level: Vec<(f64, &VideoId, u8)> = next
            .iter()
            .filter_map(|&v| {
                let n = graph.node(v);
                n.observed_score.map(|s| {
                    (
                        feature_distance(src, &n.features, variances),
                        &n.video_id,
                        s,
                    )
                })
            })
            .collect();
        level.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)));
        found.extend(level.into_iter().map(|(_, _, s)| s));
        frontier = next;
    }
    found
}

/// Predictions of every unlabeled node for each candidate k.
pub fn knn_baseline(graph: &VideoGraph, k_candidates: &[usize]) -> Result<KnnOutput> {
    if k_candidates.is_empty() {
        return Err(Error::InvalidParameter("empty k candidate set".into()));
    }
    if k_candidates.contains(&0) {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let labeled: Vec<f64> = graph
        .labeled()
        .map(|i| f64::from(graph.node(i).observed_score.unwrap_or_default()))
        .collect();
    let unlabeled: Vec<usize> = graph.unlabeled().collect();
    let mut per_k: BTreeMap<usize, Predictions> = k_candidates
        .iter()
        .map(|&k| (k, Predictions::new()))
        .collect();
    if unlabeled.is_empty() {
        return Ok(KnnOutput { per_k });
    }
    if labeled.is_empty() {
        return Err(Error::Insufficient(
            "knn needs at least one labeled node".into(),
        ));
    }
    let fallback = to_score(labeled.iter().sum::<f64>() / labeled.len() as f64);
    let k_max = *k_candidates.iter().max().unwrap_or(&1);
    let mut stamp = vec![usize::MAX; graph.len()];
    for (round, &u) in unlabeled.iter().enumerate() {
        let ranked = nearest_labeled(graph, u, k_max, &mut stamp, round);
        let id = &graph.node(u).video_id;
        for (&k, preds) in per_k.iter_mut() {
            let top = &ranked[..k.min(ranked.len())];
            preds.insert(id.clone(), mode_lowest(top).unwrap_or(fallback));
        }
    }
    Ok(KnnOutput { per_k })
}

/// Candidate with the lowest mean squared error against `truth`; ties go to
/// the smaller k.
pub fn select_best_k(output: &KnnOutput, truth: &BTreeMap<VideoId, u8>) -> Option<(usize, f64)> {
    output
        .per_k
        .iter()
        .filter_map(|(&k, preds)| crate::harness::mse(preds, truth).ok().map(|m| (k, m)))
        .fold(None, |best, (k, m)| match best {
            Some((_, bm)) if bm <= m => best,
            _ => Some((k, m)),
        })
}
