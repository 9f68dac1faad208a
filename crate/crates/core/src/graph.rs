//! Related-video graph: nodes with six public features, optional observed
//! longevity scores, and undirected edges weighted by feature similarity.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const NUM_FEATURES: usize = 6;

/// Canonical category labels; any other string is accepted as well.
pub const CANONICAL_CATEGORIES: [&str; 6] = [
    "Animals",
    "Music",
    "News",
    "Nonprofit",
    "Sports",
    "Technology",
];

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VideoId(pub String);

impl fmt::Display for VideoId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for VideoId {
    fn from(s: &str) -> Self {
        VideoId(s.to_owned())
    }
}

impl From<String> for VideoId {
    fn from(s: String) -> Self {
        VideoId(s)
    }
}

impl From<&VideoId> for VideoId {
    fn from(id: &VideoId) -> Self {
        id.clone()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Features {
    pub view_count: f64,
    pub favorite_count: f64,
    pub average_rating: f64,
    pub length_seconds: f64,
    pub like_count: f64,
    pub dislike_count: f64,
}

impl Features {
    pub const NAMES: [&'static str; NUM_FEATURES] = [
        "view_count",
        "favorite_count",
        "average_rating",
        "length_seconds",
        "like_count",
        "dislike_count",
    ];

    pub fn from_array(v: [f64; NUM_FEATURES]) -> Self {
        Features {
            view_count: v[0],
            favorite_count: v[1],
            average_rating: v[2],
            length_seconds: v[3],
            like_count: v[4],
            dislike_count: v[5],
        }
    }

    pub fn to_array(&self) -> [f64; NUM_FEATURES] {
        [
            self.view_count,
            self.favorite_count,
            self.average_rating,
            self.length_seconds,
            self.like_count,
            self.dislike_count,
        ]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        for (name, v) in Self::NAMES.iter().zip(self.to_array()) {
            if !v.is_finite() {
                return Err(format!("{name} is not finite"));
            }
            if v < 0.0 {
                return Err(format!("{name} is negative ({v})"));
            }
        }
        if self.average_rating > 5.0 {
            return Err(format!(
                "average_rating {} outside [0, 5]",
                self.average_rating
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoNode {
    pub video_id: VideoId,
    pub category: String,
    pub features: Features,
    pub observed_score: Option<u8>,
}

impl VideoNode {
    pub fn new(
        video_id: impl Into<VideoId>,
        category: impl Into<String>,
        features: Features,
        observed_score: Option<u8>,
    ) -> Result<Self> {
        let node = VideoNode {
            video_id: video_id.into(),
            category: category.into(),
            features,
            observed_score,
        };
        node.validate().map_err(Error::Graph)?;
        Ok(node)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        self.features
            .validate()
            .map_err(|e| format!("node {}: {e}", self.video_id))?;
        if let Some(s) = self.observed_score {
            if s > 100 {
                return Err(format!(
                    "node {}: score {s} outside [0, 100]",
                    self.video_id
                ));
            }
        }
        Ok(())
    }
}

/// Population variance of each feature column.
pub fn feature_variances<'a>(
    nodes: impl IntoIterator<Item = &'a VideoNode>,
) -> [f64; NUM_FEATURES] {
    let rows: Vec<[f64; NUM_FEATURES]> = nodes.into_iter().map(|n| n.features.to_array()).collect();
    let mut out = [0.0; NUM_FEATURES];
    if rows.is_empty() {
        return out;
    }
    let n = rows.len() as f64;
    for (k, var) in out.iter_mut().enumerate() {
        let mean = rows.iter().map(|r| r[k]).sum::<f64>() / n;
        *var = rows.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / n;
    }
    out
}

/// Variance-scaled squared feature distance; zero-variance features are skipped.
pub fn feature_distance(a: &Features, b: &Features, variances: &[f64; NUM_FEATURES]) -> f64 {
    a.to_array()
        .iter()
        .zip(b.to_array())
        .zip(variances)
        .filter(|(_, var)| **var > 0.0)
        .map(|((x, y), var)| (x - y).powi(2) / var)
        .sum()
}

/// Similarity weight `exp(-feature_distance)`, in `(0, 1]`.
///
/// Underflow is clamped to the smallest positive normal so every edge keeps
/// a strictly positive weight.
pub fn edge_weight(a: &VideoNode, b: &VideoNode, variances: &[f64; NUM_FEATURES]) -> f64 {
    (-feature_distance(&a.features, &b.features, variances))
        .exp()
        .max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub a: usize,
    pub b: usize,
    pub weight: f64,
}

/// Immutable related-video graph.
///
/// Node indices follow insertion order; edges are stored once with `a < b`
/// and sorted, so every traversal is deterministic.
#[derive(Debug, Clone)]
pub struct VideoGraph {
    nodes: Vec<VideoNode>,
    index: HashMap<VideoId, usize>,
    edges: Vec<Edge>,
    /// `adjacency[i]` lists `(neighbor, edge index)` sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    feature_variances: [f64; NUM_FEATURES],
}

impl VideoGraph {
    /// Builds and validates a graph from nodes and unordered id pairs.
    pub fn new(nodes: Vec<VideoNode>, edges: &[(VideoId, VideoId)]) -> Result<Self> {
        let mut index = HashMap::with_capacity(nodes.len());
        for (i, node) in nodes.iter().enumerate() {
            node.validate().map_err(Error::Graph)?;
            if index.insert(node.video_id.clone(), i).is_some() {
                return Err(Error::Graph(format!("duplicate node {}", node.video_id)));
            }
        }
        let mut pairs = Vec::with_capacity(edges.len());
        let mut seen = BTreeSet::new();
        for (a, b) in edges {
            let ia = *index
                .get(a)
                .ok_or_else(|| Error::Graph(format!("edge endpoint {a} is not a node")))?;
            let ib = *index
                .get(b)
                .ok_or_else(|| Error::Graph(format!("edge endpoint {b} is not a node")))?;
            if ia == ib {
                return Err(Error::Graph(format!("self-loop on {a}")));
            }
            let key = (ia.min(ib), ia.max(ib));
            if !seen.insert(key) {
                return Err(Error::Graph(format!("duplicate edge {a} - {b}")));
            }
            pairs.push(key);
        }
        Ok(Self::from_index_pairs(nodes, index, pairs))
    }

    fn from_index_pairs(
        nodes: Vec<VideoNode>,
        index: HashMap<VideoId, usize>,
        mut pairs: Vec<(usize, usize)>,
    ) -> Self {
        pairs.sort_unstable();
        let variances = feature_variances(&nodes);
        let edges: Vec<Edge> = pairs
            .iter()
            .map(|&(a, b)| Edge {
                a,
                b,
                weight: edge_weight(&nodes[a], &nodes[b], &variances),
            })
            .collect();
        let mut adjacency = vec![Vec::new(); nodes.len()];
        for (e, edge) in edges.iter().enumerate() {
            adjacency[edge.a].push((edge.b, e));
            adjacency[edge.b].push((edge.a, e));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        VideoGraph {
            nodes,
            index,
            edges,
            adjacency,
            feature_variances: variances,
        }
    }

    pub fn nodes(&self) -> &[VideoNode] {
        &self.nodes
    }

    pub fn node(&self, i: usize) -> &VideoNode {
        &self.nodes[i]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, usize)] {
        &self.adjacency[i]
    }

    pub fn index_of(&self, id: &VideoId) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn feature_variances(&self) -> &[f64; NUM_FEATURES] {
        &self.feature_variances
    }

    pub fn labeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].observed_score.is_some())
    }

    pub fn unlabeled(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].observed_score.is_none())
    }

    /// Categories present, sorted.
    pub fn categories(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self.nodes.iter().map(|n| n.category.as_str()).collect();
        set.into_iter().map(str::to_owned).collect()
    }

    /// Same topology and weights with the given nodes' scores hidden.
    pub fn with_hidden(&self, hidden: &[usize]) -> VideoGraph {
        let mut g = self.clone();
        for &i in hidden {
            g.nodes[i].observed_score = None;
        }
        g
    }

    /// Subgraph induced by one category; feature variances and edge weights
    /// are recomputed over the subgraph.
    pub fn induced_by_category(&self, category: &str) -> VideoGraph {
        let keep: Vec<usize> = (0..self.nodes.len())
            .filter(|&i| self.nodes[i].category == category)
            .collect();
        let mut remap = vec![usize::MAX; self.nodes.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let nodes: Vec<VideoNode> = keep.iter().map(|&i| self.nodes[i].clone()).collect();
        let index = nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (n.video_id.clone(), i))
            .collect();
        let pairs = self
            .edges
            .iter()
            .filter(|e| remap[e.a] != usize::MAX && remap[e.b] != usize::MAX)
            .map(|e| (remap[e.a], remap[e.b]))
            .collect();
        Self::from_index_pairs(nodes, index, pairs)
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        for node in &self.nodes {
            node.validate().map_err(Error::Graph)?;
        }
        for e in &self.edges {
            if e.a >= e.b || e.b >= self.nodes.len() {
                return Err(Error::Graph(format!("malformed edge {} - {}", e.a, e.b)));
            }
            if !seen.insert((e.a, e.b)) {
                return Err(Error::Graph(format!("duplicate edge {} - {}", e.a, e.b)));
            }
            if !(e.weight > 0.0 && e.weight <= 1.0) {
                return Err(Error::Graph(format!(
                    "edge weight {} outside (0, 1]",
                    e.weight
                )));
            }
        }
        let fresh = feature_variances(&self.nodes);
        for (k, (a, b)) in fresh.iter().zip(&self.feature_variances).enumerate() {
            if (a - b).abs() > 1e-12 * a.abs().max(1.0) {
                return Err(Error::Graph(format!("stale variance for feature {k}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn node(id: &str, f: [f64; 6]) -> VideoNode {
        VideoNode::new(id, "Music", Features::from_array(f), None).unwrap()
    }

    #[test]
    fn identical_features_weight_one() {
        let a = node("a", [1.0, 2.0, 3.0, 4.0, 5.0, 0.0]);
        let v = [1.0; 6];
        assert_eq!(edge_weight(&a, &a.clone(), &v), 1.0);
    }

    #[test]
    fn one_standard_deviation_apart() {
        let a = node("a", [10.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = node("b", [13.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = [9.0, 1.0, 1.0, 1.0, 1.0, 1.0];
        assert!((edge_weight(&a, &b, &v) - (-1.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn six_apart_with_variance_nine() {
        let a = node("a", [10.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let b = node("b", [4.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = [9.0, 0.0, 0.0, 0.0, 0.0, 0.0];
        let w = edge_weight(&a, &b, &v);
        assert!((w - 0.018_315_638_888_734_18).abs() < 1e-12);
        assert_eq!(w, edge_weight(&b, &a, &v));
    }

    #[test]
    fn zero_variance_feature_dropped() {
        let a = node("a", [1.0, 5.0, 0.0, 0.0, 0.0, 0.0]);
        let b = node("b", [1.0, 2.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(edge_weight(&a, &b, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0]), 1.0);
    }

    #[test]
    fn rejects_structural_errors() {
        let nodes = vec![node("a", [1.0; 6]), node("b", [2.0; 6])];
        let e = |x: &str, y: &str| (VideoId::from(x), VideoId::from(y));
        assert!(VideoGraph::new(nodes.clone(), &[e("a", "a")]).is_err());
        assert!(VideoGraph::new(nodes.clone(), &[e("a", "b"), e("b", "a")]).is_err());
        assert!(VideoGraph::new(nodes.clone(), &[e("a", "c")]).is_err());
        let dup = vec![node("a", [1.0; 6]), node("a", [2.0; 6])];
        assert!(VideoGraph::new(dup, &[]).is_err());
        let g = VideoGraph::new(nodes, &[e("b", "a")]).unwrap();
        g.validate().unwrap();
        assert_eq!(g.edges()[0].a, 0);
    }

    #[test]
    fn rejects_invalid_node_values() {
        let mut f = Features::from_array([1.0; 6]);
        f.average_rating = 5.5;
        assert!(VideoNode::new("x", "Music", f, None).is_err());
        f.average_rating = 4.0;
        f.like_count = -1.0;
        assert!(VideoNode::new("x", "Music", f, None).is_err());
        f.like_count = 1.0;
        assert!(VideoNode::new("x", "Music", f, Some(101)).is_err());
    }

    #[test]
    fn weights_invariant_under_feature_rescaling() {
        let raw = [
            [100.0, 3.0, 4.5, 60.0, 10.0, 1.0],
            [250.0, 1.0, 3.9, 300.0, 22.0, 4.0],
            [170.0, 8.0, 4.9, 95.0, 13.0, 0.0],
            [90.0, 2.0, 2.5, 45.0, 2.0, 3.0],
        ];
        let build = |scale: f64| {
            let nodes = raw
                .iter()
                .enumerate()
                .map(|(i, f)| {
                    let mut f = *f;
                    f[0] = f[0] * scale + 7.0;
                    node(&format!("n{i}"), f)
                })
                .collect();
            let e = |x: &str, y: &str| (VideoId::from(x), VideoId::from(y));
            VideoGraph::new(
                nodes,
                &[e("n0", "n1"), e("n1", "n2"), e("n2", "n3"), e("n0", "n3")],
            )
            .unwrap()
        };
        let (g1, g2) = (build(1.0), build(1000.0));
        for (a, b) in g1.edges().iter().zip(g2.edges()) {
            assert!((a.weight - b.weight).abs() < 1e-9);
        }
    }

    #[test]
    fn induced_subgraph_drops_cross_edges() {
        let mut nodes = vec![
            node("a", [1.0; 6]),
            node("b", [2.0; 6]),
            node("c", [3.0, 1.0, 1.0, 1.0, 1.0, 1.0]),
        ];
        nodes[2].category = "News".into();
        let e = |x: &str, y: &str| (VideoId::from(x), VideoId::from(y));
        let g = VideoGraph::new(nodes, &[e("a", "b"), e("b", "c")]).unwrap();
        let sub = g.induced_by_category("Music");
        assert_eq!(sub.len(), 2);
        assert_eq!(sub.num_edges(), 1);
        sub.validate().unwrap();
        assert_eq!(
            g.categories(),
            vec!["Music".to_string(), "News".to_string()]
        );
    }
}
