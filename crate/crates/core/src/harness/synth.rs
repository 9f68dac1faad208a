//! Seeded synthetic corpora with planted impulse trains, homophilous
//! communities and weakly score-coupled features.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{convolve, FilterSpec, ImpulseTrain, ViewHistory};
use crate::graph::{Features, VideoGraph, VideoId, VideoNode, CANONICAL_CATEGORIES};
use crate::longevity::{raw_longevity, score_corpus, CorpusScores, LongevityConfig};

/// Generator parameters.
///
/// Videos are grouped into communities of `community_size` that share a
/// latent appeal in `[0, 1]`. The expected impulse count of a video is
/// `2 * impulse_rate * appeal`, so `impulse_rate` is the corpus-wide mean.
/// Each community belongs to one category.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_videos: usize,
    pub horizon: usize,
    pub impulse_rate: f64,
    pub impulse_strength_range: (f64, f64),
    pub noise_std: f64,
    pub gamma_true: f64,
    pub community_size: usize,
    pub intra_edge_prob: f64,
    pub inter_edge_prob: f64,
    /// Correlation between a video's standardized score and the latent
    /// popularity driving its count features.
    pub feature_coupling: f64,
    pub rng_seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            num_videos: 2000,
            horizon: 99,
            impulse_rate: 15.0,
            impulse_strength_range: (50.0, 500.0),
            noise_std: 0.0,
            gamma_true: 0.3,
            community_size: 20,
            intra_edge_prob: 0.25,
            inter_edge_prob: 0.0005,
            feature_coupling: 0.12,
            rng_seed: 7,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if self.num_videos == 0 {
            return bad("num_videos must be positive".into());
        }
        if self.horizon == 0 || self.community_size == 0 {
            return bad("horizon and community_size must be positive".into());
        }
        let (lo, hi) = self.impulse_strength_range;
        if !(self.impulse_rate.is_finite() && self.impulse_rate >= 0.0) {
            return bad(format!(
                "impulse_rate {} must be non-negative",
                self.impulse_rate
            ));
        }
        if !(lo.is_finite() && hi.is_finite() && lo > 0.0 && lo <= hi) {
            return bad(format!(
                "impulse strength range ({lo}, {hi}) must satisfy 0 < lo <= hi"
            ));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std {} must be non-negative", self.noise_std));
        }
        for (name, p) in [
            ("intra_edge_prob", self.intra_edge_prob),
            ("inter_edge_prob", self.inter_edge_prob),
            ("feature_coupling", self.feature_coupling),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} {p} outside [0, 1]"));
            }
        }
        FilterSpec::new(self.gamma_true, self.horizon)?;
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub spec: SyntheticSpec,
    pub histories: Vec<ViewHistory>,
    /// The planted trains; `residual_norm` is zero.
    pub trains: Vec<ImpulseTrain>,
    pub scores: CorpusScores,
    /// Every node carries its true score.
    pub graph: VideoGraph,
    pub edges: Vec<(VideoId, VideoId)>,
    pub community: Vec<usize>,
}

impl SyntheticCorpus {
    pub fn true_scores(&self) -> BTreeMap<VideoId, u8> {
        self.scores
            .videos
            .iter()
            .map(|(id, s)| (id.clone(), s.score))
            .collect()
    }
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticCorpus> {
    spec.validate()?;
    let filter = FilterSpec::new(spec.gamma_true, spec.horizon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.rng_seed);
    let n = spec.num_videos;
    let ids: Vec<VideoId> = (0..n).map(|i| VideoId(format!("v{i:05}"))).collect();

    let community: Vec<usize> = (0..n).map(|i| i / spec.community_size).collect();
    let num_communities = community[n - 1] + 1;
    let appeal: Vec<f64> = (0..num_communities).map(|_| rng.gen::<f64>()).collect();
    let category: Vec<&str> = (0..num_communities)
        .map(|_| CANONICAL_CATEGORIES[rng.gen_range(0..CANONICAL_CATEGORIES.len())])
        .collect();

    let (lo, hi) = spec.impulse_strength_range;
    let noise =
        Normal::new(0.0, spec.noise_std).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let cfg = LongevityConfig::default();
    let mut trains = Vec::with_capacity(n);
    let mut histories = Vec::with_capacity(n);
    let mut raws = BTreeMap::new();
    for i in 0..n {
        let mean = 2.0 * spec.impulse_rate * appeal[community[i]];
        let count = if mean > 0.0 {
            let draw: f64 = Poisson::new(mean)
                .map_err(|e| Error::InvalidParameter(e.to_string()))?
                .sample(&mut rng);
            (draw as usize).min(spec.horizon)
        } else {
            0
        };
        let mut impulses = vec![0.0; spec.horizon];
        for pos in sample(&mut rng, spec.horizon, count) {
            impulses[pos] = if lo == hi { lo } else { rng.gen_range(lo..hi) };
        }
        let mut increments = convolve(&impulses, &filter)?;
        if spec.noise_std > 0.0 {
            for v in &mut increments {
                *v = (*v + noise.sample(&mut rng)).max(0.0);
            }
        }
        raws.insert(ids[i].clone(), raw_longevity(&impulses, &cfg));
        histories.push(ViewHistory::new(ids[i].clone(), increments)?);
        trains.push(ImpulseTrain {
            video_id: ids[i].clone(),
            impulses,
            gamma_used: spec.gamma_true,
            residual_norm: 0.0,
        });
    }
    let scores = score_corpus(&raws)?;
    let truth: Vec<u8> = ids.iter().map(|id| scores.videos[id].score).collect();

    let features = draw_features(&truth, spec.feature_coupling, &mut rng);
    let nodes = (0..n)
        .map(|i| {
            VideoNode::new(
                ids[i].clone(),
                category[community[i]],
                features[i],
                Some(truth[i]),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let pairs = draw_edges(spec, &community, &mut rng)?;
    let edges: Vec<(VideoId, VideoId)> = pairs
        .into_iter()
        .map(|(a, b)| (ids[a].clone(), ids[b].clone()))
        .collect();
    let graph = VideoGraph::new(nodes, &edges)?;

    Ok(SyntheticCorpus {
        spec: spec.clone(),
        histories,
        trains,
        scores,
        graph,
        edges,
        community,
    })
}

/// Heavy-tailed engagement counts driven by a latent log-scale popularity
/// `c * z + sqrt(1 - c^2) * noise`, where `z` is the standardized score.
/// Ratings cluster near the top of the scale; length ignores the score.
fn draw_features(truth: &[u8], coupling: f64, rng: &mut ChaCha8Rng) -> Vec<Features> {
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let n = truth.len() as f64;
    let mean = truth.iter().map(|&s| f64::from(s)).sum::<f64>() / n;
    let sd = (truth
        .iter()
        .map(|&s| (f64::from(s) - mean).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let residual = (1.0 - coupling * coupling).sqrt();
    truth
        .iter()
        .map(|&s| {
            let z = if sd > 0.0 {
                (f64::from(s) - mean) / sd
            } else {
                0.0
            };
            let pop = coupling * z + residual * std_normal.sample(rng);
            let mut g = || std_normal.sample(rng);
            let views = (11.0 + 1.3 * pop).exp().round();
            let favorites = (views * (-6.0 + 0.5 * g()).exp()).round();
            let likes = (views * (-5.0 + 0.5 * g()).exp()).round();
            let dislikes = (likes * (-2.5 + 0.7 * g()).exp()).round();
            let rating = (5.0 - 0.4 * (0.8 * g()).exp()).clamp(0.0, 5.0);
            let length = (5.5 + 0.6 * g()).exp().round();
            Features {
                view_count: views,
                favorite_count: favorites,
                average_rating: rating,
                length_seconds: length,
                like_count: likes,
                dislike_count: dislikes,
            }
        })
        .collect()
}

/// Bernoulli edges inside communities, plus a binomial number of uniformly
/// drawn cross-community pairs.
fn draw_edges(
    spec: &SyntheticSpec,
    community: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(usize, usize)>> {
    let n = community.len();
    let mut set = BTreeSet::new();
    let mut start = 0;
    while start < n {
        let end = (start + spec.community_size).min(n);
        for a in start..end {
            for b in a + 1..end {
                if rng.gen_bool(spec.intra_edge_prob) {
                    set.insert((a, b));
                }
            }
        }
        start = end;
    }

    let total_pairs = (n * n.saturating_sub(1) / 2) as u64;
    let intra_pairs: u64 = community
        .chunk_by(|a, b| a == b)
        .map(|c| (c.len() * (c.len() - 1) / 2) as u64)
        .sum();
    let inter_pairs = total_pairs - intra_pairs;
    if inter_pairs > 0 && spec.inter_edge_prob > 0.0 {
        let target = Binomial::new(inter_pairs, spec.inter_edge_prob)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng);
        let mut added = 0;
        while added < target {
            let a = rng.gen_range(0..n);
            let b = rng.gen_range(0..n);
            if community[a] == community[b] {
                continue;
            }
            if set.insert((a.min(b), a.max(b))) {
                added += 1;
            }
        }
    }
    Ok(set.into_iter().collect())
}
