//! Longevity: a time-weighted count of impulse occurrences, normalised
//! corpus-wide onto the integer scale 0..=100.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VideoId;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LongevityConfig {
    /// Noise threshold on impulse strength.
    pub epsilon: f64,
}

impl Default for LongevityConfig {
    fn default() -> Self {
        LongevityConfig { epsilon: 0.0 }
    }
}

impl LongevityConfig {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be finite and non-negative, got {epsilon}"
            )));
        }
        Ok(LongevityConfig { epsilon })
    }

    /// Whether an impulse of this strength counts as an occurrence.
    /// At `epsilon == 0` the test is strict so zero entries never count.
    pub fn is_occurrence(&self, strength: f64) -> bool {
        if self.epsilon == 0.0 {
            strength > 0.0
        } else {
            strength >= self.epsilon
        }
    }
}

/// Weight of an occurrence at time step `i`: `1 + ln(1 + i)`.
pub fn time_weight(i: usize) -> f64 {
    1.0 + (i as f64).ln_1p()
}

/// Raw longevity `r = sum_i [x_i counts] * (1 + ln(1 + i))`.
pub fn raw_longevity(impulses: &[f64], cfg: &LongevityConfig) -> f64 {
    impulses
        .iter()
        .enumerate()
        .filter(|(_, &x)| cfg.is_occurrence(x))
        .fold(0.0, |acc, (i, _)| acc + time_weight(i))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredVideo {
    pub video_id: VideoId,
    pub raw_value: f64,
    pub score: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusScores {
    pub videos: BTreeMap<VideoId, ScoredVideo>,
    /// Set when every raw value is zero, in which case every score is 0.
    pub degenerate: bool,
}

/// Normalises raw values to `round(r / max r * 100)`, rounding half away
/// from zero.
pub fn score_corpus(raws: &BTreeMap<VideoId, f64>) -> Result<CorpusScores> {
    if raws.is_empty() {
        return Err(Error::Insufficient("cannot score an empty corpus".into()));
    }
    for (id, &r) in raws {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "raw longevity of {id} must be finite and non-negative, got {r}"
            )));
        }
    }
    let max = raws.values().copied().fold(0.0, f64::max);
    let degenerate = max == 0.0;
    if degenerate {
        log::warn!("degenerate corpus: every raw longevity value is zero");
    }
    let videos = raws
        .iter()
        .map(|(id, &r)| {
            let score = if degenerate {
                0
            } else {
                // f64::round rounds half away from zero
                (r / max * 100.0).round().clamp(0.0, 100.0) as u8
            };
            (
                id.clone(),
                ScoredVideo {
                    video_id: id.clone(),
                    raw_value: r,
                    score,
                },
            )
        })
        .collect();
    Ok(CorpusScores { videos, degenerate })
}
