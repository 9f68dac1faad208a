//! Score inference for unlabeled videos: the discrete GMRF solved by loopy
//! belief propagation, and the regression and graph-KNN baselines.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::VideoId;

pub mod gmrf;
pub mod knn;
pub mod lbp;
pub mod regression;

pub use gmrf::{edge_potential, fit_prior, node_potential, GmrfParams, PriorFit};
pub use knn::{knn_baseline, select_best_k, KnnOutput, DEFAULT_K_CANDIDATES};
pub use lbp::{lbp_predict, run_lbp, BeliefState, LbpDiagnostics, LbpOptions, LbpOutput};
pub use regression::{fit_linear_model, regression_baseline, LinearModel, RegressionOutput};

/// Predicted integer score per unlabeled video.
pub type Predictions = BTreeMap<VideoId, u8>;

#[derive(
    Debug,
    Clone,
    Copy,
    PartialEq,
    Eq,
    PartialOrd,
    Ord,
    Hash,
    Serialize,
    Deserialize,
    clap::ValueEnum,
)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    #[value(name = "gmrf_lbp", alias = "gmrf", alias = "lbp")]
    GmrfLbp,
    #[value(alias = "linreg")]
    Regression,
    Knn,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::GmrfLbp, Method::Regression, Method::Knn];

    pub fn name(&self) -> &'static str {
        match self {
            Method::GmrfLbp => "gmrf_lbp",
            Method::Regression => "regression",
            Method::Knn => "knn",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gmrf_lbp" | "gmrf" | "lbp" => Ok(Method::GmrfLbp),
            "regression" | "linreg" => Ok(Method::Regression),
            "knn" => Ok(Method::Knn),
            other => Err(Error::InvalidParameter(format!(
                "unknown method {other:?} (expected gmrf_lbp, regression or knn)"
            ))),
        }
    }
}

/// Rounds half away from zero and clamps onto 0..=100.
pub fn to_score(value: f64) -> u8 {
    if value.is_nan() {
        return 0;
    }
    value.round().clamp(0.0, 100.0) as u8
}

/// Mode of `scores`; ties go to the lowest score.
pub(crate) fn mode_lowest(scores: &[u8]) -> Option<u8> {
    let mut counts = [0usize; 256];
    for &s in scores {
        counts[usize::from(s)] += 1;
    }
    let mut best: Option<(usize, u8)> = None;
    for (s, &c) in counts.iter().enumerate() {
        if c > 0 && best.is_none_or(|(bc, _)| c > bc) {
            best = Some((c, s as u8));
        }
    }
    best.map(|(_, s)| s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn method_names_roundtrip() {
        for m in Method::ALL {
            assert_eq!(m.name().parse::<Method>().unwrap(), m);
        }
        assert!("svm".parse::<Method>().is_err());
    }

    #[test]
    fn rounding_and_mode() {
        assert_eq!(to_score(27.5), 28);
        assert_eq!(to_score(-3.0), 0);
        assert_eq!(to_score(140.2), 100);
        assert_eq!(mode_lowest(&[30, 30, 70]), Some(30));
        assert_eq!(mode_lowest(&[70, 30]), Some(30));
        assert_eq!(mode_lowest(&[]), None);
    }
}
