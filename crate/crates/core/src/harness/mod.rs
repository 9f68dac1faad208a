//! Masking experiments and synthetic corpora.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::graph::VideoId;

pub mod experiment;
pub mod mask;
pub mod synth;

pub use experiment::{
    run_experiment, run_experiment_with, BuiltinMethod, ExperimentPlan, ExperimentReport,
    MethodRun, MethodSummary, Predictor, Scope, TrialContext, TrialRecord,
};
pub use mask::{mask_labels, MaskedGraph};
pub use synth::{generate_synthetic, SyntheticCorpus, SyntheticSpec};

/// Mean squared error over the held-out nodes in `truth`.
pub fn mse(predictions: &BTreeMap<VideoId, u8>, truth: &BTreeMap<VideoId, u8>) -> Result<f64> {
    if truth.is_empty() {
        return Err(Error::Insufficient("no held-out nodes to score".into()));
    }
    let mut sum = 0.0;
    for (id, &t) in truth {
        let p = predictions
            .get(id)
            .ok_or_else(|| Error::Insufficient(format!("no prediction for held-out node {id}")))?;
        sum += (f64::from(*p) - f64::from(t)).powi(2);
    }
    Ok(sum / truth.len() as f64)
}
