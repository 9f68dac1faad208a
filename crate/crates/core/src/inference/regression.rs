//! Ordinary least squares on the six public features, with intercept.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{to_score, Predictions};
use crate::error::{Error, Result};
use crate::graph::{Features, VideoGraph, NUM_FEATURES};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub intercept: f64,
    pub coefficients: [f64; NUM_FEATURES],
    /// The design matrix was rank deficient and the minimum-norm solution
    /// (in standardised feature coordinates) was used.
    pub rank_deficient: bool,
}

impl LinearModel {
    pub fn predict(&self, f: &Features) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(f.to_array())
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Fits the model on labeled nodes.
///
/// Columns are centred and scaled before an SVD solve, which keeps counts in
/// the millions and ratings near 4 on the same footing.
pub fn fit_linear_model(graph: &VideoGraph) -> Result<LinearModel> {
    let labeled: Vec<usize> = graph.labeled().collect();
    if labeled.is_empty() {
        return Err(Error::Insufficient(
            "regression needs at least one labeled node".into(),
        ));
    }
    let m = labeled.len();
    let rows: Vec<[f64; NUM_FEATURES]> = labeled
        .iter()
        .map(|&i| graph.node(i).features.to_array())
        .collect();
    let y: Vec<f64> = labeled
        .iter()
        .map(|&i| f64::from(graph.node(i).observed_score.unwrap_or_default()))
        .collect();
    let y_mean = y.iter().sum::<f64>() / m as f64;

    let mut means = [0.0; NUM_FEATURES];
    let mut scales = [0.0; NUM_FEATURES];
    for k in 0..NUM_FEATURES {
        means[k] = rows.iter().map(|r| r[k]).sum::<f64>() / m as f64;
        scales[k] = (rows.iter().map(|r| (r[k] - means[k]).powi(2)).sum::<f64>() / m as f64).sqrt();
    }
    let cols: Vec<usize> = (0..NUM_FEATURES).filter(|&k| scales[k] > 0.0).collect();

    let mut coefficients = [0.0; NUM_FEATURES];
    let mut rank_deficient = cols.len() < NUM_FEATURES;
    if !cols.is_empty() {
        let x = DMatrix::from_fn(m, cols.len(), |r, c| {
            let k = cols[c];
            (rows[r][k] - means[k]) / scales[k]
        });
        let b = DVector::from_iterator(m, y.iter().map(|v| v - y_mean));
        let svd = x.svd(true, true);
        let smax = svd.singular_values.max();
        let cutoff = smax * 1e-10 * (m.max(cols.len()) as f64);
        let rank = svd.singular_values.iter().filter(|s| **s > cutoff).count();
        rank_deficient |= rank < cols.len();
        let beta = svd
            .solve(&b, cutoff)
            .map_err(|e| Error::Insufficient(format!("regression solve failed: {e}")))?;
        for (c, &k) in cols.iter().enumerate() {
            coefficients[k] = beta[c] / scales[k];
        }
    }
    if rank_deficient {
        log::warn!("regression design is rank deficient; using the minimum-norm fit");
    }
    let intercept = y_mean
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, mu)| c * mu)
            .sum::<f64>();
    Ok(LinearModel {
        intercept,
        coefficients,
        rank_deficient,
    })
}

#[derive(Debug, Clone)]
pub struct RegressionOutput {
    pub predictions: Predictions,
    pub model: LinearModel,
}

/// Predicts each unlabeled node as the nearest valid score to the fit.
pub fn regression_baseline(graph: &VideoGraph) -> Result<RegressionOutput> {
    let model = fit_linear_model(graph)?;
    let predictions = graph
        .unlabeled()
        .map(|i| {
            let n = graph.node(i);
            (n.video_id.clone(), to_score(model.predict(&n.features)))
        })
        .collect();
    Ok(RegressionOutput { predictions, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{VideoId, VideoNode};

    fn graph_from(rows: &[([f64; 6], Option<u8>)]) -> VideoGraph {
        let nodes = rows
            .iter()
            .enumerate()
            .map(|(i, (f, s))| {
                VideoNode::new(format!("v{i}"), "Music", Features::from_array(*f), *s).unwrap()
            })
            .collect();
        VideoGraph::new(nodes, &[]).unwrap()
    }

    fn lcg(state: &mut u64) -> u64 {
        *state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        *state >> 33
    }

    #[test]
    fn constant_target_predicts_constant() {
        let mut rows = Vec::new();
        let mut st = 9;
        for i in 0..20 {
            let f = [
                (lcg(&mut st) % 1000) as f64,
                (lcg(&mut st) % 50) as f64,
                (lcg(&mut st) % 5) as f64,
                (lcg(&mut st) % 600) as f64,
                (lcg(&mut st) % 80) as f64,
                (lcg(&mut st) % 9) as f64,
            ];
            rows.push((f, if i < 15 { Some(37) } else { None }));
        }
        let out = regression_baseline(&graph_from(&rows)).unwrap();
        assert_eq!(out.predictions.len(), 5);
        assert!(out.predictions.values().all(|s| *s == 37));
    }

    #[test]
    fn planted_coefficients_recovered() {
        let plant = [3.0, -2.0, 0.0, 0.0, 1.0, 0.0];
        let mut st = 42;
        let mut rows = Vec::new();
        let mut hidden = Vec::new();
        for i in 0..60 {
            let f = [
                (lcg(&mut st) % 11) as f64,
                (lcg(&mut st) % 11) as f64,
                (lcg(&mut st) % 6) as f64,
                (lcg(&mut st) % 300) as f64,
                (lcg(&mut st) % 21) as f64,
                (lcg(&mut st) % 7) as f64,
            ];
            let target = 40.0 + plant.iter().zip(f).map(|(c, x)| c * x).sum::<f64>();
            let s = target as u8;
            if i % 5 == 0 {
                hidden.push((format!("v{i}"), s));
                rows.push((f, None));
            } else {
                rows.push((f, Some(s)));
            }
        }
        let out = regression_baseline(&graph_from(&rows)).unwrap();
        assert!(!out.model.rank_deficient);
        assert!((out.model.intercept - 40.0).abs() < 1e-8);
        for (a, b) in out.model.coefficients.iter().zip(plant) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
        for (id, s) in hidden {
            assert_eq!(out.predictions[&VideoId(id)], s);
        }
    }

    #[test]
    fn rank_deficient_design_flagged() {
        let rows: Vec<_> = (0..4)
            .map(|i| {
                (
                    [i as f64, 2.0 * i as f64, 3.0, 1.0, 1.0, 1.0],
                    Some(10 * i as u8),
                )
            })
            .collect();
        let m = fit_linear_model(&graph_from(&rows)).unwrap();
        assert!(m.rank_deficient);
        let f = Features::from_array([2.0, 4.0, 3.0, 1.0, 1.0, 1.0]);
        assert!((m.predict(&f) - 20.0).abs() < 1e-9);
    }

    #[test]
    fn needs_a_label() {
        let rows = vec![([1.0; 6], None)];
        assert!(fit_linear_model(&graph_from(&rows)).is_err());
    }
}
