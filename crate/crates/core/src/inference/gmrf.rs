//! Potentials of the pairwise discrete Gaussian MRF over integer scores.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest prior standard deviation: half a score step.
pub const SIGMA_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GmrfParams {
    /// Prior mean score.
    pub mu: f64,
    /// Prior standard deviation of scores.
    pub sigma: f64,
    /// Number of discrete score values; states are `0..score_states`.
    pub score_states: usize,
    pub max_iterations: usize,
    /// Stop once no belief entry moves by this much between iterations.
    pub convergence_tol: f64,
}

impl GmrfParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        let p = GmrfParams {
            mu,
            sigma,
            ..Default::default()
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.mu.is_finite() {
            return Err(Error::InvalidParameter("mu must be finite".into()));
        }
        if !(self.sigma.is_finite() && self.sigma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if self.score_states < 2 {
            return Err(Error::InvalidParameter(
                "score_states must be at least 2".into(),
            ));
        }
        if self.max_iterations < 1 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        if !(self.convergence_tol.is_finite() && self.convergence_tol > 0.0) {
            return Err(Error::InvalidParameter(
                "convergence_tol must be positive".into(),
            ));
        }
        Ok(())
    }
}

impl Default for GmrfParams {
    fn default() -> Self {
        GmrfParams {
            mu: 50.0,
            sigma: 20.0,
            score_states: 101,
            max_iterations: 100,
            convergence_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorFit {
    pub mu: f64,
    pub sigma: f64,
    /// The sample deviation was below [`SIGMA_FLOOR`] and was raised to it.
    pub floored: bool,
}

impl PriorFit {
    /// Default inference settings with this prior.
    pub fn params(&self) -> GmrfParams {
        GmrfParams {
            mu: self.mu,
            sigma: self.sigma,
            ..Default::default()
        }
    }
}

/// Gaussian fit to observed scores: sample mean and `n - 1` standard deviation.
pub fn fit_prior(scores: &[f64]) -> Result<PriorFit> {
    if scores.len() < 2 {
        return Err(Error::Insufficient(format!(
            "prior fit needs at least 2 observed scores, got {}",
            scores.len()
        )));
    }
    let n = scores.len() as f64;
    let mu = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mu).powi(2)).sum::<f64>() / (n - 1.0);
    let sd = var.sqrt();
    let floored = sd < SIGMA_FLOOR;
    if floored {
        log::warn!("observed scores have standard deviation {sd}; flooring sigma at {SIGMA_FLOOR}");
    }
    Ok(PriorFit {
        mu,
        sigma: if floored { SIGMA_FLOOR } else { sd },
        floored,
    })
}

/// `exp(-(s - mu)^2 / (2 sigma^2))`.
pub fn node_potential(state: usize, params: &GmrfParams) -> f64 {
    log_node_potential(state, params).exp()
}

pub(crate) fn log_node_potential(state: usize, params: &GmrfParams) -> f64 {
    let d = state as f64 - params.mu;
    -0.5 * d * d / (params.sigma * params.sigma)
}

/// `exp(-w (s_i - s_j)^2 / 2)`.
pub fn edge_potential(s_i: usize, s_j: usize, weight: f64) -> f64 {
    let d = s_i.abs_diff(s_j) as f64;
    (-0.5 * weight * d * d).exp()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_fit() {
        let f = fit_prior(&[40.0, 60.0]).unwrap();
        assert_eq!(f.mu, 50.0);
        assert!((f.sigma - 14.142_135_623_730_95).abs() < 1e-9);
        assert!(!f.floored);
    }

    #[test]
    fn constant_scores_floor_sigma() {
        let f = fit_prior(&[30.0, 30.0, 30.0]).unwrap();
        assert_eq!((f.mu, f.sigma, f.floored), (30.0, 0.5, true));
    }

    #[test]
    fn five_point_fit() {
        let f = fit_prior(&[10.0, 20.0, 30.0, 40.0, 50.0]).unwrap();
        assert_eq!(f.mu, 30.0);
        assert!((f.sigma - 15.811_388_300_841_896).abs() < 1e-9);
        assert!(fit_prior(&[1.0]).is_err());
    }

    #[test]
    fn node_potential_values() {
        let p = GmrfParams::new(50.0, 10.0).unwrap();
        assert_eq!(node_potential(50, &p), 1.0);
        assert!((node_potential(60, &p) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((node_potential(70, &p) - 0.135_335_283_236_612_7).abs() < 1e-9);
    }

    #[test]
    fn edge_potential_values() {
        assert_eq!(edge_potential(7, 7, 0.3), 1.0);
        assert!((edge_potential(3, 4, 1.0) - (-0.5f64).exp()).abs() < 1e-12);
        assert!((edge_potential(10, 14, 0.25) - 0.135_335_283_236_612_7).abs() < 1e-9);
        assert_eq!(edge_potential(10, 14, 0.25), edge_potential(14, 10, 0.25));
    }

    #[test]
    fn param_validation() {
        assert!(GmrfParams::new(50.0, 0.0).is_err());
        let p = GmrfParams {
            score_states: 1,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }
}
