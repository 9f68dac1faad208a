//! The exponential video signal filter.
//!
//! A filter with decay rate `gamma` maps an impulse train `x` to view
//! increments `y_k = sum_{i<=k} x_i * exp(-gamma * (k - i))`. The filter matrix
//! is lower triangular with a unit diagonal and is never formed explicitly:
//! forward and adjoint application both run as first-order recurrences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::VideoId;

/// Decay rate and length of the exponential impulse response.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterSpec {
    gamma: f64,
    horizon: usize,
}

impl FilterSpec {
    pub fn new(gamma: f64, horizon: usize) -> Result<Self> {
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "gamma must be finite and positive, got {gamma}"
            )));
        }
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        Ok(FilterSpec { gamma, horizon })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Per-step decay factor `exp(-gamma)`.
    pub fn decay(&self) -> f64 {
        (-self.gamma).exp()
    }

    /// Entry `(i, j)` of `H^T H`, in closed form.
    ///
    /// `sum_{k >= max(i,j)} h_{k-i} h_{k-j} = rho^|i-j| * (1 - rho^(2m)) / (1 - rho^2)`
    /// with `m = horizon - max(i, j)` terms; `expm1` keeps it accurate for small gamma.
    pub(crate) fn gram(&self, i: usize, j: usize) -> f64 {
        let lag = i.abs_diff(j) as f64;
        let terms = (self.horizon - i.max(j)) as f64;
        let g2 = 2.0 * self.gamma;
        (-self.gamma * lag).exp() * ((-g2 * terms).exp_m1() / (-g2).exp_m1())
    }
}

/// Impulse-response coefficients `h_i = exp(-gamma * i)` for `i` in `0..horizon`.
pub fn irf_coefficients(spec: &FilterSpec) -> Vec<f64> {
    let decay = spec.decay();
    (0..spec.horizon).map(|i| decay.powi(i as i32)).collect()
}

/// Observed per-interval view increments of one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewHistory {
    pub video_id: VideoId,
    increments: Vec<f64>,
}

impl ViewHistory {
    /// Rejects empty, non-finite or negative series.
    pub fn new(video_id: impl Into<VideoId>, increments: Vec<f64>) -> Result<Self> {
        if increments.is_empty() {
            return Err(Error::InvalidParameter("empty view history".into()));
        }
        check_nonnegative("view history", &increments)?;
        Ok(ViewHistory {
            video_id: video_id.into(),
            increments,
        })
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    pub fn len(&self) -> usize {
        self.increments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.increments.is_empty()
    }
}

/// Recovered non-negative filter input for one video.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImpulseTrain {
    pub video_id: VideoId,
    pub impulses: Vec<f64>,
    pub gamma_used: f64,
    /// `||y* - H x||_2` at the returned impulses.
    pub residual_norm: f64,
}

impl ImpulseTrain {
    pub fn len(&self) -> usize {
        self.impulses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.impulses.is_empty()
    }
}

pub(crate) fn check_nonnegative(what: &'static str, values: &[f64]) -> Result<()> {
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { what, index });
        }
        if value < 0.0 {
            return Err(Error::Negative { what, index, value });
        }
    }
    Ok(())
}

fn check_len(spec: &FilterSpec, len: usize) -> Result<()> {
    if len != spec.horizon {
        return Err(Error::LengthMismatch {
            expected: spec.horizon,
            actual: len,
        });
    }
    Ok(())
}

/// Filter output `y = H x`.
pub fn convolve(x: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    check_len(spec, x.len())?;
    let mut y = vec![0.0; x.len()];
    apply(spec.decay(), x, &mut y);
    Ok(y)
}

/// Adjoint application `H^T r`.
pub fn convolve_adjoint(r: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    check_len(spec, r.len())?;
    let mut out = vec![0.0; r.len()];
    apply_adjoint(spec.decay(), r, &mut out);
    Ok(out)
}

/// Unconstrained inverse `H^{-1} y`; `H^{-1}` is bidiagonal so this is
/// `x_k = y_k - rho * y_{k-1}`. May contain negative entries.
pub fn forward_substitution(y: &[f64], spec: &FilterSpec) -> Result<Vec<f64>> {
    check_len(spec, y.len())?;
    let rho = spec.decay();
    Ok(y.iter()
        .enumerate()
        .map(|(k, &yk)| if k == 0 { yk } else { yk - rho * y[k - 1] })
        .collect())
}

pub(crate) fn apply(rho: f64, x: &[f64], y: &mut [f64]) {
    let mut acc = 0.0;
    for (xk, yk) in x.iter().zip(y.iter_mut()) {
        acc = xk + rho * acc;
        *yk = acc;
    }
}

pub(crate) fn apply_adjoint(rho: f64, r: &[f64], out: &mut [f64]) {
    let mut acc = 0.0;
    for (rk, ok) in r.iter().zip(out.iter_mut()).rev() {
        acc = rk + rho * acc;
        *ok = acc;
    }
}

/// `||y - H x||_2^2`.
pub(crate) fn objective(rho: f64, x: &[f64], y: &[f64]) -> f64 {
    let mut acc = 0.0;
    let mut sum = 0.0;
    for (xk, yk) in x.iter().zip(y) {
        acc = xk + rho * acc;
        let d = yk - acc;
        sum += d * d;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn dense(spec: &FilterSpec) -> Vec<Vec<f64>> {
        let n = spec.horizon();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i >= j {
                            (-spec.gamma() * (i - j) as f64).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect()
    }

    #[test]
    fn coefficients_halve_at_ln2() {
        let spec = FilterSpec::new(LN_2, 4).unwrap();
        assert_eq!(irf_coefficients(&spec), vec![1.0, 0.5, 0.25, 0.125]);
    }

    #[test]
    fn coefficients_large_gamma_is_identity() {
        let h = irf_coefficients(&FilterSpec::new(50.0, 3).unwrap());
        assert_eq!(h[0], 1.0);
        assert!(h[1] < 1e-20 && h[2] < 1e-40);
    }

    #[test]
    fn coefficients_gamma_point_three() {
        let h = irf_coefficients(&FilterSpec::new(0.3, 3).unwrap());
        assert!((h[1] - 0.740_818_220_681_717_8).abs() < 1e-12);
        assert!((h[2] - 0.548_811_636_094_026_4).abs() < 1e-12);
        assert!(h.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(FilterSpec::new(0.0, 3).is_err());
        assert!(FilterSpec::new(-1.0, 3).is_err());
        assert!(FilterSpec::new(f64::NAN, 3).is_err());
        assert!(FilterSpec::new(0.3, 0).is_err());
    }

    #[test]
    fn convolve_examples() {
        let spec = FilterSpec::new(LN_2, 4).unwrap();
        assert_eq!(
            convolve(&[1.0, 0.0, 0.0, 0.0], &spec).unwrap(),
            vec![1.0, 0.5, 0.25, 0.125]
        );
        assert_eq!(convolve(&[0.0; 4], &spec).unwrap(), vec![0.0; 4]);
        let spec3 = FilterSpec::new(LN_2, 3).unwrap();
        assert_eq!(
            convolve(&[2.0, 1.0, 0.0], &spec3).unwrap(),
            vec![2.0, 2.0, 1.0]
        );
    }

    #[test]
    fn convolve_length_mismatch() {
        let spec = FilterSpec::new(0.3, 4).unwrap();
        assert!(matches!(
            convolve(&[1.0, 2.0], &spec),
            Err(Error::LengthMismatch {
                expected: 4,
                actual: 2
            })
        ));
    }

    #[test]
    fn recurrences_match_dense_matrix() {
        let spec = FilterSpec::new(0.17, 9).unwrap();
        let h = dense(&spec);
        let x: Vec<f64> = (0..9).map(|i| ((i * 7) % 5) as f64 - 1.5).collect();
        let y = convolve(&x, &spec).unwrap();
        let at = convolve_adjoint(&x, &spec).unwrap();
        for i in 0..9 {
            let hx: f64 = (0..9).map(|j| h[i][j] * x[j]).sum();
            let htx: f64 = (0..9).map(|j| h[j][i] * x[j]).sum();
            assert!((y[i] - hx).abs() < 1e-12);
            assert!((at[i] - htx).abs() < 1e-12);
            for j in 0..9 {
                let g: f64 = (0..9).map(|k| h[k][i] * h[k][j]).sum();
                assert!((spec.gram(i, j) - g).abs() < 1e-12, "gram {i} {j}");
            }
        }
        let back = forward_substitution(&y, &spec).unwrap();
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn history_rejects_negative_and_nan() {
        assert!(ViewHistory::new("v", vec![1.0, -0.1]).is_err());
        assert!(ViewHistory::new("v", vec![1.0, f64::NAN]).is_err());
        assert!(ViewHistory::new("v", vec![]).is_err());
        assert!(ViewHistory::new("v", vec![0.0, 2.0]).is_ok());
    }
}
