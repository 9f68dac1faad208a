//! Lawson-Hanson active-set NNLS specialised to the exponential filter.
//!
//! The solver works on the normal equations of the passive columns. Entries
//! of `H^T H` have a closed form, and `H^T (y - Hx)` is one backward
//! recurrence, so the filter matrix itself is never built.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{apply, apply_adjoint, objective, FilterSpec, ImpulseTrain, ViewHistory};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NnlsOptions {
    /// Relative dual-feasibility tolerance; absolute threshold is
    /// `tolerance * max(1, ||H^T y||_inf)`.
    pub tolerance: f64,
    /// Cap on least-squares solves. `None` means `10 * horizon`.
    pub max_iterations: Option<usize>,
}

impl Default for NnlsOptions {
    fn default() -> Self {
        NnlsOptions {
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NnlsSolution {
    pub x: Vec<f64>,
    /// Number of passive-set least-squares solves performed.
    pub iterations: usize,
    /// `||y - Hx||^2` at the start and after every primal update.
    pub objective_trace: Vec<f64>,
}

/// Optimality certificate for a candidate `x` of `min ||y - Hx||^2, x >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KktReport {
    /// Largest `|g_i|` over `x_i > 0`, where `g = H^T (Hx - y)`.
    pub stationarity: f64,
    /// Largest `-g_i` over `x_i == 0` (zero when dual feasible).
    pub dual_infeasibility: f64,
    /// Smallest entry of `x` (negative means primal infeasible).
    pub min_x: f64,
    /// `max(1, ||H^T y||_inf)`.
    pub scale: f64,
}

impl KktReport {
    pub fn holds(&self, tolerance: f64) -> bool {
        let bound = tolerance * self.scale;
        self.min_x >= 0.0 && self.stationarity <= bound && self.dual_infeasibility <= bound
    }
}

pub fn kkt_check(x: &[f64], y: &[f64], spec: &FilterSpec) -> Result<KktReport> {
    let n = spec.horizon();
    if x.len() != n || y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: if x.len() != n { x.len() } else { y.len() },
        });
    }
    let rho = spec.decay();
    let mut hx = vec![0.0; n];
    apply(rho, x, &mut hx);
    let resid: Vec<f64> = hx.iter().zip(y).map(|(a, b)| a - b).collect();
    let mut grad = vec![0.0; n];
    apply_adjoint(rho, &resid, &mut grad);
    let mut hty = vec![0.0; n];
    apply_adjoint(rho, y, &mut hty);

    let mut report = KktReport {
        stationarity: 0.0,
        dual_infeasibility: 0.0,
        min_x: x.iter().copied().fold(f64::INFINITY, f64::min),
        scale: hty.iter().fold(1.0_f64, |m, v| m.max(v.abs())),
    };
    for (&xi, &gi) in x.iter().zip(&grad) {
        if xi > 0.0 {
            report.stationarity = report.stationarity.max(gi.abs());
        } else {
            report.dual_infeasibility = report.dual_infeasibility.max(-gi);
        }
    }
    Ok(report)
}

/// Precomputed `H^T H` for one filter.
struct Gram {
    n: usize,
    data: Vec<f64>,
}

impl Gram {
    fn new(spec: &FilterSpec) -> Self {
        let n = spec.horizon();
        let mut data = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let g = spec.gram(i, j);
                data[i * n + j] = g;
                data[j * n + i] = g;
            }
        }
        Gram { n, data }
    }

    fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }
}

/// Least-squares solution restricted to the columns in `passive`.
fn solve_passive(gram: &Gram, hty: &[f64], passive: &[usize]) -> Vec<f64> {
    let p = passive.len();
    let g = DMatrix::from_fn(p, p, |r, c| gram.get(passive[r], passive[c]));
    let rhs = DVector::from_fn(p, |r, _| hty[passive[r]]);
    let z = match g.clone().cholesky() {
        Some(chol) => chol.solve(&rhs),
        // H has a unit diagonal so H^T H is positive definite; LU only
        // guards against catastrophic rounding.
        None => g.lu().solve(&rhs).unwrap_or_else(|| DVector::zeros(p)),
    };
    z.iter().copied().collect()
}

pub fn solve_nnls(y: &[f64], spec: &FilterSpec, options: &NnlsOptions) -> Result<NnlsSolution> {
    let n = spec.horizon();
    if y.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            actual: y.len(),
        });
    }
    if let Some(index) = y.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite {
            what: "view history",
            index,
        });
    }
    if !(options.tolerance.is_finite() && options.tolerance > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {}",
            options.tolerance
        )));
    }
    let cap = options.max_iterations.unwrap_or(10 * n);

    let rho = spec.decay();
    let gram = Gram::new(spec);
    let mut hty = vec![0.0; n];
    apply_adjoint(rho, y, &mut hty);
    let scale = hty.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
    let dual_tol = options.tolerance * scale;
    // Coefficients below this move the gradient by less than `dual_tol`.
    let primal_tol = dual_tol / gram.get(0, 0);

    let mut x = vec![0.0; n];
    let mut in_passive = vec![false; n];
    let mut excluded = vec![false; n];
    let mut w = hty.clone();
    let mut hx = vec![0.0; n];
    let mut resid = vec![0.0; n];
    let mut trace = vec![objective(rho, &x, y)];
    let mut iterations = 0;

    loop {
        let candidate = (0..n)
            .filter(|&i| !in_passive[i] && !excluded[i] && w[i] > dual_tol)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if w[b] >= w[i] => Some(b),
                _ => Some(i),
            });
        let Some(entering) = candidate else { break };
        in_passive[entering] = true;

        loop {
            iterations += 1;
            if iterations > cap {
                return Err(Error::NoConvergence { cap, best: x });
            }
            let passive: Vec<usize> = (0..n).filter(|&i| in_passive[i]).collect();
            let z = solve_passive(&gram, &hty, &passive);

            if z.iter().all(|&zi| zi > primal_tol) {
                for (&i, &zi) in passive.iter().zip(&z) {
                    x[i] = zi;
                }
                excluded.iter_mut().for_each(|e| *e = false);
                break;
            }

            // Step back toward z until the first passive coefficient hits zero.
            let alpha = passive
                .iter()
                .zip(&z)
                .filter(|(_, &zi)| zi <= primal_tol)
                .map(|(&i, &zi)| {
                    let denom = x[i] - zi;
                    if denom > 0.0 {
                        x[i] / denom
                    } else {
                        0.0
                    }
                })
                .fold(f64::INFINITY, f64::min);
            for (&i, &zi) in passive.iter().zip(&z) {
                x[i] += alpha * (zi - x[i]);
            }
            for &i in &passive {
                if x[i] <= primal_tol {
                    x[i] = 0.0;
                    in_passive[i] = false;
                }
            }
            trace.push(objective(rho, &x, y));
            if !in_passive[entering] && x[entering] == 0.0 && alpha == 0.0 {
                // Degenerate entry: no progress possible along this column.
                excluded[entering] = true;
                break;
            }
        }
        trace.push(objective(rho, &x, y));

        apply(rho, &x, &mut hx);
        for ((r, yk), hk) in resid.iter_mut().zip(y).zip(&hx) {
            *r = yk - hk;
        }
        apply_adjoint(rho, &resid, &mut w);
    }

    Ok(NnlsSolution {
        x,
        iterations,
        objective_trace: trace,
    })
}

/// Recovers the impulse train behind `history` under filter `spec`.
pub fn deconvolve(
    history: &ViewHistory,
    spec: &FilterSpec,
    tolerance: f64,
) -> Result<ImpulseTrain> {
    let options = NnlsOptions {
        tolerance,
        max_iterations: None,
    };
    let solution = solve_nnls(history.increments(), spec, &options)?;
    let residual_norm = objective(spec.decay(), &solution.x, history.increments()).sqrt();
    Ok(ImpulseTrain {
        video_id: history.video_id.clone(),
        impulses: solution.x,
        gamma_used: spec.gamma(),
        residual_norm,
    })
}
