//! Conditional covariance: constant CMA covariance and the affine long-memory
//! ARCH model
//!
//! ```text
//! Σ_lin(t) = Σ_l w(l) (r(t−l) − μ)(r(t−l) − μ)ᵀ
//! Σ(t)     = w_∞ Σ_CMA + (1 − w_∞) Σ_lin(t)
//! ```
//!
//! Lags not yet covered by observed returns are filled with the neutral
//! value `Σ_CMA`, the fixed point of the affine map.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::market::linalg::{matrix_sqrt, SymmetricMatrix};
use crate::market::{KernelSpec, TimeGrid, MONTH_IN_YEARS};
use crate::window::RingWindow;

/// Normalized lag weights `w(l)`, `l ∈ [0, l_max)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LmarchKernel {
    weights: Vec<f64>,
}

impl LmarchKernel {
    /// Mixture of exponentials `w(l) ∝ Σ_k c_k (1 − μ_k) μ_k^l`,
    /// `μ_k = exp(−1/τ_k)`, truncated at `l_max` and renormalized.
    /// Time constants and `l_max` are in steps.
    pub fn build(taus: &[f64], component_weights: &[f64], l_max: usize) -> Result<Self> {
        if taus.is_empty() || taus.iter().any(|&t| !(t > 0.0 && t.is_finite())) {
            return Err(Error::config("kernel.taus", "must be non-empty and positive"));
        }
        if component_weights.len() != taus.len()
            || component_weights.iter().any(|&c| !(c >= 0.0))
            || component_weights.iter().sum::<f64>() <= 0.0
        {
            return Err(Error::config(
                "kernel.component_weights",
                "need one non-negative weight per time constant, not all zero",
            ));
        }
        let max_tau = taus.iter().cloned().fold(0.0, f64::max);
        if !(l_max as f64 > max_tau) {
            return Err(Error::config(
                "kernel.l_max",
                format!("{l_max} must exceed the largest time constant {max_tau}"),
            ));
        }
        let mut weights = vec![0.0; l_max];
        for (&tau, &c) in taus.iter().zip(component_weights) {
            let mu = (-1.0 / tau).exp();
            let mut term = c * (1.0 - mu);
            for w in weights.iter_mut() {
                *w += term;
                term *= mu;
            }
        }
        Self::from_weights(weights)
    }

    /// Component weights `c_k ∝ 1 − ln τ_k / ln τ_decay`.
    pub fn log_decay_weights(taus: &[f64], decay: f64) -> Vec<f64> {
        taus.iter().map(|t| 1.0 - t.ln() / decay.ln()).collect()
    }

    pub fn from_spec(spec: &KernelSpec, grid: &TimeGrid) -> Result<Self> {
        spec.validate()?;
        let months_per_step = grid.step_years / MONTH_IN_YEARS;
        let taus: Vec<f64> = spec.taus_months.iter().map(|t| t / months_per_step).collect();
        let weights = Self::log_decay_weights(&spec.taus_months, spec.decay_months);
        let l_max = (spec.l_max_months / months_per_step).round() as usize;
        Self::build(&taus, &weights, l_max)
    }

    /// Explicit lag weights; they must be non-negative and non-increasing and
    /// are renormalized to sum to one.
    pub fn from_weights(mut weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) {
            return Err(Error::config("kernel.weights", "must be non-empty and non-negative"));
        }
        if weights.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::config("kernel.weights", "must be non-increasing in the lag"));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::config("kernel.weights", "must not all be zero"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(LmarchKernel { weights })
    }

    /// Equal weights over `window` lags.
    pub fn rectangular(window: usize) -> Result<Self> {
        Self::from_weights(vec![1.0; window])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn l_max(&self) -> usize {
        self.weights.len()
    }
}

pub fn build_kernel(taus: &[f64], component_weights: &[f64], l_max: usize) -> Result<LmarchKernel> {
    LmarchKernel::build(taus, component_weights, l_max)
}

/// Covariance state of one path, at step scale.
#[derive(Debug, Clone)]
pub struct CovarianceState {
    kernel: Arc<LmarchKernel>,
    w_inf: f64,
    sigma_cma: SymmetricMatrix,
    mu: Vec<f64>,
    window: RingWindow,
    scratch: Vec<f64>,
}

impl CovarianceState {
    /// `sigma_cma` and `mu` are at step scale; `mu` is subtracted from every
    /// pushed return.
    pub fn new(
        kernel: Arc<LmarchKernel>,
        w_inf: f64,
        sigma_cma: SymmetricMatrix,
        mu: Vec<f64>,
    ) -> Result<Self> {
        if !(0.0..=1.0).contains(&w_inf) {
            return Err(Error::config("covariance.w_inf", format!("{w_inf} outside [0, 1]")));
        }
        let n = mu.len();
        if sigma_cma.dim() != n {
            return Err(Error::DimensionMismatch {
                what: "CMA covariance",
                expected: n,
                found: sigma_cma.dim(),
            });
        }
        let l_max = kernel.l_max();
        Ok(CovarianceState {
            kernel,
            w_inf,
            sigma_cma,
            window: RingWindow::new(n, l_max),
            scratch: vec![0.0; n],
            mu,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.mu.len()
    }

    pub fn w_inf(&self) -> f64 {
        self.w_inf
    }

    pub fn sigma_cma(&self) -> &SymmetricMatrix {
        &self.sigma_cma
    }

    /// Number of lags backed by observed returns (the rest are neutral).
    pub fn observed_lags(&self) -> usize {
        self.window.len()
    }

    /// Records the realized return `r(t)`.
    pub fn push_return(&mut self, r: &[f64]) {
        for ((s, ri), m) in self.scratch.iter_mut().zip(r).zip(&self.mu) {
            *s = ri - m;
        }
        self.window.push(&self.scratch);
    }

    pub fn linear_covariance(&self) -> SymmetricMatrix {
        let n = self.n_assets();
        let mut out = SymmetricMatrix::zeros(n);
        let weights = self.kernel.weights();
        let observed = self.window.len();
        for (l, &w) in weights.iter().enumerate().take(observed) {
            let x = self.window.back(l).expect("lag within observed window");
            out.add_outer(w, x);
        }
        let neutral: f64 = weights[observed.min(weights.len())..].iter().sum();
        if neutral > 0.0 {
            out.add_scaled(neutral, &self.sigma_cma);
        }
        out
    }

    pub fn affine_covariance(&self) -> SymmetricMatrix {
        let mut out = self.linear_covariance().scaled(1.0 - self.w_inf);
        out.add_scaled(self.w_inf, &self.sigma_cma);
        out
    }

    /// `Σ(t)` and its symmetric square root.
    pub fn affine_covariance_with_root(&self, eps_min: f64) -> Result<(SymmetricMatrix, DMatrix<f64>)> {
        let sigma = self.affine_covariance();
        let root = matrix_sqrt(&sigma, eps_min)?;
        Ok((sigma, root))
    }

    fn past_square(&self, asset: usize, lag: usize) -> f64 {
        match self.window.back(lag) {
            Some(x) => x[asset] * x[asset],
            None => self.sigma_cma.get(asset, asset),
        }
    }

    /// Mean per-step variance over the next `horizon` steps, iterating the
    /// affine map with future squared returns replaced by their conditional
    /// expectations. `horizon = 1` is the diagonal of `Σ(t)`.
    pub fn variance_forecast(&self, horizon: usize) -> Result<Vec<f64>> {
        if horizon == 0 {
            return Err(Error::config("horizon", "must be at least one step"));
        }
        let weights = self.kernel.weights();
        let n = self.n_assets();
        let mut out = vec![0.0; n];
        let mut vhat = vec![0.0; horizon];
        for (a, o) in out.iter_mut().enumerate() {
            let s_cma = self.sigma_cma.get(a, a);
            for j in 0..horizon {
                let mut lin = 0.0;
                for (l, &w) in weights.iter().enumerate() {
                    lin += w * if l < j {
                        vhat[j - 1 - l]
                    } else {
                        self.past_square(a, l - j)
                    };
                }
                vhat[j] = self.w_inf * s_cma + (1.0 - self.w_inf) * lin;
            }
            *o = vhat.iter().sum::<f64>() / horizon as f64;
        }
        Ok(out)
    }
}

/// Equal-weight mean of squared returns over the last `steps` entries, with
/// no demeaning.
pub fn rma_variance(returns: &[f64], steps: usize) -> Result<f64> {
    if steps == 0 || returns.len() < steps {
        return Err(Error::InsufficientData {
            what: "RMA window".into(),
            needed: steps.max(1),
            got: returns.len(),
        });
    }
    let window = &returns[returns.len() - steps..];
    Ok(window.iter().map(|r| r * r).sum::<f64>() / steps as f64)
}
