//! Per-step drift: constant CMA drift, a per-path drift-uncertainty offset,
//! and the history-dependent negative-return-correlation (NRC) term.

use crate::error::{Error, Result};
use crate::innovation::RngStream;
use crate::market::{AssetClass, CmaParameters, NrcSpec, TimeGrid};
use crate::window::RingWindow;

/// Per-path drift offset, in per-step units: one normal draw per asset with
/// annualized scale `σ_CMA,1y/√ΔT_cal`, rescaled by `δt/1y`.
pub fn du_draw(
    stream: &mut RngStream,
    sigma_annual: &[f64],
    calibration_years: f64,
    step_years: f64,
) -> Result<Vec<f64>> {
    if !(calibration_years > 0.0) {
        return Err(Error::config(
            "drift.du.calibration_years",
            format!("{calibration_years} must be positive"),
        ));
    }
    let scale = step_years / calibration_years.sqrt();
    Ok(sigma_annual
        .iter()
        .map(|s| s * scale * stream.standard_normal())
        .collect())
}

/// `D(ΔT) = (1 + μ_δt)^{-ΔT/δt}`.
pub fn discount_factor(mu_step: f64, lag_steps: usize) -> f64 {
    (1.0 + mu_step).powi(-(lag_steps as i32))
}

/// One NRC horizon for one asset.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NrcTerm {
    pub lag_steps: usize,
    pub gamma: f64,
    /// `D^{-1}(ΔT)`, moving `p(t − ΔT)` forward along the CMA drift.
    pub forward: f64,
}

impl NrcTerm {
    pub fn new(lag_steps: usize, gamma: f64, mu_step: f64) -> Self {
        NrcTerm {
            lag_steps,
            gamma,
            forward: 1.0 / discount_factor(mu_step, lag_steps),
        }
    }

    #[inline]
    fn contribution(&self, now: f64, past: f64) -> f64 {
        if now <= 0.0 || past <= 0.0 {
            return 0.0;
        }
        self.gamma / self.lag_steps as f64 * (now / (self.forward * past) - 1.0)
    }
}

/// Resolves the class-keyed NRC configuration into per-asset terms on `grid`.
pub fn nrc_terms(
    spec: &NrcSpec,
    classes: &[AssetClass],
    mu_step: &[f64],
    grid: &TimeGrid,
) -> Result<Vec<Vec<NrcTerm>>> {
    classes
        .iter()
        .zip(mu_step)
        .map(|(class, &mu)| {
            let horizons = spec.horizons.get(class).map(Vec::as_slice).unwrap_or(&[]);
            horizons
                .iter()
                .map(|h| {
                    let lag = grid.steps_for_months(h.months).filter(|&l| l > 0).ok_or_else(|| {
                        Error::config(
                            format!("drift.nrc.horizons.{class}"),
                            format!("{} months is not a whole number of steps", h.months),
                        )
                    })?;
                    Ok(NrcTerm::new(lag, h.gamma, mu))
                })
                .collect()
        })
        .collect()
}

/// Drift state of one path.
#[derive(Debug, Clone)]
pub struct DriftState {
    mu_base: Vec<f64>,
    du_offset: Vec<f64>,
    nrc: Vec<Vec<NrcTerm>>,
    history: RingWindow,
}

impl DriftState {
    pub fn new(mu_base: Vec<f64>, du_offset: Option<Vec<f64>>, nrc: Vec<Vec<NrcTerm>>) -> Self {
        let n = mu_base.len();
        let max_lag = nrc.iter().flatten().map(|t| t.lag_steps).max().unwrap_or(0);
        // Always keep the current prices: absorbed assets are read from them.
        let capacity = max_lag + 1;
        DriftState {
            du_offset: du_offset.unwrap_or_else(|| vec![0.0; n]),
            mu_base,
            nrc: if nrc.is_empty() { vec![Vec::new(); n] } else { nrc },
            history: RingWindow::new(n, capacity),
        }
    }

    /// Convenience constructor from the CMA; `du_offset` comes from [`du_draw`].
    pub fn from_cma(
        cma: &CmaParameters,
        grid: &TimeGrid,
        nrc: Option<&NrcSpec>,
        du_offset: Option<Vec<f64>>,
    ) -> Result<Self> {
        let mu: Vec<f64> = cma.mu_annual.iter().map(|m| m * grid.step_years).collect();
        let terms = match nrc {
            Some(spec) => nrc_terms(spec, &cma.classes, &mu, grid)?,
            None => Vec::new(),
        };
        Ok(Self::new(mu, du_offset, terms))
    }

    pub fn n_assets(&self) -> usize {
        self.mu_base.len()
    }

    pub fn du_offset(&self) -> &[f64] {
        &self.du_offset
    }

    pub fn mu_base(&self) -> &[f64] {
        &self.mu_base
    }

    /// Records the prices at the current time `t`.
    pub fn push_prices(&mut self, prices: &[f64]) {
        self.history.push(prices);
    }

    /// Number of price vectors retained (saturates at the deepest horizon + 1).
    pub fn history_len(&self) -> usize {
        self.history.len()
    }

    pub fn nrc_term_into(&self, out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let Some(now) = self.history.back(0) else {
            return;
        };
        for (a, terms) in self.nrc.iter().enumerate() {
            for term in terms {
                // Horizons not yet covered by history contribute nothing.
                if let Some(past) = self.history.back(term.lag_steps) {
                    out[a] += term.contribution(now[a], past[a]);
                }
            }
        }
    }

    pub fn nrc_term(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_assets()];
        self.nrc_term_into(&mut out);
        out
    }

    /// `μ(t) = μ_CMA + μ_DU + μ_NRC(t)`; zero for absorbed assets.
    pub fn total_drift_into(&self, out: &mut [f64]) {
        self.nrc_term_into(out);
        let now = self.history.back(0);
        for a in 0..out.len() {
            if now.is_some_and(|p| p[a] <= 0.0) {
                out[a] = 0.0;
            } else {
                out[a] += self.mu_base[a] + self.du_offset[a];
            }
        }
    }

    pub fn total_drift(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.n_assets()];
        self.total_drift_into(&mut out);
        out
    }
}
