use serde::{Deserialize, Serialize};

use crate::market::{AssetClass, CmaParameters};

/// Horizon `(σ/μ)²` in years where the drift overtakes the diffusion;
/// infinite when `μ = 0`.
pub fn crossover_years(mu_annual: f64, sigma_annual: f64) -> f64 {
    if mu_annual == 0.0 {
        f64::INFINITY
    } else {
        (sigma_annual / mu_annual).powi(2)
    }
}

/// `μ/σ`, equal in magnitude to `√(1y/ΔT_×)`.
pub fn sharpe_ratio(mu_annual: f64, sigma_annual: f64) -> f64 {
    mu_annual / sigma_annual
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossoverRow {
    pub asset_id: String,
    pub class: AssetClass,
    pub mu: f64,
    pub sigma: f64,
    pub crossover_years: f64,
    pub sharpe: f64,
}

/// One row per asset, in CMA order.
pub fn crossover_table(cma: &CmaParameters) -> Vec<CrossoverRow> {
    (0..cma.n_assets())
        .map(|a| {
            let (mu, sigma) = (cma.mu_annual[a], cma.sigma_annual[a]);
            CrossoverRow {
                asset_id: cma.asset_ids[a].clone(),
                class: cma.classes[a],
                mu,
                sigma,
                crossover_years: crossover_years(mu, sigma),
                sharpe: sharpe_ratio(mu, sigma),
            }
        })
        .collect()
}
