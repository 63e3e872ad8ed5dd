use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::EnsembleResult;

/// Terminal-wealth statistics at one horizon, wealth normalized by `p(0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WealthPoint {
    pub horizon_years: f64,
    pub steps: usize,
    pub n_paths: usize,
    /// `((E W)^{δt/ΔT} − 1) · 1y/δt`: the per-step compounded drift,
    /// annualized; equals `μ_CMA` for a deterministic walk.
    pub mean_drift: f64,
    /// `(E W)^{1y/ΔT} − 1`.
    pub mean_drift_geometric: f64,
    /// `sd(W) / √(ΔT/1y)`.
    pub std_annualized: f64,
    /// `sd(ln W) / √(ΔT/1y)`, with absorbed paths at `ln p_min_fraction`.
    pub log_std_annualized: f64,
    pub median: f64,
    pub var_05: f64,
    pub var_01: f64,
    /// `VaR(0.01) / VaR(0.05)`; low values mean fatter lower tails.
    pub var_ratio: f64,
}

/// Lower empirical quantile: the order statistic at rank `⌈qN⌉`.
pub fn lower_quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    let rank = ((q * n as f64).ceil() as usize).clamp(1, n);
    sorted[rank - 1]
}

pub fn wealth_statistics(
    ensemble: &EnsembleResult,
    asset: usize,
    horizons_years: &[f64],
) -> Result<Vec<WealthPoint>> {
    if asset >= ensemble.n_assets {
        return Err(Error::DimensionMismatch {
            what: "asset index",
            expected: ensemble.n_assets,
            found: asset,
        });
    }
    let grid = &ensemble.grid;
    let dt = grid.step_years;
    let floor = ensemble.spec.p_min_fraction.ln();
    horizons_years
        .iter()
        .map(|&h| {
            let steps = grid
                .steps_for_years(h)
                .filter(|&s| s >= 1 && s <= grid.n_steps)
                .ok_or_else(|| {
                    Error::config(
                        "horizons",
                        format!("{h}y is not a whole number of steps within the {}-step grid", grid.n_steps),
                    )
                })?;
            let mut w: Vec<f64> = (0..ensemble.n_paths)
                .filter(|&p| !ensemble.is_faulted(p))
                .map(|p| ensemble.price(p, steps, asset) / ensemble.price(p, 0, asset))
                .collect();
            if w.is_empty() {
                return Err(Error::InsufficientData {
                    what: "non-faulted paths".into(),
                    needed: 1,
                    got: 0,
                });
            }
            let n = w.len() as f64;
            let years = steps as f64 * dt;
            let mean = w.iter().sum::<f64>() / n;
            let sd = |xs: &[f64]| {
                let m = xs.iter().sum::<f64>() / n;
                (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / n).sqrt()
            };
            let logs: Vec<f64> = w.iter().map(|x| if *x > 0.0 { x.ln().max(floor) } else { floor }).collect();
            let std_annualized = sd(&w) / years.sqrt();
            let log_std_annualized = sd(&logs) / years.sqrt();
            w.sort_by(f64::total_cmp);
            let var_05 = lower_quantile(&w, 0.05);
            let var_01 = lower_quantile(&w, 0.01);
            Ok(WealthPoint {
                horizon_years: years,
                steps,
                n_paths: w.len(),
                mean_drift: (mean.powf(1.0 / steps as f64) - 1.0) / dt,
                mean_drift_geometric: mean.powf(1.0 / years) - 1.0,
                std_annualized,
                log_std_annualized,
                median: lower_quantile(&w, 0.5),
                var_05,
                var_01,
                var_ratio: var_01 / var_05,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lower_quantile_ranks() {
        let xs: Vec<f64> = (1..=100).map(|k| k as f64).collect();
        assert_eq!(lower_quantile(&xs, 0.05), 5.0);
        assert_eq!(lower_quantile(&xs, 0.01), 1.0);
        assert_eq!(lower_quantile(&xs, 0.5), 50.0);
        assert_eq!(lower_quantile(&xs[..7], 0.05), 1.0);
        assert_eq!(lower_quantile(&[3.0], 0.5), 3.0);
    }
}
