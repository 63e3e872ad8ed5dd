use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::returns::{lmarch_vol_forecast, return_series, rma_vol_series, LmarchForecaster, ReturnKind};
use crate::covariance::LmarchKernel;
use crate::error::{Error, Result};
use crate::simulate::EnsembleResult;

pub const MIN_LAG_PAIRS: usize = 8;
/// Half-width multiplier of the Monte Carlo bands.
pub const BAND_Z: f64 = 1.95;

/// Pearson correlation; `None` when either leg has zero variance.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len().min(y.len());
    if n < 2 {
        return None;
    }
    let mx = x[..n].iter().sum::<f64>() / n as f64;
    let my = y[..n].iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x[..n].iter().zip(&y[..n]) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    (sxx > 0.0 && syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Correlation between `x(t)` and `y(t + ΔT)` over every `t` where both are
/// defined.
pub fn lag_one_correlation(x: &[Option<f64>], y: &[Option<f64>], dt: usize) -> Result<f64> {
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for t in 0..x.len() {
        if let (Some(a), Some(Some(b))) = (x[t], y.get(t + dt)) {
            xs.push(a);
            ys.push(*b);
        }
    }
    if xs.len() < MIN_LAG_PAIRS {
        return Err(Error::InsufficientData {
            what: format!("lag-one pairs at {dt} steps"),
            needed: MIN_LAG_PAIRS,
            got: xs.len(),
        });
    }
    pearson(&xs, &ys).ok_or_else(|| Error::InsufficientData {
        what: format!("non-constant legs at {dt} steps"),
        needed: 1,
        got: 0,
    })
}

/// Heteroskedasticity legs: LMARCH forecast at `t` against realized RMA
/// volatility over `(t, t + ΔT]`, both in logs.
#[derive(Debug, Clone)]
pub struct VolatilityLegs {
    pub kernel: Arc<LmarchKernel>,
    pub w_inf: f64,
    /// Per-step long-run variance; `None` uses the series' own mean square return.
    pub long_run_variance: Option<f64>,
    pub mu_step: f64,
}

#[derive(Debug, Clone)]
pub enum LagStatistic {
    /// ΔT returns against the following ΔT returns.
    Returns,
    Volatility(VolatilityLegs),
}

impl LagStatistic {
    pub fn label(&self) -> &'static str {
        match self {
            LagStatistic::Returns => "returns",
            LagStatistic::Volatility(_) => "volatility",
        }
    }
}

enum Prepared {
    Returns,
    Volatility {
        legs: VolatilityLegs,
        forecaster: LmarchForecaster,
    },
}

impl Prepared {
    fn new(stat: &LagStatistic, dt: usize) -> Result<Self> {
        Ok(match stat {
            LagStatistic::Returns => Prepared::Returns,
            LagStatistic::Volatility(legs) => Prepared::Volatility {
                forecaster: LmarchForecaster::new(&legs.kernel, legs.w_inf, dt)?,
                legs: legs.clone(),
            },
        })
    }

    fn correlation(&self, prices: &[f64], dt: usize) -> Result<f64> {
        match self {
            Prepared::Returns => {
                let r = return_series(prices, dt, ReturnKind::Relative);
                lag_one_correlation(&r, &r, dt)
            }
            Prepared::Volatility { legs, forecaster } => {
                let long_run = legs.long_run_variance.unwrap_or_else(|| mean_square_return(prices));
                let log = |v: Option<f64>| v.filter(|s| *s > 0.0).map(f64::ln);
                let x: Vec<Option<f64>> = lmarch_vol_forecast(prices, forecaster, long_run, legs.mu_step)
                    .into_iter()
                    .map(log)
                    .collect();
                let y: Vec<Option<f64>> = rma_vol_series(prices, dt).into_iter().map(log).collect();
                lag_one_correlation(&x, &y, dt)
            }
        }
    }
}

fn mean_square_return(prices: &[f64]) -> f64 {
    let r: Vec<f64> = return_series(prices, 1, ReturnKind::Relative).into_iter().flatten().collect();
    if r.is_empty() {
        0.0
    } else {
        r.iter().map(|x| x * x).sum::<f64>() / r.len() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagOnePoint {
    pub horizon_steps: usize,
    /// Empirical correlation, or the Monte Carlo mean.
    pub correlation: Option<f64>,
    /// `1.95 · σ_MC` across paths; absent for a single series.
    pub half_width: Option<f64>,
    /// Pairs (single series) or contributing paths (ensemble).
    pub n_samples: usize,
    pub note: Option<String>,
}

impl LagOnePoint {
    /// True when the Monte Carlo band contains zero.
    pub fn straddles_zero(&self) -> bool {
        matches!((self.correlation, self.half_width), (Some(m), Some(h)) if m.abs() <= h)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LagOneCurve {
    pub label: String,
    pub points: Vec<LagOnePoint>,
}

/// Lag-one curve of one price series. Horizons lacking data carry a note
/// instead of failing the whole curve.
pub fn lag_one_curve(prices: &[f64], horizons: &[usize], stat: &LagStatistic) -> Result<LagOneCurve> {
    let mut points = Vec::with_capacity(horizons.len());
    for &dt in horizons {
        let prepared = Prepared::new(stat, dt)?;
        points.push(match prepared.correlation(prices, dt) {
            Ok(c) => LagOnePoint {
                horizon_steps: dt,
                correlation: Some(c),
                half_width: None,
                n_samples: prices.len().saturating_sub(2 * dt),
                note: None,
            },
            Err(e) => LagOnePoint {
                horizon_steps: dt,
                correlation: None,
                half_width: None,
                n_samples: 0,
                note: Some(e.to_string()),
            },
        });
    }
    Ok(LagOneCurve {
        label: stat.label().into(),
        points,
    })
}

/// Per-path lag-one correlations of one asset, then the mean and
/// `± 1.95 σ` band across paths. Faulted paths and paths where the
/// correlation is undefined are left out and counted in the note.
pub fn mc_lag_one_bands(
    ensemble: &EnsembleResult,
    asset: usize,
    horizons: &[usize],
    stat: &LagStatistic,
) -> Result<LagOneCurve> {
    if asset >= ensemble.n_assets {
        return Err(Error::DimensionMismatch {
            what: "asset index",
            expected: ensemble.n_assets,
            found: asset,
        });
    }
    let mut points = Vec::with_capacity(horizons.len());
    for &dt in horizons {
        let prepared = Prepared::new(stat, dt)?;
        let per_path: Vec<Option<f64>> = (0..ensemble.n_paths)
            .into_par_iter()
            .map(|p| {
                if ensemble.is_faulted(p) {
                    return None;
                }
                prepared.correlation(&ensemble.series(p, asset), dt).ok()
            })
            .collect();
        let values: Vec<f64> = per_path.iter().flatten().copied().collect();
        let skipped = ensemble.n_paths - values.len();
        let note = (skipped > 0).then(|| format!("{skipped} path(s) without a defined correlation"));
        points.push(if values.is_empty() {
            LagOnePoint {
                horizon_steps: dt,
                correlation: None,
                half_width: None,
                n_samples: 0,
                note: Some(note.unwrap_or_default()),
            }
        } else {
            let (mean, sd) = mean_sd(&values);
            LagOnePoint {
                horizon_steps: dt,
                correlation: Some(mean),
                half_width: Some(BAND_Z * sd),
                n_samples: values.len(),
                note,
            }
        });
    }
    Ok(LagOneCurve {
        label: format!("{}_mc", stat.label()),
        points,
    })
}

/// Mean and sample standard deviation; the deviation of one value is 0.
pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
