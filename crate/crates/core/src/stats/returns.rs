use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceState, LmarchKernel};
use crate::error::{Error, Result};
use crate::market::SymmetricMatrix;
use std::sync::Arc;

/// Volatility forecasts below this are treated as degenerate.
pub const SIGMA_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReturnKind {
    #[default]
    Relative,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnnualizeKind {
    /// Returns at scale ΔT compared across scales: `× √(1y/ΔT)`.
    ReturnShape,
    /// Means and medians: `× 1y/ΔT`.
    Location,
    /// A volatility measured at step ΔT: `× √(1y/ΔT)`.
    Volatility,
}

/// Ordered observations on the monthly grid at aggregation scale ΔT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    pub label: String,
    pub scale_steps: usize,
    pub values: Vec<f64>,
}

/// Return over `(t − ΔT, t]`.
pub fn realized_return(prices: &[f64], t: usize, dt: usize, kind: ReturnKind) -> Result<f64> {
    if dt == 0 || t < dt || t >= prices.len() {
        return Err(Error::InsufficientData {
            what: format!("return at step {t} over {dt} steps"),
            needed: t + 1,
            got: prices.len(),
        });
    }
    let (now, base) = (prices[t], prices[t - dt]);
    if !(base > 0.0) {
        return Err(Error::UndefinedReturn { step: t - dt, base });
    }
    Ok(match kind {
        ReturnKind::Relative => now / base - 1.0,
        ReturnKind::Log => {
            if !(now > 0.0) {
                return Err(Error::UndefinedReturn { step: t, base: now });
            }
            (now / base).ln()
        }
    })
}

/// `X(t)` = return over `(t − ΔT, t]` for every `t`, `None` where undefined.
pub fn return_series(prices: &[f64], dt: usize, kind: ReturnKind) -> Vec<Option<f64>> {
    (0..prices.len())
        .map(|t| realized_return(prices, t, dt, kind).ok())
        .collect()
}

/// Non-overlapping returns at scale ΔT, for distribution statistics.
pub fn sampled_returns(prices: &[f64], dt: usize, kind: ReturnKind, stride: usize) -> Vec<f64> {
    let stride = stride.max(1);
    (dt..prices.len())
        .step_by(stride)
        .filter_map(|t| realized_return(prices, t, dt, kind).ok())
        .collect()
}

pub fn annualize(value: f64, dt_years: f64, kind: AnnualizeKind) -> f64 {
    match kind {
        AnnualizeKind::Location => value / dt_years,
        AnnualizeKind::ReturnShape | AnnualizeKind::Volatility => value / dt_years.sqrt(),
    }
}

/// Realized innovations `ε(t+ΔT) = (r(t+ΔT) − μ(t;ΔT)) / σ(t;ΔT)`, where both
/// forecasts are indexed by the forecast time `t` and must only use data
/// up to `t`. Times with a missing forecast or return are skipped.
pub fn realized_innovations(
    prices: &[f64],
    dt: usize,
    drift_forecast: &[f64],
    vol_forecast: &[Option<f64>],
) -> Result<SeriesSample> {
    if drift_forecast.len() != prices.len() || vol_forecast.len() != prices.len() {
        return Err(Error::DimensionMismatch {
            what: "innovation forecasts",
            expected: prices.len(),
            found: drift_forecast.len().min(vol_forecast.len()),
        });
    }
    let mut values = Vec::new();
    for t in 0..prices.len().saturating_sub(dt) {
        let Some(sigma) = vol_forecast[t] else { continue };
        let Ok(r) = realized_return(prices, t + dt, dt, ReturnKind::Relative) else {
            continue;
        };
        if !(sigma >= SIGMA_FLOOR) {
            return Err(Error::DegenerateVolatility { step: t, sigma });
        }
        values.push((r - drift_forecast[t]) / sigma);
    }
    Ok(SeriesSample {
        label: format!("innovations[{dt}]"),
        scale_steps: dt,
        values,
    })
}

/// Constant drift forecast `μ_δt · ΔT` for every `t`.
pub fn constant_drift_forecast(mu_step: f64, dt: usize, len: usize) -> Vec<f64> {
    vec![mu_step * dt as f64; len]
}

/// Full-sample mean one-step return, scaled to ΔT.
pub fn sample_drift_forecast(prices: &[f64], dt: usize) -> Vec<f64> {
    let r = sampled_returns(prices, 1, ReturnKind::Relative, 1);
    let mean = if r.is_empty() { 0.0 } else { r.iter().sum::<f64>() / r.len() as f64 };
    constant_drift_forecast(mean, dt, prices.len())
}

/// Linear form of the iterated LMARCH variance forecast: the mean per-step
/// variance over the next ΔT steps as `c_S·S + Σ_l c_l·x²(t − l)`, where `S`
/// is the long-run variance and `x` the demeaned returns. The coefficients
/// depend only on the kernel, `w_∞` and ΔT, so they are built once.
#[derive(Debug, Clone)]
pub struct LmarchForecaster {
    dt: usize,
    /// Index 0 is the weight of `S`, index `1 + l` that of lag `l`.
    coeffs: Vec<f64>,
}

impl LmarchForecaster {
    pub fn new(kernel: &LmarchKernel, w_inf: f64, dt: usize) -> Result<Self> {
        if dt == 0 {
            return Err(Error::config("horizon", "must be at least one step"));
        }
        if !(0.0..=1.0).contains(&w_inf) {
            return Err(Error::config("covariance.w_inf", format!("{w_inf} outside [0, 1]")));
        }
        let w = kernel.weights();
        let l_max = w.len();
        let mut steps: Vec<Vec<f64>> = Vec::with_capacity(dt);
        for j in 0..dt {
            let mut c = vec![0.0; l_max + 1];
            c[0] = w_inf;
            for (l, &wl) in w.iter().enumerate() {
                let wl = (1.0 - w_inf) * wl;
                if l < j {
                    for (ci, pi) in c.iter_mut().zip(&steps[j - 1 - l]) {
                        *ci += wl * pi;
                    }
                } else {
                    c[1 + l - j] += wl;
                }
            }
            steps.push(c);
        }
        let mut coeffs = vec![0.0; l_max + 1];
        for c in &steps {
            for (a, b) in coeffs.iter_mut().zip(c) {
                *a += b / dt as f64;
            }
        }
        Ok(LmarchForecaster { dt, coeffs })
    }

    pub fn horizon(&self) -> usize {
        self.dt
    }

    /// Mean per-step variance; `past_square(l)` is `x²(t − l)` or `None`
    /// when unobserved (replaced by `S`).
    pub fn mean_variance(&self, long_run: f64, past_square: impl Fn(usize) -> Option<f64>) -> f64 {
        let mut v = self.coeffs[0] * long_run;
        for (l, c) in self.coeffs[1..].iter().enumerate() {
            v += c * past_square(l).unwrap_or(long_run);
        }
        v
    }
}

/// Univariate LMARCH volatility forecast `σ(t;ΔT)` at scale ΔT, from
/// returns up to `t`. `long_run_variance` is the per-step neutral value
/// used both for unobserved lags and as the affine anchor. `None` once the
/// price has been absorbed.
pub fn lmarch_vol_forecast(
    prices: &[f64],
    forecaster: &LmarchForecaster,
    long_run_variance: f64,
    mu_step: f64,
) -> Vec<Option<f64>> {
    let sq: Vec<Option<f64>> = return_series(prices, 1, ReturnKind::Relative)
        .into_iter()
        .map(|r| r.map(|r| (r - mu_step) * (r - mu_step)))
        .collect();
    let dt = forecaster.horizon() as f64;
    let mut alive = true;
    (0..prices.len())
        .map(|t| {
            if t > 0 && sq[t].is_none() {
                alive = false;
            }
            alive.then(|| {
                let v = forecaster.mean_variance(long_run_variance, |l| {
                    if l < t { sq[t - l] } else { None }
                });
                (v * dt).sqrt()
            })
        })
        .collect()
}

/// Same forecast through the stateful covariance recursion; slower, kept
/// as the reference implementation.
pub fn lmarch_vol_forecast_reference(
    prices: &[f64],
    kernel: Arc<LmarchKernel>,
    w_inf: f64,
    long_run_variance: f64,
    mu_step: f64,
    dt: usize,
) -> Result<Vec<Option<f64>>> {
    let mut state = CovarianceState::new(
        kernel,
        w_inf,
        SymmetricMatrix::from_diagonal(&[long_run_variance]),
        vec![mu_step],
    )?;
    let mut out = Vec::with_capacity(prices.len());
    let mut alive = true;
    for t in 0..prices.len() {
        if t > 0 {
            match realized_return(prices, t, 1, ReturnKind::Relative) {
                Ok(r) => state.push_return(&[r]),
                Err(_) => alive = false,
            }
        }
        out.push(if alive {
            Some((state.variance_forecast(dt)?[0] * dt as f64).sqrt())
        } else {
            None
        });
    }
    Ok(out)
}

/// Realized RMA volatility over `(t − ΔT, t]` at scale ΔT, `None` where undefined.
pub fn rma_vol_series(prices: &[f64], dt: usize) -> Vec<Option<f64>> {
    let one: Vec<Option<f64>> = return_series(prices, 1, ReturnKind::Relative);
    (0..prices.len())
        .map(|t| {
            if dt == 0 || t < dt {
                return None;
            }
            let mut s = 0.0;
            for r in &one[t + 1 - dt..=t] {
                s += (*r)? * (*r)?;
            }
            Some(s.sqrt())
        })
        .collect()
}
