//! Estimators and report statistics shared by empirical and simulated
//! inputs: returns and annualization, realized innovations, folded cdfs,
//! lag-one correlations with Monte Carlo bands, cross-over times and
//! terminal-wealth statistics.

pub mod cdf;
pub mod crossover;
pub mod lagcorr;
pub mod report;
pub mod returns;
pub mod wealth;

pub use cdf::{folded_cdf, FoldedCdf};
pub use crossover::{crossover_table, crossover_years, sharpe_ratio, CrossoverRow};
pub use lagcorr::{
    lag_one_correlation, lag_one_curve, mc_lag_one_bands, pearson, LagOneCurve, LagOnePoint,
    LagStatistic, VolatilityLegs, BAND_Z, MIN_LAG_PAIRS,
};
pub use report::{Curve, StatReport};
pub use returns::{
    annualize, constant_drift_forecast, lmarch_vol_forecast, realized_innovations,
    realized_return, return_series, rma_vol_series, sample_drift_forecast, sampled_returns,
    AnnualizeKind, LmarchForecaster, ReturnKind, SeriesSample,
};
pub use wealth::{lower_quantile, wealth_statistics, WealthPoint};
