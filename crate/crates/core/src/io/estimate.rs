use super::history::MarketHistory;
use crate::error::{Error, Result};
use crate::market::{validate_cma, AssetClass, CmaParameters, SymmetricMatrix, DEFAULT_EPS_MIN};

pub const MIN_CALIBRATION_MONTHS: usize = 24;

/// Historical CMA: annualized mean monthly relative return, annualized RMA
/// volatility (raw second moment) and the sample correlation of monthly
/// returns over the common span.
///
/// A correlation matrix that is not positive definite is an error; no
/// projection is attempted.
pub fn estimate_cma(history: &MarketHistory, classes: &[AssetClass]) -> Result<CmaParameters> {
    let n = history.n_assets();
    if classes.len() != n {
        return Err(Error::DimensionMismatch {
            what: "asset classes",
            expected: n,
            found: classes.len(),
        });
    }
    let months = history.n_rows() - 1;
    if months < MIN_CALIBRATION_MONTHS {
        return Err(Error::InsufficientData {
            what: "CMA calibration (monthly returns)".into(),
            needed: MIN_CALIBRATION_MONTHS,
            got: months,
        });
    }
    let per_year = history.grid.steps_per_year();
    let returns: Vec<Vec<f64>> = (0..n).map(|a| history.returns(a)).collect();
    let t = months as f64;
    let means: Vec<f64> = returns.iter().map(|r| r.iter().sum::<f64>() / t).collect();
    let mu_annual = means.iter().map(|m| m * per_year).collect();
    let sigma_annual = returns
        .iter()
        .map(|r| (r.iter().map(|x| x * x).sum::<f64>() / t).sqrt() * per_year.sqrt())
        .collect();
    let centered: Vec<Vec<f64>> = returns
        .iter()
        .zip(&means)
        .map(|(r, m)| r.iter().map(|x| x - m).collect())
        .collect();
    let sd: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(a) = sd.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::config(
            format!("prices.{}", history.asset_ids[a]),
            "constant return series has no defined correlation",
        ));
    }
    let correlation = SymmetricMatrix::from_fn(n, |i, j| {
        if i == j {
            1.0
        } else {
            let c: f64 = centered[i].iter().zip(&centered[j]).map(|(x, y)| x * y).sum();
            (c / (sd[i] * sd[j])).clamp(-1.0, 1.0)
        }
    });
    let cma = CmaParameters {
        asset_ids: history.asset_ids.clone(),
        classes: classes.to_vec(),
        mu_annual,
        sigma_annual,
        correlation,
    };
    validate_cma(&cma, DEFAULT_EPS_MIN)?;
    Ok(cma)
}
