use std::fmt;

use serde::{Deserialize, Serialize};

use super::grid::TimeGrid;
use super::linalg::SymmetricMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AssetClass {
    Equity,
    FixedIncome,
    Alternative,
}

impl AssetClass {
    pub const ALL: [AssetClass; 3] = [
        AssetClass::Equity,
        AssetClass::FixedIncome,
        AssetClass::Alternative,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            AssetClass::Equity => "equity",
            AssetClass::FixedIncome => "fixed_income",
            AssetClass::Alternative => "alternative",
        }
    }
}

impl fmt::Display for AssetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for AssetClass {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', ' '], "_").as_str() {
            "equity" => Ok(AssetClass::Equity),
            "fixed_income" | "fi" => Ok(AssetClass::FixedIncome),
            "alternative" | "alt" => Ok(AssetClass::Alternative),
            other => Err(Error::config("class", format!("unknown asset class `{other}`"))),
        }
    }
}

/// Capital market assumptions: annualized drift and volatility per asset
/// plus the cross-asset correlation matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CmaParameters {
    pub asset_ids: Vec<String>,
    pub classes: Vec<AssetClass>,
    pub mu_annual: Vec<f64>,
    pub sigma_annual: Vec<f64>,
    pub correlation: SymmetricMatrix,
}

impl CmaParameters {
    pub fn n_assets(&self) -> usize {
        self.asset_ids.len()
    }

    /// Single asset with unit correlation.
    pub fn single(id: &str, class: AssetClass, mu: f64, sigma: f64) -> Self {
        CmaParameters {
            asset_ids: vec![id.to_string()],
            classes: vec![class],
            mu_annual: vec![mu],
            sigma_annual: vec![sigma],
            correlation: SymmetricMatrix::identity(1),
        }
    }

    pub fn asset_index(&self, id: &str) -> Option<usize> {
        self.asset_ids.iter().position(|a| a == id)
    }
}

/// Checks container lengths, volatilities, the correlation's unit diagonal
/// and entry range, and its definiteness relative to `eps_min`.
pub fn validate_cma(cma: &CmaParameters, eps_min: f64) -> Result<()> {
    let n = cma.asset_ids.len();
    let lengths = [
        ("classes", cma.classes.len()),
        ("mu_annual", cma.mu_annual.len()),
        ("sigma_annual", cma.sigma_annual.len()),
        ("correlation", cma.correlation.dim()),
    ];
    for (what, len) in lengths {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found: len,
            });
        }
    }
    if n == 0 {
        return Err(Error::config("assets", "at least one asset is required"));
    }
    for (i, &mu) in cma.mu_annual.iter().enumerate() {
        if !mu.is_finite() {
            return Err(Error::config(format!("assets[{i}].mu"), "must be finite"));
        }
    }
    for (i, &s) in cma.sigma_annual.iter().enumerate() {
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::config(
                format!("assets[{i}].sigma"),
                format!("volatility must be strictly positive, got {s}"),
            ));
        }
    }
    let rho = &cma.correlation;
    for i in 0..n {
        let d = rho.get(i, i);
        if (d - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidCorrelation {
                row: i,
                col: i,
                value: d,
            });
        }
        for j in 0..i {
            let v = rho.get(i, j);
            if !(-1.0..=1.0).contains(&v) {
                return Err(Error::InvalidCorrelation {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    rho.definite_eigen(eps_min)?;
    Ok(())
}

/// Drift and volatility rescaled to the grid step.
#[derive(Debug, Clone, PartialEq)]
pub struct StepParameters {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
}

/// `μ_δt = μ_1y · δt/1y`, `σ_δt = σ_1y · √(δt/1y)`.
pub fn scale_to_step(cma: &CmaParameters, grid: &TimeGrid) -> StepParameters {
    let f = grid.step_years;
    StepParameters {
        mu: cma.mu_annual.iter().map(|m| m * f).collect(),
        sigma: cma.sigma_annual.iter().map(|s| s * f.sqrt()).collect(),
    }
}

/// `Σ = σ_D · ρ · σ_D` with annualized volatilities.
pub fn covariance_from_cma(cma: &CmaParameters) -> SymmetricMatrix {
    covariance_from_parts(&cma.sigma_annual, &cma.correlation)
}

pub fn covariance_from_parts(sigma: &[f64], rho: &SymmetricMatrix) -> SymmetricMatrix {
    SymmetricMatrix::from_fn(sigma.len(), |i, j| sigma[i] * sigma[j] * rho.get(i, j))
}

/// Inverse of [`covariance_from_parts`]: volatilities and correlation.
pub fn split_covariance(cov: &SymmetricMatrix) -> (Vec<f64>, SymmetricMatrix) {
    let sigma: Vec<f64> = cov.diagonal().iter().map(|v| v.sqrt()).collect();
    let rho = SymmetricMatrix::from_fn(cov.dim(), |i, j| {
        if i == j {
            1.0
        } else {
            cov.get(i, j) / (sigma[i] * sigma[j])
        }
    });
    (sigma, rho)
}
