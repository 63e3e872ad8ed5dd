use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cdf::FoldedCdf;
use super::crossover::CrossoverRow;
use super::lagcorr::LagOneCurve;
use super::wealth::WealthPoint;

/// One named table of a report; missing values are NaN.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub name: String,
    /// Optional row labels, emitted as a leading `label` column.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub labels: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Named statistic curves plus provenance metadata.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StatReport {
    pub title: String,
    pub metadata: BTreeMap<String, String>,
    pub curves: Vec<Curve>,
}

impl StatReport {
    pub fn new(title: impl Into<String>) -> Self {
        StatReport {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.metadata.insert(key.into(), value.to_string());
        self
    }

    pub fn push(&mut self, curve: Curve) {
        self.curves.push(curve);
    }

    pub fn curve(&self, name: &str) -> Option<&Curve> {
        self.curves.iter().find(|c| c.name == name)
    }
}

fn opt(v: Option<f64>) -> f64 {
    v.unwrap_or(f64::NAN)
}

impl Curve {
    pub fn new(name: impl Into<String>, columns: &[&str]) -> Self {
        Curve {
            name: name.into(),
            labels: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }

    pub fn from_wealth(name: impl Into<String>, points: &[WealthPoint]) -> Self {
        let mut c = Curve::new(
            name,
            &[
                "horizon_years",
                "steps",
                "n_paths",
                "mean_drift",
                "mean_drift_geometric",
                "std_annualized",
                "log_std_annualized",
                "median",
                "var_05",
                "var_01",
                "var_ratio",
            ],
        );
        c.rows = points
            .iter()
            .map(|p| {
                vec![
                    p.horizon_years,
                    p.steps as f64,
                    p.n_paths as f64,
                    p.mean_drift,
                    p.mean_drift_geometric,
                    p.std_annualized,
                    p.log_std_annualized,
                    p.median,
                    p.var_05,
                    p.var_01,
                    p.var_ratio,
                ]
            })
            .collect();
        c
    }

    pub fn from_folded(name: impl Into<String>, cdf: &FoldedCdf) -> Self {
        let mut c = Curve::new(name, &["x", "cdf", "fold"]);
        c.rows = (0..cdf.len())
            .map(|i| vec![cdf.points[i], cdf.positions[i], cdf.folds[i]])
            .collect();
        c
    }

    /// `step_months` converts horizons in steps to months.
    pub fn from_lag_one(name: impl Into<String>, curve: &LagOneCurve, step_months: f64) -> Self {
        let mut c = Curve::new(name, &["horizon_months", "correlation", "half_width", "n_samples"]);
        for p in &curve.points {
            c.rows.push(vec![
                p.horizon_steps as f64 * step_months,
                opt(p.correlation),
                opt(p.half_width),
                p.n_samples as f64,
            ]);
            if let Some(note) = &p.note {
                c.notes.push(format!("{} steps: {note}", p.horizon_steps));
            }
        }
        c
    }

    pub fn from_crossover(name: impl Into<String>, rows: &[CrossoverRow]) -> Self {
        let mut c = Curve::new(name, &["mu", "sigma", "crossover_years", "sharpe"]);
        c.labels = rows.iter().map(|r| r.asset_id.clone()).collect();
        c.rows = rows
            .iter()
            .map(|r| vec![r.mu, r.sigma, r.crossover_years, r.sharpe])
            .collect();
        c
    }
}
