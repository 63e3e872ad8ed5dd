use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::cma::AssetClass;
use crate::error::{Error, Result};

/// Process configuration: which drift, covariance and innovation components
/// are switched on, and their parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    pub drift: DriftSpec,
    pub covariance: CovarianceSpec,
    pub innovations: InnovationSpec,
    /// Absorption threshold as a fraction of the initial price.
    pub p_min_fraction: f64,
    /// Absolute absorption threshold overriding the fraction rule.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p_min_floor: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DriftSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub du: Option<DuSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nrc: Option<NrcSpec>,
}

/// Drift uncertainty: per-path offset with scale `σ_CMA/√ΔT_cal`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DuSpec {
    pub calibration_years: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NrcSpec {
    pub horizons: BTreeMap<AssetClass, Vec<NrcHorizon>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrcHorizon {
    pub months: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum CovarianceSpec {
    Constant,
    AffineLmarch { w_inf: f64, kernel: KernelSpec },
}

/// Long-memory kernel: a mixture of exponentials with time constants
/// `taus_months`, mixed with weights `∝ 1 − ln τ / ln decay`, truncated at
/// `l_max_months`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub taus_months: Vec<f64>,
    pub decay_months: f64,
    pub l_max_months: f64,
}

impl Default for KernelSpec {
    fn default() -> Self {
        KernelSpec {
            taus_months: vec![3.0, 6.0, 12.0, 24.0, 48.0],
            decay_months: 96.0,
            l_max_months: 120.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum InnovationSpec {
    Normal,
    NonCentralStudent {
        nu: f64,
        gamma_asym: BTreeMap<AssetClass, f64>,
    },
}

pub const DEFAULT_P_MIN_FRACTION: f64 = 0.01;
pub const DEFAULT_NU: f64 = 8.0;
pub const DEFAULT_DU_CALIBRATION_YEARS: f64 = 25.0;
pub const W_INF_WITH_NRC: f64 = 0.40;
pub const W_INF_WITHOUT_NRC: f64 = 0.55;

/// Calibration placeholders for the asymmetry of the Student innovations.
pub fn default_gamma_asym() -> BTreeMap<AssetClass, f64> {
    BTreeMap::from([
        (AssetClass::Equity, -0.30),
        (AssetClass::FixedIncome, -0.15),
        (AssetClass::Alternative, -0.15),
    ])
}

/// Two-horizon NRC defaults: a short trend-following horizon and a long
/// mean-reverting one, per asset class.
pub fn default_nrc_horizons() -> BTreeMap<AssetClass, Vec<NrcHorizon>> {
    let h = |months, gamma| NrcHorizon { months, gamma };
    BTreeMap::from([
        (AssetClass::Equity, vec![h(6.0, 0.20), h(40.0, -0.45)]),
        (AssetClass::FixedIncome, vec![h(6.0, 0.20), h(40.0, -0.20)]),
        (AssetClass::Alternative, vec![h(6.0, 0.20), h(40.0, -0.20)]),
    ])
}

impl Default for ProcessSpec {
    fn default() -> Self {
        Self::baseline()
    }
}

impl ProcessSpec {
    /// Constant drift, constant covariance, normal innovations.
    pub fn baseline() -> Self {
        ProcessSpec {
            drift: DriftSpec::default(),
            covariance: CovarianceSpec::Constant,
            innovations: InnovationSpec::Normal,
            p_min_fraction: DEFAULT_P_MIN_FRACTION,
            p_min_floor: None,
        }
    }

    pub fn with_du(mut self, calibration_years: f64) -> Self {
        self.drift.du = Some(DuSpec { calibration_years });
        self
    }

    pub fn with_nrc(mut self, horizons: BTreeMap<AssetClass, Vec<NrcHorizon>>) -> Self {
        self.drift.nrc = Some(NrcSpec { horizons });
        self
    }

    pub fn with_default_nrc(self) -> Self {
        self.with_nrc(default_nrc_horizons())
    }

    pub fn with_lmarch(mut self, w_inf: f64) -> Self {
        self.covariance = CovarianceSpec::AffineLmarch {
            w_inf,
            kernel: KernelSpec::default(),
        };
        self
    }

    /// LMARCH with the `w_∞` default matching the NRC setting.
    pub fn with_default_lmarch(self) -> Self {
        let w = self.default_w_inf();
        self.with_lmarch(w)
    }

    pub fn with_student(mut self, nu: f64, gamma_asym: BTreeMap<AssetClass, f64>) -> Self {
        self.innovations = InnovationSpec::NonCentralStudent { nu, gamma_asym };
        self
    }

    pub fn with_default_student(self) -> Self {
        self.with_student(DEFAULT_NU, default_gamma_asym())
    }

    pub fn default_w_inf(&self) -> f64 {
        if self.drift.nrc.is_some() {
            W_INF_WITH_NRC
        } else {
            W_INF_WITHOUT_NRC
        }
    }

    /// The five process combinations used for the wealth comparisons.
    pub fn comparison_set() -> Vec<(String, ProcessSpec)> {
        let base = ProcessSpec::baseline();
        vec![
            ("constant".into(), base.clone()),
            ("constant_du".into(), base.clone().with_du(DEFAULT_DU_CALIBRATION_YEARS)),
            (
                "lmarch_student".into(),
                base.clone().with_default_lmarch().with_default_student(),
            ),
            (
                "nrc_lmarch_student".into(),
                base.clone()
                    .with_default_nrc()
                    .with_default_lmarch()
                    .with_default_student(),
            ),
            (
                "nrc_du_lmarch_student".into(),
                base.with_default_nrc()
                    .with_du(DEFAULT_DU_CALIBRATION_YEARS)
                    .with_default_lmarch()
                    .with_default_student(),
            ),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_min_fraction > 0.0 && self.p_min_fraction < 1.0) {
            return Err(Error::config("p_min_fraction", "must lie in (0, 1)"));
        }
        if let Some(floor) = self.p_min_floor {
            if !(floor >= 0.0 && floor.is_finite()) {
                return Err(Error::config("p_min_floor", "must be a non-negative price"));
            }
        }
        if let Some(du) = &self.drift.du {
            if !(du.calibration_years > 0.0) {
                return Err(Error::config("drift.du.calibration_years", "must be positive"));
            }
        }
        if let Some(nrc) = &self.drift.nrc {
            for (class, hs) in &nrc.horizons {
                for (k, h) in hs.iter().enumerate() {
                    if !(h.months > 0.0) || !h.gamma.is_finite() {
                        return Err(Error::config(
                            format!("drift.nrc.horizons.{class}[{k}]"),
                            "horizon must be positive with a finite gamma",
                        ));
                    }
                }
            }
        }
        if let CovarianceSpec::AffineLmarch { w_inf, kernel } = &self.covariance {
            if !(0.0..=1.0).contains(w_inf) {
                return Err(Error::config(
                    "covariance.w_inf",
                    format!("{w_inf} outside [0, 1]"),
                ));
            }
            kernel.validate()?;
        }
        if let InnovationSpec::NonCentralStudent { nu, gamma_asym } = &self.innovations {
            if !(*nu > 2.0) {
                return Err(Error::InfiniteVariance { nu: *nu });
            }
            if let Some((class, g)) = gamma_asym.iter().find(|(_, g)| !g.is_finite()) {
                return Err(Error::config(
                    format!("innovations.gamma_asym.{class}"),
                    format!("{g} is not finite"),
                ));
            }
        }
        Ok(())
    }

    pub fn nrc_enabled(&self) -> bool {
        self.drift.nrc.is_some()
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        if self.taus_months.is_empty() || self.taus_months.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::config(
                "covariance.kernel.taus_months",
                "time constants must be non-empty and positive",
            ));
        }
        let max_tau = self.taus_months.iter().cloned().fold(0.0, f64::max);
        if !(self.decay_months > max_tau) {
            return Err(Error::config(
                "covariance.kernel.decay_months",
                "must exceed every time constant",
            ));
        }
        if !(self.l_max_months > max_tau) {
            return Err(Error::config(
                "covariance.kernel.l_max_months",
                "must exceed every time constant",
            ));
        }
        Ok(())
    }
}
