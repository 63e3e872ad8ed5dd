//! JSON documents for capital market assumptions and process specifications.
//!
//! Optional blocks of a process document fall back to the library defaults;
//! in particular an affine LMARCH block without `w_inf` takes 0.40 when NRC
//! is enabled and 0.55 otherwise.

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::market::spec::{
    default_gamma_asym, default_nrc_horizons, DEFAULT_DU_CALIBRATION_YEARS, DEFAULT_NU,
    DEFAULT_P_MIN_FRACTION,
};
use crate::market::{
    validate_cma, AssetClass, CmaParameters, CovarianceSpec, DriftSpec, DuSpec, InnovationSpec,
    KernelSpec, NrcHorizon, NrcSpec, ProcessSpec, SymmetricMatrix, DEFAULT_EPS_MIN,
};

pub const SCHEMA_VERSION: u32 = 1;

fn check_schema(source: &str, version: Option<u32>) -> Result<()> {
    match version {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(Error::parse(
            source,
            format!("schema_version {v} is not supported (expected {SCHEMA_VERSION})"),
        )),
    }
}

/// Deserializes with the failing field path and serde's line/column.
fn from_json<T: DeserializeOwned>(source: &str, text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        let field = if path == "." { String::new() } else { format!(" at `{path}`") };
        Error::parse(source, format!("{inner}{field}"))
    })
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaAsset {
    pub id: String,
    pub class: AssetClass,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CmaDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema_version: Option<u32>,
    pub assets: Vec<CmaAsset>,
    pub correlation: Vec<Vec<f64>>,
}

impl CmaDocument {
    pub fn from_cma(cma: &CmaParameters) -> Self {
        CmaDocument {
            schema_version: Some(SCHEMA_VERSION),
            assets: (0..cma.n_assets())
                .map(|a| CmaAsset {
                    id: cma.asset_ids[a].clone(),
                    class: cma.classes[a],
                    mu: cma.mu_annual[a],
                    sigma: cma.sigma_annual[a],
                })
                .collect(),
            correlation: cma.correlation.to_rows(),
        }
    }

    pub fn into_cma(self, source: &str) -> Result<CmaParameters> {
        check_schema(source, self.schema_version)?;
        let n = self.assets.len();
        if self.correlation.len() != n {
            return Err(Error::parse(
                source,
                format!("`correlation` has {} rows for {n} assets", self.correlation.len()),
            ));
        }
        if let Some(r) = self.correlation.iter().position(|row| row.len() != n) {
            return Err(Error::parse(
                source,
                format!("`correlation[{r}]` has {} entries for {n} assets", self.correlation[r].len()),
            ));
        }
        let mut seen = std::collections::HashSet::new();
        if let Some(dup) = self.assets.iter().find(|a| !seen.insert(a.id.as_str())) {
            return Err(Error::parse(source, format!("duplicate asset id `{}`", dup.id)));
        }
        let correlation = SymmetricMatrix::from_rows(&self.correlation)
            .map_err(|e| Error::parse(source, format!("`correlation`: {e}")))?;
        Ok(CmaParameters {
            asset_ids: self.assets.iter().map(|a| a.id.clone()).collect(),
            classes: self.assets.iter().map(|a| a.class).collect(),
            mu_annual: self.assets.iter().map(|a| a.mu).collect(),
            sigma_annual: self.assets.iter().map(|a| a.sigma).collect(),
            correlation,
        })
    }
}

/// Parses and validates a CMA document.
pub fn parse_cma(source: &str, text: &str) -> Result<CmaParameters> {
    let doc: CmaDocument = from_json(source, text)?;
    let cma = doc.into_cma(source)?;
    validate_cma(&cma, DEFAULT_EPS_MIN).map_err(|e| match e {
        Error::Config { field, message } => Error::parse(source, format!("`{field}`: {message}")),
        Error::InvalidCorrelation { row, col, value } => Error::parse(
            source,
            format!("`correlation[{row}][{col}]` = {value} is not a valid correlation"),
        ),
        other => other,
    })?;
    Ok(cma)
}

pub fn load_cma(path: &Path) -> Result<CmaParameters> {
    parse_cma(&path.display().to_string(), &read_text(path)?)
}

pub fn write_cma(cma: &CmaParameters, path: &Path) -> Result<()> {
    write_json(&CmaDocument::from_cma(cma), path)
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DuDoc {
    calibration_years: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NrcDoc {
    horizons: Option<BTreeMap<AssetClass, Vec<NrcHorizon>>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DriftDoc {
    du: Option<DuDoc>,
    nrc: Option<NrcDoc>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct KernelDoc {
    taus_months: Option<Vec<f64>>,
    decay_months: Option<f64>,
    l_max_months: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case", deny_unknown_fields)]
enum CovarianceDoc {
    Constant,
    AffineLmarch {
        w_inf: Option<f64>,
        kernel: Option<KernelDoc>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case", deny_unknown_fields)]
enum InnovationDoc {
    Normal,
    NonCentralStudent {
        nu: Option<f64>,
        gamma_asym: Option<BTreeMap<AssetClass, f64>>,
    },
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    schema_version: Option<u32>,
    drift: Option<DriftDoc>,
    covariance: Option<CovarianceDoc>,
    innovations: Option<InnovationDoc>,
    p_min_fraction: Option<f64>,
    p_min_floor: Option<f64>,
}

impl SpecDoc {
    fn resolve(self, source: &str) -> Result<ProcessSpec> {
        check_schema(source, self.schema_version)?;
        let drift = self.drift.unwrap_or_default();
        let drift = DriftSpec {
            du: drift.du.map(|d| DuSpec {
                calibration_years: d.calibration_years.unwrap_or(DEFAULT_DU_CALIBRATION_YEARS),
            }),
            nrc: drift.nrc.map(|n| NrcSpec {
                horizons: n.horizons.unwrap_or_else(default_nrc_horizons),
            }),
        };
        let nrc_on = drift.nrc.is_some();
        let mut spec = ProcessSpec {
            drift,
            covariance: CovarianceSpec::Constant,
            innovations: match self.innovations.unwrap_or(InnovationDoc::Normal) {
                InnovationDoc::Normal => InnovationSpec::Normal,
                InnovationDoc::NonCentralStudent { nu, gamma_asym } => {
                    InnovationSpec::NonCentralStudent {
                        nu: nu.unwrap_or(DEFAULT_NU),
                        gamma_asym: gamma_asym.unwrap_or_else(default_gamma_asym),
                    }
                }
            },
            p_min_fraction: self.p_min_fraction.unwrap_or(DEFAULT_P_MIN_FRACTION),
            p_min_floor: self.p_min_floor,
        };
        if let Some(CovarianceDoc::AffineLmarch { w_inf, kernel }) = self.covariance {
            let k = kernel.unwrap_or_default();
            let d = KernelSpec::default();
            spec.covariance = CovarianceSpec::AffineLmarch {
                w_inf: w_inf.unwrap_or_else(|| {
                    if nrc_on {
                        crate::market::spec::W_INF_WITH_NRC
                    } else {
                        crate::market::spec::W_INF_WITHOUT_NRC
                    }
                }),
                kernel: KernelSpec {
                    taus_months: k.taus_months.unwrap_or(d.taus_months),
                    decay_months: k.decay_months.unwrap_or(d.decay_months),
                    l_max_months: k.l_max_months.unwrap_or(d.l_max_months),
                },
            };
        }
        spec.validate().map_err(|e| match e {
            Error::Config { field, message } => Error::parse(source, format!("`{field}`: {message}")),
            other => other,
        })?;
        Ok(spec)
    }
}

/// Parses one process document, filling omitted blocks with defaults.
pub fn parse_spec(source: &str, text: &str) -> Result<ProcessSpec> {
    from_json::<SpecDoc>(source, text)?.resolve(source)
}

pub fn load_spec(path: &Path) -> Result<ProcessSpec> {
    parse_spec(&path.display().to_string(), &read_text(path)?)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NamedSpecDoc {
    name: String,
    spec: SpecDoc,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecSetDoc {
    schema_version: Option<u32>,
    processes: Vec<NamedSpecDoc>,
}

/// Parses `{"processes": [{"name": .., "spec": {..}}, ..]}`, order preserved.
pub fn parse_spec_set(source: &str, text: &str) -> Result<Vec<(String, ProcessSpec)>> {
    let doc: SpecSetDoc = from_json(source, text)?;
    check_schema(source, doc.schema_version)?;
    let mut names = std::collections::HashSet::new();
    doc.processes
        .into_iter()
        .enumerate()
        .map(|(k, p)| {
            if !names.insert(p.name.clone()) {
                return Err(Error::parse(source, format!("duplicate process name `{}`", p.name)));
            }
            let spec = p.spec.resolve(&format!("{source}: processes[{k}]"))?;
            Ok((p.name, spec))
        })
        .collect()
}

pub fn load_spec_set(path: &Path) -> Result<Vec<(String, ProcessSpec)>> {
    parse_spec_set(&path.display().to_string(), &read_text(path)?)
}

/// Loads either a single process document or a process set; a single
/// document is named after the file stem.
pub fn load_specs(path: &Path) -> Result<Vec<(String, ProcessSpec)>> {
    let text = read_text(path)?;
    let source = path.display().to_string();
    let is_set = serde_json::from_str::<serde_json::Value>(&text)
        .map(|v| v.get("processes").is_some())
        .unwrap_or(false);
    if is_set {
        parse_spec_set(&source, &text)
    } else {
        let name = path.file_stem().map_or("process".into(), |s| s.to_string_lossy().into_owned());
        Ok(vec![(name, parse_spec(&source, &text)?)])
    }
}

#[derive(Serialize)]
struct SpecOut<'a> {
    schema_version: u32,
    #[serde(flatten)]
    spec: &'a ProcessSpec,
}

pub fn spec_to_json(spec: &ProcessSpec) -> String {
    serde_json::to_string_pretty(&SpecOut {
        schema_version: SCHEMA_VERSION,
        spec,
    })
    .expect("serializable")
}

pub fn write_spec(spec: &ProcessSpec, path: &Path) -> Result<()> {
    std::fs::write(path, spec_to_json(spec) + "\n").map_err(|e| Error::io(path, e))
}

pub fn spec_set_to_json(set: &[(String, ProcessSpec)]) -> String {
    #[derive(Serialize)]
    struct Named<'a> {
        name: &'a str,
        spec: &'a ProcessSpec,
    }
    #[derive(Serialize)]
    struct Set<'a> {
        schema_version: u32,
        processes: Vec<Named<'a>>,
    }
    serde_json::to_string_pretty(&Set {
        schema_version: SCHEMA_VERSION,
        processes: set.iter().map(|(name, spec)| Named { name, spec }).collect(),
    })
    .expect("serializable")
}

/// SHA-256 of the compact canonical serialization of a spec.
pub fn spec_hash(spec: &ProcessSpec) -> String {
    let text = serde_json::to_string(spec).expect("serializable");
    hex::encode(Sha256::digest(text.as_bytes()))
}
