use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::{spec_hash, CmaDocument, SCHEMA_VERSION};
use super::fmt_f64;
use crate::error::{Error, Result};
use crate::market::{ProcessSpec, TimeGrid};
use crate::simulate::{EnsembleResult, PathFault};

pub const ENSEMBLE_PRICES_FILE: &str = "prices.csv";
pub const ENSEMBLE_MANIFEST_FILE: &str = "ensemble.json";

/// Metadata written next to the price table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleManifest {
    pub schema_version: u32,
    pub master_seed: u64,
    pub spec_hash: String,
    pub n_paths: usize,
    pub n_assets: usize,
    pub grid: TimeGrid,
    pub cma: CmaDocument,
    pub spec: ProcessSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed_history_digest: Option<String>,
    #[serde(default)]
    pub faults: Vec<FaultRecord>,
    pub prices_file: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FaultRecord {
    pub path: usize,
    pub message: String,
}

/// Writes `prices.csv` (`path,step,date,<asset>...`) and `ensemble.json`
/// into `dir`, returning the files written.
pub fn write_ensemble(result: &EnsembleResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let csv_path = dir.join(ENSEMBLE_PRICES_FILE);
    let file = File::create(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let mut out = BufWriter::with_capacity(1 << 20, file);
    let io_err = |e| Error::io(&csv_path, e);
    let mut line = String::from("path,step,date");
    for id in &result.cma.asset_ids {
        line.push(',');
        line.push_str(id);
    }
    line.push('\n');
    out.write_all(line.as_bytes()).map_err(io_err)?;
    let dates: Vec<String> = (0..=result.n_steps()).map(|s| result.grid.date(s).to_string()).collect();
    for path in 0..result.n_paths {
        for (step, date) in dates.iter().enumerate() {
            line.clear();
            line.push_str(&format!("{path},{step},{date}"));
            for a in 0..result.n_assets {
                line.push(',');
                line.push_str(&fmt_f64(result.price(path, step, a)));
            }
            line.push('\n');
            out.write_all(line.as_bytes()).map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)?;

    let manifest = EnsembleManifest {
        schema_version: SCHEMA_VERSION,
        master_seed: result.master_seed,
        spec_hash: spec_hash(&result.spec),
        n_paths: result.n_paths,
        n_assets: result.n_assets,
        grid: result.grid,
        cma: CmaDocument::from_cma(&result.cma),
        spec: result.spec.clone(),
        seed_history_digest: result.seed_history_digest.clone(),
        faults: result
            .faults
            .iter()
            .map(|f| FaultRecord {
                path: f.path,
                message: f.message.clone(),
            })
            .collect(),
        prices_file: ENSEMBLE_PRICES_FILE.into(),
    };
    let manifest_path = dir.join(ENSEMBLE_MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    std::fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    Ok(vec![csv_path, manifest_path])
}

/// Reads an ensemble written by [`write_ensemble`]; `dir` may also name the
/// manifest file itself.
pub fn read_ensemble(dir: &Path) -> Result<EnsembleResult> {
    let manifest_path = if dir.is_dir() {
        dir.join(ENSEMBLE_MANIFEST_FILE)
    } else {
        dir.to_path_buf()
    };
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let source = manifest_path.display().to_string();
    let text = std::fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let m: EnsembleManifest =
        serde_json::from_str(&text).map_err(|e| Error::parse(&source, e.to_string()))?;
    if m.schema_version != SCHEMA_VERSION {
        return Err(Error::parse(&source, format!("unsupported schema_version {}", m.schema_version)));
    }
    let cma = m.cma.into_cma(&source)?;
    if cma.n_assets() != m.n_assets {
        return Err(Error::parse(&source, "n_assets disagrees with the CMA"));
    }
    let csv_path = base.join(&m.prices_file);
    let csv_source = csv_path.display().to_string();
    let mut rdr = csv::Reader::from_path(&csv_path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(&csv_path, io),
        other => Error::parse(&csv_source, format!("{other:?}")),
    })?;
    let header = rdr.headers().map_err(|e| Error::parse(&csv_source, e.to_string()))?.clone();
    let expected: Vec<&str> = ["path", "step", "date"]
        .into_iter()
        .chain(cma.asset_ids.iter().map(String::as_str))
        .collect();
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::parse(format!("{csv_source}:1"), "header does not match the manifest"));
    }
    let rows_per_path = m.grid.n_steps + 1;
    let mut prices = Vec::with_capacity(m.n_paths * rows_per_path * m.n_assets);
    let mut record = csv::StringRecord::new();
    let mut k = 0usize;
    while rdr.read_record(&mut record).map_err(|e| Error::parse(&csv_source, e.to_string()))? {
        let line = record.position().map_or(0, |p| p.line());
        let at = |msg: String| Error::parse(format!("{csv_source}:{line}"), msg);
        let (path, step) = (k / rows_per_path, k % rows_per_path);
        let got_path: usize = record[0].parse().map_err(|_| at("bad path index".into()))?;
        let got_step: usize = record[1].parse().map_err(|_| at("bad step index".into()))?;
        if (got_path, got_step) != (path, step) {
            return Err(at(format!("expected path {path} step {step}")));
        }
        for a in 0..m.n_assets {
            let v: f64 = record[3 + a].parse().map_err(|_| at(format!("bad price `{}`", &record[3 + a])))?;
            prices.push(v);
        }
        k += 1;
    }
    if k != m.n_paths * rows_per_path {
        return Err(Error::parse(
            &csv_source,
            format!("expected {} rows, found {k}", m.n_paths * rows_per_path),
        ));
    }
    Ok(EnsembleResult {
        prices,
        n_paths: m.n_paths,
        n_assets: m.n_assets,
        spec: m.spec,
        cma,
        grid: m.grid,
        master_seed: m.master_seed,
        seed_history_digest: m.seed_history_digest,
        faults: m
            .faults
            .into_iter()
            .map(|f| PathFault {
                path: f.path,
                message: f.message,
            })
            .collect(),
    })
}
