use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::SCHEMA_VERSION;
use super::fmt_f64;
use crate::error::{Error, Result};
use crate::stats::{Curve, StatReport};

pub const REPORT_MANIFEST_FILE: &str = "report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveEntry {
    pub name: String,
    pub file: String,
    pub columns: Vec<String>,
    pub labelled: bool,
    pub rows: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

/// Names every curve file of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportManifest {
    pub schema_version: u32,
    pub title: String,
    pub metadata: BTreeMap<String, String>,
    pub curves: Vec<CurveEntry>,
}

fn file_name(name: &str) -> String {
    let safe: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' || c == '.' { c } else { '_' })
        .collect();
    format!("{safe}.csv")
}

/// Writes one CSV per curve plus `report.json`, returning the files written.
pub fn write_report(report: &StatReport, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    let mut entries = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for curve in &report.curves {
        let file = file_name(&curve.name);
        if !seen.insert(file.clone()) {
            return Err(Error::config("report", format!("duplicate curve name `{}`", curve.name)));
        }
        let labelled = !curve.labels.is_empty();
        let mut text = String::new();
        if labelled {
            text.push_str("label,");
        }
        text.push_str(&curve.columns.join(","));
        text.push('\n');
        for (i, row) in curve.rows.iter().enumerate() {
            if labelled {
                text.push_str(&curve.labels[i]);
                text.push(',');
            }
            let cells: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
            text.push_str(&cells.join(","));
            text.push('\n');
        }
        let path = dir.join(&file);
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        written.push(path);
        entries.push(CurveEntry {
            name: curve.name.clone(),
            file,
            columns: curve.columns.clone(),
            labelled,
            rows: curve.rows.len(),
            notes: curve.notes.clone(),
        });
    }
    let manifest = ReportManifest {
        schema_version: SCHEMA_VERSION,
        title: report.title.clone(),
        metadata: report.metadata.clone(),
        curves: entries,
    };
    let path = dir.join(REPORT_MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&manifest).expect("serializable") + "\n";
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(written)
}

pub fn read_report(dir: &Path) -> Result<StatReport> {
    let path = dir.join(REPORT_MANIFEST_FILE);
    let source = path.display().to_string();
    let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let m: ReportManifest = serde_json::from_str(&text).map_err(|e| Error::parse(&source, e.to_string()))?;
    let mut report = StatReport {
        title: m.title,
        metadata: m.metadata,
        curves: Vec::new(),
    };
    for entry in m.curves {
        let path = dir.join(&entry.file);
        let source = path.display().to_string();
        let mut rdr = csv::Reader::from_path(&path).map_err(|e| Error::parse(&source, e.to_string()))?;
        let mut curve = Curve {
            name: entry.name,
            labels: Vec::new(),
            columns: entry.columns,
            rows: Vec::new(),
            notes: entry.notes,
        };
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::parse(&source, e.to_string()))?;
            let mut cells = rec.iter();
            if entry.labelled {
                curve.labels.push(cells.next().unwrap_or_default().to_string());
            }
            let row = cells
                .map(|c| c.parse::<f64>().map_err(|_| Error::parse(&source, format!("bad number `{c}`"))))
                .collect::<Result<Vec<_>>>()?;
            curve.rows.push(row);
        }
        if curve.rows.len() != entry.rows {
            return Err(Error::parse(&source, "row count disagrees with the manifest"));
        }
        report.curves.push(curve);
    }
    Ok(report)
}
