//! Price-history ingestion, configuration documents, and ensemble and report
//! emission. Every text format is bit-stable for identical inputs.

pub mod config;
pub mod ensemble;
pub mod estimate;
pub mod history;
pub mod report;

pub use config::{
    load_cma, load_spec, load_spec_set, load_specs, parse_cma, parse_spec, parse_spec_set,
    spec_hash, spec_set_to_json, spec_to_json, write_cma, write_spec, CmaDocument, SCHEMA_VERSION,
};
pub use ensemble::{read_ensemble, write_ensemble, EnsembleManifest};
pub use estimate::{estimate_cma, MIN_CALIBRATION_MONTHS};
pub use history::{load_prices, parse_prices, write_prices, MarketHistory, PriceFormat};
pub use report::{read_report, write_report, ReportManifest};

/// Fixed scientific notation with 17 significant digits; round-trips `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
