use std::path::{Path, PathBuf};

use longrun::io::{
    load_cma, load_spec, load_specs, parse_cma, parse_prices, parse_spec, read_ensemble,
    write_ensemble, PriceFormat,
};
use longrun::market::{CovarianceSpec, ProcessSpec};
use longrun::simulate::{simulation_grid, EnsembleOptions, FaultMode, Simulator};
use longrun::Error;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn parse_long(text: &str) -> Result<longrun::io::MarketHistory, Error> {
    parse_prices("prices.csv", text.as_bytes(), PriceFormat::Long)
}

#[test]
fn shipped_process_set_is_the_comparison_set() {
    let set = load_specs(&configs().join("processes.json")).unwrap();
    assert_eq!(set, ProcessSpec::comparison_set());
}

#[test]
fn shipped_configs_validate() {
    let full = load_spec(&configs().join("full_process.json")).unwrap();
    assert!(full.nrc_enabled());
    assert!(matches!(full.covariance, CovarianceSpec::AffineLmarch { w_inf, .. } if w_inf == 0.40));
    for file in ["developed_cma.json", "crossover_assets_cma.json"] {
        let cma = load_cma(&configs().join(file)).unwrap();
        let grid = simulation_grid(1, None).unwrap();
        Simulator::new(&full, &cma, &grid, None).unwrap();
    }
}

#[test]
fn long_and_wide_prices_agree() {
    let long = "date,asset_id,price\n\
                2020-01-31,a,1.0\n2020-01-31,b,2.0\n\
                2020-02-29,a,1.1\n2020-02-29,b,2.2\n\
                2020-03-31,b,2.1\n2020-03-31,a,1.05\n";
    let wide = "date,a,b\n2020-01-31,1.0,2.0\n2020-02-29,1.1,2.2\n2020-03-31,1.05,2.1\n";
    let l = parse_long(long).unwrap();
    let w = parse_prices("w.csv", wide.as_bytes(), PriceFormat::Wide).unwrap();
    assert_eq!(l, w);
    assert_eq!(l.n_rows(), 3);
    assert_eq!(l.price(2, 0), 1.05);
}

#[test]
fn price_errors_name_the_line() {
    let cases = [
        ("date,asset_id,price\n2020-01-31,a,1\n2020-02-29,a,x\n", "prices.csv:3"),
        ("date,asset_id,price\n2020-01-31,a,1\n2020-02-15,a,1\n", "prices.csv:3"),
        ("date,asset_id,price\n2020-01-31,a,1\n2020-01-31,a,2\n", "prices.csv:3"),
        ("date,asset_id,price\n2020-01-31,a,1\n2020-02-29,a,-1\n", "prices.csv:3"),
    ];
    for (text, loc) in cases {
        let msg = parse_long(text).unwrap_err().to_string();
        assert!(msg.contains(loc), "`{msg}` lacks {loc}");
    }
}

#[test]
fn gaps_inside_a_series_are_rejected() {
    let text = "date,asset_id,price\n2020-01-31,a,1\n2020-02-29,a,1\n2020-04-30,a,1\n";
    assert!(matches!(parse_long(text), Err(Error::Parse { .. })));
    assert!(parse_long("date,asset,price\n2020-01-31,a,1\n").is_err());
}

#[test]
fn config_errors_carry_field_paths() {
    let err = parse_spec("s.json", r#"{"covariance": {"model": "affine_lmarch", "w_inf": 1.2}}"#)
        .unwrap_err()
        .to_string();
    assert!(err.contains("w_inf"), "{err}");
    let err = parse_spec("s.json", r#"{"drift": {"nrc": {"horizons": 3}}}"#).unwrap_err().to_string();
    assert!(err.contains("drift.nrc.horizons"), "{err}");
    let err = parse_spec("s.json", r#"{"schema_version": 9}"#).unwrap_err().to_string();
    assert!(err.contains("schema"), "{err}");

    let bad_rho = r#"{"assets": [
        {"id": "a", "class": "equity", "mu": 0.05, "sigma": 0.1},
        {"id": "b", "class": "equity", "mu": 0.05, "sigma": 0.1},
        {"id": "c", "class": "equity", "mu": 0.05, "sigma": 0.1}],
        "correlation": [[1, 0.9, -0.9], [0.9, 1, 0.9], [-0.9, 0.9, 1]]}"#;
    assert!(matches!(parse_cma("c.json", bad_rho), Err(Error::NotPositiveDefinite { .. })));
    let unknown = r#"{"assets": [{"id": "a", "class": "equity", "mu": 0.05, "sigma": 0.1, "beta": 1}],
        "correlation": [[1]]}"#;
    assert!(parse_cma("c.json", unknown).unwrap_err().to_string().contains("beta"));
}

#[test]
fn partial_ensembles_round_trip_with_their_faults() {
    let cma = longrun::market::CmaParameters::single("a", longrun::market::AssetClass::Equity, 0.05, 0.1);
    let grid = simulation_grid(1, None).unwrap();
    let sim = Simulator::new(&ProcessSpec::baseline(), &cma, &grid, None).unwrap();
    let mut ens = sim
        .simulate_ensemble(3, 4, EnsembleOptions { fault_mode: FaultMode::SkipAndReport, ..Default::default() })
        .unwrap();
    assert!(!ens.is_partial());
    // Mark a path as faulted the way the runner does.
    ens.faults.push(longrun::simulate::PathFault { path: 1, message: "synthetic".into() });
    let stride = (ens.n_steps() + 1) * ens.n_assets;
    ens.prices[stride..2 * stride].fill(f64::NAN);

    let dir = tempfile::tempdir().unwrap();
    write_ensemble(&ens, dir.path()).unwrap();
    let back = read_ensemble(dir.path()).unwrap();
    assert_eq!(back.faults, ens.faults);
    assert!(back.price(1, 3, 0).is_nan());
    assert_eq!(back.price(2, 3, 0), ens.price(2, 3, 0));
}
