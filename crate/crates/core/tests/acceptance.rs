//! Acceptance suite. Prints one PASS/FAIL line per criterion followed by its
//! individual checks, and exits nonzero when a check fails that is not a
//! documented gap (see the README).
//!
//! Run a subset with `cargo test --test acceptance -- 3 7`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use chrono::NaiveDate;
use longrun::covariance::{CovarianceState, LmarchKernel};
use longrun::drift::DriftState;
use longrun::innovation::{theta_of_nu, InnovationLaw, RngStream, StudentParams};
use longrun::io::{
    load_cma, load_prices, load_spec, read_ensemble, read_report, write_cma, write_ensemble,
    write_prices, write_report, MarketHistory, PriceFormat,
};
use longrun::market::linalg::mat_vec_into;
use longrun::market::{
    covariance_from_cma, matrix_sqrt, validate_cma, AssetClass, CmaParameters, CovarianceSpec,
    ProcessSpec, SymmetricMatrix, TimeGrid, DEFAULT_EPS_MIN,
};
use longrun::simulate::{
    simulation_grid, EnsembleOptions, EnsembleResult, PathObserver, Simulator, StepRecord,
};
use longrun::stats::{
    crossover_table, crossover_years, folded_cdf, mc_lag_one_bands, sharpe_ratio,
    wealth_statistics, Curve, LagStatistic, StatReport,
};
use longrun::Error;
use statrs::distribution::{ContinuousCDF, Normal};

struct Check {
    label: String,
    pass: bool,
    /// Failure explained in the decisions notes; does not fail the run.
    known_gap: bool,
    detail: String,
}

impl Check {
    fn new(label: impl Into<String>, pass: bool, detail: impl Into<String>) -> Self {
        Check {
            label: label.into(),
            pass,
            known_gap: false,
            detail: detail.into(),
        }
    }

    fn known_gap(mut self) -> Self {
        self.known_gap = true;
        self
    }
}

struct Criterion {
    id: u8,
    title: &'static str,
    run: fn() -> Vec<Check>,
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn origin() -> NaiveDate {
    NaiveDate::from_ymd_opt(2000, 1, 31).unwrap()
}

fn equity(mu: f64, sigma: f64) -> CmaParameters {
    CmaParameters::single("eq", AssetClass::Equity, mu, sigma)
}

fn three_assets() -> CmaParameters {
    CmaParameters {
        asset_ids: vec!["eq".into(), "bond".into(), "hf".into()],
        classes: vec![AssetClass::Equity, AssetClass::FixedIncome, AssetClass::Alternative],
        mu_annual: vec![0.06, 0.03, 0.04],
        sigma_annual: vec![0.12, 0.05, 0.08],
        correlation: SymmetricMatrix::from_rows(&[
            vec![1.0, 0.3, 0.5],
            vec![0.3, 1.0, 0.2],
            vec![0.5, 0.2, 1.0],
        ])
        .unwrap(),
    }
}

// Generator moments.

fn generator_moments() -> Vec<Check> {
    const DRAWS: usize = 5_000_000;
    let mut rng = RngStream::for_path(2024, 0, 7);
    let a: Vec<f64> = (0..9).map(|_| 0.05 + 0.1 * rng.uniform()).collect();
    let sigma = SymmetricMatrix::from_fn(3, |i, j| {
        let dot: f64 = (0..3).map(|k| a[3 * i + k] * a[3 * j + k]).sum();
        dot + if i == j { 0.002 } else { 0.0 }
    });
    let root = matrix_sqrt(&sigma, DEFAULT_EPS_MIN).unwrap();
    let params = StudentParams::new(8.0, vec![-0.3, -0.15, -0.15], DEFAULT_EPS_MIN).unwrap();
    let law = InnovationLaw::Student(Box::new(params));

    let start = Instant::now();
    let mut stream = RngStream::for_path(99, 0, 0);
    let (mut z, mut eps, mut x) = (vec![0.0; 3], vec![0.0; 3], vec![0.0; 3]);
    let mut sum = [0.0; 3];
    let mut outer = SymmetricMatrix::zeros(3);
    for _ in 0..DRAWS {
        law.fill(&mut stream, &mut z, &mut eps);
        mat_vec_into(&root, &eps, &mut x);
        for k in 0..3 {
            sum[k] += x[k];
        }
        outer.add_outer(1.0, &x);
    }
    let elapsed = start.elapsed().as_secs_f64();
    let n = DRAWS as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();

    let worst_mean = (0..3)
        .map(|k| mean[k].abs() / sigma.get(k, k).sqrt())
        .fold(0.0, f64::max);
    let mut worst_cov = 0.0f64;
    for i in 0..3 {
        for j in 0..=i {
            let c = outer.get(i, j) / n - mean[i] * mean[j];
            worst_cov = worst_cov.max(rel(c, sigma.get(i, j)));
        }
    }
    vec![
        Check::new(
            "component means below 0.005 σ",
            worst_mean < 0.005,
            format!("max |m|/σ = {worst_mean:.5}"),
        ),
        Check::new(
            "covariance entries within 1%",
            worst_cov < 0.01,
            format!("max relative error = {:.4}%", 100.0 * worst_cov),
        ),
        Check::new(
            "5e6 draws under 60 s on one thread",
            elapsed < 60.0,
            format!("{elapsed:.2} s"),
        ),
    ]
}

// θ(ν).

fn exact_theta(nu: f64) -> f64 {
    use statrs::function::gamma::ln_gamma;
    let e_sqrt_w = (nu / 2.0).sqrt() * (ln_gamma((nu - 1.0) / 2.0) - ln_gamma(nu / 2.0)).exp();
    1.0 - e_sqrt_w * e_sqrt_w * (nu - 2.0) / nu
}

fn theta_curve() -> Vec<Check> {
    let t8 = theta_of_nu(8.0).unwrap();
    let mut worst = 0.0f64;
    let mut at = 0.0;
    for k in 0..=60 {
        let nu = 5.0 + 0.25 * k as f64;
        let t = theta_of_nu(nu).unwrap();
        let e = (t - 1.0 / (2.0 * (nu - 1.7))).abs() / t;
        if e > worst {
            worst = e;
            at = nu;
        }
    }
    let exact8 = exact_theta(8.0);
    vec![
        Check::new(
            "θ(8) in [0.079, 0.082]",
            (0.079..=0.082).contains(&t8),
            format!("θ(8) = {t8:.6}"),
        ),
        Check::new(
            "θ(8) is exactly 253/3136",
            (t8 - 253.0 / 3136.0).abs() < 1e-15,
            format!("253/3136 = {:.9}", 253.0 / 3136.0),
        ),
        Check::new(
            "1/(2(ν − 1.7)) within 5% on ν ∈ [5, 20]",
            worst < 0.05,
            format!("max relative error {:.3}% at ν = {at}", 100.0 * worst),
        ),
        Check::new(
            "gamma-function θ(8) also in band",
            (0.079..=0.082).contains(&exact8),
            format!("exact θ(8) = {exact8:.6}"),
        ),
    ]
}

// Drift uncertainty scaling.

fn log_std_curve(ensemble: &EnsembleResult, horizons: &[f64]) -> Vec<f64> {
    wealth_statistics(ensemble, 0, horizons)
        .unwrap()
        .iter()
        .map(|w| w.log_std_annualized)
        .collect()
}

fn du_scaling() -> Vec<Check> {
    const PATHS: usize = 50_000;
    let cal = 25.0;
    let horizons = [5.0, 10.0, 15.0, 20.0, 25.0];
    let cma = equity(0.07, 0.16);
    let grid = simulation_grid(25, None).unwrap();
    let run = |spec: ProcessSpec| {
        let ens = Simulator::new(&spec, &cma, &grid, None)
            .unwrap()
            .simulate_ensemble(PATHS, 3, EnsembleOptions::default())
            .unwrap();
        log_std_curve(&ens, &horizons)
    };
    let base = run(ProcessSpec::baseline());
    let du = run(ProcessSpec::baseline().with_du(cal));
    let ratios: Vec<f64> = du.iter().zip(&base).map(|(a, b)| a / b).collect();

    let mut checks = Vec::new();
    for (h, r) in horizons.iter().zip(&ratios) {
        let linear = 1.0 + h / (2.0 * cal);
        let err = rel(*r, linear);
        let check = Check::new(
            format!("ratio at {h}y vs 1 + ΔT/(2ΔT_cal) = {linear:.3}"),
            err < 0.05,
            format!("measured {r:.4}, off by {:.2}%", 100.0 * err),
        );
        // At ΔT = ΔT_cal the first-order factor overshoots the exact √2 by 6%.
        checks.push(if *h == cal { check.known_gap() } else { check });
    }
    let worst_exact = horizons
        .iter()
        .zip(&ratios)
        .map(|(h, r)| rel(*r, (1.0 + h / cal).sqrt()))
        .fold(0.0, f64::max);
    checks.push(Check::new(
        "ratios match exact √(1 + ΔT/ΔT_cal) within 2%",
        worst_exact < 0.02,
        format!("max deviation {:.2}%", 100.0 * worst_exact),
    ));
    checks
}

// Long-run covariance fixed point.

struct OuterProducts {
    mu: Vec<f64>,
    dev: Vec<f64>,
    acc: SymmetricMatrix,
    count: usize,
}

impl PathObserver for OuterProducts {
    type Output = (SymmetricMatrix, usize);

    fn observe(&mut self, record: &StepRecord<'_>) {
        if record.absorbed.iter().any(|a| *a) {
            return;
        }
        for ((d, r), m) in self.dev.iter_mut().zip(record.returns).zip(&self.mu) {
            *d = r - m;
        }
        self.acc.add_outer(1.0, &self.dev);
        self.count += 1;
    }

    fn finish(self) -> Self::Output {
        (self.acc, self.count)
    }
}

fn covariance_fixed_point() -> Vec<Check> {
    const PATHS: usize = 20_000;
    let cma = three_assets();
    let spec = ProcessSpec::baseline().with_lmarch(0.40).with_default_student();
    let grid = simulation_grid(40, None).unwrap();
    let sim = Simulator::new(&spec, &cma, &grid, None).unwrap();
    let mu = sim.mu_step().to_vec();
    let start = Instant::now();
    let run = sim
        .run_ensemble(PATHS, 5, EnsembleOptions::default(), |_| OuterProducts {
            mu: mu.clone(),
            dev: vec![0.0; 3],
            acc: SymmetricMatrix::zeros(3),
            count: 0,
        })
        .unwrap();
    let mut total = SymmetricMatrix::zeros(3);
    let mut count = 0;
    for (acc, c) in run.outputs.into_iter().flatten() {
        total.add_scaled(1.0, &acc);
        count += c;
    }
    let mut diff = total.scaled(1.0 / count as f64);
    let target = sim.sigma_cma_step();
    diff.add_scaled(-1.0, target);
    let err = diff.frobenius_norm() / target.frobenius_norm();
    vec![
        Check::new(
            "average outer product within 3% (Frobenius)",
            err < 0.03,
            format!("relative error {:.3}% over {count} steps", 100.0 * err),
        ),
        Check::new(
            "no absorption distorts the average",
            count == PATHS * grid.n_steps,
            format!("{:.1} s", start.elapsed().as_secs_f64()),
        ),
    ]
}

// Wealth dispersion curves.

/// Ten years of alternating ±σ/√12 monthly moves: a realized volatility of `sigma`.
fn volatile_history(id: &str, sigma: f64) -> MarketHistory {
    let months = 120;
    let step = sigma / 12f64.sqrt();
    let mut p = 1.0;
    let mut prices = vec![p];
    for k in 0..months {
        p *= if k % 2 == 0 { 1.0 + step } else { 1.0 - step };
        prices.push(p);
    }
    let grid = TimeGrid::monthly(months, origin()).unwrap();
    let dates = (0..=months).map(|s| grid.date(s)).collect();
    MarketHistory::new(dates, vec![id.into()], prices).unwrap()
}

fn wealth_curves() -> Vec<Check> {
    const PATHS: usize = 10_000;
    let horizons: Vec<f64> = (1..=20).map(f64::from).collect();
    let cma = equity(0.07, 0.16);
    let grid = simulation_grid(20, None).unwrap();
    let ensemble = |spec: &ProcessSpec, history: Option<&MarketHistory>| {
        let grid = simulation_grid(20, history).unwrap();
        Simulator::new(spec, &cma, &grid, history)
            .unwrap()
            .simulate_ensemble(PATHS, 17, EnsembleOptions::default())
            .unwrap()
    };
    let constant = log_std_curve(&ensemble(&ProcessSpec::baseline(), None), &horizons);
    let du = log_std_curve(&ensemble(&ProcessSpec::baseline().with_du(25.0), None), &horizons);
    let nrc = log_std_curve(&ensemble(&ProcessSpec::baseline().with_default_nrc(), None), &horizons);
    let history = volatile_history("eq", 0.40);
    let seeded = log_std_curve(
        &ensemble(&ProcessSpec::baseline().with_default_lmarch(), Some(&history)),
        &horizons,
    );

    let mean = constant.iter().sum::<f64>() / constant.len() as f64;
    let flat = constant.iter().map(|s| rel(*s, mean)).fold(0.0, f64::max);
    let level = constant.iter().map(|s| rel(*s, 0.16)).fold(0.0, f64::max);
    let du_growing = [0, 4, 9, 14, 19].windows(2).all(|w| du[w[1]] > du[w[0]]);

    // Zero-volatility limit: the drift statistic returns μ_CMA.
    let sim = Simulator::new(&ProcessSpec::baseline(), &cma, &grid, None).unwrap();
    let mut st = sim.init_path(0, 0).unwrap();
    let mut prices = st.prices.clone();
    for _ in 0..grid.n_steps {
        sim.step_with_innovation(&mut st, &[0.0]).unwrap();
        prices.extend_from_slice(&st.prices);
    }
    let walk = EnsembleResult {
        prices,
        n_paths: 1,
        n_assets: 1,
        spec: ProcessSpec::baseline(),
        cma: cma.clone(),
        grid,
        master_seed: 0,
        seed_history_digest: None,
        faults: Vec::new(),
    };
    let drift_err = wealth_statistics(&walk, 0, &horizons)
        .unwrap()
        .iter()
        .map(|w| (w.mean_drift - 0.07).abs())
        .fold(0.0, f64::max);

    vec![
        Check::new(
            "constant process flat over 1..20y within 5%",
            flat < 0.05,
            format!("max deviation from curve mean {:.2}%", 100.0 * flat),
        ),
        Check::new(
            "constant level within 5% of σ_CMA",
            level < 0.05,
            format!("1y {:.4}, 20y {:.4}, max deviation {:.2}%", constant[0], constant[19], 100.0 * level),
        ),
        Check::new(
            "drift uncertainty grows with horizon",
            du_growing && du[19] > du[0] * 1.2,
            format!("1y {:.4}, 20y {:.4}", du[0], du[19]),
        ),
        Check::new(
            "LMARCH seeded with a volatile history starts high and relaxes",
            seeded[0] > 1.2 * constant[0] && seeded[19] < seeded[0],
            format!("1y {:.4} vs constant {:.4}, 20y {:.4}", seeded[0], constant[0], seeded[19]),
        ),
        Check::new(
            "NRC lowers the long-term level",
            nrc[19] < constant[19] && nrc[9] < constant[9],
            format!("20y {:.4} vs constant {:.4}", nrc[19], constant[19]),
        ),
        Check::new(
            "zero-volatility walk gives μ_CMA",
            drift_err < 1e-12,
            format!("max |drift − μ| = {drift_err:.1e}"),
        ),
    ]
}

// Cross-over table.

/// Printed rows: name, return, volatility, cross-over years, Sharpe ratio.
const CROSSOVER_ROWS: [(&str, f64, f64, f64, f64); 28] = [
    ("U.S. Short Duration Government", 0.021, 0.014, 0.42, 1.53),
    ("Chinese Government Bonds", 0.048, 0.038, 0.64, 1.25),
    ("U.S. Aggregate Bonds", 0.032, 0.042, 1.77, 0.75),
    ("U.S. High Yield Bonds", 0.065, 0.094, 2.10, 0.69),
    ("U.S. Inv Grade Corporate Bonds", 0.042, 0.066, 2.45, 0.64),
    ("U.S. Government Bond", 0.025, 0.045, 3.15, 0.56),
    ("Emerging Markets Sovereign Debt", 0.049, 0.094, 3.65, 0.52),
    ("Euro High Yield Bonds", 0.057, 0.157, 7.71, 0.36),
    ("U.S. Long (20+ Yr) Treasuries", 0.037, 0.140, 13.96, 0.27),
    ("World Government Bonds", 0.017, 0.067, 16.06, 0.25),
    ("Euro Inv Grade Corp Bonds", 0.021, 0.111, 27.35, 0.19),
    ("Canadian Large Cap", 0.082, 0.119, 2.10, 0.69),
    ("U.S. Large Cap", 0.098, 0.155, 2.51, 0.63),
    ("U.S. Small Cap", 0.073, 0.204, 7.83, 0.36),
    ("European Small Cap", 0.059, 0.223, 14.20, 0.26),
    ("European Large Cap", 0.043, 0.188, 18.75, 0.23),
    ("MSCI China Equity", 0.053, 0.259, 24.09, 0.20),
    ("UK Small Cap", 0.045, 0.225, 24.74, 0.20),
    ("UK Large Cap", 0.035, 0.175, 24.83, 0.20),
    ("Emerging Markets Equity", 0.040, 0.210, 28.03, 0.19),
    ("Japanese Equity", 0.027, 0.151, 31.23, 0.18),
    ("Relative Value Hedge Funds", 0.051, 0.049, 0.93, 1.04),
    ("Event Driven Hedge Funds", 0.051, 0.070, 1.90, 0.72),
    ("Macro Hedge Funds", 0.033, 0.048, 2.07, 0.70),
    ("Conservative Hedge Funds", 0.027, 0.041, 2.29, 0.66),
    ("Diversified Hedge Funds", 0.028, 0.050, 3.11, 0.57),
    ("Long Bias Hedge Funds", 0.046, 0.089, 3.67, 0.52),
    ("Global Core Infrastructure", 0.021, 0.162, 59.30, 0.13),
];

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn crossover_reproduction() -> Vec<Check> {
    const TOL: f64 = 0.01 + 1e-9;
    let mut strict_misses = Vec::new();
    let mut column_misses = Vec::new();
    let mut joint_misses = Vec::new();
    for &(name, mu, sigma, years, sharpe) in &CROSSOVER_ROWS {
        let (y, s) = (crossover_years(mu, sigma), sharpe_ratio(mu, sigma));
        if (y - years).abs() > TOL || (s - sharpe).abs() > TOL {
            strict_misses.push(format!("{name} {y:.2}/{s:.2}"));
        }
        // Both columns depend on k = σ/μ only. The inputs carry ±0.0005 of
        // rounding and the outputs ±0.005.
        let h = 0.0005;
        let inputs = ((sigma - h) / (mu + h), (sigma + h) / (mu - h));
        let from_years = ((years - 0.005).sqrt(), (years + 0.005).sqrt());
        let from_sharpe = (1.0 / (sharpe + 0.005), 1.0 / (sharpe - 0.005));
        let overlap = |a: (f64, f64), b: (f64, f64)| a.0.max(b.0) <= a.1.min(b.1);
        if !overlap(inputs, from_years) || !overlap(inputs, from_sharpe) {
            column_misses.push(name.to_string());
        }
        let joint = (inputs.0.max(from_years.0).max(from_sharpe.0), inputs.1.min(from_years.1).min(from_sharpe.1));
        if joint.0 > joint.1 {
            joint_misses.push(format!("{name}: {years:.2}y implies Sharpe {:.4}", 1.0 / years.sqrt()));
        }
    }

    let table = crossover_table(&load_cma(&configs_dir().join("crossover_assets_cma.json")).unwrap());
    let config_matches = table.len() == CROSSOVER_ROWS.len()
        && table
            .iter()
            .zip(&CROSSOVER_ROWS)
            .all(|(row, r)| row.mu == r.1 && row.sigma == r.2);

    vec![
        Check::new(
            "recomputed columns within ±0.01 on every row",
            strict_misses.is_empty(),
            format!(
                "{} of {} rows off: {}",
                strict_misses.len(),
                CROSSOVER_ROWS.len(),
                strict_misses.join("; ")
            ),
        )
        .known_gap(),
        Check::new(
            "each printed column consistent with input rounding",
            column_misses.is_empty(),
            format!("{} rows, inconsistent: [{}]", CROSSOVER_ROWS.len(), column_misses.join(", ")),
        ),
        // Sharpe = 1/√ΔT_×, so the two printed columns must agree with each other.
        Check::new(
            "printed columns mutually consistent on every row",
            joint_misses.is_empty(),
            format!("inconsistent: [{}]", joint_misses.join("; ")),
        )
        .known_gap(),
        Check::new(
            "shipped CMA file carries the same inputs",
            config_matches,
            format!("{} assets", table.len()),
        ),
    ]
}

// Lag-one correlation signs.

fn lag_one_signs() -> Vec<Check> {
    let horizons = [1, 3, 6, 12, 24, 36, 48];
    let cma = equity(0.07, 0.16);
    let grid = simulation_grid(24, None).unwrap();
    let bands = |spec: ProcessSpec| {
        let ens = Simulator::new(&spec, &cma, &grid, None)
            .unwrap()
            .simulate_ensemble(1000, 11, EnsembleOptions::default())
            .unwrap();
        mc_lag_one_bands(&ens, 0, &horizons, &LagStatistic::Returns).unwrap()
    };
    let null = bands(ProcessSpec::baseline());
    let nrc = bands(ProcessSpec::baseline().with_default_nrc());
    let mean_at = |months: usize| {
        nrc.points
            .iter()
            .find(|p| p.horizon_steps == months)
            .and_then(|p| p.correlation)
            .unwrap_or(f64::NAN)
    };
    let outside: Vec<usize> = null
        .points
        .iter()
        .filter(|p| !p.straddles_zero())
        .map(|p| p.horizon_steps)
        .collect();
    let long = [24, 36, 48].map(mean_at);
    vec![
        Check::new(
            "constant-covariance bands contain 0 at every ΔT",
            outside.is_empty(),
            format!("horizons outside: {outside:?}"),
        ),
        Check::new(
            "NRC mean positive at 6m",
            mean_at(6) > 0.0,
            format!("{:+.4}", mean_at(6)),
        ),
        Check::new(
            "NRC mean negative on 24..48m",
            long.iter().all(|c| *c < 0.0),
            format!("{:+.3} {:+.3} {:+.3}", long[0], long[1], long[2]),
        ),
    ]
}

// Property summary.

fn full_spec() -> ProcessSpec {
    ProcessSpec::baseline()
        .with_default_nrc()
        .with_du(25.0)
        .with_lmarch(0.40)
        .with_default_student()
}

/// Rebuilds drift and covariance from realized prices alone and solves for
/// the innovations; returns the largest deviation from the recorded ones.
fn filtration_round_trip() -> f64 {
    let cma = three_assets();
    let spec = full_spec();
    let grid = simulation_grid(10, None).unwrap();
    let sim = Simulator::new(&spec, &cma, &grid, None).unwrap();
    let mut st = sim.init_path(8, 3).unwrap();
    let du = st.drift.du_offset().to_vec();
    let mut prices = vec![st.prices.clone()];
    let mut recorded = Vec::new();
    for _ in 0..grid.n_steps {
        sim.step(&mut st).unwrap();
        prices.push(st.prices.clone());
        recorded.push(st.innovations().to_vec());
    }

    let mut drift = DriftState::from_cma(&cma, &grid, spec.drift.nrc.as_ref(), Some(du)).unwrap();
    let CovarianceSpec::AffineLmarch { w_inf, kernel } = &spec.covariance else {
        unreachable!()
    };
    let kernel = Arc::new(LmarchKernel::from_spec(kernel, &grid).unwrap());
    let sigma = covariance_from_cma(&cma).scaled(grid.step_years);
    let mu: Vec<f64> = cma.mu_annual.iter().map(|m| m * grid.step_years).collect();
    let mut cov = CovarianceState::new(kernel, *w_inf, sigma, mu).unwrap();
    drift.push_prices(&prices[0]);
    let mut worst = 0.0f64;
    for t in 0..grid.n_steps {
        let mu_t = drift.total_drift();
        let (_, root) = cov.affine_covariance_with_root(DEFAULT_EPS_MIN).unwrap();
        let r: Vec<f64> = prices[t + 1].iter().zip(&prices[t]).map(|(b, a)| b / a - 1.0).collect();
        let centered = nalgebra::DVector::from_iterator(3, r.iter().zip(&mu_t).map(|(x, m)| x - m));
        let eps = root.lu().solve(&centered).unwrap();
        for k in 0..3 {
            worst = worst.max((eps[k] - recorded[t][k]).abs());
        }
        drift.push_prices(&prices[t + 1]);
        cov.push_return(&r);
    }
    worst
}

fn adversarial_matrices() -> (usize, usize) {
    let cma_with = |rows: &[Vec<f64>]| -> Result<CmaParameters, Error> {
        let n = rows.len();
        Ok(CmaParameters {
            asset_ids: (0..n).map(|i| format!("a{i}")).collect(),
            classes: vec![AssetClass::Equity; n],
            mu_annual: vec![0.05; n],
            sigma_annual: vec![0.1; n],
            correlation: SymmetricMatrix::from_rows(rows)?,
        })
    };
    let bad: Vec<Vec<Vec<f64>>> = vec![
        vec![vec![1.0, 0.9, -0.9], vec![0.9, 1.0, 0.9], vec![-0.9, 0.9, 1.0]],
        vec![vec![1.0, 1.0 - 1e-10], vec![1.0 - 1e-10, 1.0]],
        vec![vec![1.0, 1.2], vec![1.2, 1.0]],
        vec![vec![1.0, f64::NAN], vec![f64::NAN, 1.0]],
        vec![vec![1.0, 0.3], vec![0.2, 1.0]],
        vec![vec![0.9, 0.0], vec![0.0, 1.0]],
        vec![vec![1.0, 1.0, 0.0], vec![1.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
    ];
    let rejected = bad
        .iter()
        .filter(|rows| cma_with(rows).and_then(|c| validate_cma(&c, DEFAULT_EPS_MIN)).is_err())
        .count();
    (rejected, bad.len())
}

fn absorption_is_permanent() -> (bool, usize) {
    let cma = equity(0.0, 0.9);
    let grid = simulation_grid(20, None).unwrap();
    let ens = Simulator::new(&ProcessSpec::baseline(), &cma, &grid, None)
        .unwrap()
        .simulate_ensemble(500, 4, EnsembleOptions::default())
        .unwrap();
    let mut absorbed = 0;
    let mut ok = true;
    for p in 0..ens.n_paths {
        let s = ens.series(p, 0);
        if let Some(first) = s.iter().position(|x| *x == 0.0) {
            absorbed += 1;
            ok &= s[first..].iter().all(|x| *x == 0.0);
            ok &= s[..first].iter().all(|x| *x > 0.01);
        }
    }
    (ok, absorbed)
}

fn folded_cdf_vs_normal() -> f64 {
    let mut stream = RngStream::for_path(5, 0, 0);
    let sample: Vec<f64> = (0..1_000_000).map(|_| stream.standard_normal()).collect();
    let cdf = folded_cdf(&sample).unwrap();
    let normal = Normal::new(0.0, 1.0).unwrap();
    (-400..=400)
        .map(|k| {
            let x = k as f64 / 100.0;
            let f = normal.cdf(x);
            (cdf.fold_at(x) - f.min(1.0 - f)).abs()
        })
        .fold(0.0, f64::max)
}

fn file_round_trips() -> Result<Vec<&'static str>, Error> {
    let dir = tempfile::tempdir().expect("temp dir");
    let base = dir.path();
    let mut failed = Vec::new();

    let cma = three_assets();
    write_cma(&cma, &base.join("cma.json"))?;
    if load_cma(&base.join("cma.json"))? != cma {
        failed.push("cma");
    }

    let spec = full_spec();
    longrun::io::write_spec(&spec, &base.join("spec.json"))?;
    if load_spec(&base.join("spec.json"))? != spec {
        failed.push("spec");
    }

    let history = volatile_history("eq", 0.2);
    write_prices(&history, &base.join("prices.csv"))?;
    if load_prices(&base.join("prices.csv"), PriceFormat::Long)? != history {
        failed.push("prices");
    }

    let grid = simulation_grid(2, None)?;
    let ens = Simulator::new(&spec, &cma, &grid, None)?.simulate_ensemble(5, 1, EnsembleOptions::default())?;
    write_ensemble(&ens, &base.join("ens"))?;
    if read_ensemble(&base.join("ens"))? != ens {
        failed.push("ensemble");
    }

    let mut report = StatReport::new("round trip").with_meta("seed", 1);
    let mut curve = Curve::new("c", &["x", "y"]);
    curve.rows = vec![vec![0.1, 1.0 / 3.0], vec![f64::MIN_POSITIVE, -2.5e-7]];
    report.push(curve);
    write_report(&report, &base.join("report"))?;
    if read_report(&base.join("report"))? != report {
        failed.push("report");
    }
    Ok(failed)
}

fn properties() -> Vec<Check> {
    let round_trip = filtration_round_trip();

    let cma = three_assets();
    let grid = simulation_grid(5, None).unwrap();
    let sim = Simulator::new(&full_spec(), &cma, &grid, None).unwrap();
    let with = |threads| {
        sim.simulate_ensemble(64, 21, EnsembleOptions { threads: Some(threads), ..Default::default() })
            .unwrap()
    };
    let (one, four) = (with(1), with(4));
    let bitwise = one.prices.len() == four.prices.len()
        && one.prices.iter().zip(&four.prices).all(|(a, b)| a.to_bits() == b.to_bits());

    let (permanent, absorbed) = absorption_is_permanent();
    let (rejected, adversarial) = adversarial_matrices();
    let fold_err = folded_cdf_vs_normal();
    let files = file_round_trips();

    vec![
        Check::new(
            "filtration round-trip within 1e-12",
            round_trip < 1e-12,
            format!("max |ε − ε̂| = {round_trip:.2e}"),
        ),
        Check::new("1 and 4 workers give identical bits", bitwise, "64 paths, full process"),
        Check::new(
            "absorption is permanent",
            permanent && absorbed > 0,
            format!("{absorbed} of 500 paths absorbed"),
        ),
        Check::new(
            "adversarial correlation matrices rejected",
            rejected == adversarial,
            format!("{rejected} of {adversarial}"),
        ),
        Check::new(
            "folded cdf of 1e6 normals within 0.005",
            fold_err < 0.005,
            format!("max deviation {fold_err:.5}"),
        ),
        match files {
            Ok(failed) => Check::new("file round-trips", failed.is_empty(), format!("mismatched: {failed:?}")),
            Err(e) => Check::new("file round-trips", false, e.to_string()),
        },
    ]
}

const CRITERIA: [Criterion; 8] = [
    Criterion { id: 1, title: "non-central Student generator moments", run: generator_moments },
    Criterion { id: 2, title: "θ(ν) and its approximation", run: theta_curve },
    Criterion { id: 3, title: "drift-uncertainty dispersion scaling", run: du_scaling },
    Criterion { id: 4, title: "long-run covariance equals the CMA covariance", run: covariance_fixed_point },
    Criterion { id: 5, title: "wealth dispersion curves", run: wealth_curves },
    Criterion { id: 6, title: "cross-over time and Sharpe table", run: crossover_reproduction },
    Criterion { id: 7, title: "lag-one null bands and NRC signs", run: lag_one_signs },
    Criterion { id: 8, title: "property suite", run: properties },
];

fn main() -> ExitCode {
    let selected: Vec<u8> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut unexpected = 0;
    let mut gaps = 0;
    for c in CRITERIA.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let checks = (c.run)();
        let failing: Vec<&Check> = checks.iter().filter(|k| !k.pass).collect();
        let status = match (failing.is_empty(), failing.iter().all(|k| k.known_gap)) {
            (true, _) => "PASS",
            (false, true) => "FAIL (documented gap)",
            (false, false) => "FAIL",
        };
        println!(
            "criterion {}: {status}  {}  [{:.1} s]",
            c.id,
            c.title,
            start.elapsed().as_secs_f64()
        );
        for k in &checks {
            let mark = match (k.pass, k.known_gap) {
                (true, _) => "pass",
                (false, true) => "FAIL (documented gap)",
                (false, false) => "FAIL",
            };
            println!("    {mark}: {}  ({})", k.label, k.detail);
            if !k.pass {
                if k.known_gap {
                    gaps += 1;
                } else {
                    unexpected += 1;
                }
            }
        }
    }
    println!("acceptance: {unexpected} unexpected failure(s), {gaps} documented gap(s)");
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
