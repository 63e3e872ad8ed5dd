use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use longrun::covariance::LmarchKernel;
use longrun::io::{self, MarketHistory, PriceFormat};
use longrun::market::{AssetClass, CmaParameters, KernelSpec, TimeGrid};
use longrun::simulate::{simulation_grid, EnsembleOptions, EnsembleResult, FaultMode, Simulator};
use longrun::stats::{
    crossover_table, folded_cdf, lag_one_curve, mc_lag_one_bands, sampled_returns,
    wealth_statistics, Curve, LagStatistic, ReturnKind, StatReport, VolatilityLegs,
};

use crate::manifest::RunManifest;
use crate::{CalibrateArgs, Failure, Kind, SimulateArgs, StatsArgs, Which};

type CliResult<T = ()> = Result<T, Failure>;

fn format_of(wide: bool) -> PriceFormat {
    if wide {
        PriceFormat::Wide
    } else {
        PriceFormat::Long
    }
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure {
        code: 4,
        message: format!("I/O error on {}: {e}", dir.display()),
    })
}

pub fn simulate(args: SimulateArgs, argv: Vec<String>) -> CliResult {
    let mut manifest = RunManifest::start("simulate", argv);
    let cma = io::load_cma(&args.cma)?;
    let specs = io::load_specs(&args.spec)?;
    let history = match &args.prices {
        Some(p) => Some(io::load_prices(p, format_of(args.wide))?),
        None => None,
    };
    if args.years == 0 || args.paths == 0 {
        return Err(Failure::usage("--years and --paths must be positive"));
    }
    let grid = simulation_grid(args.years, history.as_ref())?;
    manifest.config("cma", args.cma.display());
    manifest.config("spec", args.spec.display());
    if let Some(p) = &args.prices {
        manifest.config("prices", p.display());
    }
    manifest.config("paths", args.paths);
    manifest.config("years", args.years);
    manifest.seed = Some(args.seed);
    let options = EnsembleOptions {
        threads: args.threads,
        fault_mode: if args.skip_faults {
            FaultMode::SkipAndReport
        } else {
            FaultMode::FailFast
        },
    };
    create_dir(&args.out)?;
    let single = specs.len() == 1;
    for (name, spec) in &specs {
        let sim = Simulator::new(spec, &cma, &grid, history.as_ref())?;
        let result = sim.simulate_ensemble(args.paths, args.seed, options)?;
        for f in &result.faults {
            eprintln!("warning: {name}: path {} skipped: {}", f.path, f.message);
        }
        let dir = if single { args.out.clone() } else { args.out.join(name) };
        let files = io::write_ensemble(&result, &dir)?;
        manifest.config(&format!("spec_hash.{name}"), io::spec_hash(spec));
        manifest.outputs(&args.out, files);
    }
    manifest.finish(&args.out)
}

fn parse_classes(entries: &[String], ids: &[String], default: AssetClass) -> CliResult<Vec<AssetClass>> {
    let mut classes = vec![default; ids.len()];
    for entry in entries {
        let (id, class) = entry
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--class `{entry}` must be ID=CLASS")))?;
        let k = ids
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Failure::usage(format!("--class names unknown asset `{id}`")))?;
        classes[k] = AssetClass::from_str(class)?;
    }
    Ok(classes)
}

pub fn calibrate(args: CalibrateArgs, argv: Vec<String>) -> CliResult {
    let mut manifest = RunManifest::start("calibrate", argv);
    let history = io::load_prices(&args.prices, format_of(args.wide))?;
    let default = AssetClass::from_str(&args.default_class)?;
    let classes = parse_classes(&args.classes, &history.asset_ids, default)?;
    let cma = io::estimate_cma(&history, &classes)?;
    let dir = args.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    create_dir(dir)?;
    io::write_cma(&cma, &args.out)?;
    manifest.config("prices", args.prices.display());
    manifest.config("history_digest", history.digest());
    manifest.outputs(dir, [args.out.clone()]);
    manifest.finish(dir)
}

/// The statistic inputs: one code path serves ensembles and histories,
/// a history being treated as a single path.
enum Input {
    Ensemble(Box<EnsembleResult>),
    History(MarketHistory),
    Cma(CmaParameters),
}

impl Input {
    fn asset_ids(&self) -> &[String] {
        match self {
            Input::Ensemble(e) => &e.cma.asset_ids,
            Input::History(h) => &h.asset_ids,
            Input::Cma(c) => &c.asset_ids,
        }
    }

    fn grid(&self) -> Option<&TimeGrid> {
        match self {
            Input::Ensemble(e) => Some(&e.grid),
            Input::History(h) => Some(&h.grid),
            Input::Cma(_) => None,
        }
    }

    /// All price series of one asset: every path, or the single history.
    fn series(&self, asset: usize) -> Vec<Vec<f64>> {
        match self {
            Input::Ensemble(e) => (0..e.n_paths)
                .filter(|p| !e.is_faulted(*p))
                .map(|p| e.series(p, asset))
                .collect(),
            Input::History(h) => vec![h.series(asset)],
            Input::Cma(_) => Vec::new(),
        }
    }
}

fn months_to_steps(grid: &TimeGrid, months: f64) -> CliResult<usize> {
    grid.steps_for_months(months)
        .filter(|s| *s > 0)
        .ok_or_else(|| Failure::usage(format!("horizon {months} months is not a whole number of steps")))
}

pub fn stats(args: StatsArgs, argv: Vec<String>) -> CliResult {
    let mut manifest = RunManifest::start("stats", argv);
    let input = if let Some(dir) = &args.ensemble {
        manifest.config("ensemble", dir.display());
        Input::Ensemble(Box::new(io::read_ensemble(dir)?))
    } else if let Some(p) = &args.prices {
        manifest.config("prices", p.display());
        Input::History(io::load_prices(p, format_of(args.wide))?)
    } else if let Some(p) = &args.cma {
        manifest.config("cma", p.display());
        Input::Cma(io::load_cma(p)?)
    } else {
        return Err(Failure::usage("one of --ensemble, --prices or --cma is required"));
    };
    if matches!(input, Input::Cma(_)) && args.which != Which::Crossover {
        return Err(Failure::usage("--cma input only supports --which crossover"));
    }
    let assets: Vec<usize> = match &args.asset {
        Some(id) => vec![input
            .asset_ids()
            .iter()
            .position(|a| a == id)
            .ok_or_else(|| Failure::usage(format!("unknown asset `{id}`")))?],
        None => (0..input.asset_ids().len()).collect(),
    };

    let which = format!("{:?}", args.which).to_lowercase();
    let mut report = StatReport::new(which.clone());
    match &input {
        Input::Ensemble(e) => {
            report = report
                .with_meta("source", "ensemble")
                .with_meta("master_seed", e.master_seed)
                .with_meta("spec_hash", io::spec_hash(&e.spec))
                .with_meta("n_paths", e.n_paths);
            manifest.seed = Some(e.master_seed);
        }
        Input::History(h) => {
            report = report.with_meta("source", "prices").with_meta("history_digest", h.digest());
        }
        Input::Cma(_) => report = report.with_meta("source", "cma"),
    }

    let run = || -> CliResult<StatReport> {
        match args.which {
            Which::Crossover => crossover(&args, &input, report),
            Which::Wealth => wealth(&args, &input, &assets, report),
            Which::Dist => dist(&args, &input, &assets, report),
            Which::Lagcorr => lagcorr(&args, &input, &assets, report),
        }
    };
    let report = match args.threads {
        Some(t) => rayon_pool(t)?.install(run)?,
        None => run()?,
    };
    let files = io::write_report(&report, &args.out)?;
    manifest.outputs(&args.out, files);
    manifest.finish(&args.out)
}

fn rayon_pool(threads: usize) -> CliResult<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Failure::usage(format!("--threads: {e}")))
}

fn crossover(args: &StatsArgs, input: &Input, mut report: StatReport) -> CliResult<StatReport> {
    let cma = match input {
        Input::Cma(c) => c.clone(),
        Input::Ensemble(e) => e.cma.clone(),
        Input::History(h) => {
            let classes = parse_classes(&args.classes, &h.asset_ids, AssetClass::Equity)?;
            io::estimate_cma(h, &classes)?
        }
    };
    report.push(Curve::from_crossover("crossover", &crossover_table(&cma)));
    Ok(report)
}

fn wealth(args: &StatsArgs, input: &Input, assets: &[usize], mut report: StatReport) -> CliResult<StatReport> {
    let Input::Ensemble(e) = input else {
        return Err(Failure::usage("--which wealth needs --ensemble"));
    };
    let horizons: Vec<f64> = if args.horizons.is_empty() {
        let years = (e.grid.n_steps as f64 * e.grid.step_years).floor() as usize;
        (1..=years).map(|y| y as f64).collect()
    } else {
        args.horizons.clone()
    };
    for &a in assets {
        let points = wealth_statistics(e, a, &horizons)?;
        report.push(Curve::from_wealth(format!("wealth_{}", e.cma.asset_ids[a]), &points));
    }
    Ok(report)
}

fn horizons_months(args: &StatsArgs, default: &[f64]) -> Vec<f64> {
    if args.horizons.is_empty() {
        default.to_vec()
    } else {
        args.horizons.clone()
    }
}

fn dist(args: &StatsArgs, input: &Input, assets: &[usize], mut report: StatReport) -> CliResult<StatReport> {
    let grid = *input.grid().expect("series input");
    let kind = match args.kind {
        Kind::Log => ReturnKind::Log,
        Kind::Relative => ReturnKind::Relative,
    };
    for months in horizons_months(args, &[1.0, 12.0]) {
        let dt = months_to_steps(&grid, months)?;
        let stride = args.stride.unwrap_or(dt);
        for &a in assets {
            let name = format!("dist_{}_{}m", input.asset_ids()[a], months);
            let sample: Vec<f64> = input
                .series(a)
                .iter()
                .flat_map(|p| sampled_returns(p, dt, kind, stride))
                .collect();
            match folded_cdf(&sample) {
                Ok(cdf) => report.push(Curve::from_folded(name, &cdf.thinned(args.max_points))),
                Err(err) => {
                    let mut c = Curve::new(name, &["x", "cdf", "fold"]);
                    c.notes.push(err.to_string());
                    report.push(c);
                }
            }
        }
    }
    Ok(report)
}

fn lagcorr(args: &StatsArgs, input: &Input, assets: &[usize], mut report: StatReport) -> CliResult<StatReport> {
    let grid = *input.grid().expect("series input");
    let horizons = horizons_months(args, &[1.0, 3.0, 6.0, 12.0, 24.0, 36.0, 48.0])
        .into_iter()
        .map(|m| months_to_steps(&grid, m))
        .collect::<CliResult<Vec<_>>>()?;
    let kernel = Arc::new(LmarchKernel::from_spec(&KernelSpec::default(), &grid)?);
    let step_months = grid.step_years * 12.0;
    for &a in assets {
        let id = &input.asset_ids()[a];
        let (long_run_variance, mu_step) = match input {
            Input::Ensemble(e) => {
                let s = e.cma.sigma_annual[a];
                (Some(s * s * grid.step_years), e.cma.mu_annual[a] * grid.step_years)
            }
            Input::History(h) => {
                let r = h.returns(a);
                (None, r.iter().sum::<f64>() / r.len() as f64)
            }
            Input::Cma(_) => unreachable!("rejected above"),
        };
        let stats = [
            LagStatistic::Returns,
            LagStatistic::Volatility(VolatilityLegs {
                kernel: kernel.clone(),
                w_inf: 0.0,
                long_run_variance,
                mu_step,
            }),
        ];
        for stat in &stats {
            let curve = match input {
                Input::Ensemble(e) => mc_lag_one_bands(e, a, &horizons, stat)?,
                Input::History(h) => lag_one_curve(&h.series(a), &horizons, stat)?,
                Input::Cma(_) => unreachable!("rejected above"),
            };
            report.push(Curve::from_lag_one(format!("lagcorr_{}_{id}", stat.label()), &curve, step_months));
        }
    }
    Ok(report)
}
