//! Path simulation: drift + covariance root × innovation → returns → prices,
//! with an absorbing state at zero, and seeded parallel ensembles.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::covariance::{CovarianceState, LmarchKernel};
use crate::drift::{du_draw, nrc_terms, DriftState, NrcTerm};
use crate::error::{Error, Result};
use crate::innovation::{
    InnovationLaw, RngStream, StudentParams, LANE_DRIFT_UNCERTAINTY, LANE_INNOVATIONS,
};
use crate::io::MarketHistory;
use crate::market::linalg::{mat_vec_into, matrix_sqrt, SymmetricMatrix};
use crate::market::{
    covariance_from_cma, scale_to_step, validate_cma, CmaParameters, CovarianceSpec,
    InnovationSpec, ProcessSpec, TimeGrid, DEFAULT_EPS_MIN,
};

/// Which prices the NRC look-back may use at the start of a simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NrcWindow {
    #[default]
    SeededHistory,
    SimulatedOnly,
}

/// Zeroes every price at or below its threshold and flags the asset.
/// Absorbed assets stay at zero.
pub fn apply_absorbing(prices: &mut [f64], p_min: &[f64], absorbed: &mut [bool]) {
    for ((p, &floor), flag) in prices.iter_mut().zip(p_min).zip(absorbed.iter_mut()) {
        if *flag || *p <= floor {
            *p = 0.0;
            *flag = true;
        }
    }
}

/// Everything a step produced, handed to a [`PathObserver`].
#[derive(Debug)]
pub struct StepRecord<'a> {
    pub path: usize,
    /// Index of the new time point (1 for the first step).
    pub step: usize,
    pub prices: &'a [f64],
    pub returns: &'a [f64],
    pub innovations: &'a [f64],
    pub drift: &'a [f64],
    pub root: &'a DMatrix<f64>,
    pub absorbed: &'a [bool],
}

/// Per-path consumer of simulated steps. The ensemble runner builds one per
/// path and collects the outputs in path order.
pub trait PathObserver {
    type Output: Send;

    fn start(&mut self, _initial_prices: &[f64]) {}
    fn observe(&mut self, record: &StepRecord<'_>);
    fn finish(self) -> Self::Output;
}

/// Records the full price trajectory, step 0 included.
#[derive(Debug, Default)]
pub struct PriceRecorder {
    prices: Vec<f64>,
}

impl PathObserver for PriceRecorder {
    type Output = Vec<f64>;

    fn start(&mut self, initial_prices: &[f64]) {
        self.prices.extend_from_slice(initial_prices);
    }

    fn observe(&mut self, record: &StepRecord<'_>) {
        self.prices.extend_from_slice(record.prices);
    }

    fn finish(self) -> Vec<f64> {
        self.prices
    }
}

/// Mutable state of one path.
#[derive(Debug, Clone)]
pub struct PathState {
    pub path: usize,
    pub step: usize,
    pub prices: Vec<f64>,
    pub absorbed: Vec<bool>,
    pub drift: DriftState,
    pub covariance: Option<CovarianceState>,
    stream: RngStream,
    p_min: Vec<f64>,
    mu_t: Vec<f64>,
    eps: Vec<f64>,
    z: Vec<f64>,
    returns: Vec<f64>,
    root: Option<DMatrix<f64>>,
}

impl PathState {
    pub fn returns(&self) -> &[f64] {
        &self.returns
    }

    pub fn innovations(&self) -> &[f64] {
        &self.eps
    }

    pub fn last_drift(&self) -> &[f64] {
        &self.mu_t
    }

    pub fn p_min(&self) -> &[f64] {
        &self.p_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FaultMode {
    #[default]
    FailFast,
    SkipAndReport,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EnsembleOptions {
    /// Worker cap; `None` uses the global pool.
    pub threads: Option<usize>,
    pub fault_mode: FaultMode,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathFault {
    pub path: usize,
    pub message: String,
}

/// Outputs of a streaming ensemble run, indexed by path.
#[derive(Debug)]
pub struct EnsembleRun<T> {
    pub outputs: Vec<Option<T>>,
    pub faults: Vec<PathFault>,
}

/// Simulated prices, path-major: `prices[(path · (n_steps + 1) + step) · n_assets + asset]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub prices: Vec<f64>,
    pub n_paths: usize,
    pub n_assets: usize,
    pub spec: ProcessSpec,
    pub cma: CmaParameters,
    pub grid: TimeGrid,
    pub master_seed: u64,
    /// Digest of the seed history, when one was used.
    pub seed_history_digest: Option<String>,
    /// Faulted paths (skip-and-report mode); their rows hold NaN.
    pub faults: Vec<PathFault>,
}

impl EnsembleResult {
    pub fn n_steps(&self) -> usize {
        self.grid.n_steps
    }

    pub fn is_partial(&self) -> bool {
        !self.faults.is_empty()
    }

    #[inline]
    pub fn price(&self, path: usize, step: usize, asset: usize) -> f64 {
        self.prices[(path * (self.n_steps() + 1) + step) * self.n_assets + asset]
    }

    /// `[step × asset]` block of one path.
    pub fn path_prices(&self, path: usize) -> &[f64] {
        let stride = (self.n_steps() + 1) * self.n_assets;
        &self.prices[path * stride..(path + 1) * stride]
    }

    /// Price series of one asset along one path.
    pub fn series(&self, path: usize, asset: usize) -> Vec<f64> {
        (0..=self.n_steps()).map(|s| self.price(path, s, asset)).collect()
    }

    pub fn is_faulted(&self, path: usize) -> bool {
        self.faults.iter().any(|f| f.path == path)
    }
}

/// Immutable, shareable simulation setup.
#[derive(Debug, Clone)]
pub struct Simulator {
    spec: ProcessSpec,
    cma: CmaParameters,
    grid: TimeGrid,
    eps_min: f64,
    mu_step: Vec<f64>,
    sigma_cma_step: SymmetricMatrix,
    sqrt_cma_step: DMatrix<f64>,
    kernel: Option<(Arc<LmarchKernel>, f64)>,
    law: InnovationLaw,
    nrc: Vec<Vec<NrcTerm>>,
    initial_prices: Vec<f64>,
    seed_prices: Vec<Vec<f64>>,
    seed_returns: Vec<Vec<f64>>,
    seed_digest: Option<String>,
    nrc_window: NrcWindow,
    p_min: Vec<f64>,
}

impl Simulator {
    pub fn new(
        spec: &ProcessSpec,
        cma: &CmaParameters,
        grid: &TimeGrid,
        seed_history: Option<&MarketHistory>,
    ) -> Result<Self> {
        Self::with_options(spec, cma, grid, seed_history, NrcWindow::default(), DEFAULT_EPS_MIN)
    }

    pub fn with_options(
        spec: &ProcessSpec,
        cma: &CmaParameters,
        grid: &TimeGrid,
        seed_history: Option<&MarketHistory>,
        nrc_window: NrcWindow,
        eps_min: f64,
    ) -> Result<Self> {
        validate_cma(cma, eps_min)?;
        spec.validate()?;
        let n = cma.n_assets();
        let step = scale_to_step(cma, grid);
        let sigma_cma_step = covariance_from_cma(cma).scaled(grid.step_years);
        let sqrt_cma_step = matrix_sqrt(&sigma_cma_step, eps_min)?;

        let kernel = match &spec.covariance {
            CovarianceSpec::Constant => None,
            CovarianceSpec::AffineLmarch { w_inf, kernel } => {
                Some((Arc::new(LmarchKernel::from_spec(kernel, grid)?), *w_inf))
            }
        };
        let law = match &spec.innovations {
            InnovationSpec::Normal => InnovationLaw::Normal { dim: n },
            InnovationSpec::NonCentralStudent { nu, gamma_asym } => {
                let gamma = cma
                    .classes
                    .iter()
                    .map(|c| gamma_asym.get(c).copied().unwrap_or(0.0))
                    .collect();
                InnovationLaw::Student(Box::new(StudentParams::new(*nu, gamma, eps_min)?))
            }
        };
        let nrc = match &spec.drift.nrc {
            Some(nrc) => nrc_terms(nrc, &cma.classes, &step.mu, grid)?,
            None => vec![Vec::new(); n],
        };

        let (initial_prices, seed_prices, seed_returns, seed_digest) = match seed_history {
            None => (vec![1.0; n], Vec::new(), Vec::new(), None),
            Some(h) => {
                if (h.grid.step_years - grid.step_years).abs() > 1e-12 {
                    return Err(Error::config(
                        "seed_history",
                        "history step differs from the simulation step",
                    ));
                }
                let rows = h.rows_for(&cma.asset_ids)?;
                let returns = rows
                    .windows(2)
                    .map(|w| w[1].iter().zip(&w[0]).map(|(b, a)| b / a - 1.0).collect())
                    .collect();
                let last = rows.last().cloned().expect("history has rows");
                (last, rows, returns, Some(h.digest()))
            }
        };
        let p_min = match spec.p_min_floor {
            Some(floor) => vec![floor; n],
            None => initial_prices.iter().map(|p| p * spec.p_min_fraction).collect(),
        };

        Ok(Simulator {
            spec: spec.clone(),
            cma: cma.clone(),
            grid: *grid,
            eps_min,
            mu_step: step.mu,
            sigma_cma_step,
            sqrt_cma_step,
            kernel,
            law,
            nrc,
            initial_prices,
            seed_prices,
            seed_returns,
            seed_digest,
            nrc_window,
            p_min,
        })
    }

    pub fn n_assets(&self) -> usize {
        self.cma.n_assets()
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn cma(&self) -> &CmaParameters {
        &self.cma
    }

    pub fn spec(&self) -> &ProcessSpec {
        &self.spec
    }

    pub fn mu_step(&self) -> &[f64] {
        &self.mu_step
    }

    pub fn sigma_cma_step(&self) -> &SymmetricMatrix {
        &self.sigma_cma_step
    }

    pub fn initial_prices(&self) -> &[f64] {
        &self.initial_prices
    }

    pub fn innovation_law(&self) -> &InnovationLaw {
        &self.law
    }

    pub fn init_path(&self, master_seed: u64, path: usize) -> Result<PathState> {
        let n = self.n_assets();
        let du_offset = match &self.spec.drift.du {
            Some(du) => {
                let mut s = RngStream::for_path(master_seed, path as u64, LANE_DRIFT_UNCERTAINTY);
                Some(du_draw(
                    &mut s,
                    &self.cma.sigma_annual,
                    du.calibration_years,
                    self.grid.step_years,
                )?)
            }
            None => None,
        };
        let mut drift = DriftState::new(self.mu_step.clone(), du_offset, self.nrc.clone());
        match self.nrc_window {
            NrcWindow::SeededHistory if !self.seed_prices.is_empty() => {
                let skip = self.seed_prices.len().saturating_sub(drift_depth(&self.nrc) + 1);
                for row in &self.seed_prices[skip..] {
                    drift.push_prices(row);
                }
            }
            _ => drift.push_prices(&self.initial_prices),
        }

        let covariance = match &self.kernel {
            None => None,
            Some((kernel, w_inf)) => {
                let mut st = CovarianceState::new(
                    kernel.clone(),
                    *w_inf,
                    self.sigma_cma_step.clone(),
                    self.mu_step.clone(),
                )?;
                let skip = self.seed_returns.len().saturating_sub(kernel.l_max());
                for r in &self.seed_returns[skip..] {
                    st.push_return(r);
                }
                Some(st)
            }
        };

        Ok(PathState {
            path,
            step: 0,
            prices: self.initial_prices.clone(),
            absorbed: vec![false; n],
            drift,
            covariance,
            stream: RngStream::for_path(master_seed, path as u64, LANE_INNOVATIONS),
            p_min: self.p_min.clone(),
            mu_t: vec![0.0; n],
            eps: vec![0.0; n],
            z: vec![0.0; n],
            returns: vec![0.0; n],
            root: None,
        })
    }

    /// Advances one step with a fresh innovation draw.
    pub fn step(&self, state: &mut PathState) -> Result<()> {
        let PathState { stream, z, eps, .. } = state;
        self.law.fill(stream, z, eps);
        self.advance(state)
    }

    /// Advances one step with a caller-supplied innovation.
    pub fn step_with_innovation(&self, state: &mut PathState, innovation: &[f64]) -> Result<()> {
        if innovation.len() != self.n_assets() {
            return Err(Error::DimensionMismatch {
                what: "innovation",
                expected: self.n_assets(),
                found: innovation.len(),
            });
        }
        state.eps.copy_from_slice(innovation);
        self.advance(state)
    }

    fn advance(&self, state: &mut PathState) -> Result<()> {
        let fault = |state: &PathState, detail: String| Error::NumericalFault {
            path: state.path,
            step: state.step + 1,
            detail,
        };
        state.drift.total_drift_into(&mut state.mu_t);
        if let Some(cov) = &state.covariance {
            let (_, root) = cov
                .affine_covariance_with_root(self.eps_min)
                .map_err(|e| fault(state, e.to_string()))?;
            state.root = Some(root);
        }
        let root = state.root.as_ref().unwrap_or(&self.sqrt_cma_step);
        mat_vec_into(root, &state.eps, &mut state.returns);
        for (r, m) in state.returns.iter_mut().zip(&state.mu_t) {
            *r += m;
        }
        if let Some(a) = state.returns.iter().position(|r| !r.is_finite()) {
            return Err(fault(state, format!("non-finite return for asset {a}")));
        }
        for ((p, r), absorbed) in state.prices.iter_mut().zip(&mut state.returns).zip(&state.absorbed) {
            if *absorbed {
                // The return of an extinct index is undefined; record none.
                *r = 0.0;
            } else {
                *p *= 1.0 + *r;
            }
        }
        apply_absorbing(&mut state.prices, &state.p_min, &mut state.absorbed);
        if let Some(a) = state.prices.iter().position(|p| !p.is_finite()) {
            return Err(fault(state, format!("non-finite price for asset {a}")));
        }
        state.drift.push_prices(&state.prices);
        if let Some(cov) = &mut state.covariance {
            cov.push_return(&state.returns);
        }
        state.step += 1;
        Ok(())
    }

    /// Root of `Σ(t)` used by the last step.
    pub fn last_root<'a>(&'a self, state: &'a PathState) -> &'a DMatrix<f64> {
        state.root.as_ref().unwrap_or(&self.sqrt_cma_step)
    }

    pub fn run_path<O: PathObserver>(&self, master_seed: u64, path: usize, mut observer: O) -> Result<O::Output> {
        let mut state = self.init_path(master_seed, path)?;
        observer.start(&state.prices);
        for _ in 0..self.grid.n_steps {
            self.step(&mut state)?;
            observer.observe(&StepRecord {
                path,
                step: state.step,
                prices: &state.prices,
                returns: &state.returns,
                innovations: &state.eps,
                drift: &state.mu_t,
                root: self.last_root(&state),
                absorbed: &state.absorbed,
            });
        }
        Ok(observer.finish())
    }

    /// Runs `n_paths` paths with one observer each. Outputs are keyed by path
    /// index, so the result does not depend on scheduling or worker count.
    pub fn run_ensemble<O, F>(
        &self,
        n_paths: usize,
        master_seed: u64,
        options: EnsembleOptions,
        make_observer: F,
    ) -> Result<EnsembleRun<O::Output>>
    where
        O: PathObserver,
        F: Fn(usize) -> O + Sync,
    {
        let work = || -> Vec<Result<O::Output>> {
            (0..n_paths)
                .into_par_iter()
                .map(|p| self.run_path(master_seed, p, make_observer(p)))
                .collect()
        };
        let results = match options.threads {
            Some(t) => rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| Error::config("threads", e.to_string()))?
                .install(work),
            None => work(),
        };
        let mut outputs = Vec::with_capacity(n_paths);
        let mut faults = Vec::new();
        for (path, res) in results.into_iter().enumerate() {
            match res {
                Ok(o) => outputs.push(Some(o)),
                Err(e) if options.fault_mode == FaultMode::SkipAndReport && e.is_numerical() => {
                    faults.push(PathFault {
                        path,
                        message: e.to_string(),
                    });
                    outputs.push(None);
                }
                Err(e) => return Err(e),
            }
        }
        Ok(EnsembleRun { outputs, faults })
    }

    pub fn simulate_ensemble(
        &self,
        n_paths: usize,
        master_seed: u64,
        options: EnsembleOptions,
    ) -> Result<EnsembleResult> {
        let run = self.run_ensemble(n_paths, master_seed, options, |_| PriceRecorder::default())?;
        let n = self.n_assets();
        let per_path = (self.grid.n_steps + 1) * n;
        let mut prices = Vec::with_capacity(n_paths * per_path);
        for out in run.outputs {
            match out {
                Some(p) => prices.extend_from_slice(&p),
                None => prices.extend(std::iter::repeat_n(f64::NAN, per_path)),
            }
        }
        Ok(EnsembleResult {
            prices,
            n_paths,
            n_assets: n,
            spec: self.spec.clone(),
            cma: self.cma.clone(),
            grid: self.grid,
            master_seed,
            seed_history_digest: self.seed_digest.clone(),
            faults: run.faults,
        })
    }
}

fn drift_depth(nrc: &[Vec<NrcTerm>]) -> usize {
    nrc.iter().flatten().map(|t| t.lag_steps).max().unwrap_or(0)
}

/// Calendar label of step 0 when no seed history is given.
pub const DEFAULT_ORIGIN: (i32, u32, u32) = (2000, 1, 31);

/// Monthly grid of `years` years, starting at the last date of the seed
/// history when one is given.
pub fn simulation_grid(years: usize, seed_history: Option<&MarketHistory>) -> Result<TimeGrid> {
    let origin = match seed_history {
        Some(h) => *h.dates.last().expect("history has rows"),
        None => {
            let (y, m, d) = DEFAULT_ORIGIN;
            chrono::NaiveDate::from_ymd_opt(y, m, d).expect("valid date")
        }
    };
    TimeGrid::monthly_years(years, origin)
}

/// Builds a [`Simulator`] and runs a price-recording ensemble.
pub fn simulate_ensemble(
    spec: &ProcessSpec,
    cma: &CmaParameters,
    grid: &TimeGrid,
    n_paths: usize,
    master_seed: u64,
    seed_history: Option<&MarketHistory>,
    options: EnsembleOptions,
) -> Result<EnsembleResult> {
    Simulator::new(spec, cma, grid, seed_history)?.simulate_ensemble(n_paths, master_seed, options)
}
