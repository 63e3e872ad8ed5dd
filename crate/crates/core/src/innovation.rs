//! Seeded random streams and the innovation laws: independent normals and
//! the multivariate non-central Student generator with zero mean and unit
//! covariance.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::error::{Error, Result};
use crate::market::linalg::{mat_vec_into, matrix_inv_sqrt, SymmetricMatrix};

/// Identifies one independent stream under a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamId {
    pub path: u64,
    /// Separates draw families within one path (innovations, drift offsets),
    /// so enabling one component never shifts another's draws.
    pub lane: u64,
}

pub const LANE_INNOVATIONS: u64 = 0;
pub const LANE_DRIFT_UNCERTAINTY: u64 = 1;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Counter-based stream: the key is derived from `(master_seed, lane)` and
/// the path index selects the ChaCha stream, so every path can be generated
/// in any order.
#[derive(Debug, Clone)]
pub struct RngStream {
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(master_seed: u64, id: StreamId) -> Self {
        let mut key = [0u8; 32];
        let mut state = master_seed ^ splitmix64(id.lane.wrapping_add(0x5eed));
        for chunk in key.chunks_exact_mut(8) {
            state = splitmix64(state);
            chunk.copy_from_slice(&state.to_le_bytes());
        }
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(id.path);
        RngStream { rng }
    }

    pub fn for_path(master_seed: u64, path: u64, lane: u64) -> Self {
        Self::new(master_seed, StreamId { path, lane })
    }

    #[inline]
    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    #[inline]
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    pub fn fill_normal(&mut self, out: &mut [f64]) {
        for v in out {
            *v = self.standard_normal();
        }
    }

    #[inline]
    pub fn sample<T, D: Distribution<T>>(&mut self, dist: &D) -> T {
        dist.sample(&mut self.rng)
    }
}

/// Moments of the mixing variable `w` with `ν/w ∼ χ²(ν)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WMoments {
    /// `E[√w] ≅ (1 − 3/(4ν − 1))^{-1}`.
    pub e_sqrt_w: f64,
    /// `E[w] = ν/(ν − 2)`.
    pub e_w: f64,
}

pub fn moments_of_w(nu: f64) -> Result<WMoments> {
    if !(nu > 2.0) {
        return Err(Error::InfiniteVariance { nu });
    }
    if nu.is_infinite() {
        return Ok(WMoments {
            e_sqrt_w: 1.0,
            e_w: 1.0,
        });
    }
    Ok(WMoments {
        e_sqrt_w: 1.0 / (1.0 - 3.0 / (4.0 * nu - 1.0)),
        e_w: nu / (nu - 2.0),
    })
}

/// `θ(ν) = 1 − E[√w]² / E[w]`, the relative variance of `√w`.
pub fn theta_of_nu(nu: f64) -> Result<f64> {
    let m = moments_of_w(nu)?;
    Ok(1.0 - m.e_sqrt_w * m.e_sqrt_w / m.e_w)
}

/// Draws `w = ν/Q` with `Q ∼ χ²(ν)`, the chi-square taken as `Gamma(ν/2, 2)`.
#[derive(Debug, Clone)]
pub struct MixingSampler {
    nu: f64,
    chi2: Gamma<f64>,
}

impl MixingSampler {
    pub fn new(nu: f64) -> Result<Self> {
        if !(nu > 2.0 && nu.is_finite()) {
            return Err(Error::InfiniteVariance { nu });
        }
        let chi2 = Gamma::new(nu / 2.0, 2.0).map_err(|e| Error::config("nu", e.to_string()))?;
        Ok(MixingSampler { nu, chi2 })
    }

    #[inline]
    pub fn sample(&self, stream: &mut RngStream) -> f64 {
        self.nu / stream.sample(&self.chi2)
    }
}

pub fn sample_mixing_w(stream: &mut RngStream, nu: f64) -> Result<f64> {
    Ok(MixingSampler::new(nu)?.sample(stream))
}

/// Precomputed state for the non-central Student generator.
#[derive(Debug, Clone)]
pub struct StudentParams {
    pub nu: f64,
    pub gamma_asym: Vec<f64>,
    pub theta: f64,
    pub moments: WMoments,
    /// `χ^{-1/2}` with `χ = I + θ γγᵀ`.
    pub chi_inv_sqrt: DMatrix<f64>,
    chi_inv_sqrt_gamma: Vec<f64>,
    mixing: MixingSampler,
}

impl StudentParams {
    pub fn new(nu: f64, gamma_asym: Vec<f64>, eps_min: f64) -> Result<Self> {
        let moments = moments_of_w(nu)?;
        let theta = theta_of_nu(nu)?;
        let n = gamma_asym.len();
        let chi = SymmetricMatrix::from_fn(n, |i, j| {
            let id = if i == j { 1.0 } else { 0.0 };
            id + theta * gamma_asym[i] * gamma_asym[j]
        });
        let chi_inv_sqrt = matrix_inv_sqrt(&chi, eps_min)?;
        let mut chi_inv_sqrt_gamma = vec![0.0; n];
        mat_vec_into(&chi_inv_sqrt, &gamma_asym, &mut chi_inv_sqrt_gamma);
        Ok(StudentParams {
            nu,
            gamma_asym,
            theta,
            moments,
            chi_inv_sqrt,
            chi_inv_sqrt_gamma,
            mixing: MixingSampler::new(nu)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.gamma_asym.len()
    }

    /// `ε = χ^{-1/2}{ (√w − E[√w])/√E[w] · γ + √w/√E[w] · Z }` for a given
    /// mixing draw `w` and normal vector `z`.
    pub fn transform(&self, w: f64, z: &[f64], out: &mut [f64]) {
        let sqrt_w = w.sqrt();
        let norm = self.moments.e_w.sqrt();
        let a = (sqrt_w - self.moments.e_sqrt_w) / norm;
        let b = sqrt_w / norm;
        mat_vec_into(&self.chi_inv_sqrt, z, out);
        for (o, cg) in out.iter_mut().zip(&self.chi_inv_sqrt_gamma) {
            *o = a * cg + b * *o;
        }
    }
}

pub fn build_student_params(nu: f64, gamma_asym: Vec<f64>, eps_min: f64) -> Result<StudentParams> {
    StudentParams::new(nu, gamma_asym, eps_min)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InnovationVector(pub Vec<f64>);

/// Distribution of the standardized shock `ε`.
#[derive(Debug, Clone)]
pub enum InnovationLaw {
    Normal { dim: usize },
    Student(Box<StudentParams>),
}

impl InnovationLaw {
    pub fn dim(&self) -> usize {
        match self {
            InnovationLaw::Normal { dim } => *dim,
            InnovationLaw::Student(p) => p.dim(),
        }
    }

    /// Fills `out` with one innovation; `scratch` holds the normal draws and
    /// must have the same length.
    #[inline]
    pub fn fill(&self, stream: &mut RngStream, scratch: &mut [f64], out: &mut [f64]) {
        match self {
            InnovationLaw::Normal { .. } => stream.fill_normal(out),
            InnovationLaw::Student(p) => {
                let w = p.mixing.sample(stream);
                stream.fill_normal(scratch);
                p.transform(w, scratch, out);
            }
        }
    }
}

pub fn sample_innovation(stream: &mut RngStream, law: &InnovationLaw) -> InnovationVector {
    let n = law.dim();
    let mut scratch = vec![0.0; n];
    let mut out = vec![0.0; n];
    law.fill(stream, &mut scratch, &mut out);
    InnovationVector(out)
}

/// `r = μ + A·ε`.
pub fn sample_returns(mu_step: &[f64], sqrt_sigma: &DMatrix<f64>, eps: &InnovationVector) -> Result<Vec<f64>> {
    let n = mu_step.len();
    for (what, found) in [
        ("sqrt_sigma rows", sqrt_sigma.nrows()),
        ("sqrt_sigma cols", sqrt_sigma.ncols()),
        ("innovation", eps.0.len()),
    ] {
        if found != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                found,
            });
        }
    }
    let mut r = vec![0.0; n];
    mat_vec_into(sqrt_sigma, &eps.0, &mut r);
    for (ri, m) in r.iter_mut().zip(mu_step) {
        *ri += m;
    }
    Ok(r)
}
