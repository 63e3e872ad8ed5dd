//! Small dense symmetric-matrix utilities: packed storage, definiteness
//! checks and spectral square roots.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Default definiteness floor, relative to the largest eigenvalue.
pub const DEFAULT_EPS_MIN: f64 = 1e-8;

/// Dense symmetric matrix holding only the lower triangle, so symmetry is
/// exact by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricMatrix {
    dim: usize,
    packed: Vec<f64>,
}

#[inline]
fn packed_index(i: usize, j: usize) -> usize {
    let (r, c) = if i >= j { (i, j) } else { (j, i) };
    r * (r + 1) / 2 + c
}

impl SymmetricMatrix {
    pub fn zeros(dim: usize) -> Self {
        SymmetricMatrix {
            dim,
            packed: vec![0.0; dim * (dim + 1) / 2],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { 0.0 })
    }

    /// Builds from `f(i, j)` evaluated on the lower triangle only.
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut packed = Vec::with_capacity(dim * (dim + 1) / 2);
        for i in 0..dim {
            for j in 0..=i {
                packed.push(f(i, j));
            }
        }
        SymmetricMatrix { dim, packed }
    }

    /// Builds from full row-major rows, rejecting ragged or asymmetric input.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    what: "matrix row",
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        for i in 0..dim {
            for j in 0..i {
                let (lower, upper) = (rows[i][j], rows[j][i]);
                let scale = lower.abs().max(upper.abs()).max(1.0);
                if (lower - upper).abs() > 1e-12 * scale || !lower.is_finite() {
                    return Err(Error::NotSymmetric {
                        row: j,
                        col: i,
                        upper,
                        lower,
                    });
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    pub fn from_dmatrix(m: &DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        Self::from_rows(&rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.packed[packed_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.packed[packed_index(i, j)] = value;
    }

    /// Lower triangle in row order: (0,0), (1,0), (1,1), (2,0), ...
    pub fn packed(&self) -> &[f64] {
        &self.packed
    }

    pub fn packed_mut(&mut self) -> &mut [f64] {
        &mut self.packed
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j)).collect())
            .collect()
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.dim, self.dim, |i, j| self.get(i, j))
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut sum = 0.0;
        for i in 0..self.dim {
            for j in 0..=i {
                let v = self.get(i, j);
                sum += if i == j { v * v } else { 2.0 * v * v };
            }
        }
        sum.sqrt()
    }

    /// `self ← self + weight · x xᵀ`.
    #[inline]
    pub fn add_outer(&mut self, weight: f64, x: &[f64]) {
        debug_assert_eq!(x.len(), self.dim);
        let mut k = 0;
        for i in 0..self.dim {
            let wi = weight * x[i];
            for xj in &x[..=i] {
                self.packed[k] += wi * xj;
                k += 1;
            }
        }
    }

    /// `self ← self + weight · other`.
    pub fn add_scaled(&mut self, weight: f64, other: &SymmetricMatrix) {
        debug_assert_eq!(self.dim, other.dim);
        for (a, b) in self.packed.iter_mut().zip(&other.packed) {
            *a += weight * b;
        }
    }

    pub fn scaled(&self, factor: f64) -> SymmetricMatrix {
        SymmetricMatrix {
            dim: self.dim,
            packed: self.packed.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn eigen(&self) -> SymmetricEigen<f64, nalgebra::Dyn> {
        SymmetricEigen::new(self.to_dmatrix())
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigen().eigenvalues.min()
    }

    /// Eigen-decomposition, rejecting matrices whose smallest eigenvalue is
    /// below `eps_min` times the largest.
    pub fn definite_eigen(&self, eps_min: f64) -> Result<SymmetricEigen<f64, nalgebra::Dyn>> {
        let eig = self.eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let threshold = eps_min * max.max(0.0);
        if !(max > 0.0) || !(min >= threshold) {
            return Err(Error::NotPositiveDefinite {
                eigenvalue: min,
                threshold,
            });
        }
        Ok(eig)
    }
}

impl Serialize for SymmetricMatrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymmetricMatrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        SymmetricMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

fn spectral_map(
    eig: &SymmetricEigen<f64, nalgebra::Dyn>,
    f: impl Fn(f64) -> f64,
) -> DMatrix<f64> {
    let v = &eig.eigenvectors;
    let d = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|&l| f(l)));
    let scaled = DMatrix::from_fn(v.nrows(), v.ncols(), |i, j| v[(i, j)] * d[j]);
    let mut out = &scaled * v.transpose();
    // Round-off leaves the product asymmetric in the last bits.
    for i in 0..out.nrows() {
        for j in 0..i {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    out
}

/// Symmetric square root `A` with `A·Aᵀ = A·A = m`.
pub fn matrix_sqrt(m: &SymmetricMatrix, eps_min: f64) -> Result<DMatrix<f64>> {
    let eig = m.definite_eigen(eps_min)?;
    Ok(spectral_map(&eig, f64::sqrt))
}

/// Symmetric inverse square root `m^{-1/2}`.
pub fn matrix_inv_sqrt(m: &SymmetricMatrix, eps_min: f64) -> Result<DMatrix<f64>> {
    let eig = m.definite_eigen(eps_min)?;
    Ok(spectral_map(&eig, |l| 1.0 / l.sqrt()))
}

/// `out ← a · x` for a square dense `a`.
#[inline]
pub fn mat_vec_into(a: &DMatrix<f64>, x: &[f64], out: &mut [f64]) {
    let n = a.nrows();
    debug_assert_eq!(a.ncols(), x.len());
    for (i, o) in out.iter_mut().enumerate().take(n) {
        let mut acc = 0.0;
        for (j, xj) in x.iter().enumerate() {
            acc += a[(i, j)] * xj;
        }
        *o = acc;
    }
}
