//! Capital market assumptions, process configuration, the time grid and the
//! dense linear algebra shared by every other module.

pub mod cma;
pub mod grid;
pub mod linalg;
pub mod spec;

pub use cma::{
    covariance_from_cma, scale_to_step, split_covariance, validate_cma, AssetClass,
    CmaParameters, StepParameters,
};
pub use grid::{TimeGrid, MONTH_IN_YEARS};
pub use linalg::{matrix_inv_sqrt, matrix_sqrt, SymmetricMatrix, DEFAULT_EPS_MIN};
pub use spec::{
    CovarianceSpec, DriftSpec, DuSpec, InnovationSpec, KernelSpec, NrcHorizon, NrcSpec,
    ProcessSpec,
};
