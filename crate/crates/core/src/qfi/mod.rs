//! Temperature QFI of zero-mean Gaussian states.
//!
//! All three methods evaluate
//!
//! ```text
//! F = 1/2 <dsigma| D(sigma)^{-1} |dsigma>,   D(sigma): V -> sigma V sigma + KAPPA Omega V Omega^T
//! ```
//!
//! on column-stacked matrices. With the vacuum normalized to `I/2` the
//! symplectic term carries weight `KAPPA = -1/4`; this is the value for
//! which a single thermal mode gives `(dn/dT)^2 / (n (n + 1))`.

mod dense;
mod fast;
mod williamson;

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::collision::StateWithGradient;
use crate::error::{invalid_arg, Error, Result};
use crate::gaussian::{omega_left, omega_right};

pub use dense::{d_operator_matrix, qfi_dense_inverse, qfi_dense_solve};
pub use fast::{qfi_fast, qfi_fast_with_tolerance, transform_gradient, PreparedFastQfi};
pub use williamson::{williamson, williamson_with_tolerance, WilliamsonDecomposition, DEFAULT_EPS_WILL};

/// Weight of `Omega V Omega^T` in `D`.
pub const KAPPA: f64 = -0.25;

/// Relative eigenvalue cutoff below which a direction of `D` is treated as null.
pub const PINV_CUTOFF: f64 = 1e-12;

/// Column-stacked `vec(C)` of a square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorizedMatrix {
    dim: usize,
    entries: DVector<f64>,
}

impl VectorizedMatrix {
    pub fn from_matrix(m: &DMatrix<f64>) -> Self {
        Self {
            dim: m.nrows(),
            entries: DVector::from_column_slice(m.as_slice()),
        }
    }

    pub fn from_vector(dim: usize, entries: DVector<f64>) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(invalid_arg(format!(
                "vector of length {} is not vec of a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        Ok(Self { dim, entries })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.entries
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_column_slice(self.dim, self.dim, self.entries.as_slice())
    }
}

/// The superoperator `V -> base V base + kappa Omega V Omega^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct DOperator {
    pub base: DMatrix<f64>,
    pub kappa: f64,
}

impl DOperator {
    pub fn new(base: DMatrix<f64>) -> Self {
        Self { base, kappa: KAPPA }
    }

    pub fn apply(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        // Omega V Omega^T = -Omega V Omega
        &self.base * v * &self.base - omega_right(&omega_left(v)) * self.kappa
    }

    /// Dense `(2N)^2 x (2N)^2` matrix acting on column-stacked vectors.
    pub fn to_dense(&self) -> DMatrix<f64> {
        dense::build(&self.base, self.kappa)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum QfiMethod {
    DenseInverse,
    DenseSolve,
    WilliamsonFast,
}

impl QfiMethod {
    pub const ALL: [QfiMethod; 3] = [
        QfiMethod::DenseInverse,
        QfiMethod::DenseSolve,
        QfiMethod::WilliamsonFast,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            QfiMethod::DenseInverse => "dense_inverse",
            QfiMethod::DenseSolve => "dense_solve",
            QfiMethod::WilliamsonFast => "williamson_fast",
        }
    }

    pub fn is_dense(&self) -> bool {
        !matches!(self, QfiMethod::WilliamsonFast)
    }
}

impl fmt::Display for QfiMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for QfiMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        QfiMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid_arg(format!("unknown QFI method {s:?}")))
    }
}

/// A QFI value with solver diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QfiReport {
    pub value: f64,
    /// Directions (eigenvectors or 2x2 blocks) dropped by the pseudo-inverse.
    pub singular_directions: usize,
    /// Dropped directions on which the gradient had non-negligible weight.
    pub inconsistent_directions: usize,
}

impl QfiReport {
    pub(crate) fn zero() -> Self {
        Self {
            value: 0.0,
            singular_directions: 0,
            inconsistent_directions: 0,
        }
    }
}

pub fn qfi(state: &StateWithGradient, method: QfiMethod) -> Result<QfiReport> {
    qfi_with_tolerance(state, method, DEFAULT_EPS_WILL)
}

/// [`qfi`] with an explicit Williamson slack; the dense methods ignore it.
pub fn qfi_with_tolerance(state: &StateWithGradient, method: QfiMethod, eps_will: f64) -> Result<QfiReport> {
    match method {
        QfiMethod::DenseInverse => qfi_dense_inverse(state),
        QfiMethod::DenseSolve => qfi_dense_solve(state),
        QfiMethod::WilliamsonFast => qfi_fast_with_tolerance(state, eps_will),
    }
}
