//! Reference QFI paths on the full `(2N)^2`-dimensional operator. Cost
//! `O(N^6)`; intended for small states and as cross-checks.

use nalgebra::{DMatrix, DVector};

use super::{QfiReport, VectorizedMatrix, KAPPA, PINV_CUTOFF};
use crate::collision::StateWithGradient;
use crate::error::{Error, Result};

pub(super) fn build(base: &DMatrix<f64>, kappa: f64) -> DMatrix<f64> {
    let n = base.nrows();
    // vec(B V B^T) = kron(B, B) vec(V) for column stacking.
    let mut d = base.kronecker(base);
    // Omega_{i,p(i)} = +1 for x quadratures and -1 for p quadratures.
    let partner = |i: usize| i ^ 1;
    let sign = |i: usize| if i % 2 == 0 { 1.0 } else { -1.0 };
    for j in 0..n {
        for i in 0..n {
            let row = i + j * n;
            let col = partner(i) + partner(j) * n;
            d[(row, col)] += kappa * sign(i) * sign(j);
        }
    }
    d
}

/// The dense operator `D(sigma)` under the crate's vectorization convention.
pub fn d_operator_matrix(sigma: &DMatrix<f64>) -> DMatrix<f64> {
    build(sigma, KAPPA)
}

fn gradient_vector(state: &StateWithGradient) -> Option<DVector<f64>> {
    if state.grad.iter().all(|&v| v == 0.0) {
        return None;
    }
    Some(VectorizedMatrix::from_matrix(&state.grad).as_vector().clone())
}

/// `1/2 <b, D^+ b>` via the spectral decomposition of `D`.
fn spectral_quadratic_form(d: DMatrix<f64>, b: &DVector<f64>) -> QfiReport {
    let eig = d.symmetric_eigen();
    let lmax = eig.eigenvalues.amax();
    let cutoff = PINV_CUTOFF * lmax;
    let bnorm2 = b.norm_squared();
    let mut report = QfiReport::zero();
    let mut acc = 0.0;
    for (k, &lambda) in eig.eigenvalues.iter().enumerate() {
        let proj = eig.eigenvectors.column(k).dot(b);
        if lambda > cutoff {
            acc += proj * proj / lambda;
        } else {
            report.singular_directions += 1;
            if proj * proj > 1e-20 * bnorm2 {
                report.inconsistent_directions += 1;
            }
        }
    }
    report.value = 0.5 * acc;
    report
}

/// `F = 1/2 <dsigma| D(sigma)^{-1} |dsigma>` with `D^{-1}` formed from the
/// eigendecomposition of `D` (null directions dropped).
pub fn qfi_dense_inverse(state: &StateWithGradient) -> Result<QfiReport> {
    let Some(b) = gradient_vector(state) else {
        return Ok(QfiReport::zero());
    };
    let report = spectral_quadratic_form(d_operator_matrix(state.cm.as_matrix()), &b);
    finite(report)
}

/// `F = 1/2 <dsigma|L>` with `D(sigma) |L> = |dsigma>` solved by Cholesky;
/// falls back to the pseudo-inverse when `D` is numerically singular.
pub fn qfi_dense_solve(state: &StateWithGradient) -> Result<QfiReport> {
    let Some(b) = gradient_vector(state) else {
        return Ok(QfiReport::zero());
    };
    let d = d_operator_matrix(state.cm.as_matrix());
    if let Some(chol) = d.clone().cholesky() {
        let l = chol.solve(&b);
        let value = 0.5 * b.dot(&l);
        if value.is_finite() && value >= 0.0 {
            return Ok(QfiReport {
                value,
                ..QfiReport::zero()
            });
        }
    }
    finite(spectral_quadratic_form(d, &b))
}

fn finite(report: QfiReport) -> Result<QfiReport> {
    if report.value.is_finite() {
        Ok(report)
    } else {
        Err(Error::Numerical("QFI evaluated to a non-finite value".into()))
    }
}
