//! QFI in the Williamson frame.
//!
//! With `sigma = S W S^T` and `M = S^{-1}`, writing `L = M^T X M` turns
//! `D(sigma) L = dsigma` into `W X W + KAPPA Omega X Omega^T = U` with
//! `U = M dsigma M^T`. That system splits into independent 2x2 problems, one
//! per pair of entries `(U[a,b], U[a+1, b^1])`, with eigenvalues
//! `nu_a nu_b -+ 1/4`, and `F = 1/2 tr(U X)`.

use nalgebra::DMatrix;

use super::williamson::{williamson_with_tolerance, WilliamsonDecomposition, DEFAULT_EPS_WILL};
use super::{QfiReport, VectorizedMatrix, PINV_CUTOFF};
use crate::collision::StateWithGradient;
use crate::error::{Error, Result};

/// `vec(M dsigma M^T)` with `M = S^{-1}` from the decomposition.
pub fn transform_gradient(decomp: &WilliamsonDecomposition, grad: &DMatrix<f64>) -> VectorizedMatrix {
    let m = decomp.inverse_symplectic();
    let mut u = m * grad * m.transpose();
    crate::gaussian::symmetrize(&mut u);
    VectorizedMatrix::from_matrix(&u)
}

/// A state whose Williamson decomposition and transformed gradient are
/// already computed; [`PreparedFastQfi::solve`] is the `Theta(N^2)` part.
#[derive(Debug, Clone)]
pub struct PreparedFastQfi {
    decomp: WilliamsonDecomposition,
    u: DMatrix<f64>,
}

impl PreparedFastQfi {
    pub fn prepare(state: &StateWithGradient) -> Result<Self> {
        Self::prepare_with_tolerance(state, DEFAULT_EPS_WILL)
    }

    pub fn prepare_with_tolerance(state: &StateWithGradient, eps_will: f64) -> Result<Self> {
        let decomp = williamson_with_tolerance(&state.cm, eps_will)?;
        let u = transform_gradient(&decomp, &state.grad).to_matrix();
        Ok(Self { decomp, u })
    }

    pub fn decomposition(&self) -> &WilliamsonDecomposition {
        &self.decomp
    }

    pub fn transformed_gradient(&self) -> &DMatrix<f64> {
        &self.u
    }

    pub fn solve(&self) -> Result<QfiReport> {
        let nu = self.decomp.nu();
        let delta: Vec<f64> = nu.iter().map(|v| v - 0.5).collect();
        let u = &self.u;
        let n = u.nrows();
        let scale2 = u.norm_squared().max(f64::MIN_POSITIVE);
        let mut report = QfiReport::zero();
        let mut acc = 0.0;
        for b in 0..n {
            let (mb, c) = (b / 2, if b % 2 == 0 { 1.0 } else { -1.0 });
            let col = u.column(b);
            let col_p = u.column(b ^ 1);
            for ma in 0..nu.len() {
                let a = 2 * ma;
                let (u1, u2) = (col[a], col_p[a + 1]);
                // nu_a nu_b - 1/4 without cancellation
                let lm = delta[ma] * nu[mb] + 0.5 * delta[mb];
                let lp = nu[ma] * nu[mb] + 0.25;
                let (s, d) = (u1 + c * u2, u1 - c * u2);
                acc += d * d / (2.0 * lp);
                if lm > PINV_CUTOFF * lp {
                    acc += s * s / (2.0 * lm);
                } else {
                    report.singular_directions += 1;
                    if s * s > 1e-20 * scale2 {
                        report.inconsistent_directions += 1;
                    }
                }
            }
        }
        report.value = 0.5 * acc;
        if report.value.is_finite() {
            Ok(report)
        } else {
            Err(Error::Numerical("QFI evaluated to a non-finite value".into()))
        }
    }
}

pub fn qfi_fast(state: &StateWithGradient) -> Result<QfiReport> {
    qfi_fast_with_tolerance(state, DEFAULT_EPS_WILL)
}

pub fn qfi_fast_with_tolerance(state: &StateWithGradient, eps_will: f64) -> Result<QfiReport> {
    if state.grad.iter().all(|&v| v == 0.0) {
        // still reject unphysical states
        williamson_with_tolerance(&state.cm, eps_will)?;
        return Ok(QfiReport::zero());
    }
    PreparedFastQfi::prepare_with_tolerance(state, eps_will)?.solve()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gaussian::{random_state, random_symmetric, CovarianceMatrix};
    use crate::qfi::{qfi_dense_inverse, qfi_dense_solve};
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn matches_dense_on_random_mixed_states() {
        let mut rng = StdRng::seed_from_u64(77);
        for modes in 1..=4 {
            let cm = random_state(&mut rng, modes, (0.05, 1.5), 0.5);
            let grad = random_symmetric(&mut rng, 2 * modes, 1.0);
            let st = StateWithGradient::new(cm, grad).unwrap();
            let fast = qfi_fast(&st).unwrap().value;
            let inv = qfi_dense_inverse(&st).unwrap().value;
            let sol = qfi_dense_solve(&st).unwrap().value;
            assert!((fast - inv).abs() <= 1e-8 * inv, "{modes}: {fast} vs {inv}");
            assert!((fast - sol).abs() <= 1e-8 * sol, "{modes}: {fast} vs {sol}");
        }
    }

    #[test]
    fn pure_state_null_directions() {
        // A pure state has singular blocks; a gradient tangent to pure states
        // stays consistent.
        let r: f64 = 0.4;
        let sq = CovarianceMatrix::squeezed_vacuum(r, 0.0).unwrap();
        let grad = DMatrix::from_row_slice(2, 2, &[-(-2.0 * r).exp(), 0.0, 0.0, (2.0 * r).exp()]);
        let rep = qfi_fast(&StateWithGradient::new(sq, grad).unwrap()).unwrap();
        assert!(rep.singular_directions > 0);
        assert_eq!(rep.inconsistent_directions, 0);
        // dr-QFI of a squeezed vacuum is 2
        assert!((rep.value - 2.0).abs() < 1e-12, "{}", rep.value);
    }

    #[test]
    fn unphysical_state_is_rejected() {
        let cm = CovarianceMatrix::new(DMatrix::identity(2, 2) * 0.2).unwrap();
        let st = StateWithGradient::new(cm, DMatrix::identity(2, 2)).unwrap();
        assert!(matches!(qfi_fast(&st), Err(Error::InvalidState(_))));
    }
}
