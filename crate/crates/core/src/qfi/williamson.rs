//! Williamson normal form `sigma = S W S^T`.
//!
//! With `sigma = L L^T` (Cholesky), `K = L^T Omega L` is antisymmetric and
//! its real Schur form `O^T K O = (+) [[0, nu_k], [-nu_k, 0]]` gives
//! `S = L O W^{-1/2}`. The pairs of `O` are read off the eigenvectors of
//! `K^T K = -K^2`, whose eigenvalues `nu_k^2` come in degenerate pairs; when
//! several pairs coincide the cluster is split with a small Hermitian
//! eigenproblem for `iK` restricted to it.

use nalgebra::{Complex, DMatrix, DVector};

use crate::error::{Error, Result};
use crate::gaussian::{max_abs, omega_left, symmetrize, CovarianceMatrix, SymplecticMatrix};

/// Eigenvalues of `K^T K` closer than this (relative to the largest) share an
/// invariant subspace.
const CLUSTER_TOL: f64 = 1e-6;

/// Default slack on `nu_k >= 1/2`, relative to `max(1, |sigma|)`.
pub const DEFAULT_EPS_WILL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct WilliamsonDecomposition {
    s: SymplecticMatrix,
    s_inv: DMatrix<f64>,
    nu: Vec<f64>,
}

impl WilliamsonDecomposition {
    pub fn symplectic(&self) -> &SymplecticMatrix {
        &self.s
    }

    /// `S^{-1}`, computed by triangular solves rather than from `S`.
    pub fn inverse_symplectic(&self) -> &DMatrix<f64> {
        &self.s_inv
    }

    /// Symplectic eigenvalues, descending.
    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    /// `diag(nu_1, nu_1, ..., nu_N, nu_N)`.
    pub fn w(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_iterator(
            2 * self.nu.len(),
            self.nu.iter().flat_map(|&v| [v, v]),
        ))
    }

    /// `max |S W S^T - sigma|`.
    pub fn reconstruction_residual(&self, cm: &CovarianceMatrix) -> f64 {
        let s = self.s.as_matrix();
        max_abs(&(s * self.w() * s.transpose() - cm.as_matrix()))
    }
}

pub fn williamson(cm: &CovarianceMatrix) -> Result<WilliamsonDecomposition> {
    williamson_with_tolerance(cm, DEFAULT_EPS_WILL)
}

/// [`williamson`] with an explicit slack on `nu_k >= 1/2`.
pub fn williamson_with_tolerance(cm: &CovarianceMatrix, eps_will: f64) -> Result<WilliamsonDecomposition> {
    let n = cm.dim();
    let modes = cm.modes();
    let chol = cm
        .as_matrix()
        .clone()
        .cholesky()
        .ok_or_else(|| Error::InvalidState("covariance matrix is not positive definite".into()))?;
    let l = chol.l();

    let mut k = l.transpose() * omega_left(&l);
    antisymmetrize(&mut k);
    let mut ktk = k.transpose() * &k;
    symmetrize(&mut ktk);
    let eig = ktk.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let lmax = eig.eigenvalues[order[0]].max(f64::MIN_POSITIVE);

    // (nu, o1, o2) with K o1 = -nu o2 and K o2 = nu o1.
    let mut pairs: Vec<(f64, DVector<f64>, DVector<f64>)> = Vec::with_capacity(modes);
    for cluster in clusters(&order, &eig.eigenvalues, lmax) {
        let basis = DMatrix::from_fn(n, cluster.len(), |i, j| eig.eigenvectors[(i, cluster[j])]);
        split_cluster(&k, &basis, &mut pairs)?;
    }
    if pairs.len() != modes {
        return Err(Error::Numerical(format!(
            "Williamson pairing produced {} pairs for {modes} modes",
            pairs.len()
        )));
    }
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    let scale = max_abs(cm.as_matrix()).max(1.0);
    let nu_min = pairs.last().map(|p| p.0).unwrap_or(0.5);
    if nu_min < 0.5 - eps_will * scale {
        return Err(Error::InvalidState(format!(
            "symplectic eigenvalue {nu_min} below 1/2 violates the uncertainty relation"
        )));
    }

    // O W^{-1/2} and O W^{1/2}
    let mut o_wm = DMatrix::zeros(n, n);
    let mut o_wp = DMatrix::zeros(n, n);
    let mut nu = Vec::with_capacity(modes);
    for (j, (v, o1, o2)) in pairs.iter().enumerate() {
        let (rs, is) = (v.sqrt(), 1.0 / v.sqrt());
        o_wm.column_mut(2 * j).copy_from(&(o1 * is));
        o_wm.column_mut(2 * j + 1).copy_from(&(o2 * is));
        o_wp.column_mut(2 * j).copy_from(&(o1 * rs));
        o_wp.column_mut(2 * j + 1).copy_from(&(o2 * rs));
        nu.push(*v);
    }
    let s = &l * o_wm;
    // S^{-1} = W^{1/2} O^T L^{-1}  =>  S^{-T} = L^{-T} O W^{1/2}
    let s_inv_t = l
        .transpose()
        .solve_upper_triangular(&o_wp)
        .ok_or_else(|| Error::Numerical("singular Cholesky factor".into()))?;
    Ok(WilliamsonDecomposition {
        s: SymplecticMatrix::from_matrix_unchecked(s),
        s_inv: s_inv_t.transpose(),
        nu,
    })
}

fn antisymmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        a[(i, i)] = 0.0;
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] - a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = -v;
        }
    }
}

/// Groups the sorted eigenvalue indices into runs of near-equal values; each
/// run has even length.
fn clusters(order: &[usize], values: &DVector<f64>, lmax: f64) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    let mut current = vec![order[0]];
    for w in order.windows(2) {
        let gap = values[w[0]] - values[w[1]];
        if gap > CLUSTER_TOL * lmax && current.len() % 2 == 0 {
            out.push(std::mem::take(&mut current));
        }
        current.push(w[1]);
    }
    out.push(current);
    out
}

fn split_cluster(
    k: &DMatrix<f64>,
    basis: &DMatrix<f64>,
    pairs: &mut Vec<(f64, DVector<f64>, DVector<f64>)>,
) -> Result<()> {
    let kb = k * basis;
    if basis.ncols() == 2 {
        let (v1, v2) = (basis.column(0).into_owned(), basis.column(1).into_owned());
        let c = v1.dot(&kb.column(1));
        if c >= 0.0 {
            pairs.push((c, v1, v2));
        } else {
            pairs.push((-c, v2, v1));
        }
        return Ok(());
    }
    let mut c = basis.transpose() * kb;
    antisymmetrize(&mut c);
    let m = c.nrows();
    // i C is Hermitian; its eigenvalues come in +-nu pairs.
    let h = DMatrix::from_fn(m, m, |i, j| Complex::new(0.0, c[(i, j)]));
    let eig = h.symmetric_eigen();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    for &j in idx.iter().take(m / 2) {
        let nu = eig.eigenvalues[j];
        if !(nu > 0.0) {
            return Err(Error::InvalidState(
                "covariance matrix has a vanishing symplectic eigenvalue".into(),
            ));
        }
        let w = eig.eigenvectors.column(j);
        // i C w = nu w with w = (a + i b) / sqrt 2  =>  C a = nu b, C b = -nu a.
        let a = DVector::from_iterator(m, w.iter().map(|z| z.re * std::f64::consts::SQRT_2));
        let b = DVector::from_iterator(m, w.iter().map(|z| z.im * std::f64::consts::SQRT_2));
        pairs.push((nu, basis * a, -(basis * b)));
    }
    Ok(())
}
