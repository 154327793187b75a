//! Truncated Fock-space density matrices and the SLD quantum Fisher
//! information, used as a brute-force reference for the Gaussian formulas.

use nalgebra::DMatrix;

/// Annihilation operator on `0..dim`.
pub fn annihilation(dim: usize) -> DMatrix<f64> {
    DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { (j as f64).sqrt() } else { 0.0 })
}

/// Matrix exponential by Taylor series with scaling and squaring.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a.iter().map(|v| v.abs()).sum::<f64>().max(1e-300);
    let squarings = (norm.log2().ceil().max(0.0) as u32) + 4;
    let scaled = a / 2f64.powi(squarings as i32);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / k as f64;
        sum += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        sum = &sum * &sum;
    }
    sum
}

/// `exp((r / 2) (a^2 - a^dag^2))`, which maps `x -> e^{-r} x`.
pub fn squeeze_operator(dim: usize, r: f64) -> DMatrix<f64> {
    expm(&squeeze_generator(dim, r))
}

/// `(r / 2) (a^2 - a^dag^2)`.
pub fn squeeze_generator(dim: usize, r: f64) -> DMatrix<f64> {
    let a = annihilation(dim);
    let a2 = &a * &a;
    (&a2 - a2.transpose()) * (0.5 * r)
}

/// Thermal populations `(1 - q) q^n` and their derivative with respect to
/// the mean occupation, given `dn` = d(n_bar)/dT.
pub fn thermal(dim: usize, n_bar: f64, dn: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let q = n_bar / (n_bar + 1.0);
    let dq = dn / (n_bar + 1.0).powi(2);
    let p = DMatrix::from_fn(dim, dim, |i, j| if i == j { (1.0 - q) * q.powi(i as i32) } else { 0.0 });
    let dp = DMatrix::from_fn(dim, dim, |i, j| {
        if i != j {
            0.0
        } else if i == 0 {
            -dq
        } else {
            dq * (-q.powi(i as i32) + (1.0 - q) * i as f64 * q.powi(i as i32 - 1))
        }
    });
    (p, dp)
}

/// `sum_{ij} 2 |<i| drho |j>|^2 / (l_i + l_j)` over pairs with `l_i + l_j > 0`.
pub fn sld_qfi(rho: &DMatrix<f64>, drho: &DMatrix<f64>) -> f64 {
    let sym = (rho + rho.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let v = &eig.eigenvectors;
    let d = v.transpose() * drho * v;
    let l = &eig.eigenvalues;
    let mut f = 0.0;
    for i in 0..l.len() {
        for j in 0..l.len() {
            let s = l[i] + l[j];
            if s > 1e-14 {
                f += 2.0 * d[(i, j)].powi(2) / s;
            }
        }
    }
    f
}
