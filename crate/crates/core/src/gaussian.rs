//! Zero-mean Gaussian states in the covariance-matrix picture.
//!
//! Conventions used throughout the crate:
//!
//! * quadratures are ordered `(x_1, p_1, x_2, p_2, ...)`;
//! * `hbar = k_B = 1` and the vacuum has covariance `I / 2`;
//! * the symplectic form is `Omega = (+) [[0, 1], [-1, 0]]`.

use nalgebra::{Complex, DMatrix};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid_arg, Error, Result};

/// Default tolerance for the uncertainty-relation check.
pub const DEFAULT_EPS_PHYS: f64 = 1e-9;

/// Default tolerance for `S Omega S^T = Omega`.
pub const DEFAULT_EPS_SYMP: f64 = 1e-9;

/// The block-diagonal symplectic form on `modes` bosonic modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SymplecticForm {
    modes: usize,
}

impl SymplecticForm {
    pub fn new(modes: usize) -> Self {
        Self { modes }
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        symplectic_form(self.modes)
    }
}

/// `Omega = (+)_i [[0, 1], [-1, 0]]` of size `2 modes x 2 modes`.
pub fn symplectic_form(modes: usize) -> DMatrix<f64> {
    let mut omega = DMatrix::zeros(2 * modes, 2 * modes);
    for k in 0..modes {
        omega[(2 * k, 2 * k + 1)] = 1.0;
        omega[(2 * k + 1, 2 * k)] = -1.0;
    }
    omega
}

/// Computes `Omega * a` without forming `Omega`.
pub(crate) fn omega_left(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for k in 0..a.nrows() / 2 {
        out.row_mut(2 * k).copy_from(&a.row(2 * k + 1));
        out.row_mut(2 * k + 1).copy_from(&(-a.row(2 * k)));
    }
    out
}

/// Computes `a * Omega` without forming `Omega`.
pub(crate) fn omega_right(a: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(a.nrows(), a.ncols());
    for k in 0..a.ncols() / 2 {
        out.column_mut(2 * k).copy_from(&(-a.column(2 * k + 1)));
        out.column_mut(2 * k + 1).copy_from(&a.column(2 * k));
    }
    out
}

pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

pub(crate) fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

fn quadrature_indices(modes: &[usize]) -> Vec<usize> {
    modes.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect()
}

fn check_mode_list(modes: &[usize], total: usize) -> Result<()> {
    for (i, &m) in modes.iter().enumerate() {
        if m >= total {
            return Err(invalid_arg(format!(
                "mode index {m} out of range for {total} modes"
            )));
        }
        if modes[..i].contains(&m) {
            return Err(invalid_arg(format!("duplicate mode index {m}")));
        }
    }
    Ok(())
}

/// In-place `m <- P m P^T` where `P` acts as `s` on the quadratures of
/// `modes` and as the identity elsewhere. Touches only `2 len(modes)` rows
/// and columns.
pub(crate) fn conjugate_on_modes(m: &mut DMatrix<f64>, s: &DMatrix<f64>, modes: &[usize]) {
    let idx = quadrature_indices(modes);
    let rows = s * m.select_rows(&idx);
    for (r, &i) in idx.iter().enumerate() {
        m.row_mut(i).copy_from(&rows.row(r));
    }
    let cols = m.select_columns(&idx) * s.transpose();
    for (c, &j) in idx.iter().enumerate() {
        m.column_mut(j).copy_from(&cols.column(c));
    }
}

/// Bose-Einstein occupation of a mode of frequency `mode_frequency` at
/// temperature `temperature`, together with its temperature derivative.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoseOccupation {
    temperature: f64,
    mode_frequency: f64,
    value: f64,
    derivative: f64,
}

impl BoseOccupation {
    pub fn new(temperature: f64, mode_frequency: f64) -> Result<Self> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(invalid_arg(format!(
                "temperature must be positive and finite, got {temperature}"
            )));
        }
        if !(mode_frequency.is_finite() && mode_frequency > 0.0) {
            return Err(invalid_arg(format!(
                "mode frequency must be positive and finite, got {mode_frequency}"
            )));
        }
        let x = mode_frequency / temperature;
        let value = 1.0 / x.exp_m1();
        let derivative = mode_frequency / (temperature * temperature) * value * (value + 1.0);
        Ok(Self {
            temperature,
            mode_frequency,
            value,
            derivative,
        })
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn mode_frequency(&self) -> f64 {
        self.mode_frequency
    }

    /// `n = 1 / (exp(omega / T) - 1)`.
    pub fn value(&self) -> f64 {
        self.value
    }

    /// `dn/dT = omega / T^2 * n (n + 1)`.
    pub fn derivative(&self) -> f64 {
        self.derivative
    }

    pub fn thermal_state(&self) -> CovarianceMatrix {
        CovarianceMatrix::scaled_identity(1, self.value + 0.5)
    }
}

/// A real `2N x 2N` matrix satisfying `S Omega S^T = Omega`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix {
    entries: DMatrix<f64>,
}

impl SymplecticMatrix {
    pub fn identity(modes: usize) -> Self {
        Self {
            entries: DMatrix::identity(2 * modes, 2 * modes),
        }
    }

    /// Wraps `entries` after checking the symplectic condition to `eps`
    /// (relative to `max(1, |S|^2)`).
    pub fn new(entries: DMatrix<f64>, eps: f64) -> Result<Self> {
        if !entries.is_square() || entries.nrows() % 2 != 0 || entries.nrows() == 0 {
            return Err(invalid_arg(format!(
                "symplectic matrix must be square with even positive size, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg("symplectic matrix has non-finite entries"));
        }
        let scale = max_abs(&entries).powi(2).max(1.0);
        let residual = symplectic_residual(&entries);
        if residual > eps * scale {
            return Err(invalid_arg(format!(
                "matrix is not symplectic: |S Omega S^T - Omega| = {residual:e}"
            )));
        }
        Ok(Self { entries })
    }

    /// `exp(Omega H)` for a real symmetric generator `H`.
    pub fn from_generator(h: &DMatrix<f64>) -> Result<Self> {
        if !h.is_square() || h.nrows() % 2 != 0 || h.nrows() == 0 {
            return Err(invalid_arg("generator must be square with even size"));
        }
        let mut sym = h.clone();
        symmetrize(&mut sym);
        let entries = omega_left(&sym).exp();
        Ok(Self { entries })
    }

    /// Single-mode phase-space rotation by `theta`.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            entries: DMatrix::from_row_slice(2, 2, &[c, s, -s, c]),
        }
    }

    /// Single-mode squeezer mapping the vacuum to `CovarianceMatrix::squeezed_vacuum(r, 0)`.
    pub fn squeezer(r: f64) -> Self {
        Self {
            entries: DMatrix::from_diagonal(&nalgebra::dvector![(-r).exp(), r.exp()]),
        }
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.entries)
    }

    /// `S^{-1} = -Omega S^T Omega`.
    pub fn inverse(&self) -> Self {
        Self {
            entries: -omega_right(&omega_left(&self.entries.transpose())),
        }
    }

    pub fn compose(&self, other: &SymplecticMatrix) -> Result<Self> {
        if self.entries.nrows() != other.entries.nrows() {
            return Err(invalid_arg("symplectic dimension mismatch"));
        }
        Ok(Self {
            entries: &self.entries * &other.entries,
        })
    }

    /// `S_1 (+) S_2`.
    pub fn direct_sum(&self, other: &SymplecticMatrix) -> Self {
        Self {
            entries: block_diag(&self.entries, &other.entries),
        }
    }

    pub(crate) fn from_matrix_unchecked(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }
}

fn symplectic_residual(s: &DMatrix<f64>) -> f64 {
    let sost = omega_right(s) * s.transpose();
    max_abs(&(sost - symplectic_form(s.nrows() / 2)))
}

fn block_diag(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (na, nb) = (a.nrows(), b.nrows());
    let mut out = DMatrix::zeros(na + nb, na + nb);
    out.view_mut((0, 0), (na, na)).copy_from(a);
    out.view_mut((na, na), (nb, nb)).copy_from(b);
    out
}

/// Outcome of [`CovarianceMatrix::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityReport {
    /// `max |sigma - sigma^T|`.
    pub symmetry_residual: f64,
    /// Smallest eigenvalue of the Hermitian matrix `sigma + i Omega / 2`.
    pub min_eigenvalue: f64,
    pub eps: f64,
    pub passed: bool,
}

/// Real symmetric second-moment matrix of a zero-mean Gaussian state.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    entries: DMatrix<f64>,
}

impl CovarianceMatrix {
    /// Wraps a matrix after shape and symmetry checks. Entries are
    /// symmetrized; physicality is *not* checked here (see [`Self::validate`]).
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() || entries.nrows() % 2 != 0 || entries.nrows() == 0 {
            return Err(invalid_arg(format!(
                "covariance matrix must be square with even positive size, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(invalid_arg("covariance matrix has non-finite entries"));
        }
        let asym = max_abs(&(&entries - entries.transpose()));
        if asym > 1e-9 * max_abs(&entries).max(1.0) {
            return Err(invalid_arg(format!(
                "covariance matrix is not symmetric (residual {asym:e})"
            )));
        }
        let mut entries = entries;
        symmetrize(&mut entries);
        Ok(Self { entries })
    }

    pub(crate) fn from_matrix_unchecked(entries: DMatrix<f64>) -> Self {
        Self { entries }
    }

    fn scaled_identity(modes: usize, v: f64) -> Self {
        Self {
            entries: DMatrix::identity(2 * modes, 2 * modes) * v,
        }
    }

    /// `I / 2` on `modes` modes.
    pub fn vacuum(modes: usize) -> Result<Self> {
        if modes == 0 {
            return Err(invalid_arg("vacuum state needs at least one mode"));
        }
        Ok(Self::scaled_identity(modes, 0.5))
    }

    /// `(n + 1/2) I` on one mode.
    pub fn thermal(n_bar: f64) -> Result<Self> {
        if !(n_bar.is_finite() && n_bar >= 0.0) {
            return Err(invalid_arg(format!(
                "occupation must be finite and non-negative, got {n_bar}"
            )));
        }
        Ok(Self::scaled_identity(1, n_bar + 0.5))
    }

    /// `cosh(2r)/2 I - sinh(2r)/2 [[cos phi, sin phi], [sin phi, -cos phi]]`.
    ///
    /// For `phi = 0` and `r > 0` this squeezes `x`: `diag(e^{-2r}, e^{2r}) / 2`.
    pub fn squeezed_vacuum(r: f64, phi: f64) -> Result<Self> {
        if !r.is_finite() || !phi.is_finite() {
            return Err(invalid_arg("squeezing parameters must be finite"));
        }
        let ch = 0.5 * (2.0 * r).cosh();
        let sh = 0.5 * (2.0 * r).sinh();
        let (sp, cp) = phi.sin_cos();
        Ok(Self {
            entries: DMatrix::from_row_slice(2, 2, &[ch - sh * cp, -sh * sp, -sh * sp, ch + sh * cp]),
        })
    }

    pub fn modes(&self) -> usize {
        self.entries.nrows() / 2
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }

    /// Covariance matrix of the product state `self (x) other`.
    pub fn direct_sum(&self, other: &CovarianceMatrix) -> Self {
        Self {
            entries: block_diag(&self.entries, &other.entries),
        }
    }

    /// Reduced state on `keep`, in the given order.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        check_mode_list(keep, self.modes())?;
        if keep.is_empty() {
            return Err(invalid_arg("cannot trace out every mode"));
        }
        let idx = quadrature_indices(keep);
        Ok(Self {
            entries: self.entries.select_rows(&idx).select_columns(&idx),
        })
    }

    /// `S_emb sigma S_emb^T` with `s` acting on `modes` and the identity elsewhere.
    pub fn apply_symplectic(&self, s: &SymplecticMatrix, modes: &[usize]) -> Result<Self> {
        check_mode_list(modes, self.modes())?;
        if s.modes() != modes.len() {
            return Err(invalid_arg(format!(
                "symplectic acts on {} modes but {} target modes were given",
                s.modes(),
                modes.len()
            )));
        }
        let mut entries = self.entries.clone();
        conjugate_on_modes(&mut entries, s.as_matrix(), modes);
        symmetrize(&mut entries);
        Ok(Self { entries })
    }

    /// Symmetry and uncertainty-relation check. Never fails; inspect `passed`.
    pub fn validate(&self, eps: f64) -> ValidityReport {
        let symmetry_residual = max_abs(&(&self.entries - self.entries.transpose()));
        let half_omega = symplectic_form(self.modes()) * 0.5;
        let n = self.dim();
        let h = DMatrix::from_fn(n, n, |i, j| {
            Complex::new(
                0.5 * (self.entries[(i, j)] + self.entries[(j, i)]),
                half_omega[(i, j)],
            )
        });
        let min_eigenvalue = h
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |m, &v| m.min(v));
        ValidityReport {
            symmetry_residual,
            min_eigenvalue,
            eps,
            passed: symmetry_residual <= eps && min_eigenvalue >= -eps,
        }
    }

    /// Symplectic eigenvalues in descending order, one per mode.
    pub fn symplectic_eigenvalues(&self) -> Result<Vec<f64>> {
        let chol = self.entries.clone().cholesky().ok_or_else(|| {
            Error::InvalidState("covariance matrix is not positive definite".into())
        })?;
        let l = chol.l();
        let k = l.transpose() * omega_left(&l);
        let mut ev: Vec<f64> = (k.transpose() * &k)
            .symmetric_eigenvalues()
            .iter()
            .copied()
            .collect();
        ev.sort_by(|a, b| b.total_cmp(a));
        Ok(ev
            .chunks(2)
            .map(|p| (0.5 * (p[0] + p[1])).max(0.0).sqrt())
            .collect())
    }
}

/// Random symmetric matrix with standard-normal entries times `scale`.
pub fn random_symmetric<R: Rng + ?Sized>(rng: &mut R, dim: usize, scale: f64) -> DMatrix<f64> {
    let mut a = DMatrix::from_fn(dim, dim, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * scale
    });
    symmetrize(&mut a);
    a
}

/// `exp(Omega H)` for a random symmetric `H` with entry scale `scale`.
pub fn random_symplectic<R: Rng + ?Sized>(rng: &mut R, modes: usize, scale: f64) -> SymplecticMatrix {
    let h = random_symmetric(rng, 2 * modes, scale);
    SymplecticMatrix::from_generator(&h).expect("generator has valid shape")
}

/// A random mixed state: random thermal occupations in `[n_min, n_max]`
/// conjugated by a random symplectic of entry scale `scale`.
pub fn random_state<R: Rng + ?Sized>(
    rng: &mut R,
    modes: usize,
    (n_min, n_max): (f64, f64),
    scale: f64,
) -> CovarianceMatrix {
    let occ = Uniform::new_inclusive(n_min, n_max).expect("valid occupation range");
    let mut diag = Vec::with_capacity(2 * modes);
    for _ in 0..modes {
        let nu = occ.sample(rng) + 0.5;
        diag.extend([nu, nu]);
    }
    let w = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(diag));
    let s = random_symplectic(rng, modes, scale);
    let mut entries = s.as_matrix() * w * s.as_matrix().transpose();
    symmetrize(&mut entries);
    CovarianceMatrix { entries }
}
