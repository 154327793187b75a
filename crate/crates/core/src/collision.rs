//! The collision model: a system mode alternately thermalized by a bath and
//! coupled to a stream of fresh, identically prepared ancillae.
//!
//! Every map here is affine in the covariance matrix and the temperature
//! enters only through the bath noise, so the exact temperature derivative of
//! the state is carried along with it ([`StateWithGradient`]).

use nalgebra::{DMatrix, Matrix2, Matrix4, Vector4};

use crate::error::{invalid_arg, Error, Result};
use crate::gaussian::{
    conjugate_on_modes, max_abs, symmetrize, BoseOccupation, CovarianceMatrix, SymplecticMatrix,
};

/// Dimensionless system-ancilla couplings `g tau_SA` (beam splitter) and
/// `h tau_SA` (two-mode squeezing).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InteractionParams {
    pub g_tau: f64,
    pub h_tau: f64,
}

/// `exp(Omega H)` with `H = [[0, K], [K, 0]]`, `K = diag(g + h, g - h)`,
/// acting on the (system, ancilla) pair.
pub fn build_interaction_symplectic(params: InteractionParams) -> Result<SymplecticMatrix> {
    let InteractionParams { g_tau, h_tau } = params;
    if !g_tau.is_finite() || !h_tau.is_finite() {
        return Err(invalid_arg("interaction strengths must be finite"));
    }
    let mut h = DMatrix::zeros(4, 4);
    h[(0, 2)] = g_tau + h_tau;
    h[(2, 0)] = g_tau + h_tau;
    h[(1, 3)] = g_tau - h_tau;
    h[(3, 1)] = g_tau - h_tau;
    SymplecticMatrix::from_generator(&h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalChannelParams {
    /// Dimensionless system-bath coupling `gamma tau_SE`.
    pub gamma_tau: f64,
    pub occupation: BoseOccupation,
}

/// The single-mode map `sigma -> X sigma X^T + Y` with `X = x I`, `Y = y I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalChannel {
    damping: f64,
    noise: f64,
    noise_derivative: f64,
}

pub fn build_thermal_channel(params: ThermalChannelParams) -> Result<ThermalChannel> {
    let g = params.gamma_tau;
    if g.is_nan() || g < 0.0 {
        return Err(invalid_arg(format!(
            "gamma_tau must be non-negative, got {g}"
        )));
    }
    let decay = -(-g).exp_m1(); // 1 - e^{-g}
    Ok(ThermalChannel {
        damping: (-0.5 * g).exp(),
        noise: (params.occupation.value() + 0.5) * decay,
        noise_derivative: params.occupation.derivative() * decay,
    })
}

impl ThermalChannel {
    /// Scalar `x` with `X = x I`.
    pub fn damping(&self) -> f64 {
        self.damping
    }

    /// Scalar `y` with `Y = y I`.
    pub fn noise(&self) -> f64 {
        self.noise
    }

    /// `dy/dT`.
    pub fn noise_derivative(&self) -> f64 {
        self.noise_derivative
    }

    pub fn x(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.damping
    }

    pub fn y(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.noise
    }

    pub fn y_derivative(&self) -> Matrix2<f64> {
        Matrix2::identity() * self.noise_derivative
    }
}

/// A covariance matrix together with its exact derivative with respect to
/// temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct StateWithGradient {
    pub cm: CovarianceMatrix,
    pub grad: DMatrix<f64>,
}

impl StateWithGradient {
    pub fn new(cm: CovarianceMatrix, grad: DMatrix<f64>) -> Result<Self> {
        if grad.shape() != cm.as_matrix().shape() {
            return Err(invalid_arg(format!(
                "gradient shape {:?} does not match covariance shape {:?}",
                grad.shape(),
                cm.as_matrix().shape()
            )));
        }
        let asym = max_abs(&(&grad - grad.transpose()));
        if asym > 1e-9 * max_abs(&grad).max(1e-300) {
            return Err(invalid_arg("gradient is not symmetric"));
        }
        let mut grad = grad;
        symmetrize(&mut grad);
        Ok(Self { cm, grad })
    }

    /// A temperature-independent state.
    pub fn constant(cm: CovarianceMatrix) -> Self {
        let n = cm.dim();
        Self {
            cm,
            grad: DMatrix::zeros(n, n),
        }
    }

    pub fn modes(&self) -> usize {
        self.cm.modes()
    }

    pub fn direct_sum(&self, other: &StateWithGradient) -> Self {
        let (na, nb) = (self.grad.nrows(), other.grad.nrows());
        let mut grad = DMatrix::zeros(na + nb, na + nb);
        grad.view_mut((0, 0), (na, na)).copy_from(&self.grad);
        grad.view_mut((na, na), (nb, nb)).copy_from(&other.grad);
        Self {
            cm: self.cm.direct_sum(&other.cm),
            grad,
        }
    }

    pub fn partial_trace(&self, keep: &[usize]) -> Result<Self> {
        let cm = self.cm.partial_trace(keep)?;
        let idx: Vec<usize> = keep.iter().flat_map(|&m| [2 * m, 2 * m + 1]).collect();
        Ok(Self {
            cm,
            grad: self.grad.select_rows(&idx).select_columns(&idx),
        })
    }

    /// Conjugates both the state and its gradient by the same symplectic.
    pub fn apply_symplectic(&self, s: &SymplecticMatrix, modes: &[usize]) -> Result<Self> {
        let cm = self.cm.apply_symplectic(s, modes)?;
        let mut grad = self.grad.clone();
        conjugate_on_modes(&mut grad, s.as_matrix(), modes);
        symmetrize(&mut grad);
        Ok(Self { cm, grad })
    }
}

/// Thermal channel on the quadratures `(2 mode, 2 mode + 1)` of the leading
/// `dim x dim` block of `cm` and `grad`.
fn channel_in_place(
    cm: &mut DMatrix<f64>,
    grad: &mut DMatrix<f64>,
    ch: &ThermalChannel,
    mode: usize,
    dim: usize,
) {
    let x = ch.damping;
    let rows = [2 * mode, 2 * mode + 1];
    for m in [&mut *cm, &mut *grad] {
        for &r in &rows {
            for j in 0..dim {
                m[(r, j)] *= x;
            }
        }
        for &c in &rows {
            for i in 0..dim {
                m[(i, c)] *= x;
            }
        }
    }
    for &r in &rows {
        cm[(r, r)] += ch.noise;
        grad[(r, r)] += ch.noise_derivative;
    }
}

pub fn apply_thermal_channel(
    state: &StateWithGradient,
    ch: &ThermalChannel,
    mode: usize,
) -> Result<StateWithGradient> {
    if mode >= state.modes() {
        return Err(invalid_arg(format!(
            "mode {mode} out of range for {} modes",
            state.modes()
        )));
    }
    let mut cm = state.cm.as_matrix().clone();
    let mut grad = state.grad.clone();
    let dim = cm.nrows();
    channel_in_place(&mut cm, &mut grad, ch, mode, dim);
    Ok(StateWithGradient {
        cm: CovarianceMatrix::from_matrix_unchecked(cm),
        grad,
    })
}

/// One stroboscopic step: the bath acts on the system, then `s` couples the
/// system to the ancilla.
pub fn collision_step(
    joint: &StateWithGradient,
    ch: &ThermalChannel,
    s: &SymplecticMatrix,
    system_mode: usize,
    ancilla_mode: usize,
) -> Result<StateWithGradient> {
    if system_mode == ancilla_mode {
        return Err(invalid_arg("system and ancilla modes must differ"));
    }
    if s.modes() != 2 {
        return Err(invalid_arg("collision unitary must act on two modes"));
    }
    let after_bath = apply_thermal_channel(joint, ch, system_mode)?;
    after_bath.apply_symplectic(s, &[system_mode, ancilla_mode])
}

/// The reduced one-step map of the system,
/// `sigma -> A X sigma X^T A^T + A Y A^T + B sigma_A B^T`,
/// where `A`, `B` are the system rows of the collision symplectic.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMap {
    linear: Matrix2<f64>,
    constant: Matrix2<f64>,
    constant_derivative: Matrix2<f64>,
}

impl SystemMap {
    pub fn new(ch: &ThermalChannel, s: &SymplecticMatrix, ancilla: &CovarianceMatrix) -> Result<Self> {
        if s.modes() != 2 || ancilla.modes() != 1 {
            return Err(invalid_arg(
                "system map needs a two-mode symplectic and a single-mode ancilla",
            ));
        }
        let m = s.as_matrix();
        let a = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
        let b = Matrix2::new(m[(0, 2)], m[(0, 3)], m[(1, 2)], m[(1, 3)]);
        let sa = ancilla.as_matrix();
        let sigma_a = Matrix2::new(sa[(0, 0)], sa[(0, 1)], sa[(1, 0)], sa[(1, 1)]);
        let aat = a * a.transpose();
        Ok(Self {
            linear: a * ch.damping,
            constant: aat * ch.noise + b * sigma_a * b.transpose(),
            constant_derivative: aat * ch.noise_derivative,
        })
    }

    /// `A X`.
    pub fn linear(&self) -> Matrix2<f64> {
        self.linear
    }

    pub fn constant(&self) -> Matrix2<f64> {
        self.constant
    }

    pub fn apply(&self, sigma: &Matrix2<f64>) -> Matrix2<f64> {
        self.linear * sigma * self.linear.transpose() + self.constant
    }

    /// The linearized map `G = (AX) (x) (AX)` on column-stacked 2x2 matrices.
    pub fn superoperator(&self) -> Matrix4<f64> {
        self.linear.kronecker(&self.linear)
    }

    /// Largest eigenvalue modulus of `G`.
    pub fn spectral_radius(&self) -> f64 {
        self.superoperator()
            .complex_eigenvalues()
            .iter()
            .fold(0.0_f64, |m, z| m.max(z.norm()))
    }

    /// Largest eigenvalue modulus of `A X`; its square equals [`Self::spectral_radius`].
    pub fn linear_spectral_radius(&self) -> f64 {
        let l = self.linear;
        let half_tr = 0.5 * l.trace();
        // (tr/2)^2 - det without the cancellation
        let half_diff = 0.5 * (l[(0, 0)] - l[(1, 1)]);
        let disc = half_diff * half_diff + l[(0, 1)] * l[(1, 0)];
        if disc >= 0.0 {
            (half_tr.abs() + disc.sqrt()).abs()
        } else {
            l.determinant().abs().sqrt()
        }
    }

    /// Solves the Stein equation `P = (AX) P (AX)^T + C` through the 4x4
    /// vectorized system `(1 - G) vec P = vec C`.
    fn solve_stein(&self, c: &Matrix2<f64>) -> Option<Matrix2<f64>> {
        let lhs = Matrix4::identity() - self.superoperator();
        let rhs = Vector4::new(c[(0, 0)], c[(1, 0)], c[(0, 1)], c[(1, 1)]);
        let v = lhs.lu().solve(&rhs)?;
        if v.iter().any(|x| !x.is_finite()) {
            return None;
        }
        let off = 0.5 * (v[1] + v[2]);
        Some(Matrix2::new(v[0], off, off, v[3]))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    /// The system fixed point and its temperature derivative; `None` when unstable.
    pub state: Option<StateWithGradient>,
    pub stable: bool,
    /// Spectral radius of the linearized map `G`.
    pub spectral_radius: f64,
    /// Spectral radius of `A X`.
    pub linear_spectral_radius: f64,
}

/// Steady state of the system mode right after a collision.
pub fn steady_state(
    ch: &ThermalChannel,
    s: &SymplecticMatrix,
    ancilla: &CovarianceMatrix,
) -> Result<SteadyStateResult> {
    let map = SystemMap::new(ch, s, ancilla)?;
    let spectral_radius = map.spectral_radius();
    let linear_spectral_radius = map.linear_spectral_radius();
    let unstable = SteadyStateResult {
        state: None,
        stable: false,
        spectral_radius,
        linear_spectral_radius,
    };
    if !(spectral_radius < 1.0) {
        return Ok(unstable);
    }
    let (Some(p), Some(dp)) = (
        map.solve_stein(&map.constant),
        map.solve_stein(&map.constant_derivative),
    ) else {
        return Ok(unstable);
    };
    let cm = CovarianceMatrix::from_matrix_unchecked(DMatrix::from_iterator(2, 2, p.iter().copied()));
    let grad = DMatrix::from_iterator(2, 2, dp.iter().copied());
    Ok(SteadyStateResult {
        state: Some(StateWithGradient { cm, grad }),
        stable: true,
        spectral_radius,
        linear_spectral_radius,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationOptions {
    /// Convergence threshold on `max |sigma_{n+1} - sigma_n|`.
    pub eps_fix: f64,
    pub max_iter: usize,
}

impl Default for IterationOptions {
    fn default() -> Self {
        Self {
            eps_fix: 1e-12,
            max_iter: 10_000,
        }
    }
}

/// Fixed point of the system map by plain iteration. Returns the state and
/// the number of iterations, or `None` if it did not settle within
/// `max_iter` steps.
pub fn steady_state_by_iteration(
    map: &SystemMap,
    initial: &CovarianceMatrix,
    opts: IterationOptions,
) -> Option<(Matrix2<f64>, usize)> {
    let m = initial.as_matrix();
    let mut sigma = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    for it in 1..=opts.max_iter {
        let next = map.apply(&sigma);
        if !next.iter().all(|v| v.is_finite()) {
            return None;
        }
        let delta = (next - sigma).amax();
        sigma = next;
        if delta <= opts.eps_fix * sigma.amax().max(1.0) {
            return Some((sigma, it));
        }
    }
    None
}

/// How the ancillae are prepared before they collide.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AncillaPrep {
    Vacuum,
    Squeezed { r: f64, phi: f64 },
    Thermal { n_bar: f64 },
}

impl AncillaPrep {
    pub fn state(&self) -> Result<CovarianceMatrix> {
        match *self {
            AncillaPrep::Vacuum => CovarianceMatrix::vacuum(1),
            AncillaPrep::Squeezed { r, phi } => CovarianceMatrix::squeezed_vacuum(r, phi),
            AncillaPrep::Thermal { n_bar } => CovarianceMatrix::thermal(n_bar),
        }
    }
}

/// Full physical parameter record of one model point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    pub temperature: f64,
    pub mode_frequency: f64,
    pub gamma_tau_se: f64,
    pub g_tau_sa: f64,
    pub h_tau_sa: f64,
    pub ancilla: AncillaPrep,
}

impl ModelParams {
    pub fn with_temperature(&self, temperature: f64) -> Self {
        Self { temperature, ..*self }
    }

    pub fn channel(&self) -> Result<ThermalChannel> {
        build_thermal_channel(ThermalChannelParams {
            gamma_tau: self.gamma_tau_se,
            occupation: BoseOccupation::new(self.temperature, self.mode_frequency)?,
        })
    }

    pub fn interaction(&self) -> Result<SymplecticMatrix> {
        build_interaction_symplectic(InteractionParams {
            g_tau: self.g_tau_sa,
            h_tau: self.h_tau_sa,
        })
    }

    pub fn chain_config(&self, n_ancillae: usize) -> Result<ChainConfig> {
        Ok(ChainConfig {
            channel: self.channel()?,
            interaction: self.interaction()?,
            ancilla: self.ancilla.state()?,
            n_ancillae,
        })
    }

    pub fn steady_state(&self) -> Result<SteadyStateResult> {
        steady_state(&self.channel()?, &self.interaction()?, &self.ancilla.state()?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub channel: ThermalChannel,
    pub interaction: SymplecticMatrix,
    pub ancilla: CovarianceMatrix,
    pub n_ancillae: usize,
}

/// Joint state of the first `n_ancillae` ancillae after they have collided.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainOutput {
    ancillae: StateWithGradient,
    steady: SteadyStateResult,
}

impl ChainOutput {
    pub fn n_ancillae(&self) -> usize {
        self.ancillae.modes()
    }

    /// The joint ancilla state `Sigma^N` with its gradient.
    pub fn state(&self) -> &StateWithGradient {
        &self.ancillae
    }

    pub fn into_state(self) -> StateWithGradient {
        self.ancillae
    }

    pub fn steady_state(&self) -> &SteadyStateResult {
        &self.steady
    }

    /// `Sigma^n` for `n <= N`: ancillae that have already collided never
    /// interact again, so this is the leading principal block.
    pub fn prefix(&self, n: usize) -> Result<StateWithGradient> {
        if n == 0 || n > self.n_ancillae() {
            return Err(invalid_arg(format!(
                "prefix length {n} outside 1..={}",
                self.n_ancillae()
            )));
        }
        let d = 2 * n;
        Ok(StateWithGradient {
            cm: CovarianceMatrix::from_matrix_unchecked(
                self.ancillae.cm.as_matrix().view((0, 0), (d, d)).into_owned(),
            ),
            grad: self.ancillae.grad.view((0, 0), (d, d)).into_owned(),
        })
    }
}

/// Runs `n_ancillae` collisions starting from the system steady state and
/// traces out the system.
///
/// The joint matrix is laid out as (system, A_1, ..., A_N); ancilla `k`
/// enters with zero correlations right before its collision, so each step
/// only rewrites the two system quadratures and the two new ancilla
/// quadratures. Cost is `O(N)` per collision.
pub fn simulate_chain(config: &ChainConfig) -> Result<ChainOutput> {
    let n = config.n_ancillae;
    if n == 0 {
        return Err(invalid_arg("chain needs at least one ancilla"));
    }
    if config.interaction.modes() != 2 || config.ancilla.modes() != 1 {
        return Err(invalid_arg(
            "chain needs a two-mode interaction and a single-mode ancilla",
        ));
    }
    let steady = steady_state(&config.channel, &config.interaction, &config.ancilla)?;
    let Some(system) = steady.state.clone() else {
        return Err(Error::Unstable {
            spectral_radius: steady.spectral_radius,
        });
    };

    let dim = 2 * (n + 1);
    let mut cm = DMatrix::zeros(dim, dim);
    let mut grad = DMatrix::zeros(dim, dim);
    cm.view_mut((0, 0), (2, 2)).copy_from(system.cm.as_matrix());
    grad.view_mut((0, 0), (2, 2)).copy_from(&system.grad);

    let s = config.interaction.as_matrix();
    let anc = config.ancilla.as_matrix();
    for k in 1..=n {
        channel_in_place(&mut cm, &mut grad, &config.channel, 0, 2 * k);
        cm.view_mut((2 * k, 2 * k), (2, 2)).copy_from(anc);
        conjugate_on_modes(&mut cm, s, &[0, k]);
        conjugate_on_modes(&mut grad, s, &[0, k]);
    }
    symmetrize(&mut cm);
    symmetrize(&mut grad);

    let ancillae = StateWithGradient {
        cm: CovarianceMatrix::from_matrix_unchecked(cm.view((2, 2), (2 * n, 2 * n)).into_owned()),
        grad: grad.view((2, 2), (2 * n, 2 * n)).into_owned(),
    };
    Ok(ChainOutput { ancillae, steady })
}
