//! Gaussian collisional thermometry.
//!
//! A system mode is damped towards a bath at temperature `T` and probed by a
//! stream of identically prepared ancillae. The crate simulates the joint
//! covariance matrix of the ancillae together with its temperature
//! derivative, evaluates their quantum Fisher information (QFI) about `T`,
//! and analyses how the QFI per ancilla grows with the number of ancillae.
//!
//! ```
//! use cvtherm::{qfi_curve, AncillaPrep, ModelParams, QfiMethod};
//!
//! let params = ModelParams {
//!     temperature: 0.1,
//!     mode_frequency: 1.0,
//!     gamma_tau_se: 1.0,
//!     g_tau_sa: std::f64::consts::FRAC_PI_3,
//!     h_tau_sa: 0.0,
//!     ancilla: AncillaPrep::Squeezed { r: 0.5, phi: 0.0 },
//! };
//! let curve = qfi_curve(&params, 20, QfiMethod::WilliamsonFast).unwrap();
//! assert!(curve.densities()[19] > curve.densities()[0]);
//! ```

pub mod analysis;
pub mod collision;
pub mod error;
pub mod gaussian;
pub mod qfi;

pub use analysis::{
    estimate_rate, fit_alpha, fit_alpha_with_rate, n_star, qfi_curve, qfi_curve_on, sigmoid_curve,
    sigmoid_model, stride_grid, NStar, QfiCurve, RateEstimate, SigmoidFit,
};
pub use collision::{
    simulate_chain, steady_state, AncillaPrep, ChainConfig, ChainOutput, ModelParams,
    StateWithGradient, SteadyStateResult,
};
pub use error::{Error, Result};
pub use gaussian::{BoseOccupation, CovarianceMatrix, SymplecticMatrix};
pub use qfi::{qfi, QfiMethod, QfiReport};
