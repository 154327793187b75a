#![allow(dead_code)]

pub mod fock;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3};

use cvtherm::collision::{simulate_chain, AncillaPrep, ModelParams, StateWithGradient};
use nalgebra::DMatrix;
use rand::Rng;

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

pub fn squeezed_bs(r: f64) -> ModelParams {
    ModelParams {
        temperature: 0.1,
        mode_frequency: 1.0,
        gamma_tau_se: 1.0,
        g_tau_sa: FRAC_PI_3,
        h_tau_sa: 0.0,
        ancilla: AncillaPrep::Squeezed { r, phi: 0.0 },
    }
}

pub fn full_swap() -> ModelParams {
    ModelParams {
        g_tau_sa: FRAC_PI_2,
        ..squeezed_bs(0.5)
    }
}

pub fn vacuum_tms(h: f64) -> ModelParams {
    ModelParams {
        h_tau_sa: h,
        ancilla: AncillaPrep::Vacuum,
        ..squeezed_bs(0.0)
    }
}

/// Random parameters in the ranges where the steady state is usually stable.
pub fn random_params<R: Rng>(rng: &mut R) -> ModelParams {
    let ancilla = match rng.random_range(0..3) {
        0 => AncillaPrep::Vacuum,
        1 => AncillaPrep::Squeezed {
            r: rng.random_range(-1.0..1.0),
            phi: rng.random_range(0.0..std::f64::consts::TAU),
        },
        _ => AncillaPrep::Thermal {
            n_bar: rng.random_range(0.0..2.0),
        },
    };
    ModelParams {
        temperature: rng.random_range(0.2..3.0),
        mode_frequency: 1.0,
        gamma_tau_se: rng.random_range(0.2..2.0),
        g_tau_sa: rng.random_range(0.0..std::f64::consts::PI),
        h_tau_sa: rng.random_range(0.0..0.6),
        ancilla,
    }
}

pub fn chain_state(params: &ModelParams, n: usize) -> StateWithGradient {
    simulate_chain(&params.chain_config(n).unwrap()).unwrap().into_state()
}

/// `Sigma^n` for temperatures `T - delta` and `T + delta`, combined into a
/// central difference.
pub fn central_difference(params: &ModelParams, n: usize, delta: f64) -> DMatrix<f64> {
    let t = params.temperature;
    let plus = chain_state(&params.with_temperature(t + delta), n);
    let minus = chain_state(&params.with_temperature(t - delta), n);
    (plus.cm.as_matrix() - minus.cm.as_matrix()) / (2.0 * delta)
}
