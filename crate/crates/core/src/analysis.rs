//! QFI-density curves and the sigmoid model
//!
//! ```text
//! f_{n+1} = f_1 + (f_inf - f_1) n / sqrt(alpha^2 + n^2)
//! ```
//!
//! for the QFI per ancilla `f_N = F_N / N`.

use crate::collision::{simulate_chain, ModelParams};
use crate::error::{invalid_arg, Result};
use crate::qfi::{qfi, QfiMethod};

/// Relative change across the tail above which a rate estimate is flagged.
pub const RATE_DRIFT_TOL: f64 = 1e-2;

/// `|f_inf - f_1|` below this fraction of `max(|f_1|, |f_inf|)` makes a fit degenerate.
pub const DEGENERATE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct QfiCurve {
    params: Option<ModelParams>,
    n_values: Vec<usize>,
    qfi: Vec<f64>,
    density: Vec<f64>,
}

impl QfiCurve {
    /// `n_values` must be strictly increasing and start at 1 or above.
    pub fn new(n_values: Vec<usize>, qfi: Vec<f64>) -> Result<Self> {
        if n_values.len() != qfi.len() {
            return Err(invalid_arg(format!(
                "{} ancilla counts for {} QFI values",
                n_values.len(),
                qfi.len()
            )));
        }
        if n_values.is_empty() || n_values[0] == 0 || n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(invalid_arg("ancilla counts must be positive and strictly increasing"));
        }
        if let Some(bad) = qfi.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid_arg(format!("QFI value {bad} is not a finite nonnegative number")));
        }
        let density = n_values.iter().zip(&qfi).map(|(&n, &f)| f / n as f64).collect();
        Ok(Self {
            params: None,
            n_values,
            qfi,
            density,
        })
    }

    pub fn from_densities(n_values: Vec<usize>, density: &[f64]) -> Result<Self> {
        let qfi = n_values.iter().zip(density).map(|(&n, &f)| f * n as f64).collect();
        let mut curve = Self::new(n_values, qfi)?;
        // keep the densities bit-exact rather than round-tripping through F
        curve.density = density.to_vec();
        Ok(curve)
    }

    pub fn with_params(mut self, params: ModelParams) -> Self {
        self.params = Some(params);
        self
    }

    pub fn params(&self) -> Option<&ModelParams> {
        self.params.as_ref()
    }

    pub fn n_values(&self) -> &[usize] {
        &self.n_values
    }

    pub fn qfi(&self) -> &[f64] {
        &self.qfi
    }

    pub fn densities(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.n_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.n_values.is_empty()
    }

    pub fn n_max(&self) -> usize {
        *self.n_values.last().unwrap_or(&0)
    }
}

/// `1, s, 2s, ..., n_max` (always including `n_max`).
pub fn stride_grid(n_max: usize, stride: usize) -> Vec<usize> {
    if n_max == 0 {
        return Vec::new();
    }
    let stride = stride.max(1);
    let mut grid = vec![1];
    grid.extend((1..=n_max / stride).map(|k| k * stride).filter(|&n| n > 1));
    if n_max > 1 && *grid.last().unwrap() != n_max {
        grid.push(n_max);
    }
    grid
}

/// QFI of every prefix `Sigma^1 .. Sigma^{n_max}` of one chain.
pub fn qfi_curve(params: &ModelParams, n_max: usize, method: QfiMethod) -> Result<QfiCurve> {
    qfi_curve_on(params, &(1..=n_max).collect::<Vec<_>>(), method)
}

/// QFI of the prefixes listed in `n_values`; the chain is simulated once up
/// to the largest entry.
pub fn qfi_curve_on(params: &ModelParams, n_values: &[usize], method: QfiMethod) -> Result<QfiCurve> {
    let n_max = n_values.last().copied().unwrap_or(0);
    if n_max == 0 {
        return Err(invalid_arg("curve needs at least one ancilla"));
    }
    let chain = simulate_chain(&params.chain_config(n_max)?)?;
    let mut values = Vec::with_capacity(n_values.len());
    for &n in n_values {
        values.push(qfi(&chain.prefix(n)?, method)?.value.max(0.0));
    }
    Ok(QfiCurve::new(n_values.to_vec(), values)?.with_params(*params))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateEstimate {
    pub f_inf: f64,
    /// Number of trailing points averaged.
    pub tail_points: usize,
    /// `|f_last - f_first| / |f_inf|` over the tail.
    pub drift: f64,
    pub converged: bool,
}

/// Mean density over the last `max(5, len/10)` points of the curve.
pub fn estimate_rate(curve: &QfiCurve) -> Result<RateEstimate> {
    if curve.is_empty() {
        return Err(invalid_arg("empty curve"));
    }
    let f = curve.densities();
    let k = (f.len() / 10).max(5).min(f.len());
    let tail = &f[f.len() - k..];
    // offset from the first tail point so a constant tail is reproduced exactly
    let x0 = tail[0];
    let f_inf = x0 + tail.iter().map(|v| v - x0).sum::<f64>() / k as f64;
    let spread = (tail[k - 1] - tail[0]).abs();
    let drift = if f_inf != 0.0 {
        spread / f_inf.abs()
    } else if spread == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RateEstimate {
        f_inf,
        tail_points: k,
        drift,
        converged: drift <= RATE_DRIFT_TOL,
    })
}

/// The sigmoid model evaluated at ancilla count `n >= 1`.
pub fn sigmoid_model(n: f64, alpha: f64, f1: f64, f_inf: f64) -> f64 {
    let m = n - 1.0;
    if m == 0.0 {
        return f1;
    }
    f1 + (f_inf - f1) * m / alpha.hypot(m)
}

/// A noise-free curve drawn from the model.
pub fn sigmoid_curve(alpha: f64, f1: f64, f_inf: f64, n_values: Vec<usize>) -> Result<QfiCurve> {
    let density: Vec<f64> = n_values
        .iter()
        .map(|&n| sigmoid_model(n as f64, alpha, f1, f_inf))
        .collect();
    QfiCurve::from_densities(n_values, &density)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmoidFit {
    pub alpha: f64,
    pub f1: f64,
    pub f_inf: f64,
    /// Root-mean-square misfit over the curve.
    pub residual: f64,
    /// `f_inf` and `f_1` coincide, so every `alpha` fits; `alpha` is reported as 0.
    pub degenerate: bool,
}

impl SigmoidFit {
    pub fn model(&self, n: f64) -> f64 {
        sigmoid_model(n, self.alpha, self.f1, self.f_inf)
    }
}

/// Fits `alpha` with `f_1` taken from the `N = 1` point and `f_inf` from
/// [`estimate_rate`].
pub fn fit_alpha(curve: &QfiCurve) -> Result<SigmoidFit> {
    let rate = estimate_rate(curve)?;
    fit_alpha_with_rate(curve, rate.f_inf)
}

/// Least-squares `alpha >= 0` with both end values held fixed; uniform
/// weights over the points of the curve.
pub fn fit_alpha_with_rate(curve: &QfiCurve, f_inf: f64) -> Result<SigmoidFit> {
    if curve.len() < 3 {
        return Err(invalid_arg("sigmoid fit needs at least three points"));
    }
    if curve.n_values()[0] != 1 {
        return Err(invalid_arg("sigmoid fit needs the N = 1 point"));
    }
    if !f_inf.is_finite() {
        return Err(invalid_arg("QFI rate must be finite"));
    }
    let f1 = curve.densities()[0];
    let amp = f_inf - f1;
    let points: Vec<(f64, f64)> = curve
        .n_values()
        .iter()
        .zip(curve.densities())
        .map(|(&n, &f)| ((n - 1) as f64, f))
        .collect();
    let ss = |alpha: f64| -> f64 {
        points
            .iter()
            .map(|&(m, f)| {
                let r = f - sigmoid_model(m + 1.0, alpha, f1, f_inf);
                r * r
            })
            .sum()
    };
    let rms = |alpha: f64| (ss(alpha) / points.len() as f64).sqrt();

    if amp.abs() <= DEGENERATE_TOL * f1.abs().max(f_inf.abs()) || amp == 0.0 {
        return Ok(SigmoidFit {
            alpha: 0.0,
            f1,
            f_inf,
            residual: rms(0.0),
            degenerate: true,
        });
    }

    // d(ss)/d(alpha); the model's alpha-derivative is -amp m alpha / (alpha^2 + m^2)^{3/2}
    let dss = |alpha: f64| -> f64 {
        points
            .iter()
            .map(|&(m, f)| {
                let h = alpha.hypot(m);
                if h == 0.0 {
                    return 0.0;
                }
                let r = f - sigmoid_model(m + 1.0, alpha, f1, f_inf);
                2.0 * r * amp * m * alpha / (h * h * h)
            })
            .sum()
    };

    // Coarse log scan; the model only resolves alpha up to a few times the
    // largest N.
    let m_max = points.last().unwrap().0.max(1.0);
    let (lo, hi) = (1e-4_f64, 1e3 * m_max);
    let steps = 400;
    let mut grid = vec![0.0];
    grid.extend((0..=steps).map(|i| lo * (hi / lo).powf(i as f64 / steps as f64)));
    let values: Vec<f64> = grid.iter().map(|&a| ss(a)).collect();
    let best = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .unwrap();
    let alpha = if best + 1 == grid.len() {
        grid[best]
    } else {
        let a = grid[best.saturating_sub(1)];
        let b = grid[best + 1];
        refine(&ss, &dss, a, b)
    };
    Ok(SigmoidFit {
        alpha,
        f1,
        f_inf,
        residual: rms(alpha),
        degenerate: false,
    })
}

/// Minimizes `f` on `[a, b]`. When the derivative changes sign across the
/// bracket, bisection on its sign locates the minimum to full precision;
/// values of `f` alone only resolve it to about `sqrt(eps)`. Otherwise falls
/// back to golden section.
fn refine(f: &dyn Fn(f64) -> f64, df: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    if df(a) < 0.0 && df(b) > 0.0 {
        let (mut lo, mut hi) = (a, b);
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if df(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return 0.5 * (lo + hi);
    }
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..80 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Ancilla counts needed to reach `(1 - epsilon) f_inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NStar {
    /// Exact inversion of the model in its own index (`f_{n+1}` reaches the
    /// target at `n = exact`), clamped below at 1.
    pub exact: f64,
    /// `(alpha - 1)(f_1 + (1 - eps) f_inf) / sqrt(f_inf eps (2 f_1 + (2 - eps) f_inf))`.
    pub printed: f64,
    /// Small-`epsilon` form `alpha / sqrt(eps) * sqrt(f_inf / (f_inf - f_1))`.
    pub asymptotic: f64,
}

pub fn n_star(fit: &SigmoidFit, epsilon: f64) -> Result<NStar> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(invalid_arg(format!("epsilon {epsilon} outside (0, 1)")));
    }
    let SigmoidFit { alpha, f1, f_inf, .. } = *fit;
    let printed = (alpha - 1.0) * (f1 + (1.0 - epsilon) * f_inf)
        / (f_inf * epsilon * (2.0 * f1 + (2.0 - epsilon) * f_inf)).sqrt();
    let asymptotic = alpha / epsilon.sqrt() * (f_inf / (f_inf - f1)).sqrt();
    let exact = if fit.degenerate || alpha == 0.0 {
        1.0
    } else {
        let c = ((1.0 - epsilon) * f_inf - f1) / (f_inf - f1);
        if !(c > 0.0) {
            1.0
        } else if c >= 1.0 {
            f64::INFINITY
        } else {
            (alpha * c / (1.0 - c * c).sqrt()).max(1.0)
        }
    };
    Ok(NStar {
        exact,
        printed,
        asymptotic,
    })
}
