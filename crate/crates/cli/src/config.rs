//! Run configuration: a flat TOML file whose keys mirror [`RunConfig`].

use std::fmt;
use std::path::PathBuf;

use cvtherm::analysis::stride_grid;
use cvtherm::gaussian::DEFAULT_EPS_PHYS;
use cvtherm::{AncillaPrep, ModelParams, QfiMethod};
use serde::{Deserialize, Serialize};

/// Environment variables that supply tolerance defaults when the config
/// file leaves them out.
pub const ENV_EPS_PHYS: &str = "CVTHERM_EPS_PHYS";
pub const ENV_EPS_WILL: &str = "CVTHERM_EPS_WILL";

/// Largest accepted ancilla count; the joint covariance matrix alone is
/// `(2 N)^2` doubles.
pub const MAX_ANCILLAE: usize = 10_000;

/// Parameters that a sweep axis may vary.
pub const SWEEPABLE: [&str; 8] = [
    "temperature",
    "mode_frequency",
    "gamma_tau_se",
    "g_tau_sa",
    "h_tau_sa",
    "ancilla_r",
    "ancilla_phi",
    "ancilla_n_bar",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AncillaKind {
    Vacuum,
    Squeezed,
    Thermal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub temperature: f64,
    #[serde(default = "one")]
    pub mode_frequency: f64,
    pub gamma_tau_se: f64,
    pub g_tau_sa: f64,
    pub h_tau_sa: f64,

    #[serde(default = "vacuum")]
    pub ancilla_kind: AncillaKind,
    #[serde(default)]
    pub ancilla_r: f64,
    #[serde(default)]
    pub ancilla_phi: f64,
    #[serde(default)]
    pub ancilla_n_bar: f64,

    #[serde(default = "default_n_max")]
    pub n_max: usize,
    /// Evaluate every `n_stride`-th prefix (plus `N = 1` and `n_max`).
    #[serde(default = "one_usize")]
    pub n_stride: usize,
    #[serde(default = "default_method")]
    pub qfi_method: String,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep_values: Option<Vec<f64>>,
    /// Optional second axis; the grid is the outer product, first axis outermost.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep2_parameter: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep2_values: Option<Vec<f64>>,

    #[serde(default = "default_epsilons")]
    pub epsilons: Vec<f64>,

    #[serde(default = "default_bench_n")]
    pub bench_n_values: Vec<usize>,
    #[serde(default = "default_dense_max")]
    pub n_dense_max: usize,

    /// Fit a noise-free model curve instead of a simulated one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub synthetic_f_inf: Option<f64>,

    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,

    /// Slack on the uncertainty relation when validating covariance matrices.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_phys: Option<f64>,
    /// Slack on `nu >= 1/2` inside the Williamson decomposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_will: Option<f64>,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn vacuum() -> AncillaKind {
    AncillaKind::Vacuum
}
fn default_n_max() -> usize {
    200
}
fn default_method() -> String {
    QfiMethod::WilliamsonFast.name().to_string()
}
fn default_epsilons() -> Vec<f64> {
    vec![0.1, 0.01, 0.001]
}
fn default_bench_n() -> Vec<usize> {
    vec![4, 8, 12, 16, 20, 24, 64, 128, 256, 512]
}
fn default_dense_max() -> usize {
    24
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub key: Option<String>,
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (&self.line, &self.key) {
            (Some(l), Some(k)) => write!(f, "line {l}, key `{k}`: {}", self.message),
            (Some(l), None) => write!(f, "line {l}: {}", self.message),
            (None, Some(k)) => write!(f, "key `{k}`: {}", self.message),
            (None, None) => f.write_str(&self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

/// 1-based line of the first `key = ...` assignment in `src`.
fn line_of(src: &str, key: &str) -> Option<usize> {
    src.lines().position(|l| {
        let t = l.trim_start();
        t.strip_prefix(key)
            .is_some_and(|rest| rest.trim_start().starts_with('='))
    })
    .map(|i| i + 1)
}

fn backticked(msg: &str) -> Option<String> {
    let start = msg.find('`')? + 1;
    let len = msg[start..].find('`')?;
    Some(msg[start..start + len].to_string())
}

impl RunConfig {
    /// Parses and validates a config file. Tolerances missing from the file
    /// are taken from the environment, then from the library defaults.
    pub fn parse(src: &str) -> Result<Self, ConfigError> {
        let mut cfg: RunConfig = toml::from_str(src).map_err(|e| {
            let line = e
                .span()
                .filter(|s| s.start > 0 || s.end < src.len())
                .map(|s| src[..s.start.min(src.len())].matches('\n').count() + 1);
            let key = backticked(e.message());
            let line = line.or_else(|| key.as_deref().and_then(|k| line_of(src, k)));
            ConfigError {
                key,
                line,
                message: e.message().trim().to_string(),
            }
        })?;
        cfg.apply_env()?;
        cfg.validate().map_err(|(key, message)| ConfigError {
            line: line_of(src, key),
            key: Some(key.to_string()),
            message,
        })?;
        Ok(cfg)
    }

    fn apply_env(&mut self) -> Result<(), ConfigError> {
        for (var, slot) in [(ENV_EPS_PHYS, &mut self.eps_phys), (ENV_EPS_WILL, &mut self.eps_will)] {
            if slot.is_some() {
                continue;
            }
            if let Ok(v) = std::env::var(var) {
                let parsed: f64 = v.trim().parse().map_err(|_| ConfigError {
                    key: Some(var.to_string()),
                    line: None,
                    message: format!("environment value {v:?} is not a number"),
                })?;
                *slot = Some(parsed);
            }
        }
        Ok(())
    }

    fn validate(&self) -> Result<(), (&'static str, String)> {
        let finite = [
            ("temperature", self.temperature),
            ("mode_frequency", self.mode_frequency),
            ("gamma_tau_se", self.gamma_tau_se),
            ("g_tau_sa", self.g_tau_sa),
            ("h_tau_sa", self.h_tau_sa),
            ("ancilla_r", self.ancilla_r),
            ("ancilla_phi", self.ancilla_phi),
            ("ancilla_n_bar", self.ancilla_n_bar),
        ];
        for (k, v) in finite {
            if !v.is_finite() {
                return Err((k, format!("must be finite, got {v}")));
            }
        }
        if self.temperature <= 0.0 {
            return Err(("temperature", "must be positive".into()));
        }
        if self.mode_frequency <= 0.0 {
            return Err(("mode_frequency", "must be positive".into()));
        }
        if self.gamma_tau_se < 0.0 {
            return Err(("gamma_tau_se", "must be nonnegative".into()));
        }
        if self.ancilla_n_bar < 0.0 {
            return Err(("ancilla_n_bar", "must be nonnegative".into()));
        }
        if self.n_max == 0 || self.n_max > MAX_ANCILLAE {
            return Err(("n_max", format!("must lie in 1..={MAX_ANCILLAE}")));
        }
        if self.n_stride == 0 {
            return Err(("n_stride", "must be at least 1".into()));
        }
        if self.qfi_method.parse::<QfiMethod>().is_err() {
            let names: Vec<&str> = QfiMethod::ALL.iter().map(|m| m.name()).collect();
            return Err(("qfi_method", format!("unknown method {:?}; expected one of {names:?}", self.qfi_method)));
        }
        for (pk, vk, p, v) in [
            ("sweep_parameter", "sweep_values", &self.sweep_parameter, &self.sweep_values),
            ("sweep2_parameter", "sweep2_values", &self.sweep2_parameter, &self.sweep2_values),
        ] {
            match (p, v) {
                (None, None) => {}
                (Some(name), Some(vals)) => {
                    if !SWEEPABLE.contains(&name.as_str()) {
                        return Err((pk, format!("cannot sweep {name:?}; expected one of {SWEEPABLE:?}")));
                    }
                    if vals.is_empty() || vals.iter().any(|x| !x.is_finite()) {
                        return Err((vk, "must be a non-empty list of finite numbers".into()));
                    }
                }
                (Some(_), None) => return Err((vk, format!("required when {pk} is set"))),
                (None, Some(_)) => return Err((pk, format!("required when {vk} is set"))),
            }
        }
        if self.sweep2_parameter.is_some() && self.sweep_parameter.is_none() {
            return Err(("sweep_parameter", "a second sweep axis needs a first".into()));
        }
        if self.sweep2_parameter.is_some() && self.sweep2_parameter == self.sweep_parameter {
            return Err(("sweep2_parameter", "must differ from sweep_parameter".into()));
        }
        if self.epsilons.iter().any(|e| !(*e > 0.0 && *e < 1.0)) {
            return Err(("epsilons", "every entry must lie in (0, 1)".into()));
        }
        if self.bench_n_values.is_empty()
            || self.bench_n_values[0] == 0
            || self.bench_n_values.windows(2).any(|w| w[0] >= w[1])
            || *self.bench_n_values.last().unwrap() > MAX_ANCILLAE
        {
            return Err((
                "bench_n_values",
                format!("must be a strictly increasing list of counts in 1..={MAX_ANCILLAE}"),
            ));
        }
        let synthetic = [
            ("synthetic_alpha", self.synthetic_alpha),
            ("synthetic_f1", self.synthetic_f1),
            ("synthetic_f_inf", self.synthetic_f_inf),
        ];
        if synthetic.iter().any(|(_, v)| v.is_some()) {
            for (k, v) in synthetic {
                match v {
                    None => return Err((k, "all three synthetic_* keys must be given together".into())),
                    Some(x) if !x.is_finite() => return Err((k, "must be finite".into())),
                    _ => {}
                }
            }
            if self.synthetic_alpha.unwrap() < 0.0 {
                return Err(("synthetic_alpha", "must be nonnegative".into()));
            }
            if self.n_max < 3 {
                return Err(("n_max", "a synthetic fit needs at least 3 points".into()));
            }
        }
        for (k, v) in [("eps_phys", self.eps_phys), ("eps_will", self.eps_will)] {
            if let Some(x) = v {
                if !(x >= 0.0 && x.is_finite()) {
                    return Err((k, "must be a finite nonnegative number".into()));
                }
            }
        }
        Ok(())
    }

    pub fn method(&self) -> QfiMethod {
        self.qfi_method.parse().expect("validated")
    }

    pub fn eps_phys(&self) -> f64 {
        self.eps_phys.unwrap_or(DEFAULT_EPS_PHYS)
    }

    pub fn eps_will(&self) -> f64 {
        self.eps_will.unwrap_or(cvtherm::qfi::DEFAULT_EPS_WILL)
    }

    pub fn grid(&self) -> Vec<usize> {
        stride_grid(self.n_max, self.n_stride)
    }

    pub fn model(&self) -> ModelParams {
        let ancilla = match self.ancilla_kind {
            AncillaKind::Vacuum => AncillaPrep::Vacuum,
            AncillaKind::Squeezed => AncillaPrep::Squeezed {
                r: self.ancilla_r,
                phi: self.ancilla_phi,
            },
            AncillaKind::Thermal => AncillaPrep::Thermal {
                n_bar: self.ancilla_n_bar,
            },
        };
        ModelParams {
            temperature: self.temperature,
            mode_frequency: self.mode_frequency,
            gamma_tau_se: self.gamma_tau_se,
            g_tau_sa: self.g_tau_sa,
            h_tau_sa: self.h_tau_sa,
            ancilla,
        }
    }

    pub fn is_sweep(&self) -> bool {
        self.sweep_parameter.is_some()
    }

    /// The configs of every sweep point in grid order, each with the swept
    /// values substituted and the sweep keys removed. A config without a
    /// sweep yields itself.
    pub fn sweep_points(&self) -> Vec<SweepPoint> {
        let axis = |p: &Option<String>, v: &Option<Vec<f64>>| -> Vec<(Option<String>, f64)> {
            match (p, v) {
                (Some(p), Some(v)) => v.iter().map(|&x| (Some(p.clone()), x)).collect(),
                _ => vec![(None, 0.0)],
            }
        };
        let mut out = Vec::new();
        for (p1, x1) in axis(&self.sweep_parameter, &self.sweep_values) {
            for (p2, x2) in axis(&self.sweep2_parameter, &self.sweep2_values) {
                let mut cfg = self.clone();
                cfg.sweep_parameter = None;
                cfg.sweep_values = None;
                cfg.sweep2_parameter = None;
                cfg.sweep2_values = None;
                let mut coords = Vec::new();
                for (p, x) in [(p1.clone(), x1), (p2, x2)] {
                    if let Some(p) = p {
                        cfg.set(&p, x);
                        coords.push((p, x));
                    }
                }
                out.push(SweepPoint { config: cfg, coords });
            }
        }
        out
    }

    fn set(&mut self, name: &str, value: f64) {
        let slot = match name {
            "temperature" => &mut self.temperature,
            "mode_frequency" => &mut self.mode_frequency,
            "gamma_tau_se" => &mut self.gamma_tau_se,
            "g_tau_sa" => &mut self.g_tau_sa,
            "h_tau_sa" => &mut self.h_tau_sa,
            "ancilla_r" => &mut self.ancilla_r,
            "ancilla_phi" => &mut self.ancilla_phi,
            "ancilla_n_bar" => &mut self.ancilla_n_bar,
            _ => unreachable!("validated sweep parameter"),
        };
        *slot = value;
    }

    /// Re-checks a sweep point; swept values bypass the file-level checks.
    pub fn validate_point(&self) -> Result<(), ConfigError> {
        self.validate().map_err(|(key, message)| ConfigError {
            key: Some(key.to_string()),
            line: None,
            message,
        })
    }

    /// The effective configuration as TOML, tolerances resolved.
    pub fn to_toml(&self) -> String {
        let mut resolved = self.clone();
        resolved.eps_phys = Some(self.eps_phys());
        resolved.eps_will = Some(self.eps_will());
        resolved.output = None;
        toml::to_string(&resolved).expect("config serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub config: RunConfig,
    /// `(parameter, value)` for each sweep axis.
    pub coords: Vec<(String, f64)>,
}
