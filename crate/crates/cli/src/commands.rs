//! The four subcommands. Each returns the full output text plus the sweep
//! points that turned out unstable, so the caller can still write the file
//! before exiting with code 2.

use std::fmt::Write as _;
use std::time::Instant;

use cvtherm::analysis::{fit_alpha_with_rate, estimate_rate, n_star, sigmoid_curve, QfiCurve};
use cvtherm::qfi::qfi_with_tolerance;
use cvtherm::{simulate_chain, ChainOutput, QfiMethod, StateWithGradient};
use rayon::prelude::*;
use serde_json::{Map, Value};

use crate::config::{RunConfig, SweepPoint};
use crate::format::{json_num, num, preamble};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Steady,
    Curve,
    Fit,
    Bench,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub body: String,
    /// One message per sweep point without a stable steady state.
    pub unstable: Vec<String>,
}

pub fn run(cmd: Command, cfg: &RunConfig) -> Result<Report, CliError> {
    match cmd {
        Command::Steady => steady(cfg),
        Command::Curve => curve(cfg),
        Command::Fit => fit(cfg),
        Command::Bench => bench(cfg),
    }
}

fn points(cfg: &RunConfig) -> Result<Vec<SweepPoint>, CliError> {
    let pts = cfg.sweep_points();
    for p in &pts {
        p.config.validate_point()?;
    }
    Ok(pts)
}

fn describe(p: &SweepPoint) -> String {
    if p.coords.is_empty() {
        return "configured parameters".into();
    }
    p.coords
        .iter()
        .map(|(k, v)| format!("{k} = {v}"))
        .collect::<Vec<_>>()
        .join(", ")
}

fn instability(p: &SweepPoint) -> Result<String, CliError> {
    let rho = p.config.model().steady_state()?.spectral_radius;
    Ok(format!("no stable steady state (spectral radius {rho}) at {}", describe(p)))
}

fn insert_coords(obj: &mut Map<String, Value>, p: &SweepPoint) {
    for (k, v) in &p.coords {
        obj.insert(k.clone(), json_num(*v));
    }
}

fn render_json(objs: Vec<Map<String, Value>>, sweep: bool) -> String {
    let v = if sweep {
        Value::Array(objs.into_iter().map(Value::Object).collect())
    } else {
        Value::Object(objs.into_iter().next().expect("one point"))
    };
    let mut s = serde_json::to_string_pretty(&v).expect("json serializes");
    s.push('\n');
    s
}

fn check_physical(st: &StateWithGradient, eps_phys: f64, what: &str) -> Result<(), CliError> {
    let rep = st.cm.validate(eps_phys);
    if rep.passed {
        Ok(())
    } else {
        Err(CliError::Runtime(format!(
            "{what} violates the uncertainty relation (min eigenvalue {:e}, eps_phys {eps_phys:e})",
            rep.min_eigenvalue
        )))
    }
}

pub fn steady(cfg: &RunConfig) -> Result<Report, CliError> {
    let pts = points(cfg)?;
    let results: Vec<Result<Map<String, Value>, CliError>> = pts
        .par_iter()
        .map(|p| {
            let c = &p.config;
            let model = c.model();
            let ss = model.steady_state()?;
            let mut obj = Map::new();
            insert_coords(&mut obj, p);
            obj.insert("stable".into(), Value::from(ss.stable));
            obj.insert("spectral_radius".into(), json_num(ss.spectral_radius));
            obj.insert("linear_spectral_radius".into(), json_num(ss.linear_spectral_radius));
            let keys = [
                ("sigma_xx", "dsigma_xx", 0, 0),
                ("sigma_xp", "dsigma_xp", 0, 1),
                ("sigma_pp", "dsigma_pp", 1, 1),
            ];
            match &ss.state {
                Some(st) => {
                    check_physical(st, c.eps_phys(), "steady state")?;
                    for (k, dk, i, j) in keys {
                        obj.insert(k.into(), json_num(st.cm.as_matrix()[(i, j)]));
                        obj.insert(dk.into(), json_num(st.grad[(i, j)]));
                    }
                    let nu = st.cm.as_matrix().determinant().sqrt();
                    obj.insert("effective_occupation".into(), json_num(nu - 0.5));
                    let f = qfi_with_tolerance(st, QfiMethod::WilliamsonFast, c.eps_will())?;
                    obj.insert("system_qfi".into(), json_num(f.value));
                }
                None => {
                    for (k, dk, _, _) in keys {
                        obj.insert(k.into(), Value::Null);
                        obj.insert(dk.into(), Value::Null);
                    }
                    obj.insert("effective_occupation".into(), Value::Null);
                    obj.insert("system_qfi".into(), Value::Null);
                }
            }
            Ok(obj)
        })
        .collect();
    let mut objs = Vec::with_capacity(results.len());
    let mut unstable = Vec::new();
    for (p, r) in pts.iter().zip(results) {
        let obj = r?;
        if obj["stable"] == Value::Bool(false) {
            unstable.push(instability(p)?);
        }
        objs.push(obj);
    }
    Ok(Report {
        body: render_json(objs, cfg.is_sweep()),
        unstable,
    })
}

/// The QFI curve of one parameter point on the configured grid, with
/// prefixes evaluated in parallel. `Ok(None)` means unstable.
fn point_curve(c: &RunConfig) -> Result<Option<QfiCurve>, CliError> {
    let model = c.model();
    let grid = c.grid();
    let chain = match simulate_chain(&model.chain_config(c.n_max)?) {
        Ok(ch) => ch,
        Err(cvtherm::Error::Unstable { .. }) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let ss = chain.steady_state().state.as_ref().expect("stable chain has a steady state");
    check_physical(ss, c.eps_phys(), "steady state")?;
    let values = grid
        .par_iter()
        .map(|&n| prefix_qfi(&chain, n, c))
        .collect::<Result<Vec<f64>, CliError>>()?;
    Ok(Some(QfiCurve::new(grid, values)?.with_params(model)))
}

fn prefix_qfi(chain: &ChainOutput, n: usize, c: &RunConfig) -> Result<f64, CliError> {
    let st = chain.prefix(n)?;
    let method = c.method();
    if method.is_dense() {
        // the Williamson path checks nu >= 1/2 itself
        check_physical(&st, c.eps_phys(), &format!("ancilla state at N = {n}"))?;
    }
    Ok(qfi_with_tolerance(&st, method, c.eps_will())?.value.max(0.0))
}

pub fn curve(cfg: &RunConfig) -> Result<Report, CliError> {
    let pts = points(cfg)?;
    let curves: Vec<Result<Option<QfiCurve>, CliError>> = pts.par_iter().map(|p| point_curve(&p.config)).collect();

    let mut body = preamble(&cfg.to_toml());
    let coord_names: Vec<&str> = pts[0].coords.iter().map(|(k, _)| k.as_str()).collect();
    for k in &coord_names {
        write!(body, "{k},").unwrap();
    }
    if cfg.is_sweep() {
        body.push_str("stable,");
    }
    body.push_str("N,qfi,qfi_density\n");

    let mut unstable = Vec::new();
    for (p, r) in pts.iter().zip(curves) {
        let c = r?;
        if c.is_none() {
            let msg = instability(p)?;
            if !cfg.is_sweep() {
                return Err(CliError::Unstable(msg));
            }
            unstable.push(msg);
        }
        let grid = p.config.grid();
        for (i, &n) in grid.iter().enumerate() {
            for (_, v) in &p.coords {
                write!(body, "{},", num(*v)).unwrap();
            }
            if cfg.is_sweep() {
                body.push_str(if c.is_some() { "true," } else { "false," });
            }
            let (f, d) = c.as_ref().map_or((f64::NAN, f64::NAN), |c| (c.qfi()[i], c.densities()[i]));
            writeln!(body, "{n},{},{}", num(f), num(d)).unwrap();
        }
    }
    Ok(Report { body, unstable })
}

pub fn fit(cfg: &RunConfig) -> Result<Report, CliError> {
    let pts = points(cfg)?;
    let results: Vec<Result<Option<Map<String, Value>>, CliError>> = pts
        .par_iter()
        .map(|p| {
            let c = &p.config;
            let (curve, f_inf, synthetic) = match (c.synthetic_alpha, c.synthetic_f1, c.synthetic_f_inf) {
                (Some(a), Some(f1), Some(fi)) => (sigmoid_curve(a, f1, fi, c.grid())?, fi, true),
                _ => match point_curve(c)? {
                    Some(curve) => {
                        let fi = estimate_rate(&curve)?.f_inf;
                        (curve, fi, false)
                    }
                    None => return Ok(None),
                },
            };
            let rate = estimate_rate(&curve)?;
            let sf = fit_alpha_with_rate(&curve, f_inf)?;
            let mut obj = Map::new();
            insert_coords(&mut obj, p);
            obj.insert("synthetic".into(), Value::from(synthetic));
            obj.insert("n_points".into(), Value::from(curve.len()));
            obj.insert("n_max".into(), Value::from(curve.n_max()));
            obj.insert("alpha".into(), json_num(sf.alpha));
            obj.insert("f1".into(), json_num(sf.f1));
            obj.insert("f_inf".into(), json_num(sf.f_inf));
            obj.insert("residual".into(), json_num(sf.residual));
            obj.insert("degenerate".into(), Value::from(sf.degenerate));
            obj.insert("rate_converged".into(), Value::from(rate.converged));
            obj.insert("rate_drift".into(), json_num(rate.drift));
            let mut exact = Vec::new();
            let mut printed = Vec::new();
            let mut asym = Vec::new();
            for &eps in &c.epsilons {
                let ns = n_star(&sf, eps)?;
                exact.push(json_num(ns.exact));
                printed.push(json_num(ns.printed));
                asym.push(json_num(ns.asymptotic));
            }
            obj.insert("epsilons".into(), Value::Array(c.epsilons.iter().map(|&e| json_num(e)).collect()));
            obj.insert("n_star".into(), Value::Array(exact));
            obj.insert("n_star_closed_form".into(), Value::Array(printed));
            obj.insert("n_star_asymptotic".into(), Value::Array(asym));
            Ok(Some(obj))
        })
        .collect();

    let mut objs = Vec::new();
    let mut unstable = Vec::new();
    for (p, r) in pts.iter().zip(results) {
        match r? {
            Some(o) => objs.push(o),
            None => {
                let msg = instability(p)?;
                if !cfg.is_sweep() {
                    return Err(CliError::Unstable(msg));
                }
                unstable.push(msg);
                let mut o = Map::new();
                insert_coords(&mut o, p);
                o.insert("stable".into(), Value::from(false));
                objs.push(o);
            }
        }
    }
    Ok(Report {
        body: render_json(objs, cfg.is_sweep()),
        unstable,
    })
}

/// Minimum wall time over repeated runs; repeats stop after this much total.
const BENCH_BUDGET_SECS: f64 = 0.2;
const BENCH_MAX_REPEATS: usize = 5;

/// Times every method at every size, one run at a time so the timings do not
/// contend. Sweep keys are ignored.
pub fn bench(cfg: &RunConfig) -> Result<Report, CliError> {
    let n_top = *cfg.bench_n_values.last().expect("validated non-empty");
    let chain = simulate_chain(&cfg.model().chain_config(n_top)?)?;
    let mut body = preamble(&cfg.to_toml());
    body.push_str("N,method,seconds,qfi\n");
    for &n in &cfg.bench_n_values {
        let st = chain.prefix(n)?;
        for m in QfiMethod::ALL {
            if m.is_dense() && n > cfg.n_dense_max {
                continue;
            }
            let mut best = f64::INFINITY;
            let mut total = 0.0;
            let mut value = 0.0;
            for _ in 0..BENCH_MAX_REPEATS {
                let t0 = Instant::now();
                value = qfi_with_tolerance(&st, m, cfg.eps_will())?.value;
                let dt = t0.elapsed().as_secs_f64();
                best = best.min(dt);
                total += dt;
                if total >= BENCH_BUDGET_SECS {
                    break;
                }
            }
            writeln!(body, "{n},{m},{},{}", num(best), num(value)).unwrap();
        }
    }
    Ok(Report {
        body,
        unstable: Vec::new(),
    })
}
