//! Number formatting shared by the writers.

/// 17 significant digits, which round-trips every `f64`.
pub fn num(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// A JSON number with the same 17 digits as [`num`]; `null` when not finite.
pub fn json_num(x: f64) -> serde_json::Value {
    if x.is_finite() {
        serde_json::Value::Number(num(x).parse().expect("formatted float is a JSON number"))
    } else {
        serde_json::Value::Null
    }
}

/// Commented preamble: tool version then the effective config.
pub fn preamble(config_toml: &str) -> String {
    let mut out = format!("# cvtherm {}\n", crate::VERSION);
    for line in config_toml.lines() {
        out.push_str("# ");
        out.push_str(line);
        out.push('\n');
    }
    out
}
