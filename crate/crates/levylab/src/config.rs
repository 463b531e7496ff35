//! Model specs parse from a flat key = value text format.
//!
//! Common keys: `kind`, `gaussian_coef`, `sidedness` (one_sided | two_sided).
//! Per-kind keys:
//! * `kind = stable` — `alpha`
//! * `kind = brownian` — `gaussian_coef` (> 0)
//! * `kind = piecewise_power` — `bands[i].c`, `bands[i].p`, `bands[i].lo`,
//!   `bands[i].hi` (`inf` allowed)
//! * `kind = example51` — `c1`, `c2`, `alpha`, `b_ratio` (breakpoints b_n =
//!   b_ratio^n), `depth`
//! * `kind = example52` — `alpha1`, `alpha2`, `depth` (band pairs), `slack`
//!   (breakpoints built inductively: b_{2k} = b_{2k-1}/(k+1), b_{2k+1} by
//!   bisection against the two mass constraints)
//! * `kind = tabulated` — repeated `knot = <x> <density>` lines
//!
//! `#` starts a comment. Builtin names accepted wherever a model file is
//! expected: `stable15`, `stable<digits>` (e.g. stable17 → α = 1.7),
//! `example51`, `example52`, `brownian`.

use crate::measure::{Band, LevyModel, Sidedness};
use crate::{Error, Result};
use std::collections::BTreeMap;

pub fn parse_model_str(text: &str) -> Result<LevyModel> {
    let mut kv: BTreeMap<String, String> = BTreeMap::new();
    let mut knots: Vec<(f64, f64)> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::Config(format!("line {}: expected key = value", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key == "knot" {
            let mut it = value.split_whitespace();
            let x = parse_f64(it.next().unwrap_or(""), lineno)?;
            let d = parse_f64(it.next().unwrap_or(""), lineno)?;
            knots.push((x, d));
        } else {
            kv.insert(key, value);
        }
    }
    let kind = kv
        .get("kind")
        .ok_or_else(|| Error::Config("missing key: kind".into()))?
        .clone();
    let get = |k: &str, default: Option<f64>| -> Result<f64> {
        match kv.get(k) {
            Some(v) => parse_f64(v, 0),
            None => default.ok_or_else(|| Error::Config(format!("missing key: {k}"))),
        }
    };
    let mut model = match kind.as_str() {
        "stable" => LevyModel::stable(get("alpha", None)?)?,
        "brownian" => LevyModel::brownian(get("gaussian_coef", Some(1.0))?)?,
        "piecewise_power" => {
            let mut bands = Vec::new();
            for i in 0.. {
                let prefix = format!("bands[{i}].");
                if !kv.contains_key(&format!("{prefix}c")) {
                    break;
                }
                bands.push(Band {
                    c: get(&format!("{prefix}c"), None)?,
                    p: get(&format!("{prefix}p"), None)?,
                    lo: get(&format!("{prefix}lo"), None)?,
                    hi: get(&format!("{prefix}hi"), None)?,
                });
            }
            if bands.is_empty() {
                return Err(Error::Config("piecewise_power needs bands[0].*".into()));
            }
            LevyModel::piecewise(bands)?
        }
        "example51" => LevyModel::octave_alternating(
            get("c1", Some(1.0))?,
            get("c2", Some(1.2))?,
            get("alpha", Some(1.5))?,
            get("b_ratio", Some(0.5))?,
            get("depth", Some(40.0))? as usize,
        )?,
        "example52" => LevyModel::sparse_heavy_bands(
            get("alpha1", Some(1.3))?,
            get("alpha2", Some(1.7))?,
            get("depth", Some(14.0))? as usize,
            get("slack", Some(0.01))?,
        )?,
        "tabulated" => LevyModel::tabulated(&knots)?,
        other => return Err(Error::Config(format!("unknown kind: {other}"))),
    };
    if let Some(v) = kv.get("gaussian_coef") {
        if kind != "brownian" {
            model = model.with_gaussian_coef(parse_f64(v, 0)?);
        }
    }
    if let Some(v) = kv.get("sidedness") {
        model = model.with_sidedness(match v.as_str() {
            "one_sided" => Sidedness::OneSided,
            "two_sided" => Sidedness::TwoSided,
            other => return Err(Error::Config(format!("unknown sidedness: {other}"))),
        });
    }
    Ok(model)
}

fn parse_f64(s: &str, lineno: usize) -> Result<f64> {
    if s == "inf" {
        return Ok(f64::INFINITY);
    }
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("line {}: bad number `{s}`", lineno + 1)))
}

/// Resolve a `--model` argument: builtin name or path to a config file.
pub fn resolve_model(arg: &str) -> Result<LevyModel> {
    if let Some(m) = builtin(arg)? {
        return Ok(m);
    }
    let text = std::fs::read_to_string(arg)
        .map_err(|e| Error::Config(format!("model `{arg}`: not a builtin and not readable ({e})")))?;
    parse_model_str(&text)
}

fn builtin(name: &str) -> Result<Option<LevyModel>> {
    Ok(match name {
        "example51" => Some(LevyModel::octave_alternating(1.0, 1.2, 1.5, 0.5, 40)?),
        "example52" => Some(LevyModel::sparse_heavy_bands(1.3, 1.7, 14, 0.01)?),
        "brownian" => Some(LevyModel::brownian(1.0)?),
        _ => {
            if let Some(digits) = name.strip_prefix("stable") {
                if !digits.is_empty() && digits.chars().all(|c| c.is_ascii_digit()) {
                    let alpha = format!("{}.{}", &digits[..1], &digits[1..])
                        .trim_end_matches('.')
                        .parse::<f64>()
                        .map_err(|_| Error::Config(format!("bad stable index in `{name}`")))?;
                    let mut m = LevyModel::stable(alpha)?;
                    m.label = name.to_string();
                    return Ok(Some(m));
                }
            }
            None
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_stable_config() {
        let m = parse_model_str("kind = stable\nalpha = 1.5\nsidedness = two_sided\n").unwrap();
        assert!((m.condition_ratio(1.0).unwrap() - 0.75).abs() < 1e-12);
    }

    #[test]
    fn parses_piecewise_bands() {
        let text = "
kind = piecewise_power
bands[0].c = 1.0
bands[0].p = 2.5
bands[0].lo = 0.0
bands[0].hi = 1.0
bands[1].c = 2.0
bands[1].p = 2.5
bands[1].lo = 1.0
bands[1].hi = inf
";
        let m = parse_model_str(text).unwrap();
        assert!((m.theta(0.5) - 0.5f64.powf(2.5)).abs() < 1e-12);
        assert!((m.theta(2.0) - 2.0 * 2.0f64.powf(2.5)).abs() < 1e-12);
    }

    #[test]
    fn builtins_resolve() {
        assert!(resolve_model("stable15").is_ok());
        assert!(resolve_model("example51").is_ok());
        assert!(resolve_model("example52").is_ok());
        assert!(resolve_model("brownian").is_ok());
        assert!(resolve_model("no-such-model").is_err());
    }

    #[test]
    fn parses_tabulated_knots() {
        let mut text = String::from("kind = tabulated\n");
        for i in -12..=12 {
            let x = 10f64.powf(i as f64 / 2.0);
            text.push_str(&format!("knot = {x:e} {:e}\n", x.powf(-2.5)));
        }
        let m = parse_model_str(&text).unwrap();
        assert!((m.condition_ratio(1.0).unwrap() - 1.5).abs() < 1e-3);
    }
}
