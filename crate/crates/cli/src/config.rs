//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use bilip_core::separating::{MetricMode, ParamCurve};
use num_complex::Complex;

use crate::CliError;

pub const KEYS: &[&str] = &[
    "germ", "a", "b", "k", "t", "p", "q", "eps_min", "eps_max", "eps_steps", "n", "delta", "seed", "mode", "out",
    "curve1", "curve2",
];

/// Named germ families.
#[derive(Clone, Debug, PartialEq)]
pub enum Family {
    Brieskorn { a: u32, b: u32 },
    Ak { k: u32 },
    Bs { t: Complex<f64> },
    Horn { p: u32, q: u32 },
    /// The plane `x = 0`.
    Smooth,
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::Brieskorn { .. } => "brieskorn",
            Family::Ak { .. } => "ak",
            Family::Bs { .. } => "bs",
            Family::Horn { .. } => "horn",
            Family::Smooth => "smooth",
        }
    }
}

#[derive(Clone, Debug)]
pub struct ExperimentConfig {
    pub family: Family,
    pub eps_min: f64,
    pub eps_max: f64,
    pub eps_steps: usize,
    pub n: usize,
    pub delta: f64,
    pub seed: u64,
    pub mode: MetricMode,
    pub out: PathBuf,
    pub curve1: Option<ParamCurve>,
    pub curve2: Option<ParamCurve>,
    /// Every key with its resolved value, as recorded in the manifest.
    pub resolved: BTreeMap<String, String>,
}

/// Parses `key = value` lines; `#` starts a comment, `-` in keys reads as `_`.
pub fn parse_file(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Validation(format!("config line {}: expected key = value", i + 1)))?;
        let key = k.trim().replace('-', "_");
        if !KEYS.contains(&key.as_str()) {
            return Err(CliError::Validation(format!("config line {}: unknown key '{key}'", i + 1)));
        }
        map.insert(key, v.trim().to_string());
    }
    Ok(map)
}

fn parse_num<T: std::str::FromStr>(map: &BTreeMap<String, String>, key: &str, default: T) -> Result<T, CliError> {
    match map.get(key) {
        None => Ok(default),
        Some(v) => v.parse().map_err(|_| CliError::Validation(format!("bad value '{v}' for {key}"))),
    }
}

/// `1`, `-0.5`, `i`, or `re,im`.
pub fn parse_complex(s: &str) -> Result<Complex<f64>, CliError> {
    let bad = || CliError::Validation(format!("bad complex number '{s}'"));
    let s = s.trim();
    if s == "i" {
        return Ok(Complex::new(0.0, 1.0));
    }
    match s.split_once(',') {
        Some((re, im)) => Ok(Complex::new(re.trim().parse().map_err(|_| bad())?, im.trim().parse().map_err(|_| bad())?)),
        None => Ok(Complex::new(s.parse().map_err(|_| bad())?, 0.0)),
    }
}

impl ExperimentConfig {
    /// Resolves a key map, filling defaults; `default_family` applies when `germ` is absent.
    pub fn from_map(map: &BTreeMap<String, String>, default_family: &str) -> Result<Self, CliError> {
        for key in map.keys() {
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Validation(format!("unknown key '{key}'")));
            }
        }
        let mut resolved = BTreeMap::new();
        let germ = map.get("germ").cloned().unwrap_or_else(|| default_family.to_string());
        resolved.insert("germ".to_string(), germ.clone());
        let mut put = |k: &str, v: String| {
            resolved.insert(k.to_string(), v);
        };
        let family = match germ.as_str() {
            "brieskorn" => {
                let (a, b) = (parse_num(map, "a", 2u32)?, parse_num(map, "b", 3u32)?);
                if a < 1 || b < 2 {
                    return Err(CliError::Validation(format!("brieskorn needs a >= 1, b >= 2 (got {a}, {b})")));
                }
                put("a", a.to_string());
                put("b", b.to_string());
                Family::Brieskorn { a, b }
            }
            "ak" => {
                let k = parse_num(map, "k", 2u32)?;
                if !(1..=12).contains(&k) {
                    return Err(CliError::Validation(format!("ak needs 1 <= k <= 12 (got {k})")));
                }
                put("k", k.to_string());
                Family::Ak { k }
            }
            "bs" => {
                let t = match map.get("t") {
                    Some(s) => parse_complex(s)?,
                    None => Complex::new(0.0, 0.0),
                };
                put("t", format!("{},{}", t.re, t.im));
                Family::Bs { t }
            }
            "horn" => {
                let (p, q) = (parse_num(map, "p", 3u32)?, parse_num(map, "q", 2u32)?);
                if q < 1 || p < q {
                    return Err(CliError::Validation(format!("horn needs p >= q >= 1 (got {p}, {q})")));
                }
                put("p", p.to_string());
                put("q", q.to_string());
                Family::Horn { p, q }
            }
            "smooth" => Family::Smooth,
            other => return Err(CliError::Validation(format!("unknown germ family '{other}'"))),
        };
        let eps_min: f64 = parse_num(map, "eps_min", 1e-3)?;
        let eps_max: f64 = parse_num(map, "eps_max", 1e-1)?;
        let eps_steps = parse_num(map, "eps_steps", 5usize)?;
        let n = parse_num(map, "n", 1000usize)?;
        let delta: f64 = parse_num(map, "delta", 0.05)?;
        let seed = parse_num(map, "seed", 0u64)?;
        let mode: MetricMode = map.get("mode").map(String::as_str).unwrap_or("outer").parse().map_err(|e| CliError::Validation(format!("{e}")))?;
        let out = PathBuf::from(map.get("out").cloned().unwrap_or_else(|| "out".to_string()));
        if !(eps_min > 0.0 && eps_min.is_finite() && eps_max.is_finite()) {
            return Err(CliError::Validation("eps_min must be positive and finite".into()));
        }
        if eps_min >= eps_max {
            return Err(CliError::Validation(format!("empty radius window [{eps_min}, {eps_max}]")));
        }
        if eps_max > 1.0 {
            return Err(CliError::Validation("eps_max must be at most 1".into()));
        }
        if eps_steps < 2 {
            return Err(CliError::Validation("eps_steps must be at least 2".into()));
        }
        if n == 0 {
            return Err(CliError::Validation("n must be positive".into()));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CliError::Validation(format!("delta must lie in (0, 1), got {delta}")));
        }
        let curve = |key: &str| -> Result<Option<ParamCurve>, CliError> {
            map.get(key).map(|s| s.parse::<ParamCurve>().map_err(|e| CliError::Validation(format!("{key}: {e}")))).transpose()
        };
        let (curve1, curve2) = (curve("curve1")?, curve("curve2")?);
        put("eps_min", eps_min.to_string());
        put("eps_max", eps_max.to_string());
        put("eps_steps", eps_steps.to_string());
        put("n", n.to_string());
        put("delta", delta.to_string());
        put("seed", seed.to_string());
        put("mode", mode.as_str().to_string());
        put("out", out.display().to_string());
        if let Some(c) = &curve1 {
            put("curve1", c.to_string());
        }
        if let Some(c) = &curve2 {
            put("curve2", c.to_string());
        }
        Ok(Self { family, eps_min, eps_max, eps_steps, n, delta, seed, mode, out, curve1, curve2, resolved })
    }

    /// Radii from `eps_max` down to `eps_min`, log-spaced.
    pub fn radii(&self) -> Vec<f64> {
        bilip_core::fit::log_space_desc(self.eps_min, self.eps_max, self.eps_steps)
    }
}
