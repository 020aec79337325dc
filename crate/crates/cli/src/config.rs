//! Run configuration: a flat JSON object whose keys name model parameters and
//! sweep settings. Frequencies are rad/s numbers or strings with a unit
//! suffix (`5*kappa`, `35*omegaR`, `2pi*1.3MHz`).

use becck_core::meanfield::BranchSearch;
use becck_core::model::{ModelError, SystemParams};
use becck_core::sweep::{BranchPolicy, CkMode, Preset, SweepSpec, SweepVar, DEFAULT_COUNT};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use std::f64::consts::PI;
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("config key `{key}`: {reason}")]
pub struct ConfigError {
    pub key: String,
    pub reason: String,
}

fn err(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError {
        key: key.into(),
        reason: reason.into(),
    }
}

impl From<ModelError> for ConfigError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Domain { field, reason } => err(field, reason),
        }
    }
}

/// A frequency-like value as written in the file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Quantity {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Format {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "json-lines")]
    JsonLines,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n_atoms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub g0: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_a: Option<Quantity>,
    #[serde(rename = "omega_R", skip_serializing_if = "Option::is_none")]
    pub omega_r: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub omega_sw: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta_c: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<Quantity>,
    /// Kelvin.
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub temperature: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ck_enabled: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_var: Option<SweepVar>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_min: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_max: Option<Quantity>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ck_mode: Option<CkMode>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub branch_policy: Option<BranchPolicy>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<Preset>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub format: Option<Format>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
}

const KEYS: [&str; 22] = [
    "N", "g0", "delta_a", "omega_R", "omega_sw", "kappa", "gamma", "delta_c", "eta", "T", "ck_enabled",
    "sweep_var", "sweep_min", "sweep_max", "sweep_count", "ck_mode", "branch_policy", "preset", "out",
    "format", "workers", "grid_points",
];

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let value: Value = serde_json::from_str(text).map_err(|e| err("<file>", e.to_string()))?;
        let Value::Object(map) = value else {
            return Err(err("<file>", "expected a JSON object"));
        };
        if let Some(k) = map.keys().find(|k| !KEYS.contains(&k.as_str())) {
            return Err(err(k, "unknown key"));
        }
        serde_json::from_value(Value::Object(map.clone())).map_err(|whole| {
            // name the first key whose value does not parse on its own
            map.iter()
                .find_map(|(k, v)| {
                    let single = Map::from_iter([(k.clone(), v.clone())]);
                    serde_json::from_value::<RunConfig>(Value::Object(single))
                        .err()
                        .map(|e| err(k, e.to_string()))
                })
                .unwrap_or_else(|| err("<file>", whole.to_string()))
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}

/// Reference frequencies for unit suffixes.
#[derive(Debug, Clone, Copy)]
struct Units {
    kappa: Option<f64>,
    omega_r: Option<f64>,
}

fn hz_prefix(s: &str) -> Option<(&str, f64)> {
    for (suffix, scale) in [("GHz", 1e9), ("MHz", 1e6), ("kHz", 1e3), ("Hz", 1.0)] {
        if let Some(num) = s.strip_suffix(suffix) {
            return Some((num, scale));
        }
    }
    None
}

fn number(key: &str, s: &str) -> Result<f64, ConfigError> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(1.0);
    }
    s.parse::<f64>()
        .map_err(|_| err(key, format!("cannot read `{s}` as a number")))
}

/// Converts a value to rad/s.
fn parse_quantity(key: &str, q: &Quantity, units: Units) -> Result<f64, ConfigError> {
    let text = match q {
        Quantity::Number(x) => return Ok(*x),
        Quantity::Text(t) => t.trim(),
    };
    if let Some(rest) = text.strip_prefix("2pi*") {
        let (num, scale) = hz_prefix(rest.trim())
            .ok_or_else(|| err(key, format!("`{text}` must end in Hz, kHz, MHz or GHz")))?;
        return Ok(2.0 * PI * number(key, num)? * scale);
    }
    for (suffix, unit, name) in [("kappa", units.kappa, "kappa"), ("omegaR", units.omega_r, "omega_R")] {
        if let Some(num) = text.strip_suffix(suffix) {
            let unit = unit.ok_or_else(|| err(key, format!("`{name}` cannot be given in units of itself")))?;
            let num = num.trim_end();
            let num = num.strip_suffix('*').unwrap_or(num);
            let factor = match num.trim() {
                "-" => -1.0,
                n => number(key, n)?,
            };
            return Ok(factor * unit);
        }
    }
    number(key, text)
}

/// Everything a command needs, in rad/s.
#[derive(Debug, Clone, PartialEq)]
pub struct Resolved {
    pub params: SystemParams,
    pub sweep: Option<SweepSpec>,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub workers: Option<usize>,
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, ConfigError> {
        let exp = SystemParams::experimental();
        let none = Units {
            kappa: None,
            omega_r: None,
        };
        let kappa = self
            .kappa
            .as_ref()
            .map(|q| parse_quantity("kappa", q, none))
            .transpose()?
            .unwrap_or(exp.kappa);
        let omega_r = self
            .omega_r
            .as_ref()
            .map(|q| parse_quantity("omega_R", q, Units { kappa: Some(kappa), ..none }))
            .transpose()?
            .unwrap_or(exp.omega_r);
        let units = Units {
            kappa: Some(kappa),
            omega_r: Some(omega_r),
        };
        let get = |key: &str, q: &Option<Quantity>| q.as_ref().map(|q| parse_quantity(key, q, units)).transpose();

        let n_atoms = match self.n_atoms {
            None => exp.n_atoms,
            Some(n) if n >= 1.0 && n.fract() == 0.0 && n <= u64::MAX as f64 => n as u64,
            Some(n) => return Err(err("N", format!("must be a positive integer, got {n}"))),
        };
        let mut base = SystemParams {
            n_atoms,
            g0: get("g0", &self.g0)?.unwrap_or(exp.g0),
            delta_a: get("delta_a", &self.delta_a)?.unwrap_or(exp.delta_a),
            omega_r,
            kappa,
            gamma: get("gamma", &self.gamma)?.unwrap_or(1e-3 * kappa),
            temperature: self.temperature.unwrap_or(exp.temperature),
            ..exp
        };
        base.omega_sw = omega_r;
        let overrides = (
            get("delta_c", &self.delta_c)?,
            get("eta", &self.eta)?,
            get("omega_sw", &self.omega_sw)?,
        );
        let apply = |p: &mut SystemParams| {
            if let Some(v) = overrides.0 {
                p.delta_c = v;
            }
            if let Some(v) = overrides.1 {
                p.eta = v;
            }
            if let Some(v) = overrides.2 {
                p.omega_sw = v;
            }
            if let Some(ck) = self.ck_enabled {
                p.ck_enabled = ck;
            }
        };

        let sweep = match (self.preset, self.sweep_var) {
            (Some(preset), _) => Some(preset.spec(&base)),
            (None, Some(var)) => {
                let min = get("sweep_min", &self.sweep_min)?.ok_or_else(|| err("sweep_min", "required with sweep_var"))?;
                let max = get("sweep_max", &self.sweep_max)?.ok_or_else(|| err("sweep_max", "required with sweep_var"))?;
                Some(SweepSpec {
                    var,
                    min,
                    max,
                    count: DEFAULT_COUNT,
                    base,
                    ck_mode: CkMode::Paired,
                    branch_policy: BranchPolicy::All,
                    preset: None,
                    search: BranchSearch::default(),
                })
            }
            (None, None) => {
                for (key, present) in [
                    ("sweep_min", self.sweep_min.is_some()),
                    ("sweep_max", self.sweep_max.is_some()),
                    ("sweep_count", self.sweep_count.is_some()),
                    ("ck_mode", self.ck_mode.is_some()),
                    ("branch_policy", self.branch_policy.is_some()),
                ] {
                    if present {
                        return Err(err(key, "needs sweep_var or preset"));
                    }
                }
                None
            }
        };

        let sweep = match sweep {
            None => {
                apply(&mut base);
                base.validate()?;
                None
            }
            Some(mut spec) => {
                apply(&mut spec.base);
                if let Some(var) = self.sweep_var {
                    spec.var = var;
                }
                if let Some(v) = get("sweep_min", &self.sweep_min)? {
                    spec.min = v;
                }
                if let Some(v) = get("sweep_max", &self.sweep_max)? {
                    spec.max = v;
                }
                spec.count = self.sweep_count.unwrap_or(spec.count);
                spec.ck_mode = self.ck_mode.unwrap_or(spec.ck_mode);
                spec.branch_policy = self.branch_policy.unwrap_or(spec.branch_policy);
                if let Some(g) = self.grid_points {
                    spec.search.grid_points = g;
                }
                if spec.count < 2 {
                    return Err(err("sweep_count", format!("must be at least 2, got {}", spec.count)));
                }
                if !(spec.min.is_finite() && spec.max.is_finite() && spec.min < spec.max) {
                    return Err(err("sweep_min", format!("need sweep_min < sweep_max, got [{}, {}]", spec.min, spec.max)));
                }
                if spec.search.grid_points < 2 {
                    return Err(err("grid_points", "must be at least 2"));
                }
                spec.base.validate()?;
                spec.var.apply(&spec.base, spec.min).validate()?;
                spec.var.apply(&spec.base, spec.max).validate()?;
                base = spec.base;
                Some(spec)
            }
        };
        if self.workers == Some(0) {
            return Err(err("workers", "must be at least 1"));
        }
        Ok(Resolved {
            params: base,
            sweep,
            out: self.out.clone(),
            format: self.format.unwrap_or_default(),
            workers: self.workers,
        })
    }
}

impl Resolved {
    /// Fully explicit config in rad/s that resolves back to `self`.
    pub fn canonical(&self) -> RunConfig {
        let p = &self.params;
        let num = |x: f64| Some(Quantity::Number(x));
        let mut c = RunConfig {
            n_atoms: Some(p.n_atoms as f64),
            g0: num(p.g0),
            delta_a: num(p.delta_a),
            omega_r: num(p.omega_r),
            omega_sw: num(p.omega_sw),
            kappa: num(p.kappa),
            gamma: num(p.gamma),
            delta_c: num(p.delta_c),
            eta: num(p.eta),
            temperature: Some(p.temperature),
            ck_enabled: Some(p.ck_enabled),
            out: self.out.clone(),
            format: Some(self.format),
            workers: self.workers,
            ..RunConfig::default()
        };
        if let Some(s) = &self.sweep {
            c.sweep_var = Some(s.var);
            c.sweep_min = num(s.min);
            c.sweep_max = num(s.max);
            c.sweep_count = Some(s.count);
            c.ck_mode = Some(s.ck_mode);
            c.branch_policy = Some(s.branch_policy);
            c.preset = s.preset;
            c.grid_points = Some(s.search.grid_points);
        }
        c
    }
}
