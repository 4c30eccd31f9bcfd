//! Run configuration: ranges, grid descriptions, config files and flag merging.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::model::{CriticalTime, ModelParams};
use crate::ode::IntegratorConfig;

/// Invalid or incomplete configuration (exit code 2).
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{0}")]
pub struct ConfigError(pub String);

fn cfg_err<T>(msg: impl Into<String>) -> Result<T, ConfigError> {
    Err(ConfigError(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Linear,
    Log,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum MethodChoice {
    Ode,
    Integral,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Compute,
    Grid,
    Bounds,
    Asymptotics,
    Verify,
}

/// `min:max:count` on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Range {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl FromStr for Range {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let [min, max, count] = parts.as_slice() else {
            return cfg_err(format!("range must look like min:max:count, got '{s}'"));
        };
        let num = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| ConfigError(format!("bad number '{t}' in range '{s}'")))
        };
        let count = count
            .trim()
            .parse::<usize>()
            .map_err(|_| ConfigError(format!("bad count '{count}' in range '{s}'")))?;
        Ok(Range { min: num(min)?, max: num(max)?, count })
    }
}

impl Range {
    /// Nodes from `min` to `max` inclusive; the last node is exactly `max`.
    pub fn nodes(&self, spacing: Spacing) -> Vec<f64> {
        let n = self.count;
        if n == 1 {
            return vec![self.min];
        }
        (0..n)
            .map(|k| {
                if k == 0 {
                    return self.min;
                }
                if k + 1 == n {
                    return self.max;
                }
                let f = k as f64 / (n - 1) as f64;
                match spacing {
                    Spacing::Linear => self.min + (self.max - self.min) * f,
                    Spacing::Log => 10f64.powf(self.min.log10() + (self.max.log10() - self.min.log10()) * f),
                }
            })
            .collect()
    }

    fn validate(&self, axis: &str, spacing: Spacing, min_count: usize) -> Result<(), ConfigError> {
        if !(self.min.is_finite() && self.max.is_finite()) || !(self.min < self.max) {
            return cfg_err(format!("{axis} range needs finite min < max, got {self:?}"));
        }
        if self.count < min_count {
            return cfg_err(format!("{axis} range needs at least {min_count} nodes"));
        }
        if spacing == Spacing::Log && !(self.min > 0.0) {
            return cfg_err(format!("log spacing on {axis} needs min > 0"));
        }
        Ok(())
    }
}

/// Rectangular sweep of initial data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub x: Range,
    pub y: Range,
    pub spacing: Spacing,
}

impl GridSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.x.validate("x", self.spacing, 2)?;
        self.y.validate("y", self.spacing, 2)?;
        if self.x.min < 0.0 || self.y.min < 0.0 {
            return cfg_err("grid coordinates must be >= 0");
        }
        Ok(())
    }

    /// Nodes in row-major order: `y` outer, `x` inner.
    pub fn nodes(&self) -> Vec<(f64, f64)> {
        let xs = self.x.nodes(self.spacing);
        self.y
            .nodes(self.spacing)
            .into_iter()
            .flat_map(|y| xs.iter().map(move |&x| (x, y)))
            .collect()
    }
}

/// A ray through increasing total mass `r = x + y` (or `r = x`, `r = y` for the fixed variants).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Ray {
    /// `x = share r`, `y = (1 - share) r`.
    Share(f64),
    /// `y` fixed, `x = r`.
    FixedY(f64),
    /// `x` fixed, `y = r`.
    FixedX(f64),
}

impl FromStr for Ray {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, value) = s
            .split_once(':')
            .ok_or_else(|| ConfigError(format!("ray must be share:F, fixed-y:Y or fixed-x:X, got '{s}'")))?;
        let v: f64 = value
            .trim()
            .parse()
            .map_err(|_| ConfigError(format!("bad number in ray '{s}'")))?;
        match kind.trim() {
            "share" if (0.0..=1.0).contains(&v) => Ok(Ray::Share(v)),
            "share" => cfg_err(format!("ray share must be in [0, 1], got {v}")),
            "fixed-y" if v >= 0.0 => Ok(Ray::FixedY(v)),
            "fixed-x" if v >= 0.0 => Ok(Ray::FixedX(v)),
            _ => cfg_err(format!("unknown or invalid ray '{s}'")),
        }
    }
}

impl Ray {
    pub fn point(&self, r: f64) -> (f64, f64) {
        match *self {
            Ray::Share(f) => (f * r, (1.0 - f) * r),
            Ray::FixedY(y) => (r, y),
            Ray::FixedX(x) => (x, r),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputSpec {
    pub path: Option<PathBuf>,
    pub format: Format,
}

/// Fully resolved configuration for one CLI run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    /// Required outside `verify`, which otherwise uses its built-in parameter sets.
    pub params: Option<ModelParams>,
    pub mode: Mode,
    pub method: MethodChoice,
    pub time: CriticalTime,
    pub point: Option<(f64, f64)>,
    pub grid: Option<GridSpec>,
    pub ray: Option<(Ray, Range)>,
    pub output: OutputSpec,
    pub tolerances: IntegratorConfig,
    /// Worker threads for sweeps; `None` uses every logical core.
    pub threads: Option<usize>,
    pub quick: bool,
    /// `verify` only: add `eps * x` to the `u` field in the residual check.
    pub perturb: Option<f64>,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        self.tolerances
            .validate()
            .map_err(|e| ConfigError(e.to_string()))?;
        if self.threads == Some(0) {
            return cfg_err("--threads must be >= 1");
        }
        if self.params.is_none() && self.mode != Mode::Verify {
            return cfg_err("--beta and --gamma are required");
        }
        match self.mode {
            Mode::Compute | Mode::Bounds => match self.point {
                Some((x, y)) if x >= 0.0 && y >= 0.0 && x.is_finite() && y.is_finite() => Ok(()),
                Some((x, y)) => cfg_err(format!("initial data must be finite and >= 0, got ({x}, {y})")),
                None => cfg_err("this mode requires a single point: --x and --y"),
            },
            Mode::Grid => match &self.grid {
                Some(g) => g.validate(),
                None => cfg_err("grid mode requires --x and --y ranges (min:max:count)"),
            },
            Mode::Asymptotics => match &self.ray {
                Some((_, r)) => r.validate("r", Spacing::Log, 1),
                None => cfg_err("asymptotics mode requires --ray and --r"),
            },
            Mode::Verify => Ok(()),
        }
    }
}

/// Flat `key -> value` settings read from a `--config` file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileConfig(pub BTreeMap<String, String>);

impl FileConfig {
    /// Parse either a JSON object or `key = value` lines (`#` starts a comment).
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let trimmed = text.trim_start();
        let mut map = BTreeMap::new();
        if trimmed.starts_with('{') {
            let value: serde_json::Value = serde_json::from_str(text)
                .map_err(|e| ConfigError(format!("config JSON: {e}")))?;
            let obj = value
                .as_object()
                .ok_or_else(|| ConfigError("config JSON must be an object".into()))?;
            for (k, v) in obj {
                let s = match v {
                    serde_json::Value::String(s) => s.clone(),
                    serde_json::Value::Number(n) => n.to_string(),
                    serde_json::Value::Bool(b) => b.to_string(),
                    other => return cfg_err(format!("config key '{k}' has unsupported value {other}")),
                };
                map.insert(normalize_key(k), s);
            }
        } else {
            for (lineno, line) in text.lines().enumerate() {
                let line = line.split('#').next().unwrap_or("").trim();
                if line.is_empty() {
                    continue;
                }
                let Some((k, v)) = line.split_once('=') else {
                    return cfg_err(format!("config line {}: expected key=value", lineno + 1));
                };
                map.insert(normalize_key(k.trim()), v.trim().to_string());
            }
        }
        Ok(FileConfig(map))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn get<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| ConfigError(format!("config key '{key}': cannot parse '{raw}'"))),
        }
    }

    pub fn get_enum<T: clap::ValueEnum>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some(raw) => T::from_str(raw, true)
                .map(Some)
                .map_err(|_| ConfigError(format!("config key '{key}': unknown value '{raw}'"))),
        }
    }
}

fn normalize_key(k: &str) -> String {
    k.trim().to_ascii_lowercase().replace('-', "_")
}

pub fn parse_time(s: &str) -> Result<CriticalTime, ConfigError> {
    match s.trim().to_ascii_lowercase().as_str() {
        "u" => Ok(CriticalTime::U),
        "v" => Ok(CriticalTime::V),
        other => cfg_err(format!("time must be 'u' or 'v', got '{other}'")),
    }
}
