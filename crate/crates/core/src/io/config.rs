//! JSON run configuration.
//!
//! ```json
//! {
//!   "delta": 0.3, "Omega": 10.0, "Tr_a": 40.0, "Tr_b": 30.0, "nbar": 0.5,
//!   "T_grid": {"start": 1.0, "stop": 60.0, "points": 512},
//!   "reduction": 0.5, "N_trunc": 3,
//!   "k12": "dfs", "k21": "dfs",
//!   "phase_offset": 0.0, "seed": 7, "ratio_grid": [0, 0.5, 0.7, 0.9, 1.0]
//! }
//! ```
//!
//! Required: `delta`, `Omega`, `Tr_a`, `Tr_b`, `nbar`, `T_grid`. `T_grid` is
//! either an explicit array or `{start, stop, points}` (512 points by
//! default). `k11`/`k22` override the effective decay constants derived from
//! `nbar` and the decay times; `k12`/`k21` accept a number or `"dfs"`, which
//! expands to `√(k11 k22)`. The shifts `delta11`, `delta22`, `delta12` and
//! `delta21` default to zero. In strict mode unknown keys are rejected.

use std::fmt;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::experiment::ExperimentConfig;
use crate::{Result, SystemParams, DEFAULT_N_TRUNC};

pub const DEFAULT_GRID_POINTS: usize = 512;
pub const DEFAULT_RATIO_GRID: [f64; 5] = [0.0, 0.5, 0.7, 0.9, 1.0];

const KNOWN_KEYS: [&str; 21] = [
    "delta",
    "Omega",
    "Tr_a",
    "Tr_b",
    "nbar",
    "T_grid",
    "reduction",
    "N_trunc",
    "k11",
    "k22",
    "k12",
    "k21",
    "delta11",
    "delta22",
    "delta12",
    "delta21",
    "phase_offset",
    "seed",
    "ratio_grid",
    "strict",
    "comment",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// JSON path of the offending value, e.g. `$.T_grid.points`.
    pub path: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "invalid configuration:")?;
        for v in &self.violations {
            write!(f, "\n  {}: {}", v.path, v.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

/// Settings that steer a run without entering the physics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunDirectives {
    pub n_trunc: usize,
    pub phase_offset: f64,
    pub seed: u64,
    pub ratio_grid: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadedConfig {
    /// Rates and shifts with frame frequencies `(δ, 0)`.
    pub params: SystemParams,
    pub experiment: ExperimentConfig,
    pub directives: RunDirectives,
}

struct Reader<'a> {
    obj: &'a Map<String, Value>,
    violations: Vec<Violation>,
}

impl<'a> Reader<'a> {
    fn fail(&mut self, path: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation { path: path.into(), message: message.into() });
    }

    fn number(&mut self, key: &str, default: Option<f64>) -> Option<f64> {
        match self.obj.get(key) {
            None => {
                if default.is_none() {
                    self.fail(format!("$.{key}"), "missing required field");
                }
                default
            }
            Some(v) => match v.as_f64() {
                Some(x) if x.is_finite() => Some(x),
                _ => {
                    self.fail(format!("$.{key}"), format!("expected a finite number, got {v}"));
                    None
                }
            },
        }
    }

    fn optional_number(&mut self, key: &str) -> Option<Option<f64>> {
        if self.obj.contains_key(key) {
            self.number(key, None).map(Some)
        } else {
            Some(None)
        }
    }

    fn positive(&mut self, key: &str) -> Option<f64> {
        let x = self.number(key, None)?;
        if x > 0.0 {
            Some(x)
        } else {
            self.fail(format!("$.{key}"), format!("must be > 0, got {x}"));
            None
        }
    }

    fn unsigned(&mut self, key: &str, default: u64) -> Option<u64> {
        match self.obj.get(key) {
            None => Some(default),
            Some(v) => match v.as_u64() {
                Some(x) => Some(x),
                None => {
                    self.fail(format!("$.{key}"), format!("expected a non-negative integer, got {v}"));
                    None
                }
            },
        }
    }

    fn number_list(&mut self, key: &str, value: &Value) -> Option<Vec<f64>> {
        let Some(items) = value.as_array() else {
            self.fail(format!("$.{key}"), "expected an array of numbers");
            return None;
        };
        let mut out = Vec::with_capacity(items.len());
        let mut ok = true;
        for (i, v) in items.iter().enumerate() {
            match v.as_f64() {
                Some(x) if x.is_finite() => out.push(x),
                _ => {
                    self.fail(format!("$.{key}[{i}]"), format!("expected a finite number, got {v}"));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }

    fn grid(&mut self) -> Option<Vec<f64>> {
        let Some(value) = self.obj.get("T_grid") else {
            self.fail("$.T_grid", "missing required field");
            return None;
        };
        if value.is_array() {
            let grid = self.number_list("T_grid", value)?;
            if grid.is_empty() {
                self.fail("$.T_grid", "must not be empty");
                return None;
            }
            if let Some(i) = grid.windows(2).position(|w| w[1] <= w[0]) {
                self.fail(format!("$.T_grid[{}]", i + 1), "entries must be strictly increasing");
                return None;
            }
            return Some(grid);
        }
        let Some(obj) = value.as_object() else {
            self.fail("$.T_grid", "expected an array or an object {start, stop, points}");
            return None;
        };
        for key in obj.keys() {
            if !["start", "stop", "points"].contains(&key.as_str()) {
                self.fail(format!("$.T_grid.{key}"), "unknown key");
            }
        }
        let mut sub = Reader { obj, violations: Vec::new() };
        let start = sub.number("start", None);
        let stop = sub.number("stop", None);
        let points = sub.unsigned("points", DEFAULT_GRID_POINTS as u64);
        let violations: Vec<Violation> = sub
            .violations
            .into_iter()
            .map(|v| Violation { path: v.path.replacen("$.", "$.T_grid.", 1), message: v.message })
            .collect();
        let failed = !violations.is_empty();
        self.violations.extend(violations);
        if failed {
            return None;
        }
        let (start, stop, points) = (start?, stop?, points? as usize);
        if points < 2 {
            self.fail("$.T_grid.points", format!("need at least 2 points, got {points}"));
            return None;
        }
        if stop <= start {
            self.fail("$.T_grid.stop", format!("must exceed start ({start}), got {stop}"));
            return None;
        }
        Some(linspace(start, stop, points))
    }

    fn cross_rate(&mut self, key: &str, dfs_value: Option<f64>) -> Option<f64> {
        match self.obj.get(key) {
            None => Some(0.0),
            Some(Value::String(s)) if s == "dfs" => dfs_value,
            Some(Value::String(s)) => {
                self.fail(format!("$.{key}"), format!("expected a number or \"dfs\", got \"{s}\""));
                None
            }
            Some(_) => self.number(key, None),
        }
    }
}

/// `points` evenly spaced values from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, points: usize) -> Vec<f64> {
    let step = (stop - start) / (points - 1) as f64;
    (0..points).map(|i| if i + 1 == points { stop } else { start + step * i as f64 }).collect()
}

/// Parses and validates a configuration document, collecting every violation.
pub fn parse_config(text: &str, strict: bool) -> std::result::Result<LoadedConfig, ConfigError> {
    let single = |path: &str, message: String| ConfigError {
        violations: vec![Violation { path: path.to_string(), message }],
    };
    let value: Value = serde_json::from_str(text).map_err(|e| single("$", format!("not valid JSON: {e}")))?;
    let obj = value.as_object().ok_or_else(|| single("$", "top level must be an object".to_string()))?;

    let mut r = Reader { obj, violations: Vec::new() };
    let strict = strict || obj.get("strict").and_then(Value::as_bool).unwrap_or(false);
    if strict {
        for key in obj.keys() {
            if !KNOWN_KEYS.contains(&key.as_str()) {
                r.fail(format!("$.{key}"), "unknown key");
            }
        }
    }

    let delta = r.number("delta", None);
    let omega = r.positive("Omega");
    let tr_a = r.positive("Tr_a");
    let tr_b = r.positive("Tr_b");
    let nbar = r.number("nbar", None);
    if let Some(n) = nbar {
        if n < 0.0 {
            r.fail("$.nbar", format!("must be >= 0, got {n}"));
        }
    }
    let reduction = r.number("reduction", Some(1.0));
    if let Some(x) = reduction {
        if !(0.0..=1.0).contains(&x) {
            r.fail("$.reduction", format!("must lie in [0, 1], got {x}"));
        }
    }
    let n_trunc = r.unsigned("N_trunc", DEFAULT_N_TRUNC as u64);
    if n_trunc == Some(0) {
        r.fail("$.N_trunc", "must be >= 1");
    }
    let grid = r.grid();

    let k11_override = r.optional_number("k11");
    let k22_override = r.optional_number("k22");
    let shifts: Vec<Option<f64>> =
        ["delta11", "delta22", "delta12", "delta21"].iter().map(|k| r.number(k, Some(0.0))).collect();
    let phase_offset = r.number("phase_offset", Some(0.0));
    let seed = r.unsigned("seed", 0);
    let ratio_grid = match obj.get("ratio_grid") {
        None => Some(DEFAULT_RATIO_GRID.to_vec()),
        Some(v) => r.number_list("ratio_grid", v),
    };

    let eff = |tr: Option<f64>| match (nbar, tr) {
        (Some(n), Some(t)) => Some((n + 1.0) / (2.0 * t)),
        _ => None,
    };
    let k11 = k11_override.and_then(|o| o.or_else(|| eff(tr_a)));
    let k22 = k22_override.and_then(|o| o.or_else(|| eff(tr_b)));
    for (key, k) in [("k11", k11), ("k22", k22)] {
        if let Some(k) = k {
            if k < 0.0 {
                r.fail(format!("$.{key}"), format!("must be >= 0, got {k}"));
            }
        }
    }
    let dfs_rate = match (k11, k22) {
        (Some(a), Some(b)) if a >= 0.0 && b >= 0.0 => Some((a * b).sqrt()),
        _ => None,
    };
    let k12 = r.cross_rate("k12", dfs_rate);
    let k21 = r.cross_rate("k21", dfs_rate);

    if let (Some(omega), Some(grid)) = (omega, &grid) {
        let prep = 3.0 * std::f64::consts::PI / (2.0 * omega);
        if let Some(i) = grid.iter().position(|&t| t < prep) {
            r.fail(format!("$.T_grid[{i}]"), format!("entry {} precedes the preparation time 3π/(2Ω) = {prep}", grid[i]));
        }
    }

    if !r.violations.is_empty() {
        return Err(ConfigError { violations: r.violations });
    }
    // every Option below is Some once no violation was recorded
    let delta = delta.expect("validated");
    let params = SystemParams {
        omega1: delta,
        omega2: 0.0,
        k11: k11.expect("validated"),
        k22: k22.expect("validated"),
        k12: k12.expect("validated"),
        k21: k21.expect("validated"),
        delta11: shifts[0].expect("validated"),
        delta22: shifts[1].expect("validated"),
        delta12: shifts[2].expect("validated"),
        delta21: shifts[3].expect("validated"),
    };
    let experiment = ExperimentConfig {
        delta,
        omega: omega.expect("validated"),
        tr_a: tr_a.expect("validated"),
        tr_b: tr_b.expect("validated"),
        nbar: nbar.expect("validated"),
        reduction: reduction.expect("validated"),
        t_grid: grid.expect("validated"),
    };
    let directives = RunDirectives {
        n_trunc: n_trunc.expect("validated") as usize,
        phase_offset: phase_offset.expect("validated"),
        seed: seed.expect("validated"),
        ratio_grid: ratio_grid.expect("validated"),
    };
    Ok(LoadedConfig { params, experiment, directives })
}

pub fn load_config(path: impl AsRef<Path>, strict: bool) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)?;
    Ok(parse_config(&text, strict)?)
}
