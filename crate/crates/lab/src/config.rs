//! Flat `key = value` configuration files.
//!
//! Blank lines and `#` comments are ignored. Unknown or repeated keys are
//! rejected. Every key has a default; [`Config::entries`] lists the resolved
//! values in a fixed order.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use crate::error::{LabError, LabResult};
use crate::solver::Sign;

/// Initial data for `simulate` and the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Initial {
    /// `P_{lambda1, b1, 0}` from the blow-up law.
    Profile,
    /// `Q(x - shift)` normalized to the critical mass, times `amplitude`.
    GroundState,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub dim: usize,
    pub sigma: f64,
    pub sign: Sign,
    pub hartree_weight: f64,
    pub k: usize,
    pub e0: f64,
    pub s1: f64,
    pub lambda0: f64,
    /// Box extent for ground-state initial data.
    pub box_extent: f64,
    /// Box extent in units of `lambda1` for profile initial data.
    pub box_cores: f64,
    pub cells: usize,
    pub c_dt: f64,
    /// Fixed step; 0 selects the controller.
    pub dt: f64,
    pub dt_min: f64,
    pub t_end: f64,
    /// Decades of decrease of `lambda` before stopping; 0 disables.
    pub lambda_decades: f64,
    pub cadence: usize,
    pub boundary_threshold: f64,
    pub min_core_cells: f64,
    pub max_steps: usize,
    pub dealias: bool,
    pub tracking: bool,
    pub initial: Initial,
    pub shift: f64,
    pub amplitude: f64,
    /// Relative amplitude of the seeded smooth perturbation.
    pub noise: f64,
    /// Write a snapshot every this many diagnostics; 0 writes only the last.
    pub snapshot_every: usize,
    /// Snapshot file stem for `decompose`.
    pub snapshot: String,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            dim: 1,
            sigma: 0.3,
            sign: Sign::Plus,
            hartree_weight: 1.0,
            k: 1,
            e0: 0.0,
            s1: 12.0,
            lambda0: hartree_blowup_core::law::LAMBDA0,
            box_extent: 200.0,
            box_cores: 64.0,
            cells: 16384,
            c_dt: 0.001,
            dt: 0.0,
            dt_min: 1e-14,
            t_end: 10.0,
            lambda_decades: 1.0,
            cadence: 50,
            boundary_threshold: 1e-3,
            min_core_cells: 16.0,
            max_steps: 2_000_000,
            dealias: true,
            tracking: true,
            initial: Initial::Profile,
            shift: 0.0,
            amplitude: 1.0,
            noise: 0.0,
            snapshot_every: 0,
            snapshot: String::new(),
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String> {
    value.parse().map_err(|_| format!("cannot parse {value:?} for key {key}"))
}

impl Config {
    /// Defaults of the boundedness probe.
    pub fn global_default() -> Self {
        Self {
            sign: Sign::Minus,
            cells: 8192,
            dt: 5e-4,
            boundary_threshold: 1e-2,
            lambda_decades: 0.0,
            cadence: 200,
            tracking: false,
            initial: Initial::GroundState,
            ..Self::default()
        }
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "dim" => self.dim = parse(key, value)?,
            "sigma" => self.sigma = parse(key, value)?,
            "sign" => {
                self.sign = match value {
                    "+" | "plus" => Sign::Plus,
                    "-" | "minus" => Sign::Minus,
                    _ => return Err(format!("sign must be + or -, got {value:?}")),
                }
            }
            "hartree_weight" => self.hartree_weight = parse(key, value)?,
            "k" => self.k = parse(key, value)?,
            "e0" => self.e0 = parse(key, value)?,
            "s1" => self.s1 = parse(key, value)?,
            "lambda0" => self.lambda0 = parse(key, value)?,
            "box_extent" => self.box_extent = parse(key, value)?,
            "box_cores" => self.box_cores = parse(key, value)?,
            "cells" => self.cells = parse(key, value)?,
            "c_dt" => self.c_dt = parse(key, value)?,
            "dt" => self.dt = parse(key, value)?,
            "dt_min" => self.dt_min = parse(key, value)?,
            "t_end" => self.t_end = parse(key, value)?,
            "lambda_decades" => self.lambda_decades = parse(key, value)?,
            "cadence" => self.cadence = parse(key, value)?,
            "boundary_threshold" => self.boundary_threshold = parse(key, value)?,
            "min_core_cells" => self.min_core_cells = parse(key, value)?,
            "max_steps" => self.max_steps = parse(key, value)?,
            "dealias" => self.dealias = parse(key, value)?,
            "tracking" => self.tracking = parse(key, value)?,
            "initial" => {
                self.initial = match value {
                    "profile" => Initial::Profile,
                    "ground_state" => Initial::GroundState,
                    _ => return Err(format!("initial must be profile or ground_state, got {value:?}")),
                }
            }
            "shift" => self.shift = parse(key, value)?,
            "amplitude" => self.amplitude = parse(key, value)?,
            "noise" => self.noise = parse(key, value)?,
            "snapshot_every" => self.snapshot_every = parse(key, value)?,
            "snapshot" => self.snapshot = value.to_string(),
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    /// Applies the settings in `text` on top of `self`.
    pub fn apply_str(mut self, text: &str) -> LabResult<Self> {
        let mut seen = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(LabError::Config { line, msg: format!("expected key = value, got {content:?}") });
            };
            let (key, value) = (key.trim(), value.trim());
            if let Some(first) = seen.insert(key.to_string(), line) {
                return Err(LabError::Config { line, msg: format!("key {key:?} already set on line {first}") });
            }
            self.set(key, value).map_err(|msg| LabError::Config { line, msg })?;
        }
        self.validate().map_err(|msg| LabError::Config { line: 0, msg })?;
        Ok(self)
    }

    pub fn load(base: Self, path: &Path) -> LabResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| LabError::io(path, e))?;
        base.apply_str(&text).map_err(|e| match e {
            LabError::Config { line, msg } => LabError::format(path, format!("line {line}: {msg}")),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(1..=3).contains(&self.dim) {
            return Err(format!("dim must be 1, 2 or 3, got {}", self.dim));
        }
        let positive = [
            ("sigma", self.sigma),
            ("s1", self.s1),
            ("lambda0", self.lambda0),
            ("box_extent", self.box_extent),
            ("box_cores", self.box_cores),
            ("c_dt", self.c_dt),
            ("dt_min", self.dt_min),
            ("t_end", self.t_end),
            ("min_core_cells", self.min_core_cells),
            ("amplitude", self.amplitude),
        ];
        for (k, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(format!("{k} must be positive, got {v}"));
            }
        }
        let nonneg = [
            ("dt", self.dt),
            ("lambda_decades", self.lambda_decades),
            ("boundary_threshold", self.boundary_threshold),
            ("noise", self.noise),
        ];
        for (k, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(format!("{k} must be non-negative, got {v}"));
            }
        }
        if !self.cells.is_power_of_two() {
            return Err(format!("cells must be a power of two, got {}", self.cells));
        }
        if self.cadence == 0 {
            return Err("cadence must be at least 1".into());
        }
        if !self.shift.is_finite() || !self.e0.is_finite() || !self.hartree_weight.is_finite() {
            return Err("shift, e0 and hartree_weight must be finite".into());
        }
        Ok(())
    }

    /// Resolved settings in file order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("dim", self.dim.to_string()),
            ("sigma", self.sigma.to_string()),
            ("sign", self.sign.to_string()),
            ("hartree_weight", self.hartree_weight.to_string()),
            ("k", self.k.to_string()),
            ("e0", self.e0.to_string()),
            ("s1", self.s1.to_string()),
            ("lambda0", self.lambda0.to_string()),
            ("box_extent", self.box_extent.to_string()),
            ("box_cores", self.box_cores.to_string()),
            ("cells", self.cells.to_string()),
            ("c_dt", self.c_dt.to_string()),
            ("dt", self.dt.to_string()),
            ("dt_min", self.dt_min.to_string()),
            ("t_end", self.t_end.to_string()),
            ("lambda_decades", self.lambda_decades.to_string()),
            ("cadence", self.cadence.to_string()),
            ("boundary_threshold", self.boundary_threshold.to_string()),
            ("min_core_cells", self.min_core_cells.to_string()),
            ("max_steps", self.max_steps.to_string()),
            ("dealias", self.dealias.to_string()),
            ("tracking", self.tracking.to_string()),
            (
                "initial",
                match self.initial {
                    Initial::Profile => "profile",
                    Initial::GroundState => "ground_state",
                }
                .to_string(),
            ),
            ("shift", self.shift.to_string()),
            ("amplitude", self.amplitude.to_string()),
            ("noise", self.noise.to_string()),
            ("snapshot_every", self.snapshot_every.to_string()),
            ("snapshot", self.snapshot.clone()),
        ]
    }

    /// The resolved settings as a config file.
    pub fn to_text(&self) -> String {
        self.entries().iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_through_text() {
        let mut c = Config::global_default();
        c.shift = 3.5;
        c.snapshot = "run/last".into();
        let back = Config::default().apply_str(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn unknown_and_repeated_keys_are_rejected() {
        let e = Config::default().apply_str("sigma = 0.2\nsigmaa = 0.1\n").unwrap_err();
        assert!(matches!(e, LabError::Config { line: 2, .. }), "{e}");
        let e = Config::default().apply_str("k = 1\nk = 2\n").unwrap_err();
        assert!(e.to_string().contains("already set"), "{e}");
    }

    #[test]
    fn comments_and_bad_values() {
        let c = Config::default().apply_str("# header\n\nsign = -   # defocusing\n").unwrap();
        assert_eq!(c.sign, Sign::Minus);
        assert!(Config::default().apply_str("cells = 1000").is_err());
        assert!(Config::default().apply_str("dealias = yes").is_err());
        assert!(Config::default().apply_str("no equals sign").is_err());
    }
}
