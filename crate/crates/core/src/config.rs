//! Flat `key = value` configuration.
//!
//! One setting per line, `#` starts a comment. A file whose first
//! non-blank character is `{` is read as a flat JSON object instead, with
//! arrays joined by commas. Unknown keys are rejected.

use std::path::Path;

use crate::channel::{ArrayGeometry, DirectChannel, GainModel, RisResponseModel, ScenarioConfig};
use crate::error::{Error, Result};
use crate::harness::{Optimizer, SweepAxis, SweepSpec};
use crate::solver::{PhaseInit, SolverCfg};

/// Everything a run or sweep needs.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub solver: SolverCfg,
    pub optimizer: Optimizer,
    pub sweep_axis: Option<SweepAxis>,
    pub sweep_values: Vec<f64>,
    pub trials: usize,
    pub optimizers: Vec<Optimizer>,
    pub timing: bool,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            solver: SolverCfg::default(),
            optimizer: Optimizer::MaxrWmmse,
            sweep_axis: None,
            sweep_values: Vec::new(),
            trials: 100,
            optimizers: vec![
                Optimizer::MaxrWmmse,
                Optimizer::MineWmmse,
                Optimizer::RandomPhase,
                Optimizer::NoRis,
            ],
            timing: false,
        }
    }
}

/// Recognized keys, in documentation order.
pub const KEYS: &[&str] = &[
    "seed",
    "num_ues",
    "bs_antennas",
    "bs_hor",
    "bs_ver",
    "ue_antennas",
    "ue_hor",
    "ue_ver",
    "ris_elements",
    "ris_hor",
    "ris_ver",
    "element_spacing",
    "bs_position",
    "ris_position",
    "ue_area",
    "ue_height",
    "num_paths",
    "paths_direct",
    "paths_bs_ris",
    "paths_ris_ue",
    "pathloss_los",
    "pathloss_nlos",
    "beta_bu_db",
    "beta_br_db",
    "beta_ru_db",
    "reference_distance",
    "ris_gain_model",
    "ris_response",
    "direct_channel",
    "tx_power_dbm",
    "noise_dbm",
    "tol",
    "patience",
    "max_outer",
    "beta_max",
    "beta_min",
    "bisection_iters",
    "phase_init",
    "optimizer",
    "sweep_axis",
    "sweep_values",
    "trials",
    "optimizers",
    "timing",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim()
        .parse()
        .map_err(|_| Error::config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list(key: &str, v: &str) -> Result<Vec<f64>> {
    let v = v.trim().trim_start_matches('[').trim_end_matches(']');
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',').map(|x| parse_num(key, x)).collect()
}

fn parse_fixed<const N: usize>(key: &str, v: &str) -> Result<[f64; N]> {
    let xs = parse_list(key, v)?;
    xs.try_into()
        .map_err(|_| Error::config(format!("{key}: expected {N} comma-separated numbers")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(Error::config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl Config {
    /// An unreadable file is a configuration error, not an I/O one.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(m) => Error::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        if text.trim_start().starts_with('{') {
            let value: serde_json::Value =
                serde_json::from_str(text).map_err(|e| Error::config(format!("invalid JSON: {e}")))?;
            let obj = value
                .as_object()
                .ok_or_else(|| Error::config("JSON config must be an object"))?;
            for (k, v) in obj {
                cfg.set(k, &json_scalar(k, v)?)?;
            }
            return Ok(cfg);
        }
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {}: expected key = value", lineno + 1)))?;
            cfg.set(k.trim(), v.trim())?;
        }
        Ok(cfg)
    }

    /// Applies one `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<()> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override {kv:?} is not key=value")))?;
        self.set(k.trim(), v.trim())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<()> {
        let s = &mut self.scenario;
        match key {
            "seed" => s.rng_seed = parse_num(key, v)?,
            "num_ues" => s.num_ues = parse_num(key, v)?,
            "bs_antennas" => s.bs_geometry = geometry(s.bs_geometry, parse_num(key, v)?),
            "bs_hor" => s.bs_geometry.horizontal = parse_num(key, v)?,
            "bs_ver" => s.bs_geometry.vertical = parse_num(key, v)?,
            "ue_antennas" => s.ue_geometry = geometry(s.ue_geometry, parse_num(key, v)?),
            "ue_hor" => s.ue_geometry.horizontal = parse_num(key, v)?,
            "ue_ver" => s.ue_geometry.vertical = parse_num(key, v)?,
            "ris_elements" => s.ris_geometry = geometry(s.ris_geometry, parse_num(key, v)?),
            "ris_hor" => s.ris_geometry.horizontal = parse_num(key, v)?,
            "ris_ver" => s.ris_geometry.vertical = parse_num(key, v)?,
            "element_spacing" => {
                let d: f64 = parse_num(key, v)?;
                s.bs_geometry.spacing = d;
                s.ue_geometry.spacing = d;
                s.ris_geometry.spacing = d;
            }
            "bs_position" => s.bs_position = parse_fixed(key, v)?,
            "ris_position" => s.ris_position = parse_fixed(key, v)?,
            "ue_area" => s.ue_area = parse_fixed(key, v)?,
            "ue_height" => s.ue_height = parse_num(key, v)?,
            "num_paths" => {
                let p: usize = parse_num(key, v)?;
                s.paths_direct = p;
                s.paths_bs_ris = p;
                s.paths_ris_ue = p;
            }
            "paths_direct" => s.paths_direct = parse_num(key, v)?,
            "paths_bs_ris" => s.paths_bs_ris = parse_num(key, v)?,
            "paths_ris_ue" => s.paths_ris_ue = parse_num(key, v)?,
            "pathloss_los" => s.pathloss_exponent_los = parse_num(key, v)?,
            "pathloss_nlos" => s.pathloss_exponent_nlos = parse_num(key, v)?,
            "beta_bu_db" => s.beta_bu_db = parse_num(key, v)?,
            "beta_br_db" => s.beta_br_db = parse_num(key, v)?,
            "beta_ru_db" => s.beta_ru_db = parse_num(key, v)?,
            "reference_distance" => s.reference_distance = parse_num(key, v)?,
            "ris_gain_model" => s.gain_model = GainModel::parse(v.trim())?,
            "ris_response" => s.ris_response = RisResponseModel::parse(v.trim())?,
            "direct_channel" => {
                s.direct_channel = match v.trim() {
                    "present" => DirectChannel::Present,
                    "blocked" => DirectChannel::Blocked,
                    _ => return Err(Error::config(format!("direct_channel: expected present|blocked, got {v:?}"))),
                }
            }
            "tx_power_dbm" => s.tx_power_dbm = parse_num(key, v)?,
            "noise_dbm" => s.noise_dbm = parse_num(key, v)?,
            "tol" => self.solver.tol = parse_num(key, v)?,
            "patience" => self.solver.patience = parse_num(key, v)?,
            "max_outer" => self.solver.max_outer = parse_num(key, v)?,
            "beta_max" => self.solver.line_search.beta_max = parse_num(key, v)?,
            "beta_min" => self.solver.line_search.beta_min = parse_num(key, v)?,
            "bisection_iters" => self.solver.line_search.iterations = parse_num(key, v)?,
            "phase_init" => {
                self.solver.phase_init = match v.trim() {
                    "ones" => PhaseInit::Ones,
                    "random" => PhaseInit::Random,
                    _ => return Err(Error::config(format!("phase_init: expected ones|random, got {v:?}"))),
                }
            }
            "optimizer" => self.optimizer = Optimizer::parse(v)?,
            "sweep_axis" => self.sweep_axis = Some(SweepAxis::parse(v)?),
            "sweep_values" => self.sweep_values = parse_list(key, v)?,
            "trials" => self.trials = parse_num(key, v)?,
            "optimizers" => {
                self.optimizers = v
                    .trim()
                    .trim_start_matches('[')
                    .trim_end_matches(']')
                    .split(',')
                    .filter(|x| !x.trim().is_empty())
                    .map(Optimizer::parse)
                    .collect::<Result<_>>()?
            }
            "timing" => self.timing = parse_bool(key, v)?,
            _ => return Err(Error::config(format!("unknown key {key:?}"))),
        }
        Ok(())
    }

    /// Checks everything a single run needs.
    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.solver.line_search.validate()?;
        if self.optimizer.single_user_only() && self.scenario.num_ues != 1 {
            return Err(Error::config(format!(
                "optimizer {} needs num_ues = 1, got {}",
                self.optimizer, self.scenario.num_ues
            )));
        }
        Ok(())
    }

    pub fn sweep_spec(&self) -> Result<SweepSpec> {
        let axis = self
            .sweep_axis
            .ok_or_else(|| Error::config("sweep_axis is not set"))?;
        let spec = SweepSpec {
            axis,
            values: self.sweep_values.clone(),
            trials: self.trials,
            base: self.scenario.clone(),
            solver: self.solver,
            optimizers: self.optimizers.clone(),
            timing: self.timing,
        };
        spec.validate()?;
        Ok(spec)
    }
}

fn geometry(old: ArrayGeometry, total: usize) -> ArrayGeometry {
    ArrayGeometry {
        spacing: old.spacing,
        ..ArrayGeometry::from_total(total)
    }
}

fn json_scalar(key: &str, v: &serde_json::Value) -> Result<String> {
    use serde_json::Value;
    Ok(match v {
        Value::String(s) => s.clone(),
        Value::Number(n) => n.to_string(),
        Value::Bool(b) => b.to_string(),
        Value::Array(xs) => xs
            .iter()
            .map(|x| json_scalar(key, x))
            .collect::<Result<Vec<_>>>()?
            .join(","),
        _ => return Err(Error::config(format!("{key}: unsupported JSON value"))),
    })
}
