//! Experiment configuration files.
//!
//! The format is a flat list of dotted keys in TOML syntax:
//!
//! ```text
//! # comments are allowed
//! sim.dt = 0.01
//! noise.gyro_std = 0.11
//! filter.q = 10
//! filter.feature_seed = 7
//! ```
//!
//! Any key left out takes the default of the reference experiment. Unknown
//! keys are rejected.

use std::path::Path;

use thiserror::Error;
use toml::Value;

use crate::filter::{FilterParams, WeightLaw};
use crate::geometry::{project_to_so3, Mat3, RotationMatrix, Vec3};
use crate::sim::{NoiseModel, OmegaProfile, Reference, SimConfig};

/// Initial estimate of the reference experiment, far from the truth
/// (`‖R̃(0)‖_I ≈ 0.994` against `R(0) = I`). Rounded to four decimals, so
/// it is projected onto SO(3) before use.
pub const NOMINAL_INITIAL_ESTIMATE: [f64; 9] = [
    -0.9214, -0.0103, 0.3884, //
    0.2753, -0.7227, 0.634, //
    0.2742, 0.6911, 0.6687,
];

/// Largest orthogonality defect accepted for a configured attitude before
/// projection onto SO(3).
const ATTITUDE_INPUT_TOL: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("`{key}`: {message}")]
pub struct ConfigError {
    pub key: String,
    pub message: String,
}

impl ConfigError {
    fn new(key: &str, message: impl Into<String>) -> Self {
        Self {
            key: key.to_string(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FilterMode {
    #[default]
    So3,
    Quaternion,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StdKind {
    /// Divide by `n`.
    #[default]
    Population,
    /// Divide by `n - 1`.
    Sample,
}

/// Scalar gains from which [`FilterParams`] are built for a neuron count.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterSpec {
    pub q: usize,
    pub gamma_c: f64,
    pub gamma_sigma: f64,
    pub k_sigma: f64,
    pub feature_seed: Option<u64>,
    pub weight_law: WeightLaw,
}

impl Default for FilterSpec {
    fn default() -> Self {
        Self {
            q: 3,
            gamma_c: 2.0,
            gamma_sigma: 2.0,
            k_sigma: 1.0,
            feature_seed: None,
            weight_law: WeightLaw::Discrete,
        }
    }
}

impl FilterSpec {
    pub fn build(&self) -> Result<FilterParams, ConfigError> {
        if self.q < 3 {
            return Err(ConfigError::new("filter.q", "must be at least 3"));
        }
        let seed = match (self.q, self.feature_seed) {
            (3, s) => s.unwrap_or(0),
            (_, Some(s)) => s,
            (q, None) => {
                return Err(ConfigError::new(
                    "filter.feature_seed",
                    format!("required when filter.q > 3 (got q = {q})"),
                ))
            }
        };
        FilterParams::scaled(
            self.q,
            seed,
            self.gamma_c,
            self.gamma_sigma,
            self.k_sigma,
            self.weight_law,
        )
        .map_err(|e| ConfigError::new("filter", e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub sim: SimConfig,
    pub r_hat0: RotationMatrix,
    pub filter: FilterSpec,
    pub mode: FilterMode,
    pub window: (f64, f64),
    pub std_kind: StdKind,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            sim: SimConfig::default(),
            r_hat0: project_to_so3(&Mat3::from_row_slice(&NOMINAL_INITIAL_ESTIMATE))
                .expect("reference initial estimate is near SO(3)"),
            filter: FilterSpec::default(),
            mode: FilterMode::So3,
            window: (5.0, 29.0),
            std_kind: StdKind::Population,
        }
    }
}

impl ExperimentConfig {
    pub fn params(&self) -> Result<FilterParams, ConfigError> {
        self.filter.build()
    }

    /// Cross-field checks; run after every mutation.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let sim = &self.sim;
        if !(sim.dt > 0.0 && sim.dt.is_finite()) {
            return Err(ConfigError::new(
                "sim.dt",
                format!("must be positive, got {}", sim.dt),
            ));
        }
        if !(sim.t_end > sim.dt && sim.t_end.is_finite()) {
            return Err(ConfigError::new("sim.t_end", "must exceed sim.dt"));
        }
        for (key, v) in [
            ("noise.gyro_std", sim.noise.gyro_std),
            ("noise.vec_std", sim.noise.vec_std),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(ConfigError::new(
                    key,
                    format!("must be non-negative, got {v}"),
                ));
            }
        }
        if sim.references.len() < 2 {
            return Err(ConfigError::new(
                "sim.references",
                "need at least two observations",
            ));
        }
        if sim.references.iter().any(|r| r.r.norm() == 0.0) {
            return Err(ConfigError::new(
                "sim.references",
                "zero-length observation",
            ));
        }
        if sim.references.iter().any(|r| r.s.is_nan() || r.s < 0.0)
            || sim.references.iter().all(|r| r.s == 0.0)
        {
            return Err(ConfigError::new(
                "sim.weights",
                "must be non-negative and not all zero",
            ));
        }
        let has_pair = sim.references.iter().enumerate().any(|(i, a)| {
            sim.references[i + 1..].iter().any(|b| {
                a.r.normalize().cross(&b.r.normalize()).norm() > crate::wahba::TOL_COLLINEAR
            })
        });
        if !has_pair {
            return Err(ConfigError::new(
                "sim.references",
                "observations are collinear",
            ));
        }
        let (a, b) = self.window;
        if !(a >= 0.0 && b >= a && b <= sim.t_end) {
            return Err(ConfigError::new(
                "metrics.window_end",
                format!("window [{a}, {b}] must lie within [0, {}]", sim.t_end),
            ));
        }
        self.filter.build()?;
        Ok(())
    }
}

pub fn parse_config(path: impl AsRef<Path>) -> Result<ExperimentConfig, ConfigError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new("<file>", format!("{}: {e}", path.display())))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| ConfigError::new("<syntax>", e.message().to_string()))?;
    let mut flat = Vec::new();
    flatten("", &table, &mut flat);

    let mut cfg = ExperimentConfig::default();
    let mut weights: Option<Vec<f64>> = None;
    let mut omega_kind: Option<String> = None;
    let mut omega_const = None;
    let mut sinusoid = [None; 4];

    for (key, value) in &flat {
        let k = key.as_str();
        match k {
            "sim.dt" => cfg.sim.dt = real(k, value)?,
            "sim.t_end" => cfg.sim.t_end = real(k, value)?,
            "sim.r0" => cfg.sim.r0 = attitude(k, value)?,
            "sim.r_hat0" => cfg.r_hat0 = attitude(k, value)?,
            "sim.references" => {
                let rows = array(k, value)?;
                cfg.sim.references = rows
                    .iter()
                    .map(|row| {
                        Ok(Reference {
                            r: vec3(k, row)?,
                            s: 0.0,
                        })
                    })
                    .collect::<Result<_, ConfigError>>()?;
            }
            "sim.weights" => weights = Some(reals(k, value)?),
            "sim.omega_profile" => omega_kind = Some(string(k, value)?),
            "sim.omega_constant" => omega_const = Some(vec3(k, value)?),
            "sim.omega_amp" => sinusoid[0] = Some(vec3(k, value)?),
            "sim.omega_freq" => sinusoid[1] = Some(vec3(k, value)?),
            "sim.omega_phase" => sinusoid[2] = Some(vec3(k, value)?),
            "sim.omega_offset" => sinusoid[3] = Some(vec3(k, value)?),
            "noise.gyro_std" => cfg.sim.noise.gyro_std = real(k, value)?,
            "noise.vec_std" => cfg.sim.noise.vec_std = real(k, value)?,
            "noise.seed" => cfg.sim.noise.seed = unsigned(k, value)?,
            "noise.model" => {
                cfg.sim.noise.model = match string(k, value)?.as_str() {
                    "persample" => NoiseModel::PerSample,
                    "brownian" => NoiseModel::Brownian,
                    other => {
                        return Err(ConfigError::new(
                            k,
                            format!("unknown noise model `{other}`"),
                        ))
                    }
                }
            }
            "filter.q" => cfg.filter.q = unsigned(k, value)? as usize,
            "filter.gamma_c" => cfg.filter.gamma_c = real(k, value)?,
            "filter.gamma_sigma" => cfg.filter.gamma_sigma = real(k, value)?,
            "filter.k_sigma" => cfg.filter.k_sigma = real(k, value)?,
            "filter.feature_seed" => cfg.filter.feature_seed = Some(unsigned(k, value)?),
            "filter.weight_law" => {
                cfg.filter.weight_law = match string(k, value)?.as_str() {
                    "discrete" => WeightLaw::Discrete,
                    "continuous" => WeightLaw::Continuous,
                    other => {
                        return Err(ConfigError::new(k, format!("unknown weight law `{other}`")))
                    }
                }
            }
            "filter.mode" => {
                cfg.mode = match string(k, value)?.as_str() {
                    "so3" => FilterMode::So3,
                    "quaternion" => FilterMode::Quaternion,
                    other => {
                        return Err(ConfigError::new(
                            k,
                            format!("unknown filter mode `{other}`"),
                        ))
                    }
                }
            }
            "metrics.window_start" => cfg.window.0 = real(k, value)?,
            "metrics.window_end" => cfg.window.1 = real(k, value)?,
            "metrics.sample_std" => {
                cfg.std_kind = match value {
                    Value::Boolean(true) => StdKind::Sample,
                    Value::Boolean(false) => StdKind::Population,
                    _ => return Err(ConfigError::new(k, "expected a boolean")),
                }
            }
            _ => return Err(ConfigError::new(k, "unknown key")),
        }
    }

    let n = cfg.sim.references.len();
    let w = weights.unwrap_or_else(|| vec![1.0 / n as f64; n]);
    if w.len() != n {
        return Err(ConfigError::new(
            "sim.weights",
            format!("expected {n} weights, got {}", w.len()),
        ));
    }
    for (re, s) in cfg.sim.references.iter_mut().zip(w) {
        re.s = s;
    }

    cfg.sim.omega_profile = match omega_kind.as_deref().unwrap_or("nominal") {
        "nominal" => OmegaProfile::Nominal,
        "constant" => OmegaProfile::Constant(omega_const.ok_or_else(|| {
            ConfigError::new("sim.omega_constant", "required for the constant profile")
        })?),
        "sinusoid" => {
            let [amp, freq, phase, offset] = sinusoid;
            OmegaProfile::Sinusoid {
                amp: amp.ok_or_else(|| {
                    ConfigError::new("sim.omega_amp", "required for the sinusoid profile")
                })?,
                freq: freq.ok_or_else(|| {
                    ConfigError::new("sim.omega_freq", "required for the sinusoid profile")
                })?,
                phase: phase.unwrap_or_else(Vec3::zeros),
                offset: offset.unwrap_or_else(Vec3::zeros),
            }
        }
        other => {
            return Err(ConfigError::new(
                "sim.omega_profile",
                format!("unknown profile `{other}` (nominal | constant | sinusoid)"),
            ))
        }
    };

    cfg.validate()?;
    Ok(cfg)
}

fn flatten(prefix: &str, table: &toml::Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() {
            k.clone()
        } else {
            format!("{prefix}.{k}")
        };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            other => out.push((key, other.clone())),
        }
    }
}

fn real(key: &str, v: &Value) -> Result<f64, ConfigError> {
    match v {
        Value::Float(f) => Ok(*f),
        Value::Integer(i) => Ok(*i as f64),
        _ => Err(ConfigError::new(key, "expected a number")),
    }
}

fn unsigned(key: &str, v: &Value) -> Result<u64, ConfigError> {
    match v {
        Value::Integer(i) if *i >= 0 => Ok(*i as u64),
        _ => Err(ConfigError::new(key, "expected a non-negative integer")),
    }
}

fn string(key: &str, v: &Value) -> Result<String, ConfigError> {
    match v {
        Value::String(s) => Ok(s.clone()),
        _ => Err(ConfigError::new(key, "expected a string")),
    }
}

fn array<'a>(key: &str, v: &'a Value) -> Result<&'a Vec<Value>, ConfigError> {
    match v {
        Value::Array(a) => Ok(a),
        _ => Err(ConfigError::new(key, "expected an array")),
    }
}

fn reals(key: &str, v: &Value) -> Result<Vec<f64>, ConfigError> {
    array(key, v)?.iter().map(|x| real(key, x)).collect()
}

fn vec3(key: &str, v: &Value) -> Result<Vec3, ConfigError> {
    let xs = reals(key, v)?;
    if xs.len() != 3 {
        return Err(ConfigError::new(
            key,
            format!("expected 3 numbers, got {}", xs.len()),
        ));
    }
    Ok(Vec3::new(xs[0], xs[1], xs[2]))
}

/// Nine row-major entries, projected onto SO(3) if within tolerance.
fn attitude(key: &str, v: &Value) -> Result<RotationMatrix, ConfigError> {
    let xs = reals(key, v)?;
    if xs.len() != 9 {
        return Err(ConfigError::new(
            key,
            format!("expected 9 numbers, got {}", xs.len()),
        ));
    }
    let m = Mat3::from_row_slice(&xs);
    let defect = (m.transpose() * m - Mat3::identity()).norm();
    if defect > ATTITUDE_INPUT_TOL || m.determinant().is_nan() || m.determinant() <= 0.0 {
        return Err(ConfigError::new(
            key,
            format!("not a rotation (orthogonality defect {defect:.3e})"),
        ));
    }
    project_to_so3(&m).map_err(|e| ConfigError::new(key, e.to_string()))
}
