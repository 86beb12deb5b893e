//! Flat `key = value` configuration for model and MPC parameters.
//!
//! Resolution order is defaults, then the config file, then command-line overrides. The MPC
//! defaults depend on the model (the upper input bound is twice the hover command), so all
//! model keys are applied before the MPC defaults are built.

use std::collections::BTreeMap;

use drawmpc_core::trajgen::DEFAULT_DT;
use drawmpc_core::{MagnetMode, ModelParams, MpcConfig};
use sha2::{Digest, Sha256};

use crate::error::{AppError, AppResult};

pub const MODEL_KEYS: [&str; 13] = [
    "mass",
    "inertia_xx",
    "inertia_yy",
    "inertia_zz",
    "thrust_coeff",
    "torque_coeff",
    "arm_length",
    "gravity",
    "friction_mu",
    "magnet_force",
    "v_eps",
    "magnet_mode",
    "z_contact",
];

pub const MPC_KEYS: [&str; 12] = [
    "horizon",
    "dt",
    "terminal_factor",
    "u_min",
    "u_max",
    "solver_tol",
    "solver_max_iter",
    "max_dev_position",
    "max_dev_quaternion",
    "max_dev_velocity",
    "max_dev_angular_velocity",
    "max_dev_u",
];

pub const DEFAULT_HORIZON: usize = 75;

/// One raw setting and where it came from, for error messages.
#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: String,
    pub line: u64,
}

/// Raw key-value settings with later sources replacing earlier ones.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    entries: BTreeMap<String, Entry>,
}

impl RawConfig {
    /// Parse `key = value` lines. Blank lines and `#` comments are ignored.
    pub fn parse(text: &str, origin: &str) -> AppResult<Self> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = i as u64 + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| AppError::parse(origin, line, format!("expected key = value, got {content:?}")))?;
            let key = key.trim();
            if !MODEL_KEYS.contains(&key) && !MPC_KEYS.contains(&key) {
                return Err(AppError::parse(origin, line, format!("unknown key {key:?}")));
            }
            if cfg.entries.contains_key(key) {
                return Err(AppError::parse(origin, line, format!("duplicate key {key:?}")));
            }
            cfg.insert(key, value.trim(), origin, line);
        }
        Ok(cfg)
    }

    pub fn insert(&mut self, key: &str, value: &str, origin: &str, line: u64) {
        self.entries.insert(
            key.to_string(),
            Entry {
                value: value.to_string(),
                origin: origin.to_string(),
                line,
            },
        );
    }

    /// Command-line override.
    pub fn set(&mut self, key: &str, value: impl ToString) {
        self.insert(key, &value.to_string(), "command line", 0);
    }

    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    fn error(entry: &Entry, key: &str, msg: &str) -> AppError {
        if entry.line == 0 {
            AppError::Input(format!("{key}: {msg}: {:?}", entry.value))
        } else {
            AppError::parse(&entry.origin, entry.line, format!("{key}: {msg}: {:?}", entry.value))
        }
    }

    fn float(&self, key: &str, target: &mut f64) -> AppResult<()> {
        if let Some(e) = self.entries.get(key) {
            *target = e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| Self::error(e, key, "expected a finite number"))?;
        }
        Ok(())
    }

    fn count(&self, key: &str, target: &mut usize) -> AppResult<()> {
        if let Some(e) = self.entries.get(key) {
            *target = e
                .value
                .parse()
                .map_err(|_| Self::error(e, key, "expected a non-negative integer"))?;
        }
        Ok(())
    }

    fn magnet_mode(&self, target: &mut MagnetMode) -> AppResult<()> {
        if let Some(e) = self.entries.get("magnet_mode") {
            *target = parse_magnet_mode(&e.value)
                .ok_or_else(|| Self::error(e, "magnet_mode", "expected always_on or contact_gated"))?;
        }
        Ok(())
    }

    /// Resolved parameters. Validation errors are reported as input errors.
    pub fn resolve(&self) -> AppResult<Settings> {
        let mut model = ModelParams::default();
        self.float("mass", &mut model.mass)?;
        self.float("inertia_xx", &mut model.inertia.x)?;
        self.float("inertia_yy", &mut model.inertia.y)?;
        self.float("inertia_zz", &mut model.inertia.z)?;
        self.float("thrust_coeff", &mut model.thrust_coeff)?;
        self.float("torque_coeff", &mut model.torque_coeff)?;
        self.float("arm_length", &mut model.arm_length)?;
        self.float("gravity", &mut model.gravity)?;
        self.float("friction_mu", &mut model.friction_mu)?;
        self.float("magnet_force", &mut model.magnet_force)?;
        self.float("v_eps", &mut model.v_eps)?;
        self.magnet_mode(&mut model.magnet_mode)?;
        self.float("z_contact", &mut model.z_contact)?;
        model.validate()?;

        let mut horizon = DEFAULT_HORIZON;
        self.count("horizon", &mut horizon)?;
        let mut mpc = MpcConfig::for_model(&model, horizon);
        let mut dt = DEFAULT_DT;
        self.float("dt", &mut dt)?;
        self.float("terminal_factor", &mut mpc.terminal_factor)?;
        self.float("u_min", &mut mpc.u_min)?;
        self.float("u_max", &mut mpc.u_max)?;
        self.float("solver_tol", &mut mpc.solver_tol)?;
        self.count("solver_max_iter", &mut mpc.solver_max_iter)?;
        for (key, range) in [
            ("max_dev_position", 0..3),
            ("max_dev_quaternion", 3..7),
            ("max_dev_velocity", 7..10),
            ("max_dev_angular_velocity", 10..13),
        ] {
            let mut v = mpc.max_dev_x[range.start];
            self.float(key, &mut v)?;
            mpc.max_dev_x.rows_mut(range.start, range.len()).fill(v);
        }
        let mut du = mpc.max_dev_u[0];
        self.float("max_dev_u", &mut du)?;
        mpc.max_dev_u.fill(du);
        mpc.validate()?;
        if !(dt > 0.0) {
            return Err(AppError::Input("dt must be positive".into()));
        }
        Ok(Settings { model, mpc, dt })
    }
}

pub fn parse_magnet_mode(s: &str) -> Option<MagnetMode> {
    match s {
        "always_on" | "on" => Some(MagnetMode::AlwaysOn),
        "contact_gated" | "gated" => Some(MagnetMode::ContactGated),
        _ => None,
    }
}

fn magnet_mode_name(m: MagnetMode) -> &'static str {
    match m {
        MagnetMode::AlwaysOn => "always_on",
        MagnetMode::ContactGated => "contact_gated",
    }
}

/// Fully resolved run parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub model: ModelParams,
    pub mpc: MpcConfig,
    pub dt: f64,
}

impl Default for Settings {
    fn default() -> Self {
        RawConfig::default().resolve().expect("defaults are valid")
    }
}

impl Settings {
    /// Every parameter in documented key order, formatted so that parsing it back gives
    /// the same value.
    pub fn canonical(&self) -> Vec<(&'static str, String)> {
        let m = &self.model;
        let c = &self.mpc;
        let f = |v: f64| format!("{v:?}");
        vec![
            ("mass", f(m.mass)),
            ("inertia_xx", f(m.inertia.x)),
            ("inertia_yy", f(m.inertia.y)),
            ("inertia_zz", f(m.inertia.z)),
            ("thrust_coeff", f(m.thrust_coeff)),
            ("torque_coeff", f(m.torque_coeff)),
            ("arm_length", f(m.arm_length)),
            ("gravity", f(m.gravity)),
            ("friction_mu", f(m.friction_mu)),
            ("magnet_force", f(m.magnet_force)),
            ("v_eps", f(m.v_eps)),
            ("magnet_mode", magnet_mode_name(m.magnet_mode).to_string()),
            ("z_contact", f(m.z_contact)),
            ("horizon", c.horizon.to_string()),
            ("dt", f(self.dt)),
            ("terminal_factor", f(c.terminal_factor)),
            ("u_min", f(c.u_min)),
            ("u_max", f(c.u_max)),
            ("solver_tol", f(c.solver_tol)),
            ("solver_max_iter", c.solver_max_iter.to_string()),
            ("max_dev_position", f(c.max_dev_x[0])),
            ("max_dev_quaternion", f(c.max_dev_x[3])),
            ("max_dev_velocity", f(c.max_dev_x[7])),
            ("max_dev_angular_velocity", f(c.max_dev_x[10])),
            ("max_dev_u", f(c.max_dev_u[0])),
        ]
    }

    /// The canonical listing as a config file.
    pub fn to_config_text(&self) -> String {
        self.canonical()
            .into_iter()
            .map(|(k, v)| format!("{k} = {v}\n"))
            .collect()
    }
}

/// Hex SHA-256 of `key=value` lines.
pub fn hash_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> String {
    let mut hasher = Sha256::new();
    for (k, v) in pairs {
        hasher.update(k.as_bytes());
        hasher.update(b"=");
        hasher.update(v.as_bytes());
        hasher.update(b"\n");
    }
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
