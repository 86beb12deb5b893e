//! Tracking-error summaries and their JSON form.

use std::collections::BTreeMap;

use drawmpc_core::{tracking_errors, State};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, AppResult};

/// Steps at the start of a run excluded from the post-transient figures.
pub const DEFAULT_TRANSIENT_STEPS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axes {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl From<[f64; 3]> for Axes {
    fn from(v: [f64; 3]) -> Self {
        Self { x: v[0], y: v[1], z: v[2] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub parameters: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub mean_abs_error_m: Axes,
    pub mean_abs_error_post_transient_m: Axes,
    pub max_error_m: f64,
    pub max_error_post_transient_m: f64,
    pub transient_steps: usize,
    pub steps: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub solver_iters_total: Option<usize>,
    pub provenance: Provenance,
}

impl Metrics {
    /// Error figures of `actual` against `reference`, which must be equally long.
    pub fn compute(reference: &[State], actual: &[State], transient: usize, provenance: Provenance) -> AppResult<Self> {
        if reference.len() != actual.len() {
            return Err(AppError::Input(format!(
                "length mismatch: reference has {} rows, actual has {}",
                reference.len(),
                actual.len()
            )));
        }
        let all = tracking_errors(reference, actual)?;
        let skip = transient.min(reference.len().saturating_sub(1));
        let post = tracking_errors(&reference[skip..], &actual[skip..])?;
        Ok(Self {
            mean_abs_error_m: all.mean_abs.into(),
            mean_abs_error_post_transient_m: post.mean_abs.into(),
            max_error_m: all.max,
            max_error_post_transient_m: post.max,
            transient_steps: skip,
            steps: reference.len(),
            solver_iters_total: None,
            provenance,
        })
    }

    /// The error figures with provenance and solver counts stripped, for comparing runs.
    pub fn errors_only(&self) -> (Axes, Axes, f64, f64, usize, usize) {
        (
            self.mean_abs_error_m,
            self.mean_abs_error_post_transient_m,
            self.max_error_m,
            self.max_error_post_transient_m,
            self.transient_steps,
            self.steps,
        )
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("metrics serialize");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str, name: &str) -> AppResult<Self> {
        serde_json::from_str(text).map_err(|e| AppError::parse(name, e.line() as u64, e.to_string()))
    }
}

/// JSON value for a canonical parameter string: a number when it parses as one.
pub fn parameter_value(s: &str) -> serde_json::Value {
    if let Ok(i) = s.parse::<u64>() {
        return i.into();
    }
    match s.parse::<f64>() {
        Ok(f) if f.is_finite() => f.into(),
        _ => s.into(),
    }
}
