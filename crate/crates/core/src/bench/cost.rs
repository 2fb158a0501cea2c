use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::backend::{OpStats, PhaseCounts};
use crate::error::{Error, Result};

/// Per-operation latencies in milliseconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostModel {
    pub add: f64,
    pub mult_cc: f64,
    pub mult_cp: f64,
    pub rot: f64,
    pub encrypt: f64,
    pub decrypt: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self { add: 0.550, mult_cc: 20.874, mult_cp: 4.138, rot: 5.350, encrypt: 5.50, decrypt: 2.57 }
    }
}

impl CostModel {
    pub fn validate(&self) -> Result<()> {
        let weights = [self.add, self.mult_cc, self.mult_cp, self.rot, self.encrypt, self.decrypt];
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidConfig(format!("cost weights must be finite and non-negative: {self:?}")));
        }
        Ok(())
    }

    /// Reads a JSON object; missing fields keep their defaults.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let model: CostModel = serde_json::from_str(&std::fs::read_to_string(path)?)?;
        model.validate()?;
        Ok(model)
    }

    pub fn phase_cost(&self, c: &PhaseCounts) -> f64 {
        c.add as f64 * self.add
            + c.mult_cc as f64 * self.mult_cc
            + c.mult_cp as f64 * self.mult_cp
            + c.rot as f64 * self.rot
            + c.encrypt as f64 * self.encrypt
            + c.decrypt as f64 * self.decrypt
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CostEstimate {
    pub client_ms: f64,
    pub cloud_ms: f64,
    pub total_ms: f64,
}

pub fn estimate_cost(stats: &OpStats, model: &CostModel) -> CostEstimate {
    let client_ms = model.phase_cost(&stats.client);
    let cloud_ms = model.phase_cost(&stats.cloud);
    CostEstimate { client_ms, cloud_ms, total_ms: client_ms + cloud_ms }
}

/// Shape groups used to break campaign results down.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShapeCategory {
    MMin,
    LMin,
    NMin,
    LModM,
    Square,
}

impl ShapeCategory {
    pub const ALL: [ShapeCategory; 5] =
        [ShapeCategory::MMin, ShapeCategory::LMin, ShapeCategory::NMin, ShapeCategory::LModM, ShapeCategory::Square];

    pub fn label(self) -> &'static str {
        match self {
            ShapeCategory::MMin => "m-min",
            ShapeCategory::LMin => "l-min",
            ShapeCategory::NMin => "n-min",
            ShapeCategory::LModM => "l-mod-m",
            ShapeCategory::Square => "square",
        }
    }
}

impl fmt::Display for ShapeCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Every group the shape belongs to; ties for the minimum count for each.
pub fn classify_shape(m: usize, l: usize, n: usize) -> Vec<ShapeCategory> {
    let p = m.min(l).min(n);
    let mut out = Vec::new();
    if m == p {
        out.push(ShapeCategory::MMin);
    }
    if l == p {
        out.push(ShapeCategory::LMin);
    }
    if n == p {
        out.push(ShapeCategory::NMin);
    }
    if m > 0 && l.is_multiple_of(m) {
        out.push(ShapeCategory::LModM);
    }
    if m == l && l == n {
        out.push(ShapeCategory::Square);
    }
    out
}
