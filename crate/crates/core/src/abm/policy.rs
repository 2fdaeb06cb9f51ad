//! Government policy scenarios.

use std::fmt;
use std::str::FromStr;

use super::AbmError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ScenarioId {
    S0,
    S1,
    S2,
    S3,
    S4,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 5] = [ScenarioId::S0, ScenarioId::S1, ScenarioId::S2, ScenarioId::S3, ScenarioId::S4];

    pub fn label(&self) -> &'static str {
        match self {
            ScenarioId::S0 => "Baseline",
            ScenarioId::S1 => "Open source support",
            ScenarioId::S2 => "Anti-pollution tax",
            ScenarioId::S3 => "Antitrust cap",
            ScenarioId::S4 => "Comprehensive governance",
        }
    }

    pub fn ordinal(&self) -> usize {
        *self as usize
    }
}

impl fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "S{}", self.ordinal())
    }
}

impl FromStr for ScenarioId {
    type Err = AbmError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().as_str() {
            "S0" => Ok(ScenarioId::S0),
            "S1" => Ok(ScenarioId::S1),
            "S2" => Ok(ScenarioId::S2),
            "S3" => Ok(ScenarioId::S3),
            "S4" => Ok(ScenarioId::S4),
            _ => Err(AbmError::UnknownScenario(s.to_string())),
        }
    }
}

pub const DEFAULT_SUBSIDY_RATE: f64 = 0.15;
pub const DEFAULT_POLLUTION_TAX: f64 = 0.5;
pub const DEFAULT_SHARE_CAP: f64 = 0.35;

/// Active instruments. An instrument at zero (or a cap of 1) is off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyScenario {
    pub scenario_id: ScenarioId,
    /// Revenue subsidy per unit of openness `1 - E`.
    pub subsidy_rate: f64,
    /// Tax per unit of the concentration externality `share^ζ · users`.
    pub pollution_tax_rate: f64,
    pub share_cap: f64,
    pub portfolio: bool,
}

impl PolicyScenario {
    pub fn preset(id: ScenarioId) -> Self {
        Self::with_levels(id, DEFAULT_SUBSIDY_RATE, DEFAULT_POLLUTION_TAX, DEFAULT_SHARE_CAP)
    }

    /// Scenario `id` with the given instrument levels; levels of instruments
    /// the scenario does not use are ignored.
    pub fn with_levels(id: ScenarioId, subsidy: f64, tax: f64, cap: f64) -> Self {
        let (s, t, c) = match id {
            ScenarioId::S0 => (0.0, 0.0, 1.0),
            ScenarioId::S1 => (subsidy, 0.0, 1.0),
            ScenarioId::S2 => (0.0, tax, 1.0),
            ScenarioId::S3 => (0.0, 0.0, cap),
            ScenarioId::S4 => (subsidy, tax, cap),
        };
        Self {
            scenario_id: id,
            subsidy_rate: s,
            pollution_tax_rate: t,
            share_cap: c,
            portfolio: id == ScenarioId::S4,
        }
    }

    pub fn validate(&self) -> Result<(), AbmError> {
        if !(self.subsidy_rate >= 0.0 && self.subsidy_rate.is_finite()) {
            return Err(AbmError::InvalidConfig(format!("subsidy_rate {}", self.subsidy_rate)));
        }
        if !(self.pollution_tax_rate >= 0.0 && self.pollution_tax_rate.is_finite()) {
            return Err(AbmError::InvalidConfig(format!("pollution_tax {}", self.pollution_tax_rate)));
        }
        if !(self.share_cap > 0.0 && self.share_cap <= 1.0) {
            return Err(AbmError::InvalidConfig(format!("share_cap {}", self.share_cap)));
        }
        Ok(())
    }

    pub fn caps_shares(&self) -> bool {
        self.share_cap < 1.0
    }
}
