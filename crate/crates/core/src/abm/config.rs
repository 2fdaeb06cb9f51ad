//! Scenario configuration text and CSV output.
//!
//! ```text
//! scenario = S4
//! subsidy_rate = 0.15
//! pollution_tax = 0.5
//! share_cap = 0.35
//! steps = 20
//! users = 2000
//! seed = 0xC0FFEE
//! mu = 1.0
//! w_cs = 0.4
//! ```

use std::io::Write;

use super::market::ScenarioRun;
use super::metrics::HeterogeneityReport;
use super::policy::{PolicyScenario, ScenarioId, DEFAULT_POLLUTION_TAX, DEFAULT_SHARE_CAP, DEFAULT_SUBSIDY_RATE};
use super::{AbmError, AbmParams};
use crate::kv::{self, ConfigError};

const KEYS: [&str; 12] = [
    "scenario",
    "subsidy_rate",
    "pollution_tax",
    "share_cap",
    "steps",
    "users",
    "seed",
    "mu",
    "w_cs",
    "w_ps",
    "w_in",
    "w_neg",
];

pub const DEFAULT_STEPS: usize = 20;
pub const DEFAULT_SEED: u64 = 0xC0FFEE;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub policy: PolicyScenario,
    pub params: AbmParams,
    pub steps: usize,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn preset(id: ScenarioId) -> Self {
        Self {
            policy: PolicyScenario::preset(id),
            params: AbmParams::default(),
            steps: DEFAULT_STEPS,
            seed: DEFAULT_SEED,
        }
    }

    pub fn to_text(&self) -> String {
        let w = &self.params.welfare;
        format!(
            "scenario = {}\nsubsidy_rate = {}\npollution_tax = {}\nshare_cap = {}\nsteps = {}\nusers = {}\nseed = {}\nmu = {}\nw_cs = {}\nw_ps = {}\nw_in = {}\nw_neg = {}\n",
            self.policy.scenario_id,
            self.policy.subsidy_rate,
            self.policy.pollution_tax_rate,
            self.policy.share_cap,
            self.steps,
            self.params.n_users,
            self.seed,
            self.params.mu,
            w.cs,
            w.ps,
            w.innovation,
            w.neg
        )
    }
}

/// Decimal or `0x`-prefixed hexadecimal.
pub fn parse_seed(text: &str) -> Option<u64> {
    let t = text.trim();
    match t.strip_prefix("0x").or_else(|| t.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(&hex.replace('_', ""), 16).ok(),
        None => t.replace('_', "").parse().ok(),
    }
}

pub fn parse_scenario_config(text: &str) -> Result<ScenarioConfig, AbmError> {
    let doc = kv::parse(text)?;
    if let Some(s) = doc.sections.first() {
        return Err(AbmError::InvalidConfig(format!("unexpected section [{}]", s.name)));
    }
    let g = &doc.global;
    g.check_keys(&KEYS)?;
    let id: ScenarioId = g.require::<String>("scenario")?.parse()?;
    let policy = PolicyScenario::with_levels(
        id,
        g.get_or("subsidy_rate", DEFAULT_SUBSIDY_RATE)?,
        g.get_or("pollution_tax", DEFAULT_POLLUTION_TAX)?,
        g.get_or("share_cap", DEFAULT_SHARE_CAP)?,
    );
    policy.validate()?;
    let defaults = AbmParams::default();
    let mut params = AbmParams {
        n_users: g.get_or("users", defaults.n_users)?,
        mu: g.get_or("mu", defaults.mu)?,
        ..defaults
    };
    params.welfare.cs = g.get_or("w_cs", params.welfare.cs)?;
    params.welfare.ps = g.get_or("w_ps", params.welfare.ps)?;
    params.welfare.innovation = g.get_or("w_in", params.welfare.innovation)?;
    params.welfare.neg = g.get_or("w_neg", params.welfare.neg)?;
    params.validate()?;
    let steps = g.get_or("steps", DEFAULT_STEPS)?;
    if steps == 0 {
        return Err(AbmError::InvalidConfig("steps must be at least 1".into()));
    }
    let seed = match g.raw("seed") {
        None => DEFAULT_SEED,
        Some(raw) => parse_seed(raw).ok_or_else(|| ConfigError::BadValue {
            section: String::new(),
            key: "seed".into(),
            value: raw.to_string(),
            line: g.entries["seed"].line,
        })?,
    };
    Ok(ScenarioConfig {
        policy,
        params,
        steps,
        seed,
    })
}

/// One row per (run, step): `step,scenario,seed,welfare,avg_pgi,hhi,innovation,data_quality,safety`.
pub fn write_series_csv<W: Write>(out: W, runs: &[ScenarioRun]) -> Result<(), AbmError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "scenario", "seed", "welfare", "avg_pgi", "hhi", "innovation", "data_quality", "safety"])?;
    for run in runs {
        for m in &run.series {
            w.write_record([
                m.step.to_string(),
                run.policy.scenario_id.to_string(),
                run.seed.to_string(),
                m.social_welfare.to_string(),
                m.avg_pgi.to_string(),
                m.hhi.to_string(),
                m.innovation_index.to_string(),
                m.data_quality.to_string(),
                m.safety_index.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the segment table and the strategy table, in that order.
pub fn write_heterogeneity_csv<W1: Write, W2: Write>(segments: W1, strategies: W2, report: &HeterogeneityReport) -> Result<(), AbmError> {
    let mut w = csv::Writer::from_writer(segments);
    w.write_record(["scenario", "segment", "satisfaction", "delta_vs_s0"])?;
    for s in &report.segments {
        w.write_record([
            s.scenario.to_string(),
            s.segment.name().to_string(),
            s.satisfaction.to_string(),
            s.delta.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = csv::Writer::from_writer(strategies);
    w.write_record(["scenario", "strategy", "pgi", "pgi_delta", "safety_delta", "share_delta"])?;
    for s in &report.strategies {
        w.write_record([
            s.scenario.to_string(),
            s.strategy.name().to_string(),
            s.pgi.to_string(),
            s.pgi_delta.to_string(),
            s.safety_delta.to_string(),
            s.share_delta.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_round_trips_through_text() {
        let mut cfg = ScenarioConfig::preset(ScenarioId::S4);
        cfg.seed = 7;
        cfg.params.n_users = 120;
        let back = parse_scenario_config(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_scenario_and_keys_are_rejected() {
        assert!(matches!(parse_scenario_config("scenario = S9\n"), Err(AbmError::UnknownScenario(_))));
        assert!(matches!(parse_scenario_config("scenario = S1\nbogus = 1\n"), Err(AbmError::Config(_))));
        assert!(parse_scenario_config("scenario = S1\nsteps = 0\n").is_err());
    }

    #[test]
    fn hex_seeds_parse() {
        assert_eq!(parse_seed("0xC0FFEE"), Some(0xC0FFEE));
        assert_eq!(parse_seed("12_345"), Some(12345));
        assert_eq!(parse_seed("zz"), None);
    }
}
