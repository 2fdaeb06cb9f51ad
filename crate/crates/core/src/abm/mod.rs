//! Agent-based simulation of an AI model market under policy scenarios.
//!
//! Six firm agents compete for a population of users split into six
//! preference segments. Each step users pick a provider by logit choice,
//! the government layer enforces any share cap, and firms update capital,
//! technology, safety effort and excludability. Replications are pure
//! functions of `(scenario, seed, n_users, steps)`.

pub mod agents;
pub mod config;
pub mod market;
pub mod metrics;
pub mod policy;

pub use agents::{
    choose_provider, sample_logit, satisfaction, user_utility, FirmAgent, FirmProfile, Segment, Strategy, UserAgent,
    FIRM_PROFILES, TECH_CAP,
};
pub use config::{parse_scenario_config, write_heterogeneity_csv, write_series_csv, ScenarioConfig};
pub use market::{
    advance, apply_policy, compare_scenarios, expected_payoff, firm_step, init_market, predicted_share, run_scenario, run_scenario_with_state,
    user_choices, MarketState, ScenarioRun, SegmentProfile,
};
pub use metrics::{
    compute_metrics, firm_dimensions, firm_pgi, hhi, operating_profit, pollution_proxy, segment_report, FirmSnapshot,
    HeterogeneityReport, MarketMetrics, SegmentDelta, StrategyDelta, SUMMARY_METRICS,
};
pub use policy::{PolicyScenario, ScenarioId, DEFAULT_POLLUTION_TAX, DEFAULT_SHARE_CAP, DEFAULT_SUBSIDY_RATE};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum AbmError {
    #[error("unknown scenario `{0}` (expected S0..S4)")]
    UnknownScenario(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Config(#[from] crate::kv::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

/// Weights of the composite welfare index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareIndexWeights {
    pub cs: f64,
    pub ps: f64,
    pub innovation: f64,
    pub neg: f64,
}

impl Default for WelfareIndexWeights {
    fn default() -> Self {
        Self {
            cs: 0.4,
            ps: 0.2,
            innovation: 0.2,
            neg: 0.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AbmParams {
    pub n_users: usize,
    /// Logit temperature of provider choice.
    pub mu: f64,
    /// Multiplier on the taste part of user utility.
    pub taste_scale: f64,
    pub network_coef: f64,
    pub loyalty_bonus: f64,
    /// Switching cost per unit of brand loyalty.
    pub switching_coef: f64,
    /// Revenue of the whole market at unit price, per step.
    pub market_value: f64,
    /// Price of a fully closed model.
    pub price_base: f64,
    pub tech_gain: f64,
    /// Safety spending per unit of safety effort and revenue share.
    pub safety_cost: f64,
    /// Capital at which serving capacity equals the whole market.
    pub capacity_ref: f64,
    /// Concentration exponent of the pollution proxy.
    pub zeta: f64,
    /// Safety effort response per unit of tax rate.
    pub safety_response: f64,
    /// Excludability search step.
    pub e_step: f64,
    pub welfare: WelfareIndexWeights,
    pub welfare_scale: f64,
}

impl Default for AbmParams {
    fn default() -> Self {
        Self {
            n_users: 2000,
            mu: 1.0,
            taste_scale: 5.0,
            network_coef: 7.0,
            loyalty_bonus: 1.0,
            switching_coef: 1.0,
            market_value: 20000.0,
            price_base: 1.0,
            tech_gain: 1.0,
            safety_cost: 0.2,
            capacity_ref: 50000.0,
            zeta: 1.5,
            safety_response: 0.1,
            e_step: 0.05,
            welfare: WelfareIndexWeights::default(),
            welfare_scale: 19600.0,
        }
    }
}

impl AbmParams {
    pub fn validate(&self) -> Result<(), AbmError> {
        if self.n_users < 6 {
            return Err(AbmError::InvalidConfig(format!("need at least 6 users, got {}", self.n_users)));
        }
        if !(self.n_users < (1 << 40)) {
            return Err(AbmError::InvalidConfig("too many users".into()));
        }
        let positive = [
            ("mu", self.mu),
            ("market_value", self.market_value),
            ("price_base", self.price_base),
            ("capacity_ref", self.capacity_ref),
            ("e_step", self.e_step),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(AbmError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        let nonneg = [
            ("taste_scale", self.taste_scale),
            ("network_coef", self.network_coef),
            ("loyalty_bonus", self.loyalty_bonus),
            ("switching_coef", self.switching_coef),
            ("tech_gain", self.tech_gain),
            ("safety_cost", self.safety_cost),
            ("zeta", self.zeta),
            ("safety_response", self.safety_response),
            ("w_cs", self.welfare.cs),
            ("w_ps", self.welfare.ps),
            ("w_in", self.welfare.innovation),
            ("w_neg", self.welfare.neg),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(AbmError::InvalidConfig(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.safety_response > 2.0 {
            return Err(AbmError::InvalidConfig("safety_response above 2 overshoots full safety".into()));
        }
        Ok(())
    }
}
