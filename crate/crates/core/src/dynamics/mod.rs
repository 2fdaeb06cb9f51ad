//! Continuous-time oligopoly model of openness choice.
//!
//! Firms accumulate algorithmic, data and compute capital, attract users
//! through a logit demand system and generate positive and negative
//! externalities. Excludability `e` is a constant policy per run; optimal
//! policies are found by exhaustive search over a grid in `[0, 1]`.

pub mod calibration;
pub mod integrate;
pub mod model;
pub mod optimize;

pub use calibration::{parse_calibration, Calibration};
pub use integrate::{integrate, rk4_step, Market, MarketTrajectory};
pub use model::{
    consumer_surplus, derivatives, logit_shares, pgi_from_state, profit_flow, spillover_pool, tech_aggregate, user_demand, utilities,
    DemandSystem, FirmParams, FirmState, Rates,
};
pub use optimize::*;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("non-finite value in the `{term}` rate")]
    NumericOverflow { term: &'static str },
    #[error("divergence at t = {time}: a stock exceeded 1e12")]
    Divergence { time: f64, partial: Box<MarketTrajectory> },
    #[error("integration failed at t = {time}: {source}")]
    Failed {
        time: f64,
        source: Box<DynamicsError>,
        partial: Box<MarketTrajectory>,
    },
    #[error(transparent)]
    Config(#[from] crate::kv::ConfigError),
}

impl DynamicsError {
    /// Trajectory computed up to the failure, when there is one.
    pub fn partial(&self) -> Option<&MarketTrajectory> {
        match self {
            DynamicsError::Divergence { partial, .. } | DynamicsError::Failed { partial, .. } => Some(partial),
            _ => None,
        }
    }

    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            DynamicsError::Divergence { .. } | DynamicsError::Failed { .. } | DynamicsError::NumericOverflow { .. } | DynamicsError::Domain(_)
        )
    }
}
