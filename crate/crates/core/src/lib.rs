//! Public goods index construction, a continuous-time model of openness
//! choice in AI model markets, an agent-based policy simulator and the
//! statistics used to compare policy scenarios.

pub mod abm;
pub mod dynamics;
pub mod fixtures;
pub mod kv;
pub mod pgi;
pub mod scorecard;
pub mod seeding;
pub mod stats;
