//! Bundled data sets so every published table can be reproduced offline.

use crate::scorecard::{read_scorecards, AccessMode, Scorecard};

/// Normalized sub-indicator scores for the five-model comparison.
pub const MASTER_SCORECARDS_CSV: &str = include_str!("../data/scorecards_master.csv");

/// Baseline calibration for the continuous-time duopoly.
pub const BASELINE_CALIBRATION: &str = include_str!("../data/baseline.cal");

/// Two identical firms with strong data feedback, for tipping runs.
pub const TIPPING_CALIBRATION: &str = include_str!("../data/tipping.cal");

/// Duopoly where only firm 0 has increasing returns to data.
pub const DUOPOLY_CALIBRATION: &str = include_str!("../data/duopoly.cal");

/// Published final dimension scores `(model, access, c_q, c_e, c_x)`.
pub const PUBLISHED_DIMENSIONS: [(&str, AccessMode, f64, f64, f64); 5] = [
    ("Llama", AccessMode::OpenWeight, 1.00, 0.75, 0.55),
    ("Qwen", AccessMode::OpenWeight, 0.30, 1.00, 0.60),
    ("Claude", AccessMode::ClosedApi, 0.98, 0.30, 0.33),
    ("Gemini", AccessMode::ClosedApi, 0.88, 0.30, 0.38),
    ("ChatGPT", AccessMode::ClosedApi, 0.50, 0.30, 0.35),
];

/// Published composite scores in the same order as [`PUBLISHED_DIMENSIONS`].
pub const PUBLISHED_COMPOSITES: [f64; 5] = [0.767, 0.633, 0.537, 0.520, 0.383];

/// `(model, c_q, c_e, c_x)` for GPT-2, GPT-3, GPT-4.
pub const OPENAI_CASE: [(&str, f64, f64, f64); 3] = [
    ("GPT-2", 0.95, 0.85, 0.78),
    ("GPT-3", 0.70, 0.45, 0.65),
    ("GPT-4", 0.45, 0.25, 0.42),
];

pub const OPENAI_PUBLISHED_COMPOSITES: [f64; 3] = [0.86, 0.60, 0.37];

/// Estimated social-optimum PGI band for GPT-4 (taken as given).
pub const GPT4_SOCIAL_BAND: (f64, f64) = (0.65, 0.75);

pub fn master_scorecards() -> Vec<Scorecard> {
    read_scorecards(MASTER_SCORECARDS_CSV.as_bytes()).expect("bundled scorecards are valid")
}

/// Master scorecards with the published dimension scores attached as
/// overrides, in published rank order.
pub fn published_dimension_cards() -> Vec<Scorecard> {
    let master = master_scorecards();
    PUBLISHED_DIMENSIONS
        .iter()
        .map(|(id, mode, q, e, x)| {
            let mut card = master
                .iter()
                .find(|c| c.model_id == *id)
                .cloned()
                .expect("fixture ids agree");
            card.access_mode = *mode;
            card.dimension_overrides = Some((*q, *e, *x));
            card
        })
        .collect()
}
