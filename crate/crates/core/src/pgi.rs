//! Public Goods Index: dimension composition, linear and CES aggregation,
//! ranking, weight-sensitivity sweeps and the longitudinal OpenAI case.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::scorecard::{AccessMode, Scorecard};
use crate::seeding;

#[derive(Debug, Error, PartialEq)]
pub enum PgiError {
    #[error("ratio undefined: both terms are zero")]
    UndefinedRatio,
    #[error("negative input {0} to a non-negative ratio")]
    NegativeInput(f64),
    #[error("cannot aggregate an empty list")]
    Empty,
    #[error("weights ({0}, {1}, {2}) must be non-negative and sum to 1")]
    BadWeights(f64, f64, f64),
    #[error("CES exponent rho = 0 (Cobb-Douglas limit) is not supported")]
    ZeroRho,
    #[error("CES domain error: component {value} with rho = {rho}")]
    CesDomain { value: f64, rho: f64 },
    #[error("dimension {name} = {value} outside its declared range")]
    DimensionRange { name: &'static str, value: f64 },
    #[error("invalid sensitivity box [{0}, {1}]")]
    BadBox(f64, f64),
    #[error("need at least one draw")]
    NoDraws,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// Every component in [0, 1].
    Empirical,
    /// `c_x` is the signed ratio in [-1, 1].
    Theoretical,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimensionScores {
    pub c_q: f64,
    pub c_e: f64,
    pub c_x: f64,
    pub variant: Variant,
}

impl DimensionScores {
    pub fn empirical(c_q: f64, c_e: f64, c_x: f64) -> Self {
        Self {
            c_q,
            c_e,
            c_x,
            variant: Variant::Empirical,
        }
    }

    pub fn validate(&self) -> Result<(), PgiError> {
        let unit = 0.0..=1.0;
        for (name, v) in [("c_q", self.c_q), ("c_e", self.c_e)] {
            if !unit.contains(&v) {
                return Err(PgiError::DimensionRange { name, value: v });
            }
        }
        let x_ok = match self.variant {
            Variant::Empirical => unit.contains(&self.c_x),
            Variant::Theoretical => (-1.0..=1.0).contains(&self.c_x),
        };
        if !x_ok {
            return Err(PgiError::DimensionRange {
                name: "c_x",
                value: self.c_x,
            });
        }
        Ok(())
    }

    fn as_array(&self) -> [f64; 3] {
        [self.c_q, self.c_e, self.c_x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightVector {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl WeightVector {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self, PgiError> {
        let ok = [alpha, beta, gamma].iter().all(|w| w.is_finite() && *w >= 0.0)
            && (alpha + beta + gamma - 1.0).abs() <= 1e-9;
        if !ok {
            return Err(PgiError::BadWeights(alpha, beta, gamma));
        }
        Ok(Self { alpha, beta, gamma })
    }

    pub fn equal() -> Self {
        Self {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        }
    }

    /// Scales non-negative raw weights to sum to one.
    pub fn normalized(raw: [f64; 3]) -> Result<Self, PgiError> {
        let s: f64 = raw.iter().sum();
        if !(s > 0.0) || raw.iter().any(|w| *w < 0.0) {
            return Err(PgiError::BadWeights(raw[0], raw[1], raw[2]));
        }
        Self::new(raw[0] / s, raw[1] / s, raw[2] / s)
    }

    fn as_array(&self) -> [f64; 3] {
        [self.alpha, self.beta, self.gamma]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PgiResult {
    pub model_id: String,
    pub dims: DimensionScores,
    pub composite: f64,
    pub rank: usize,
}

/// Share of uncongested capacity, `q* / (q* + Q)`.
pub fn nonrivalry_ratio(q_star: f64, load: f64) -> Result<f64, PgiError> {
    for v in [q_star, load] {
        if v < 0.0 {
            return Err(PgiError::NegativeInput(v));
        }
    }
    if q_star + load == 0.0 {
        return Err(PgiError::UndefinedRatio);
    }
    Ok(q_star / (q_star + load))
}

pub fn compose_dimension_mean(subscores: &[f64]) -> Result<f64, PgiError> {
    if subscores.is_empty() {
        return Err(PgiError::Empty);
    }
    Ok(subscores.iter().sum::<f64>() / subscores.len() as f64)
}

/// Signed net-externality balance `(X+ - X-) / (X+ + X-)`.
pub fn externality_ratio(x_pos: f64, x_neg: f64) -> Result<f64, PgiError> {
    for v in [x_pos, x_neg] {
        if v < 0.0 {
            return Err(PgiError::NegativeInput(v));
        }
    }
    if x_pos + x_neg == 0.0 {
        return Err(PgiError::UndefinedRatio);
    }
    Ok((x_pos - x_neg) / (x_pos + x_neg))
}

/// Empirical net-externality score. `value` is what feeds the index (the
/// override when present); `computed` is the two-block mean regardless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExternalityScore {
    pub value: f64,
    pub computed: f64,
    pub overridden: bool,
}

impl ExternalityScore {
    pub fn delta(&self) -> f64 {
        self.value - self.computed
    }
}

pub fn compose_externality_empirical(
    pos: &[f64],
    neg_inverted: &[f64],
    w_pos: f64,
    cx_override: Option<f64>,
) -> Result<ExternalityScore, PgiError> {
    if !(0.0..=1.0).contains(&w_pos) {
        return Err(PgiError::BadWeights(w_pos, 1.0 - w_pos, 0.0));
    }
    let computed = w_pos * compose_dimension_mean(pos)? + (1.0 - w_pos) * compose_dimension_mean(neg_inverted)?;
    Ok(match cx_override {
        Some(v) => ExternalityScore {
            value: v,
            computed,
            overridden: true,
        },
        None => ExternalityScore {
            value: computed,
            computed,
            overridden: false,
        },
    })
}

/// Dimension scores for a scorecard: published overrides win, otherwise
/// non-rivalry and non-excludability are sub-score means and net
/// externality is the `w_pos` two-block mean (or `cx_override`).
pub fn dims_from_scorecard(card: &Scorecard, w_pos: f64) -> Result<(DimensionScores, ExternalityScore), PgiError> {
    let cx = compose_externality_empirical(
        &[card.citation_score, card.download_score],
        &[card.misuse_inv, card.bias_inv, card.env_inv],
        w_pos,
        card.cx_override,
    )?;
    let dims = match card.dimension_overrides {
        Some((q, e, x)) => DimensionScores::empirical(q, e, x),
        None => DimensionScores::empirical(
            compose_dimension_mean(&[card.load_score, card.capacity_score])?,
            compose_dimension_mean(&[card.legal_score, card.economic_score])?,
            cx.value,
        ),
    };
    dims.validate()?;
    Ok((dims, cx))
}

pub fn pgi_linear(dims: &DimensionScores, w: &WeightVector) -> Result<f64, PgiError> {
    dims.validate()?;
    Ok(w.alpha * dims.c_q + w.beta * dims.c_e + w.gamma * dims.c_x)
}

/// Weighted power mean `(Σ w_k c_k^ρ)^(1/ρ)`.
pub fn pgi_ces(dims: &DimensionScores, w: &WeightVector, rho: f64) -> Result<f64, PgiError> {
    if rho == 0.0 {
        return Err(PgiError::ZeroRho);
    }
    dims.validate()?;
    let mut acc = 0.0;
    for (c, wk) in dims.as_array().into_iter().zip(w.as_array()) {
        if c < 0.0 && rho.fract() != 0.0 || c == 0.0 && rho < 0.0 {
            return Err(PgiError::CesDomain { value: c, rho });
        }
        acc += wk * c.powf(rho);
    }
    if rho == 1.0 {
        return Ok(acc);
    }
    Ok(acc.powf(1.0 / rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Aggregator {
    Linear,
    Ces(f64),
}

impl Aggregator {
    pub fn apply(&self, dims: &DimensionScores, w: &WeightVector) -> Result<f64, PgiError> {
        match self {
            Aggregator::Linear => pgi_linear(dims, w),
            Aggregator::Ces(rho) => pgi_ces(dims, w, *rho),
        }
    }
}

fn rank_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

/// Sorts descending by composite, ties by ascending model id, and assigns
/// ranks 1..N.
pub fn rank_models(results: Vec<(String, DimensionScores, f64)>) -> Vec<PgiResult> {
    let mut rows = results;
    rows.sort_by(|a, b| rank_order((&a.0, a.2), (&b.0, b.2)));
    rows.into_iter()
        .enumerate()
        .map(|(i, (model_id, dims, composite))| PgiResult {
            model_id,
            dims,
            composite,
            rank: i + 1,
        })
        .collect()
}

/// Scores and ranks a set of scorecards.
pub fn compute_ranking(cards: &[Scorecard], w: &WeightVector, agg: Aggregator, w_pos: f64) -> Result<Vec<PgiResult>, PgiError> {
    let mut rows = Vec::with_capacity(cards.len());
    for c in cards {
        let (dims, _) = dims_from_scorecard(c, w_pos)?;
        rows.push((c.model_id.clone(), dims, agg.apply(&dims, w)?));
    }
    Ok(rank_models(rows))
}

/// Kendall tau-a between two orderings of the same model ids.
pub fn kendall_tau(order_a: &[String], order_b: &[String]) -> f64 {
    let pos_b: BTreeMap<&str, usize> = order_b.iter().enumerate().map(|(i, m)| (m.as_str(), i)).collect();
    let n = order_a.len();
    if n < 2 {
        return 1.0;
    }
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let bi = pos_b[order_a[i].as_str()];
            let bj = pos_b[order_a[j].as_str()];
            if bi < bj {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    (concordant - discordant) as f64 / (n * (n - 1) / 2) as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityReport {
    pub n_draws: usize,
    pub seed: u64,
    pub models: Vec<String>,
    /// `rank_counts[m][r]`: draws in which model `m` held rank `r + 1`.
    pub rank_counts: Vec<Vec<usize>>,
    /// `outrank_counts[a][b]`: draws in which model `a` ranked above `b`.
    pub outrank_counts: Vec<Vec<usize>>,
    /// Draws where every open-weight model sits above every closed model.
    pub open_top_count: usize,
    pub n_open: usize,
}

impl SensitivityReport {
    pub fn rank_frequency(&self, model: usize, rank: usize) -> f64 {
        self.rank_counts[model][rank - 1] as f64 / self.n_draws as f64
    }

    pub fn outrank_frequency(&self, a: usize, b: usize) -> f64 {
        self.outrank_counts[a][b] as f64 / self.n_draws as f64
    }

    pub fn open_top_rate(&self) -> f64 {
        self.open_top_count as f64 / self.n_draws as f64
    }

    pub fn index_of(&self, model: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model)
    }
}

/// Draws each weight uniformly from `[box_lo, box_hi]`, renormalizes and
/// re-ranks. Draw `k` uses its own substream derived from `(seed, k)`, so
/// the report does not depend on scheduling.
pub fn weight_sensitivity(
    cards: &[Scorecard],
    n_draws: usize,
    box_lo: f64,
    box_hi: f64,
    seed: u64,
    w_pos: f64,
) -> Result<SensitivityReport, PgiError> {
    if n_draws == 0 {
        return Err(PgiError::NoDraws);
    }
    if !(box_lo < box_hi) || box_lo < 0.0 {
        return Err(PgiError::BadBox(box_lo, box_hi));
    }
    let dims: Vec<DimensionScores> = cards
        .iter()
        .map(|c| dims_from_scorecard(c, w_pos).map(|d| d.0))
        .collect::<Result<_, _>>()?;
    let ids: Vec<&str> = cards.iter().map(|c| c.model_id.as_str()).collect();
    let open: Vec<bool> = cards.iter().map(|c| c.access_mode == AccessMode::OpenWeight).collect();
    let n = cards.len();
    let n_open = open.iter().filter(|o| **o).count();

    let orders: Vec<Vec<usize>> = (0..n_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = seeding::substream(seed, k as u64);
            let raw = [
                rng.random_range(box_lo..box_hi),
                rng.random_range(box_lo..box_hi),
                rng.random_range(box_lo..box_hi),
            ];
            let w = WeightVector::normalized(raw).expect("box weights are positive");
            let scores: Vec<f64> = dims
                .iter()
                .map(|d| w.alpha * d.c_q + w.beta * d.c_e + w.gamma * d.c_x)
                .collect();
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| rank_order((ids[a], scores[a]), (ids[b], scores[b])));
            order
        })
        .collect();

    let mut rank_counts = vec![vec![0usize; n]; n];
    let mut outrank_counts = vec![vec![0usize; n]; n];
    let mut open_top_count = 0;
    for order in &orders {
        for (r, &m) in order.iter().enumerate() {
            rank_counts[m][r] += 1;
            for &below in &order[r + 1..] {
                outrank_counts[m][below] += 1;
            }
        }
        if order[..n_open].iter().all(|&m| open[m]) {
            open_top_count += 1;
        }
    }
    Ok(SensitivityReport {
        n_draws,
        seed,
        models: ids.iter().map(|s| s.to_string()).collect(),
        rank_counts,
        outrank_counts,
        open_top_count,
        n_open,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct CaseSeries {
    pub results: Vec<PgiResult>,
    /// Relative decline of the composite from first to last entry.
    pub decline: f64,
}

/// Dimension triples of GPT-2, GPT-3 and GPT-4, equally weighted.
pub fn openai_case() -> CaseSeries {
    let w = WeightVector::equal();
    let results: Vec<PgiResult> = crate::fixtures::OPENAI_CASE
        .iter()
        .enumerate()
        .map(|(i, (id, q, e, x))| {
            let dims = DimensionScores::empirical(*q, *e, *x);
            PgiResult {
                model_id: id.to_string(),
                dims,
                composite: pgi_linear(&dims, &w).expect("fixture is in range"),
                rank: i + 1,
            }
        })
        .collect();
    let first = results.first().map(|r| r.composite).unwrap_or(0.0);
    let last = results.last().map(|r| r.composite).unwrap_or(0.0);
    CaseSeries {
        decline: (first - last) / first,
        results,
    }
}

/// Socially optimal minus market PGI.
pub fn pgi_gap(pgi_social: f64, pgi_private: f64) -> f64 {
    pgi_social - pgi_private
}
