//! Per-step market metrics and heterogeneity reports.

use std::collections::BTreeMap;

use super::agents::{satisfaction, FirmAgent, Segment, Strategy, TECH_CAP};
use super::market::{MarketState, ScenarioRun};
use super::policy::ScenarioId;
use super::{AbmError, AbmParams};
use crate::pgi::{compose_externality_empirical, pgi_linear, DimensionScores, WeightVector};

#[derive(Debug, Clone, PartialEq)]
pub struct FirmSnapshot {
    pub firm_id: usize,
    pub strategy: Strategy,
    pub share: f64,
    pub pgi: f64,
    pub safety: f64,
    pub excludability: f64,
    pub capital: f64,
    pub tech_level: f64,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketMetrics {
    pub step: usize,
    pub social_welfare: f64,
    pub avg_pgi: f64,
    pub hhi: f64,
    pub innovation_index: f64,
    pub data_quality: f64,
    pub safety_index: f64,
    pub mean_utility: f64,
    /// Operating profit of all firms over market value.
    pub profit_index: f64,
    pub pollution: f64,
    /// Mean provider satisfaction, indexed by [`Segment::index`].
    pub segment_satisfaction: [f64; 6],
    pub firms: Vec<FirmSnapshot>,
}

/// Metric names of [`MarketMetrics::summary_row`], in order.
pub const SUMMARY_METRICS: [&str; 6] = ["welfare", "avg_pgi", "hhi", "innovation", "data_quality", "safety"];

impl MarketMetrics {
    pub fn summary_row(&self) -> Vec<(String, f64)> {
        let values = [
            self.social_welfare,
            self.avg_pgi,
            self.hhi,
            self.innovation_index,
            self.data_quality,
            self.safety_index,
        ];
        SUMMARY_METRICS.iter().zip(values).map(|(m, v)| (m.to_string(), v)).collect()
    }

    pub fn mean_excludability(&self) -> f64 {
        let active: Vec<&FirmSnapshot> = self.firms.iter().filter(|f| f.active).collect();
        active.iter().map(|f| f.excludability).sum::<f64>() / active.len().max(1) as f64
    }
}

pub fn hhi(shares: &[f64]) -> f64 {
    shares.iter().map(|s| s * s).sum()
}

/// Concentration externality `share^ζ` scaled by unprotected output.
pub fn pollution_proxy(firm: &FirmAgent, params: &AbmParams) -> f64 {
    firm.market_share.powf(params.zeta + 1.0) * (1.0 - firm.safety_investment)
}

/// Empirical dimension scores of a firm agent.
///
/// Non-rivalry compares serving capacity (capital over `capacity_ref`) with
/// load (market share); non-excludability is `1 - E`; the externality score
/// mixes open technology spillover with the inverted pollution proxy.
pub fn firm_dimensions(firm: &FirmAgent, params: &AbmParams) -> DimensionScores {
    let cap = firm.capital / params.capacity_ref;
    let c_q = if cap + firm.market_share > 0.0 {
        cap / (cap + firm.market_share)
    } else {
        1.0
    };
    let spill = (1.0 - firm.excludability) * firm.tech_level / TECH_CAP;
    let harm = (firm.market_share.powf(params.zeta) * (1.0 - firm.safety_investment)).clamp(0.0, 1.0);
    let c_x = compose_externality_empirical(&[spill.clamp(0.0, 1.0)], &[1.0 - harm], 0.5, None)
        .map(|x| x.value)
        .unwrap_or(0.0);
    DimensionScores::empirical(c_q, 1.0 - firm.excludability, c_x)
}

pub fn firm_pgi(firm: &FirmAgent, params: &AbmParams) -> f64 {
    pgi_linear(&firm_dimensions(firm, params), &WeightVector::equal()).unwrap_or(0.0)
}

/// Profit before transfers: revenue less R&D and safety spending.
pub fn operating_profit(firm: &FirmAgent, params: &AbmParams) -> f64 {
    let s = firm.market_share;
    s * params.market_value * (firm.price - params.safety_cost * firm.safety_investment) - firm.rd_rate * firm.capital
}

pub fn compute_metrics(market: &MarketState) -> MarketMetrics {
    let p = &market.params;
    let w = &p.welfare;
    let active: Vec<&FirmAgent> = market.firms.iter().filter(|f| f.active()).collect();
    let k = active.len().max(1) as f64;
    let shares: Vec<f64> = market.firms.iter().map(|f| f.market_share).collect();

    let avg_pgi = active.iter().map(|f| firm_pgi(f, p)).sum::<f64>() / k;
    let innovation = active.iter().map(|f| f.tech_growth).sum::<f64>() / k;
    let safety_index = active.iter().map(|f| f.safety_investment).sum::<f64>() / k;
    let data_quality = active.iter().map(|f| f.market_share * f.safety_investment).sum::<f64>();
    let profit_index = active.iter().map(|f| operating_profit(f, p)).sum::<f64>() / p.market_value;
    let pollution = active.iter().map(|f| pollution_proxy(f, p)).sum::<f64>();
    let n = market.users.len().max(1) as f64;
    let mean_utility = market.users.iter().map(|u| u.realized_utility).sum::<f64>() / n;

    let mut sat = [0.0; 6];
    let mut count = [0usize; 6];
    for u in &market.users {
        if let Some(j) = u.provider {
            sat[u.segment.index()] += satisfaction(u, &market.firms[j], p);
            count[u.segment.index()] += 1;
        }
    }
    for (s, c) in sat.iter_mut().zip(count) {
        if c > 0 {
            *s /= c as f64;
        }
    }

    let welfare = p.welfare_scale
        * (w.cs * mean_utility + w.ps * profit_index + w.innovation * innovation - w.neg * pollution);

    MarketMetrics {
        step: market.step,
        social_welfare: welfare,
        avg_pgi,
        hhi: hhi(&shares),
        innovation_index: innovation,
        data_quality,
        safety_index,
        mean_utility,
        profit_index,
        pollution,
        segment_satisfaction: sat,
        firms: market
            .firms
            .iter()
            .map(|f| FirmSnapshot {
                firm_id: f.firm_id,
                strategy: f.strategy,
                share: f.market_share,
                pgi: firm_pgi(f, p),
                safety: f.safety_investment,
                excludability: f.excludability,
                capital: f.capital,
                tech_level: f.tech_level,
                active: f.active(),
            })
            .collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentDelta {
    pub scenario: ScenarioId,
    pub segment: Segment,
    pub satisfaction: f64,
    pub delta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyDelta {
    pub scenario: ScenarioId,
    pub strategy: Strategy,
    pub pgi: f64,
    pub pgi_delta: f64,
    pub safety_delta: f64,
    /// Combined share of the strategy group.
    pub share_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct HeterogeneityReport {
    pub segments: Vec<SegmentDelta>,
    pub strategies: Vec<StrategyDelta>,
}

#[derive(Default)]
struct TerminalMeans {
    satisfaction: [f64; 6],
    /// (pgi, safety, share) per strategy.
    strategy: BTreeMap<Strategy, (f64, f64, f64)>,
}

fn terminal_means(runs: &[ScenarioRun]) -> TerminalMeans {
    let mut out = TerminalMeans::default();
    let r = runs.len() as f64;
    for run in runs {
        let t = run.terminal();
        for (acc, s) in out.satisfaction.iter_mut().zip(t.segment_satisfaction) {
            *acc += s / r;
        }
        for strategy in Strategy::ALL {
            let group: Vec<&FirmSnapshot> = t.firms.iter().filter(|f| f.strategy == strategy).collect();
            let g = group.len() as f64;
            let e = out.strategy.entry(strategy).or_insert((0.0, 0.0, 0.0));
            e.0 += group.iter().map(|f| f.pgi).sum::<f64>() / g / r;
            e.1 += group.iter().map(|f| f.safety).sum::<f64>() / g / r;
            e.2 += group.iter().map(|f| f.share).sum::<f64>() / r;
        }
    }
    out
}

/// Terminal-step segment satisfaction and strategy-group outcomes of each
/// scenario, as differences from the S0 runs.
pub fn segment_report(runs: &[(ScenarioId, Vec<ScenarioRun>)]) -> Result<HeterogeneityReport, AbmError> {
    let base_runs = runs
        .iter()
        .find(|(id, _)| *id == ScenarioId::S0)
        .map(|(_, r)| r)
        .ok_or_else(|| AbmError::InvalidConfig("heterogeneity report needs S0 runs".into()))?;
    if runs.iter().any(|(_, r)| r.is_empty()) {
        return Err(AbmError::InvalidConfig("heterogeneity report needs at least one run per scenario".into()));
    }
    let base = terminal_means(base_runs);
    let mut report = HeterogeneityReport::default();
    for (id, r) in runs {
        let m = terminal_means(r);
        for seg in Segment::ALL {
            let i = seg.index();
            report.segments.push(SegmentDelta {
                scenario: *id,
                segment: seg,
                satisfaction: m.satisfaction[i],
                delta: m.satisfaction[i] - base.satisfaction[i],
            });
        }
        for strategy in Strategy::ALL {
            let (pgi, safety, share) = m.strategy[&strategy];
            let (bp, bs, bsh) = base.strategy[&strategy];
            report.strategies.push(StrategyDelta {
                scenario: *id,
                strategy,
                pgi,
                pgi_delta: pgi - bp,
                safety_delta: safety - bs,
                share_delta: share - bsh,
            });
        }
    }
    Ok(report)
}
