//! Market state and the per-step simulation loop.

use rand_distr::{Beta, Distribution};
use rayon::prelude::*;

use super::agents::{choose_provider, sample_logit, user_utility, FirmAgent, Segment, UserAgent, FIRM_PROFILES, TECH_CAP};
use super::metrics::{compute_metrics, firm_pgi, MarketMetrics};
use super::policy::PolicyScenario;
use super::{AbmError, AbmParams};
use crate::seeding::{pack, substream};
use crate::stats::harness::{run_replications, summarize, Comparison, HarnessError};

const PREFERENCE_TAG: u64 = 0;
const INITIAL_PROVIDER_TAG: u64 = 1;

fn choice_tag(step: usize) -> u64 {
    2 + 2 * step as u64
}

fn redistribution_tag(step: usize) -> u64 {
    3 + 2 * step as u64
}

/// Mean preferences of one user segment, used by firms to forecast demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SegmentProfile {
    pub segment: Segment,
    /// Fraction of the population.
    pub weight: f64,
    pub tech_savvy: f64,
    pub price_sens: f64,
    pub safety_pref: f64,
    pub brand_loyalty: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub params: AbmParams,
    pub policy: PolicyScenario,
    pub seed: u64,
    pub step: usize,
    pub firms: Vec<FirmAgent>,
    pub users: Vec<UserAgent>,
    pub segments: Vec<SegmentProfile>,
}

impl MarketState {
    pub fn user_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.firms.len()];
        for u in &self.users {
            if let Some(p) = u.provider {
                counts[p] += 1;
            }
        }
        counts
    }

    /// Sets every firm's share from the users it currently serves.
    pub fn refresh_shares(&mut self) {
        let n = self.users.len() as f64;
        let counts = self.user_counts();
        for (f, c) in self.firms.iter_mut().zip(counts) {
            f.market_share = c as f64 / n;
        }
    }
}

fn draw_user(user_id: usize, seed: u64, params: &AbmParams) -> UserAgent {
    let segment = Segment::ALL[user_id % Segment::ALL.len()];
    let mut rng = substream(seed, pack(PREFERENCE_TAG, user_id as u64));
    let mut prefs = [0.0; 4];
    for (p, (a, b)) in prefs.iter_mut().zip(segment.beta_shapes()) {
        *p = Beta::new(a, b).expect("tabulated shapes are positive").sample(&mut rng);
    }
    UserAgent {
        user_id,
        segment,
        tech_savvy: prefs[0],
        price_sens: prefs[1],
        safety_pref: prefs[2],
        brand_loyalty: prefs[3],
        provider: None,
        switching_cost: params.switching_coef * prefs[3],
        realized_utility: 0.0,
    }
}

fn segment_profiles(users: &[UserAgent]) -> Vec<SegmentProfile> {
    let n = users.len() as f64;
    Segment::ALL
        .iter()
        .map(|&segment| {
            let members: Vec<&UserAgent> = users.iter().filter(|u| u.segment == segment).collect();
            let k = members.len() as f64;
            let avg = |f: fn(&UserAgent) -> f64| members.iter().map(|u| f(u)).sum::<f64>() / k;
            SegmentProfile {
                segment,
                weight: k / n,
                tech_savvy: avg(|u| u.tech_savvy),
                price_sens: avg(|u| u.price_sens),
                safety_pref: avg(|u| u.safety_pref),
                brand_loyalty: avg(|u| u.brand_loyalty),
            }
        })
        .collect()
}

/// Six firms from the parameterization table and `n_users` users split
/// round-robin into the six segments. Initial providers are drawn with
/// probabilities equal to the tabulated market shares.
pub fn init_market(params: &AbmParams, policy: PolicyScenario, seed: u64) -> Result<MarketState, AbmError> {
    params.validate()?;
    policy.validate()?;
    let firms: Vec<FirmAgent> = FIRM_PROFILES
        .iter()
        .enumerate()
        .map(|(i, p)| FirmAgent::from_profile(i, p, params.price_base))
        .collect();
    let log_shares: Vec<f64> = firms.iter().map(|f| f.market_share.ln()).collect();
    let mut users: Vec<UserAgent> = (0..params.n_users).map(|i| draw_user(i, seed, params)).collect();
    for u in &mut users {
        let mut rng = substream(seed, pack(INITIAL_PROVIDER_TAG, u.user_id as u64));
        let k = sample_logit(&log_shares, 1.0, &mut rng);
        u.provider = Some(k);
        u.realized_utility = user_utility(u, &firms[k], firms[k].market_share, params);
    }
    let segments = segment_profiles(&users);
    let mut market = MarketState {
        params: params.clone(),
        policy,
        seed,
        step: 0,
        firms,
        users,
        segments,
    };
    for i in 0..market.firms.len() {
        market.firms[i].pgi = firm_pgi(&market.firms[i], &market.params);
    }
    Ok(market)
}

/// Every user picks a provider from the start-of-step firm states, in
/// user-id order, each with its own random substream.
pub fn user_choices(market: &mut MarketState) {
    let step = market.step;
    let seed = market.seed;
    let firms = &market.firms;
    let params = &market.params;
    let picks: Vec<(usize, f64)> = market
        .users
        .par_iter()
        .map(|u| {
            let mut rng = substream(seed, pack(choice_tag(step), u.user_id as u64));
            let k = choose_provider(u, firms, params, &mut rng);
            (k, user_utility(u, &firms[k], firms[k].market_share, params))
        })
        .collect();
    for (u, (k, util)) in market.users.iter_mut().zip(picks) {
        u.provider = Some(k);
        u.realized_utility = util;
    }
    market.refresh_shares();
}

/// Enforces the share cap, if the scenario has one, by moving the least
/// loyal users of each firm above the cap to firms below it, chosen by
/// logit weights. Returns the number of users moved.
pub fn apply_policy(market: &mut MarketState) -> usize {
    if !market.policy.caps_shares() {
        return 0;
    }
    let n = market.users.len();
    let active = market.firms.iter().filter(|f| f.active()).count().max(1);
    let limit = ((market.policy.share_cap * n as f64).floor() as usize).max(n.div_ceil(active));
    let mut counts = market.user_counts();
    let mut moved = 0;
    for source in 0..market.firms.len() {
        if counts[source] <= limit {
            continue;
        }
        let mut members: Vec<usize> = (0..n).filter(|&k| market.users[k].provider == Some(source)).collect();
        members.sort_by(|&a, &b| {
            market.users[a]
                .brand_loyalty
                .total_cmp(&market.users[b].brand_loyalty)
                .then(a.cmp(&b))
        });
        let excess = counts[source] - limit;
        for &k in members.iter().take(excess) {
            let user = &market.users[k];
            let utilities: Vec<f64> = market
                .firms
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    if j != source && f.active() && counts[j] < limit {
                        user_utility(user, f, f.market_share, &market.params)
                    } else {
                        f64::NEG_INFINITY
                    }
                })
                .collect();
            if utilities.iter().all(|u| *u == f64::NEG_INFINITY) {
                break;
            }
            let mut rng = substream(market.seed, pack(redistribution_tag(market.step), user.user_id as u64));
            let target = sample_logit(&utilities, market.params.mu, &mut rng);
            let util = utilities[target];
            let user = &mut market.users[k];
            user.provider = Some(target);
            user.realized_utility = util;
            counts[source] -= 1;
            counts[target] += 1;
            moved += 1;
        }
    }
    market.refresh_shares();
    moved
}

/// Share of firm `i` forecast from segment-average users when it sets
/// excludability `e` and everybody else stays put.
pub fn predicted_share(market: &MarketState, i: usize, e: f64) -> f64 {
    let params = &market.params;
    let mut total = 0.0;
    for seg in &market.segments {
        let rep = UserAgent {
            user_id: usize::MAX,
            segment: seg.segment,
            tech_savvy: seg.tech_savvy,
            price_sens: seg.price_sens,
            safety_pref: seg.safety_pref,
            brand_loyalty: seg.brand_loyalty,
            provider: None,
            switching_cost: 0.0,
            realized_utility: 0.0,
        };
        let mut own = 0.0;
        let mut max = f64::NEG_INFINITY;
        let utilities: Vec<Option<f64>> = market
            .firms
            .iter()
            .map(|f| {
                if !f.active() {
                    return None;
                }
                let u = if f.firm_id == i {
                    let mut g = f.clone();
                    g.price = params.price_base * e;
                    user_utility(&rep, &g, f.market_share, params)
                } else {
                    user_utility(&rep, f, f.market_share, params)
                };
                max = max.max(u);
                Some(u)
            })
            .collect();
        let mut denom = 0.0;
        for (j, u) in utilities.iter().enumerate() {
            if let Some(u) = u {
                let w = ((u - max) / params.mu).exp();
                denom += w;
                if j == i {
                    own = w;
                }
            }
        }
        total += seg.weight * own / denom;
    }
    total
}

/// One-step payoff the firm expects from excludability `e`, including
/// policy transfers.
pub fn expected_payoff(market: &MarketState, i: usize, e: f64) -> f64 {
    let p = &market.params;
    let pol = &market.policy;
    let f = &market.firms[i];
    let s = predicted_share(market, i, e);
    let per_share = p.price_base * e - p.safety_cost * f.safety_investment + pol.subsidy_rate * (1.0 - e);
    s * p.market_value * per_share - pol.pollution_tax_rate * s.powf(p.zeta + 1.0) * p.market_value
}

/// Accounting and strategy update of firm `i` after users have chosen.
///
/// Capital moves by revenue minus R&D and safety spending plus subsidy
/// minus tax; tech grows with the square root of R&D spending and slows
/// near the cap; excludability moves at most one step to the best of the
/// three neighbouring levels (ties go to the lower level).
pub fn firm_step(market: &MarketState, i: usize) -> FirmAgent {
    let p = &market.params;
    let pol = &market.policy;
    let mut f = market.firms[i].clone();
    if f.dormant {
        f.tech_growth = 0.0;
        return f;
    }
    let s = f.market_share;
    let v = p.market_value;
    let revenue = s * v * f.price;
    let rd_spend = f.rd_rate * f.capital;
    let safety_spend = p.safety_cost * f.safety_investment * s * v;
    let subsidy = pol.subsidy_rate * (1.0 - f.excludability) * s * v;
    let tax = pol.pollution_tax_rate * s.powf(p.zeta + 1.0) * v;

    let mut best = (f64::NEG_INFINITY, f.excludability);
    for cand in [f.excludability - p.e_step, f.excludability, f.excludability + p.e_step] {
        let e = (cand.clamp(0.0, 1.0) * 1e9).round() / 1e9;
        let payoff = expected_payoff(market, i, e);
        if payoff > best.0 || (payoff == best.0 && e < best.1) {
            best = (payoff, e);
        }
    }

    let increment = p.tech_gain * (rd_spend / 1000.0).sqrt() * (1.0 - f.tech_level / TECH_CAP);
    let tech = (f.tech_level + increment).clamp(0.0, TECH_CAP);
    f.tech_growth = (tech - f.tech_level) / f.tech_level;
    f.tech_level = tech;
    f.capital += revenue - rd_spend - safety_spend + subsidy - tax;
    if f.capital <= 0.0 {
        f.capital = 0.0;
        f.dormant = true;
    }
    if pol.pollution_tax_rate > 0.0 {
        f.safety_investment += p.safety_response * pol.pollution_tax_rate * (1.0 - f.safety_investment);
        f.safety_investment = f.safety_investment.min(1.0);
    }
    f.excludability = best.1;
    f.price = p.price_base * f.excludability;
    f.pgi = firm_pgi(&f, p);
    f
}

/// One full step: user choices, policy enforcement, firm updates.
pub fn advance(market: &mut MarketState) {
    market.step += 1;
    user_choices(market);
    apply_policy(market);
    let next: Vec<FirmAgent> = (0..market.firms.len()).map(|i| firm_step(market, i)).collect();
    market.firms = next;
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioRun {
    pub policy: PolicyScenario,
    pub seed: u64,
    pub n_users: usize,
    /// Row 0 describes the initial market; row `k` the market after step `k`.
    pub series: Vec<MarketMetrics>,
}

impl ScenarioRun {
    pub fn terminal(&self) -> &MarketMetrics {
        self.series.last().expect("series holds the initial row")
    }
}

pub fn run_scenario(params: &AbmParams, policy: PolicyScenario, steps: usize, seed: u64) -> Result<ScenarioRun, AbmError> {
    let (run, _) = run_scenario_with_state(params, policy, steps, seed)?;
    Ok(run)
}

/// As [`run_scenario`], also returning the final market state.
pub fn run_scenario_with_state(
    params: &AbmParams,
    policy: PolicyScenario,
    steps: usize,
    seed: u64,
) -> Result<(ScenarioRun, MarketState), AbmError> {
    if steps == 0 {
        return Err(AbmError::InvalidConfig("steps must be at least 1".into()));
    }
    let mut market = init_market(params, policy, seed)?;
    let mut series = Vec::with_capacity(steps + 1);
    series.push(compute_metrics(&market));
    for _ in 0..steps {
        advance(&mut market);
        series.push(compute_metrics(&market));
    }
    Ok((
        ScenarioRun {
            policy,
            seed,
            n_users: params.n_users,
            series,
        },
        market,
    ))
}

/// Runs `reps` replications of each scenario with harness-derived seeds
/// and summarizes terminal-step metrics. Runs are returned as
/// `[scenario][rep]`.
pub fn compare_scenarios(
    params: &AbmParams,
    scenarios: &[PolicyScenario],
    reps: usize,
    steps: usize,
    base_seed: u64,
) -> Result<(Vec<Vec<ScenarioRun>>, Comparison), HarnessError> {
    let labels: Vec<String> = scenarios.iter().map(|s| s.scenario_id.to_string()).collect();
    let runs = run_replications(&labels, reps, base_seed, |s, seed| run_scenario(params, scenarios[s], steps, seed))?;
    let rows: Vec<Vec<Vec<(String, f64)>>> = runs
        .iter()
        .map(|reps| reps.iter().map(|r| r.terminal().summary_row()).collect())
        .collect();
    let cmp = summarize(&labels, &rows)?;
    Ok((runs, cmp))
}
