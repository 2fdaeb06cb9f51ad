//! Firm and user agents, user utility and logit provider choice.

use rand::Rng;

use super::AbmParams;

/// Maximum attainable technology level.
pub const TECH_CAP: f64 = 110.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Strategy {
    ClubGood,
    SafetyClub,
    Hybrid,
    StrongPublic,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [Strategy::ClubGood, Strategy::SafetyClub, Strategy::Hybrid, Strategy::StrongPublic];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::ClubGood => "club_good",
            Strategy::SafetyClub => "safety_club",
            Strategy::Hybrid => "hybrid",
            Strategy::StrongPublic => "strong_public",
        }
    }
}

/// One row of the firm parameterization table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmProfile {
    pub name: &'static str,
    /// Millions of currency units.
    pub capital: f64,
    pub tech_level: f64,
    pub market_share: f64,
    pub strategy: Strategy,
    pub description: &'static str,
    pub excludability: f64,
    pub safety_investment: f64,
    /// Fraction of capital spent on R&D each step.
    pub rd_rate: f64,
}

pub const FIRM_PROFILES: [FirmProfile; 6] = [
    FirmProfile {
        name: "OpenAI",
        capital: 10000.0,
        tech_level: 95.0,
        market_share: 0.35,
        strategy: Strategy::ClubGood,
        description: "High exclusibility, premium services",
        excludability: 0.70,
        safety_investment: 0.15,
        rd_rate: 0.12,
    },
    FirmProfile {
        name: "Anthropic",
        capital: 6000.0,
        tech_level: 94.0,
        market_share: 0.18,
        strategy: Strategy::SafetyClub,
        description: "Safety-focused, controlled access",
        excludability: 0.60,
        safety_investment: 0.35,
        rd_rate: 0.18,
    },
    FirmProfile {
        name: "Google",
        capital: 15000.0,
        tech_level: 96.0,
        market_share: 0.22,
        strategy: Strategy::Hybrid,
        description: "Mixed open/closed approach",
        excludability: 0.50,
        safety_investment: 0.25,
        rd_rate: 0.16,
    },
    FirmProfile {
        name: "Alibaba",
        capital: 8000.0,
        tech_level: 90.0,
        market_share: 0.12,
        strategy: Strategy::Hybrid,
        description: "Regional focus, moderate openness",
        excludability: 0.40,
        safety_investment: 0.20,
        rd_rate: 0.16,
    },
    FirmProfile {
        name: "Meta",
        capital: 12000.0,
        tech_level: 92.0,
        market_share: 0.10,
        strategy: Strategy::StrongPublic,
        description: "Open source, ecosystem building",
        excludability: 0.25,
        safety_investment: 0.15,
        rd_rate: 0.15,
    },
    FirmProfile {
        name: "DeepSeek",
        capital: 4000.0,
        tech_level: 91.0,
        market_share: 0.03,
        strategy: Strategy::StrongPublic,
        description: "Research-oriented, open access",
        excludability: 0.20,
        safety_investment: 0.18,
        rd_rate: 0.15,
    },
];

#[derive(Debug, Clone, PartialEq)]
pub struct FirmAgent {
    pub firm_id: usize,
    pub name: String,
    pub strategy: Strategy,
    pub capital: f64,
    pub tech_level: f64,
    pub market_share: f64,
    pub excludability: f64,
    pub safety_investment: f64,
    pub rd_rate: f64,
    pub price: f64,
    pub pgi: f64,
    pub dormant: bool,
    /// Relative tech growth in the last step.
    pub tech_growth: f64,
}

impl FirmAgent {
    pub fn from_profile(firm_id: usize, p: &FirmProfile, price_base: f64) -> Self {
        Self {
            firm_id,
            name: p.name.to_string(),
            strategy: p.strategy,
            capital: p.capital,
            tech_level: p.tech_level,
            market_share: p.market_share,
            excludability: p.excludability,
            safety_investment: p.safety_investment,
            rd_rate: p.rd_rate,
            price: price_base * p.excludability,
            pgi: 0.0,
            dormant: false,
            tech_growth: 0.0,
        }
    }

    pub fn active(&self) -> bool {
        !self.dormant
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Segment {
    TechExperts,
    PriceSensitive,
    SafetyPriority,
    BrandLoyal,
    EarlyAdopters,
    BalancedUsers,
}

impl Segment {
    pub const ALL: [Segment; 6] = [
        Segment::TechExperts,
        Segment::PriceSensitive,
        Segment::SafetyPriority,
        Segment::BrandLoyal,
        Segment::EarlyAdopters,
        Segment::BalancedUsers,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Segment::TechExperts => "TechExperts",
            Segment::PriceSensitive => "PriceSensitive",
            Segment::SafetyPriority => "SafetyPriority",
            Segment::BrandLoyal => "BrandLoyal",
            Segment::EarlyAdopters => "EarlyAdopters",
            Segment::BalancedUsers => "BalancedUsers",
        }
    }

    pub fn index(&self) -> usize {
        *self as usize
    }

    /// Beta shapes for (tech, price, safety, loyalty).
    pub fn beta_shapes(&self) -> [(f64, f64); 4] {
        match self {
            Segment::TechExperts => [(6.0, 2.0), (2.0, 5.0), (4.0, 3.0), (3.0, 4.0)],
            Segment::PriceSensitive => [(2.0, 5.0), (6.0, 2.0), (2.0, 4.0), (4.0, 3.0)],
            Segment::SafetyPriority => [(3.0, 3.0), (3.0, 4.0), (6.0, 2.0), (5.0, 2.0)],
            Segment::BrandLoyal => [(3.0, 3.0), (3.0, 3.0), (3.0, 3.0), (6.0, 2.0)],
            Segment::EarlyAdopters => [(4.0, 2.0), (3.0, 3.0), (2.0, 4.0), (2.0, 5.0)],
            Segment::BalancedUsers => [(3.0, 3.0); 4],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserAgent {
    pub user_id: usize,
    pub segment: Segment,
    pub tech_savvy: f64,
    pub price_sens: f64,
    pub safety_pref: f64,
    pub brand_loyalty: f64,
    pub provider: Option<usize>,
    pub switching_cost: f64,
    /// Utility of the current provider at the time of the last choice.
    pub realized_utility: f64,
}

/// Deterministic part of `user`'s utility for `firm`, given the firm's
/// current market share. The random taste shock is added at choice time.
pub fn user_utility(user: &UserAgent, firm: &FirmAgent, network_share: f64, params: &AbmParams) -> f64 {
    let tech = firm.tech_level / TECH_CAP;
    let price = 1.0 - firm.price / params.price_base;
    let taste = user.tech_savvy * tech + user.price_sens * price + user.safety_pref * firm.safety_investment;
    let mut u = params.taste_scale * taste + params.network_coef * user.brand_loyalty * network_share;
    match user.provider {
        Some(p) if p == firm.firm_id => u += params.loyalty_bonus * user.brand_loyalty,
        Some(_) => u -= user.switching_cost,
        None => {}
    }
    u
}

/// How well the provider matches the user's tastes, in [0, 1].
pub fn satisfaction(user: &UserAgent, firm: &FirmAgent, params: &AbmParams) -> f64 {
    let w = user.tech_savvy + user.price_sens + user.safety_pref;
    if w == 0.0 {
        return 0.0;
    }
    let tech = firm.tech_level / TECH_CAP;
    let price = 1.0 - firm.price / params.price_base;
    (user.tech_savvy * tech + user.price_sens * price + user.safety_pref * firm.safety_investment) / w
}

/// Samples an index from `softmax(utilities / mu)`. Entries equal to
/// `f64::NEG_INFINITY` are never chosen.
pub fn sample_logit<R: Rng>(utilities: &[f64], mu: f64, rng: &mut R) -> usize {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = utilities.iter().map(|u| ((u - max) / mu).exp()).collect();
    let total: f64 = weights.iter().sum();
    let mut draw = rng.random::<f64>() * total;
    let mut last = 0;
    for (k, w) in weights.iter().enumerate() {
        if *w == 0.0 {
            continue;
        }
        last = k;
        if draw < *w {
            return k;
        }
        draw -= w;
    }
    last
}

/// Logit choice over active firms for one user.
pub fn choose_provider<R: Rng>(user: &UserAgent, firms: &[FirmAgent], params: &AbmParams, rng: &mut R) -> usize {
    let utilities: Vec<f64> = firms
        .iter()
        .map(|f| {
            if f.active() {
                user_utility(user, f, f.market_share, params)
            } else {
                f64::NEG_INFINITY
            }
        })
        .collect();
    sample_logit(&utilities, params.mu, rng)
}
