//! Continuous-time firm model: capital stocks, users, reputation and
//! externality flows, and the logit demand system that couples firms.

use super::DynamicsError;
use crate::pgi::{DimensionScores, Variant};

/// Per-firm structural coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirmParams {
    pub omega_a: f64,
    pub omega_d: f64,
    pub omega_c: f64,
    pub rho_t: f64,
    pub phi_a: f64,
    pub beta_a: f64,
    pub lambda_a: f64,
    pub delta_a: f64,
    pub phi_d: f64,
    pub gamma_d: f64,
    pub delta_d: f64,
    pub g_c: f64,
    pub phi_c: f64,
    pub delta_c: f64,
    pub lambda_q: f64,
    pub phi_r: f64,
    pub psi_r: f64,
    pub delta_r: f64,
    pub kappa_pos: f64,
    pub eta: f64,
    pub delta_pos: f64,
    pub kappa_neg: f64,
    pub zeta: f64,
    pub xi: f64,
    pub delta_neg: f64,
    /// Safety investment level in [0, 1].
    pub safety: f64,
    pub discount_rate: f64,
    /// Price is `price_slope * e`.
    pub price_slope: f64,
    pub cost_a: f64,
    pub cost_c: f64,
}

impl FirmParams {
    pub fn validate(&self) -> Result<(), DynamicsError> {
        let bad = |what: &str| Err(DynamicsError::InvalidParams(what.to_string()));
        let fields = [
            self.omega_a, self.omega_d, self.omega_c, self.rho_t, self.phi_a, self.beta_a, self.lambda_a,
            self.delta_a, self.phi_d, self.gamma_d, self.delta_d, self.g_c, self.phi_c, self.delta_c,
            self.lambda_q, self.phi_r, self.psi_r, self.delta_r, self.kappa_pos, self.eta, self.delta_pos,
            self.kappa_neg, self.zeta, self.xi, self.delta_neg, self.safety, self.discount_rate,
            self.price_slope, self.cost_a, self.cost_c,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return bad("non-finite coefficient");
        }
        if [self.omega_a, self.omega_d, self.omega_c].iter().any(|w| *w < 0.0)
            || (self.omega_a + self.omega_d + self.omega_c - 1.0).abs() > 1e-9
        {
            return bad("CES weights must be non-negative and sum to 1");
        }
        if self.rho_t == 0.0 {
            return bad("rho_t must be non-zero");
        }
        if !(self.beta_a > 0.0 && self.beta_a < 1.0) {
            return bad("beta_a must lie in (0, 1)");
        }
        if [self.delta_a, self.delta_d, self.delta_c, self.delta_r, self.delta_pos, self.delta_neg]
            .iter()
            .any(|d| *d <= 0.0)
        {
            return bad("decay rates must be positive");
        }
        if self.discount_rate <= 0.0 {
            return bad("discount rate must be positive");
        }
        if !(0.0..=1.0).contains(&self.safety) {
            return bad("safety must lie in [0, 1]");
        }
        let nonneg = [
            self.phi_a, self.lambda_a, self.phi_d, self.gamma_d, self.g_c, self.phi_c, self.lambda_q,
            self.phi_r, self.psi_r, self.kappa_pos, self.eta, self.kappa_neg, self.zeta, self.xi,
            self.price_slope, self.cost_a, self.cost_c,
        ];
        if nonneg.iter().any(|v| *v < 0.0) {
            return bad("coefficients must be non-negative");
        }
        Ok(())
    }
}

/// Stocks plus the (constant) controls of one firm.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirmState {
    pub t_a: f64,
    pub t_d: f64,
    pub t_c: f64,
    pub q: f64,
    pub rep: f64,
    pub x_pos: f64,
    pub x_neg: f64,
    /// Excludability in [0, 1].
    pub e: f64,
    pub i_a: f64,
    pub i_c: f64,
}

/// Time derivatives of the seven stocks.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Rates {
    pub t_a: f64,
    pub t_d: f64,
    pub t_c: f64,
    pub q: f64,
    pub rep: f64,
    pub x_pos: f64,
    pub x_neg: f64,
}

impl Rates {
    pub fn as_array(&self) -> [f64; 7] {
        [self.t_a, self.t_d, self.t_c, self.q, self.rep, self.x_pos, self.x_neg]
    }
}

impl FirmState {
    pub fn stocks(&self) -> [f64; 7] {
        [self.t_a, self.t_d, self.t_c, self.q, self.rep, self.x_pos, self.x_neg]
    }

    pub fn stocks_mut(&mut self) -> [&mut f64; 7] {
        [
            &mut self.t_a,
            &mut self.t_d,
            &mut self.t_c,
            &mut self.q,
            &mut self.rep,
            &mut self.x_pos,
            &mut self.x_neg,
        ]
    }

    /// `self + h * rates`, controls unchanged.
    pub fn advanced(&self, rates: &Rates, h: f64) -> FirmState {
        let mut out = *self;
        for (s, r) in out.stocks_mut().into_iter().zip(rates.as_array()) {
            *s += h * r;
        }
        out
    }
}

/// Market-wide demand and valuation settings shared by all firms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DemandSystem {
    /// Total potential users `M`.
    pub market_size: f64,
    /// Logit scale `mu`.
    pub logit_scale: f64,
}

/// CES aggregate `[ω_A T_A^ρ + ω_D T_D^ρ + ω_C T_C^ρ]^(1/ρ)`.
pub fn tech_aggregate(t_a: f64, t_d: f64, t_c: f64, p: &FirmParams) -> Result<f64, DynamicsError> {
    let rho = p.rho_t;
    if rho == 0.0 {
        return Err(DynamicsError::Domain("rho_t = 0".into()));
    }
    let mut acc = 0.0;
    for (w, x) in [(p.omega_a, t_a), (p.omega_d, t_d), (p.omega_c, t_c)] {
        if x < 0.0 || !x.is_finite() {
            return Err(DynamicsError::Domain(format!("capital stock {x}")));
        }
        if w == 0.0 {
            continue;
        }
        if x == 0.0 && rho < 0.0 {
            return Err(DynamicsError::Domain("zero capital stock with rho_t < 0".into()));
        }
        acc += w * x.powf(rho);
    }
    if acc == 0.0 {
        return Ok(0.0);
    }
    Ok(if rho == 1.0 { acc } else { acc.powf(1.0 / rho) })
}

/// Knowledge pool available to firm `i`: `Σ_{j≠i} (1 - e_j) T_{A,j}`.
pub fn spillover_pool(states: &[FirmState], i: usize) -> f64 {
    states
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, s)| (1.0 - s.e) * s.t_a)
        .sum()
}

/// Representative utilities `T_j - p1_j e_j`.
pub fn utilities(states: &[FirmState], params: &[FirmParams]) -> Result<Vec<f64>, DynamicsError> {
    states
        .iter()
        .zip(params)
        .map(|(s, p)| Ok(tech_aggregate(s.t_a, s.t_d, s.t_c, p)? - p.price_slope * s.e))
        .collect()
}

/// Stabilized softmax of `u / mu`.
pub fn logit_shares(utilities: &[f64], mu: f64) -> Vec<f64> {
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = utilities.iter().map(|u| ((u - max) / mu).exp()).collect();
    let total: f64 = w.iter().sum();
    w.into_iter().map(|x| x / total).collect()
}

/// `mu * M * log Σ exp(u_j / mu)`, the logit inclusive value.
pub fn consumer_surplus(utilities: &[f64], demand: &DemandSystem) -> f64 {
    let mu = demand.logit_scale;
    let max = utilities.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = utilities.iter().map(|u| ((u - max) / mu).exp()).sum();
    demand.market_size * (max + mu * sum.ln())
}

/// Desired user base of firm `i`: `M` times its logit share.
pub fn user_demand(i: usize, states: &[FirmState], params: &[FirmParams], demand: &DemandSystem) -> Result<f64, DynamicsError> {
    let u = utilities(states, params)?;
    Ok(demand.market_size * logit_shares(&u, demand.logit_scale)[i])
}

fn finite(term: &'static str, v: f64) -> Result<f64, DynamicsError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(DynamicsError::NumericOverflow { term })
    }
}

/// Rates of change of every firm's stocks.
///
/// The negative-externality inflow `κ_- s^ζ Q - ξ·safety` is floored at
/// zero, so the stock only ever decays toward zero. When the market holds
/// no users the concentration share is taken as zero.
pub fn derivatives(states: &[FirmState], params: &[FirmParams], demand: &DemandSystem) -> Result<Vec<Rates>, DynamicsError> {
    let techs: Vec<f64> = states
        .iter()
        .zip(params)
        .map(|(s, p)| tech_aggregate(s.t_a, s.t_d, s.t_c, p))
        .collect::<Result<_, _>>()?;
    let utils: Vec<f64> = techs
        .iter()
        .zip(states.iter().zip(params))
        .map(|(t, (s, p))| t - p.price_slope * s.e)
        .collect();
    let shares = logit_shares(&utils, demand.logit_scale);
    let total_q: f64 = states.iter().map(|s| s.q).sum();

    let mut out = Vec::with_capacity(states.len());
    for (i, (s, p)) in states.iter().zip(params).enumerate() {
        let open = 1.0 - s.e;
        let own_rd = if s.i_a > 0.0 && s.t_a > 0.0 {
            p.phi_a * s.i_a.powf(p.beta_a) * s.t_a.powf(1.0 - p.beta_a)
        } else {
            0.0
        };
        let t_a = finite("t_a", own_rd + p.lambda_a * open * spillover_pool(states, i) - p.delta_a * s.t_a)?;
        let t_d = finite("t_d", p.phi_d * s.q.powf(p.gamma_d) - p.delta_d * s.t_d)?;
        let t_c = finite("t_c", p.g_c * s.t_c + p.phi_c * s.i_c - p.delta_c * s.t_c)?;
        let q_desired = demand.market_size * shares[i];
        let q = finite("q", p.lambda_q * (q_desired - s.q))?;
        let rep = finite("rep", p.phi_r * s.q + p.psi_r * open - p.delta_r * s.rep)?;
        let x_pos = finite("x_pos", p.kappa_pos * open.powf(p.eta) * techs[i] * s.q - p.delta_pos * s.x_pos)?;
        let share = if total_q > 0.0 { s.q / total_q } else { 0.0 };
        let inflow = (p.kappa_neg * share.powf(p.zeta) * s.q - p.xi * p.safety).max(0.0);
        let x_neg = finite("x_neg", inflow - p.delta_neg * s.x_neg)?;
        out.push(Rates {
            t_a,
            t_d,
            t_c,
            q,
            rep,
            x_pos,
            x_neg,
        });
    }
    Ok(out)
}

/// Theoretical-variant PGI dimensions of one firm.
///
/// Capacity `q*` is proxied by compute capital. With no users the firm is
/// uncongested (`c_q = 1`); with no externality stock at all `c_x = 0`.
pub fn pgi_from_state(state: &FirmState) -> DimensionScores {
    let c_q = if state.q <= 0.0 {
        1.0
    } else {
        state.t_c / (state.t_c + state.q)
    };
    let c_x = if state.x_pos + state.x_neg > 0.0 {
        (state.x_pos - state.x_neg) / (state.x_pos + state.x_neg)
    } else {
        0.0
    };
    DimensionScores {
        c_q,
        c_e: 1.0 - state.e,
        c_x,
        variant: Variant::Theoretical,
    }
}

/// Instantaneous profit `p1 e Q - c_A I_A - c_C I_C`.
pub fn profit_flow(state: &FirmState, p: &FirmParams) -> f64 {
    p.price_slope * state.e * state.q - p.cost_a * state.i_a - p.cost_c * state.i_c
}
