//! Fixed-step classical Runge-Kutta integration of the coupled firm system.

use super::model::{consumer_surplus, derivatives, pgi_from_state, profit_flow, utilities, DemandSystem, FirmParams, FirmState};
use super::DynamicsError;
use crate::pgi::{pgi_linear, DimensionScores, WeightVector};

pub const DIVERGENCE_LIMIT: f64 = 1e12;

/// Firms plus everything needed to simulate them.
#[derive(Debug, Clone, PartialEq)]
pub struct Market {
    pub params: Vec<FirmParams>,
    pub initial: Vec<FirmState>,
    pub demand: DemandSystem,
    pub horizon: f64,
    pub step: f64,
}

impl Market {
    pub fn n_firms(&self) -> usize {
        self.params.len()
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if self.params.is_empty() || self.params.len() != self.initial.len() {
            return Err(DynamicsError::InvalidParams("need one initial state per firm".into()));
        }
        for p in &self.params {
            p.validate()?;
        }
        for s in &self.initial {
            if s.stocks().iter().any(|v| !v.is_finite() || *v < 0.0) {
                return Err(DynamicsError::InvalidParams("initial stocks must be finite and >= 0".into()));
            }
            if !(0.0..=1.0).contains(&s.e) || s.i_a < 0.0 || s.i_c < 0.0 {
                return Err(DynamicsError::InvalidParams("controls out of range".into()));
            }
        }
        if !(self.demand.market_size > 0.0 && self.demand.logit_scale > 0.0) {
            return Err(DynamicsError::InvalidParams("market size and logit scale must be positive".into()));
        }
        Ok(())
    }

    /// Copy with firm `i` playing constant excludability `e`.
    pub fn with_policy(&self, i: usize, e: f64) -> Market {
        let mut m = self.clone();
        m.initial[i].e = e;
        m
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketTrajectory {
    pub times: Vec<f64>,
    /// `states[k][i]`: firm `i` at `times[k]`.
    pub states: Vec<Vec<FirmState>>,
    /// Equal-weight theoretical PGI of each firm at each time.
    pub pgi: Vec<Vec<f64>>,
    pub dims: Vec<Vec<DimensionScores>>,
    /// Instantaneous profit of each firm.
    pub profit: Vec<Vec<f64>>,
    /// Logit inclusive value at each time.
    pub consumer_surplus: Vec<f64>,
    /// Unweighted `Σπ + CS + Σ(X+ - X-)` at each time.
    pub welfare: Vec<f64>,
    pub clamp_events: usize,
}

impl MarketTrajectory {
    pub fn terminal(&self) -> &[FirmState] {
        self.states.last().expect("trajectory is never empty")
    }

    /// Trapezoid rule for `∫ e^{-rt} f(t) dt` over the time grid.
    pub fn discounted<F: Fn(usize) -> f64>(&self, rate: f64, f: F) -> f64 {
        let g = |k: usize| (-rate * self.times[k]).exp() * f(k);
        let mut acc = 0.0;
        for k in 1..self.times.len() {
            acc += 0.5 * (self.times[k] - self.times[k - 1]) * (g(k) + g(k - 1));
        }
        acc
    }
}

fn record(
    states: &[FirmState],
    params: &[FirmParams],
    demand: &DemandSystem,
    traj: &mut MarketTrajectory,
    t: f64,
) -> Result<(), DynamicsError> {
    let w = WeightVector::equal();
    let dims: Vec<DimensionScores> = states.iter().map(pgi_from_state).collect();
    let pgi = dims
        .iter()
        .map(|d| pgi_linear(d, &w).map_err(|e| DynamicsError::Domain(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let profit: Vec<f64> = states.iter().zip(params).map(|(s, p)| profit_flow(s, p)).collect();
    let cs = consumer_surplus(&utilities(states, params)?, demand);
    let net_x: f64 = states.iter().map(|s| s.x_pos - s.x_neg).sum();
    traj.welfare.push(profit.iter().sum::<f64>() + cs + net_x);
    traj.times.push(t);
    traj.states.push(states.to_vec());
    traj.pgi.push(pgi);
    traj.dims.push(dims);
    traj.profit.push(profit);
    traj.consumer_surplus.push(cs);
    Ok(())
}

fn combine(base: &[FirmState], k: &[super::model::Rates], h: f64) -> Vec<FirmState> {
    base.iter().zip(k).map(|(s, r)| s.advanced(r, h)).collect()
}

/// One RK4 step of size `h` (no clamping).
pub fn rk4_step(states: &[FirmState], params: &[FirmParams], demand: &DemandSystem, h: f64) -> Result<Vec<FirmState>, DynamicsError> {
    let k1 = derivatives(states, params, demand)?;
    let k2 = derivatives(&combine(states, &k1, h / 2.0), params, demand)?;
    let k3 = derivatives(&combine(states, &k2, h / 2.0), params, demand)?;
    let k4 = derivatives(&combine(states, &k3, h), params, demand)?;
    Ok(states
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut out = *s;
            let rates = [&k1[i], &k2[i], &k3[i], &k4[i]].map(|r| r.as_array());
            for (j, v) in out.stocks_mut().into_iter().enumerate() {
                *v += h / 6.0 * (rates[0][j] + 2.0 * rates[1][j] + 2.0 * rates[2][j] + rates[3][j]);
            }
            out
        })
        .collect())
}

/// Integrates from `t = 0` to `horizon` with `round(horizon / h)` steps.
///
/// Negative stocks are reset to zero after each step and counted in
/// `clamp_events`. Any stock above [`DIVERGENCE_LIMIT`] aborts. On failure
/// the partial trajectory is returned inside the error.
pub fn integrate(market: &Market, horizon: f64, h: f64) -> Result<MarketTrajectory, DynamicsError> {
    if !(h > 0.0) || !(horizon >= h) {
        return Err(DynamicsError::InvalidParams(format!("need h > 0 and horizon >= h (h = {h}, horizon = {horizon})")));
    }
    market.validate()?;
    let n_steps = (horizon / h).round() as usize;
    let mut traj = MarketTrajectory {
        times: Vec::with_capacity(n_steps + 1),
        states: Vec::with_capacity(n_steps + 1),
        pgi: Vec::with_capacity(n_steps + 1),
        dims: Vec::with_capacity(n_steps + 1),
        profit: Vec::with_capacity(n_steps + 1),
        consumer_surplus: Vec::with_capacity(n_steps + 1),
        welfare: Vec::with_capacity(n_steps + 1),
        clamp_events: 0,
    };
    let mut states = market.initial.clone();
    record(&states, &market.params, &market.demand, &mut traj, 0.0)?;
    for k in 1..=n_steps {
        let t = k as f64 * h;
        let next = match rk4_step(&states, &market.params, &market.demand, h) {
            Ok(s) => s,
            Err(e) => return Err(DynamicsError::Failed { time: t, source: Box::new(e), partial: Box::new(traj) }),
        };
        states = next;
        for s in &mut states {
            for v in s.stocks_mut() {
                if *v < 0.0 {
                    *v = 0.0;
                    traj.clamp_events += 1;
                }
            }
        }
        if states.iter().any(|s| s.stocks().iter().any(|v| !v.is_finite() || *v > DIVERGENCE_LIMIT)) {
            return Err(DynamicsError::Divergence { time: t, partial: Box::new(traj) });
        }
        record(&states, &market.params, &market.demand, &mut traj, t)?;
    }
    Ok(traj)
}
