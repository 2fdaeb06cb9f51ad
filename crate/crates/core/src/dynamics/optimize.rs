//! Grid search over constant excludability policies, and the checks built
//! on it: market failure, Pigouvian subsidy, comparative statics, duopoly
//! best responses, tipping and the welfare decomposition.

use rayon::prelude::*;

use super::integrate::{integrate, Market, MarketTrajectory};
use super::model::{logit_shares, spillover_pool, utilities, FirmState};
use super::DynamicsError;

/// Weights on producer surplus, consumer surplus and net externalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WelfareWeights {
    pub ps: f64,
    pub cs: f64,
    pub x: f64,
}

impl Default for WelfareWeights {
    fn default() -> Self {
        Self { ps: 1.0, cs: 1.0, x: 1.0 }
    }
}

/// Discounted outcome of one constant policy for the focal firm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolicyEval {
    pub e: f64,
    /// Discounted profit of the focal firm.
    pub value: f64,
    /// Discounted consumer surplus.
    pub cs: f64,
    /// Discounted `Σ_j (X_j+ - X_j-)`.
    pub net_x: f64,
    pub x_pos: f64,
    pub x_neg: f64,
    /// Focal firm's PGI at the end of the horizon.
    pub terminal_pgi: f64,
    pub clamp_events: usize,
}

impl PolicyEval {
    pub fn welfare(&self, w: &WelfareWeights) -> f64 {
        w.ps * self.value + w.cs * self.cs + w.x * self.net_x
    }

    /// The part of welfare the firm does not internalize.
    pub fn external(&self, w: &WelfareWeights) -> f64 {
        w.cs * self.cs + w.x * self.net_x
    }
}

pub fn summarize(traj: &MarketTrajectory, market: &Market, focal: usize) -> PolicyEval {
    let r = market.params[focal].discount_rate;
    PolicyEval {
        e: market.initial[focal].e,
        value: traj.discounted(r, |k| traj.profit[k][focal]),
        cs: traj.discounted(r, |k| traj.consumer_surplus[k]),
        net_x: traj.discounted(r, |k| traj.states[k].iter().map(|s| s.x_pos - s.x_neg).sum()),
        x_pos: traj.discounted(r, |k| traj.states[k][focal].x_pos),
        x_neg: traj.discounted(r, |k| traj.states[k][focal].x_neg),
        terminal_pgi: *traj.pgi.last().and_then(|p| p.get(focal)).expect("non-empty"),
        clamp_events: traj.clamp_events,
    }
}

pub fn evaluate_policy(market: &Market, focal: usize, e: f64) -> Result<PolicyEval, DynamicsError> {
    if !(0.0..=1.0).contains(&e) {
        return Err(DynamicsError::InvalidParams(format!("excludability {e} outside [0, 1]")));
    }
    let m = market.with_policy(focal, e);
    let traj = integrate(&m, m.horizon, m.step)?;
    Ok(summarize(&traj, &m, focal))
}

/// Discounted profit `∫ e^{-rt} [p1 e Q - c_A I_A - c_C I_C] dt`.
pub fn firm_value(market: &Market, focal: usize, e: f64) -> Result<f64, DynamicsError> {
    Ok(evaluate_policy(market, focal, e)?.value)
}

/// Points `0, step, ..., 1`; `step` must divide 1.
pub fn policy_grid(step: f64) -> Result<Vec<f64>, DynamicsError> {
    if !(step > 0.0 && step <= 1.0) {
        return Err(DynamicsError::InvalidParams(format!("grid step {step}")));
    }
    let n = (1.0 / step).round() as usize;
    if ((n as f64) * step - 1.0).abs() > 1e-9 {
        return Err(DynamicsError::InvalidParams(format!("grid step {step} does not divide 1")));
    }
    Ok((0..=n).map(|k| k as f64 / n as f64).collect())
}

/// Every grid policy evaluated once.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicyScan {
    pub evals: Vec<PolicyEval>,
}

impl PolicyScan {
    pub fn run(market: &Market, focal: usize, step: f64) -> Result<Self, DynamicsError> {
        let grid = policy_grid(step)?;
        let evals = grid
            .par_iter()
            .map(|&e| evaluate_policy(market, focal, e))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { evals })
    }

    /// Argmax of `objective`; ties go to the smaller excludability.
    pub fn argmax<F: Fn(&PolicyEval) -> f64>(&self, objective: F) -> Optimum {
        let mut best = Optimum {
            e: self.evals[0].e,
            objective: objective(&self.evals[0]),
            index: 0,
        };
        for (i, ev) in self.evals.iter().enumerate().skip(1) {
            let v = objective(ev);
            if v > best.objective {
                best = Optimum {
                    e: ev.e,
                    objective: v,
                    index: i,
                };
            }
        }
        best
    }

    pub fn private(&self) -> Optimum {
        self.argmax(|ev| ev.value)
    }

    pub fn social(&self, w: &WelfareWeights) -> Optimum {
        self.argmax(|ev| ev.welfare(w))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Optimum {
    pub e: f64,
    pub objective: f64,
    pub index: usize,
}

pub fn optimize_excludability_private(market: &Market, focal: usize, step: f64) -> Result<Optimum, DynamicsError> {
    Ok(PolicyScan::run(market, focal, step)?.private())
}

pub fn optimize_excludability_social(market: &Market, focal: usize, w: &WelfareWeights, step: f64) -> Result<Optimum, DynamicsError> {
    Ok(PolicyScan::run(market, focal, step)?.social(w))
}

/// Shadow prices of users, algorithmic capital and reputation.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ShadowPrices {
    pub users: f64,
    pub tech: f64,
    pub reputation: f64,
}

/// Instantaneous arbitrage residual for firm `i` at the given state:
/// marginal rent `∂π/∂E` minus `Σ_k λ_k |∂k̇/∂E|` over users, algorithmic
/// capital and reputation. Zero at an interior optimum of the
/// corresponding Hamiltonian.
pub fn arbitrage_residual(market: &Market, states: &[FirmState], i: usize, shadow: &ShadowPrices) -> Result<f64, DynamicsError> {
    let p = &market.params[i];
    let d = &market.demand;
    let u = utilities(states, &market.params)?;
    let s = logit_shares(&u, d.logit_scale)[i];
    let marginal_rent = p.price_slope * states[i].q;
    let dq_dot = p.lambda_q * d.market_size * s * (1.0 - s) * p.price_slope / d.logit_scale;
    let dta_dot = p.lambda_a * spillover_pool(states, i);
    let drep_dot = p.psi_r;
    Ok(marginal_rent - shadow.users * dq_dot - shadow.tech * dta_dot - shadow.reputation * drep_dot)
}

/// One calibration point of a market-failure sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct FailureRow {
    pub label: String,
    pub e_private: f64,
    pub e_social: f64,
    pub pgi_private: f64,
    pub pgi_social: f64,
}

impl FailureRow {
    pub fn gap(&self) -> f64 {
        crate::pgi::pgi_gap(self.pgi_social, self.pgi_private)
    }

    pub fn holds(&self) -> bool {
        self.e_private >= self.e_social && self.gap() >= 0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarketFailureReport {
    pub rows: Vec<FailureRow>,
}

impl MarketFailureReport {
    pub fn violations(&self) -> Vec<&FailureRow> {
        self.rows.iter().filter(|r| !r.holds()).collect()
    }

    pub fn all_hold(&self) -> bool {
        self.violations().is_empty()
    }
}

pub fn market_failure_row(label: &str, market: &Market, focal: usize, w: &WelfareWeights, step: f64) -> Result<FailureRow, DynamicsError> {
    let scan = PolicyScan::run(market, focal, step)?;
    let p = scan.private();
    let s = scan.social(w);
    Ok(FailureRow {
        label: label.to_string(),
        e_private: p.e,
        e_social: s.e,
        pgi_private: scan.evals[p.index].terminal_pgi,
        pgi_social: scan.evals[s.index].terminal_pgi,
    })
}

/// Private vs social optimum at every point; violations are listed in the
/// report rather than raised.
pub fn verify_market_failure(points: &[(String, Market)], focal: usize, w: &WelfareWeights, step: f64) -> Result<MarketFailureReport, DynamicsError> {
    if points.is_empty() {
        return Err(DynamicsError::InvalidParams("empty parameter grid".into()));
    }
    let rows = points
        .iter()
        .map(|(label, m)| market_failure_row(label, m, focal, w, step))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MarketFailureReport { rows })
}

/// Cartesian grid over (λ_A, κ_+, p1), applied to every firm.
pub fn calibration_grid(base: &Market, lambda_a: &[f64], kappa_pos: &[f64], price_slope: &[f64]) -> Vec<(String, Market)> {
    let mut out = Vec::new();
    for &la in lambda_a {
        for &kp in kappa_pos {
            for &p1 in price_slope {
                let mut m = base.clone();
                for p in &mut m.params {
                    p.lambda_a = la;
                    p.kappa_pos = kp;
                    p.price_slope = p1;
                }
                out.push((format!("lambda_a={la},kappa_pos={kp},p1={p1}"), m));
            }
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubsidyReport {
    pub subsidy: f64,
    pub e_private: f64,
    pub e_social: f64,
    pub e_subsidized: f64,
    /// Private optimum sat on 0 or 1, so a one-sided difference was used.
    pub boundary: bool,
}

fn difference_points(e: f64, h: f64) -> (f64, f64) {
    let lo = (e - h).max(0.0);
    let hi = (e + h).min(1.0);
    (lo, hi)
}

/// Subsidy per unit of openness equal to the uninternalized marginal
/// benefit `-(∂CS/∂E + ∂ΣX/∂E)` at the private optimum (central
/// difference, `fd_step`), scaled by `1/ω_ps`. The subsidized firm
/// maximizes `V(e) + s·(1 - e)` on the same grid.
pub fn pigouvian_subsidy(market: &Market, focal: usize, w: &WelfareWeights, step: f64, fd_step: f64) -> Result<SubsidyReport, DynamicsError> {
    let scan = PolicyScan::run(market, focal, step)?;
    let e_private = scan.private().e;
    let e_social = scan.social(w).e;
    let (lo, hi) = difference_points(e_private, fd_step);
    let boundary = e_private <= 0.0 || e_private >= 1.0;
    let ext = |e: f64| -> Result<f64, DynamicsError> {
        let near = scan.evals.iter().find(|ev| (ev.e - e).abs() < 1e-12);
        Ok(match near {
            Some(ev) => ev.external(w),
            None => evaluate_policy(market, focal, e)?.external(w),
        })
    };
    let delta = (ext(hi)? - ext(lo)?) / (hi - lo);
    let subsidy = (-delta / w.ps).max(0.0);
    let e_subsidized = scan.argmax(|ev| ev.value + subsidy * (1.0 - ev.e)).e;
    Ok(SubsidyReport {
        subsidy,
        e_private,
        e_social,
        e_subsidized,
        boundary,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparativeStatic {
    pub values: Vec<f64>,
    pub e_star: Vec<f64>,
    /// Indices `k` where `e*[k+1] > e*[k] + tol`.
    pub violations: Vec<usize>,
}

impl ComparativeStatic {
    pub fn monotone(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Private optimum as λ_A (applied to every firm) sweeps `values`.
pub fn comparative_static_lambda_a(market: &Market, focal: usize, values: &[f64], step: f64, tol: f64) -> Result<ComparativeStatic, DynamicsError> {
    if values.len() < 2 {
        return Err(DynamicsError::InvalidParams("need at least two lambda_a values".into()));
    }
    let e_star = values
        .iter()
        .map(|&la| {
            let mut m = market.clone();
            for p in &mut m.params {
                p.lambda_a = la;
            }
            optimize_excludability_private(&m, focal, step).map(|o| o.e)
        })
        .collect::<Result<Vec<_>, _>>()?;
    let violations = (0..e_star.len() - 1).filter(|&k| e_star[k + 1] > e_star[k] + tol).collect();
    Ok(ComparativeStatic {
        values: values.to_vec(),
        e_star,
        violations,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum DuopolyOutcome {
    Converged {
        e: (f64, f64),
        rounds: usize,
        separating: bool,
    },
    NoConvergence {
        /// Policy pairs visited by the cycle, in order.
        cycle: Vec<(f64, f64)>,
    },
}

pub const SEPARATION_THRESHOLD: f64 = 0.05;

/// Best response of firm `i` given the other firm's policy in `market`.
pub fn best_response(market: &Market, i: usize, step: f64) -> Result<f64, DynamicsError> {
    optimize_excludability_private(market, i, step).map(|o| o.e)
}

/// Alternating best responses from the initial policies until a fixed point
/// or `max_rounds`.
pub fn duopoly_equilibrium(market: &Market, step: f64, max_rounds: usize) -> Result<DuopolyOutcome, DynamicsError> {
    if market.n_firms() != 2 {
        return Err(DynamicsError::InvalidParams("duopoly needs exactly two firms".into()));
    }
    let key = |a: f64, b: f64| ((a / step).round() as i64, (b / step).round() as i64);
    let mut m = market.clone();
    let mut history = vec![key(m.initial[0].e, m.initial[1].e)];
    for round in 1..=max_rounds {
        let e0 = best_response(&m, 0, step)?;
        m.initial[0].e = e0;
        let e1 = best_response(&m, 1, step)?;
        m.initial[1].e = e1;
        let k = key(e0, e1);
        if Some(&k) == history.last() {
            return Ok(DuopolyOutcome::Converged {
                e: (e0, e1),
                rounds: round,
                separating: (e0 - e1).abs() > SEPARATION_THRESHOLD,
            });
        }
        if let Some(start) = history.iter().position(|h| *h == k) {
            let cycle = history[start..]
                .iter()
                .map(|(a, b)| (*a as f64 * step, *b as f64 * step))
                .collect();
            return Ok(DuopolyOutcome::NoConvergence { cycle });
        }
        history.push(k);
    }
    let tail = history.len().saturating_sub(4);
    Ok(DuopolyOutcome::NoConvergence {
        cycle: history[tail..]
            .iter()
            .map(|(a, b)| (*a as f64 * step, *b as f64 * step))
            .collect(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TippingResult {
    pub gamma_d: f64,
    pub eps: f64,
    pub q_terminal: (f64, f64),
    /// Larger over smaller terminal user base.
    pub share_ratio: f64,
}

/// Starts two symmetric firms at `Q0 + eps` and `Q0 - eps` with data
/// returns `gamma_d` and reports the terminal share ratio.
pub fn tipping_experiment(market: &Market, gamma_d: f64, eps: f64, horizon: f64) -> Result<TippingResult, DynamicsError> {
    if market.n_firms() != 2 {
        return Err(DynamicsError::InvalidParams("tipping needs exactly two firms".into()));
    }
    if eps < 0.0 {
        return Err(DynamicsError::InvalidParams("eps must be non-negative".into()));
    }
    let mut m = market.clone();
    for p in &mut m.params {
        p.gamma_d = gamma_d;
    }
    m.initial[0].q += eps;
    m.initial[1].q -= eps;
    let traj = integrate(&m, horizon, m.step)?;
    let end = traj.terminal();
    let (a, b) = (end[0].q, end[1].q);
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    Ok(TippingResult {
        gamma_d,
        eps,
        q_terminal: (a, b),
        share_ratio: if lo > 0.0 { hi / lo } else { f64::INFINITY },
    })
}

/// Weights of the welfare decomposition with respect to PGI.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecompositionWeights {
    pub cs: f64,
    pub x_pos: f64,
    pub x_neg: f64,
}

impl Default for DecompositionWeights {
    fn default() -> Self {
        Self {
            cs: 1.0,
            x_pos: 1.0,
            x_neg: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WelfareGradient {
    pub cs_term: f64,
    pub x_pos_term: f64,
    /// Enters with a minus sign.
    pub x_neg_term: f64,
    /// False when PGI is not strictly monotone in e around the point; the
    /// terms are then meaningless and left at zero.
    pub defined: bool,
}

impl WelfareGradient {
    pub fn total(&self) -> f64 {
        self.cs_term + self.x_pos_term + self.x_neg_term
    }
}

/// Finite-difference `∂W/∂PGI` decomposed into consumer-surplus, positive
/// and negative externality terms, via the chain through `e`.
pub fn welfare_pgi_gradient(market: &Market, focal: usize, e: f64, w: &DecompositionWeights, fd_step: f64) -> Result<WelfareGradient, DynamicsError> {
    let (lo, hi) = difference_points(e, fd_step);
    let a = evaluate_policy(market, focal, lo)?;
    let b = evaluate_policy(market, focal, hi)?;
    let mid = evaluate_policy(market, focal, e)?;
    let incr = |x: f64, y: f64, z: f64| x < y && y < z;
    let decr = |x: f64, y: f64, z: f64| x > y && y > z;
    let (p0, p1, p2) = (a.terminal_pgi, mid.terminal_pgi, b.terminal_pgi);
    let defined = if lo < e && e < hi {
        incr(p0, p1, p2) || decr(p0, p1, p2)
    } else {
        p0 != p2
    };
    if !defined {
        return Ok(WelfareGradient {
            cs_term: 0.0,
            x_pos_term: 0.0,
            x_neg_term: 0.0,
            defined,
        });
    }
    let dpgi = p2 - p0;
    Ok(WelfareGradient {
        cs_term: w.cs * (b.cs - a.cs) / dpgi,
        x_pos_term: w.x_pos * (b.x_pos - a.x_pos) / dpgi,
        x_neg_term: -w.x_neg * (b.x_neg - a.x_neg) / dpgi,
        defined,
    })
}
