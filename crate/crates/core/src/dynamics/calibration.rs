//! Calibration files for the continuous-time model.
//!
//! ```text
//! horizon = 50
//! step = 0.01
//! market_size = 1
//! logit_scale = 0.25
//! rho_t = 0.5          # firm keys here are defaults for every firm
//! [firm.0]
//! e = 0.5
//! ```
//!
//! Each bracketed section is one firm, in file order.

use super::integrate::Market;
use super::model::{DemandSystem, FirmParams, FirmState};
use super::optimize::WelfareWeights;
use super::DynamicsError;
use crate::kv::{self, ConfigError, Section};

const PARAM_KEYS: [&str; 30] = [
    "omega_a", "omega_d", "omega_c", "rho_t", "phi_a", "beta_a", "lambda_a", "delta_a", "phi_d", "gamma_d",
    "delta_d", "g_c", "phi_c", "delta_c", "lambda_q", "phi_r", "psi_r", "delta_r", "kappa_pos", "eta",
    "delta_pos", "kappa_neg", "zeta", "xi", "delta_neg", "safety", "discount_rate", "price_slope", "cost_a",
    "cost_c",
];

const STATE_KEYS: [&str; 10] = ["t_a", "t_d", "t_c", "q", "rep", "x_pos", "x_neg", "e", "i_a", "i_c"];

const GLOBAL_KEYS: [&str; 13] = [
    "horizon",
    "step",
    "market_size",
    "logit_scale",
    "focal",
    "w_ps",
    "w_cs",
    "w_x",
    "grid_lambda_a",
    "grid_kappa_pos",
    "grid_price_slope",
    "sweep_lambda_a",
    "grid_step",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub market: Market,
    pub focal: usize,
    pub welfare: WelfareWeights,
    /// Policy grid resolution.
    pub grid_step: f64,
    /// (λ_A, κ_+, p1) values for market-failure sweeps.
    pub grid: Option<(Vec<f64>, Vec<f64>, Vec<f64>)>,
    pub sweep_lambda_a: Option<Vec<f64>>,
}

fn list(section: &Section, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
    let Some(raw) = section.raw(key) else {
        return Ok(None);
    };
    let line = section.entries[key].line;
    raw.split(',')
        .map(|v| {
            v.trim().parse::<f64>().map_err(|_| ConfigError::BadValue {
                section: section.name.clone(),
                key: key.to_string(),
                value: raw.to_string(),
                line,
            })
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Some)
}

fn lookup(firm: &Section, global: &Section, key: &str) -> Result<f64, ConfigError> {
    match firm.get::<f64>(key)? {
        Some(v) => Ok(v),
        None => global.get::<f64>(key)?.ok_or_else(|| ConfigError::MissingKey {
            section: firm.name.clone(),
            key: key.to_string(),
        }),
    }
}

fn lookup_or(firm: &Section, global: &Section, key: &str, default: f64) -> Result<f64, ConfigError> {
    match firm.get::<f64>(key)? {
        Some(v) => Ok(v),
        None => global.get_or(key, default),
    }
}

pub fn parse_calibration(text: &str) -> Result<Calibration, DynamicsError> {
    let doc = kv::parse(text)?;
    let g = &doc.global;
    let known_global: Vec<&str> = GLOBAL_KEYS.iter().chain(PARAM_KEYS.iter()).chain(STATE_KEYS.iter()).copied().collect();
    g.check_keys(&known_global)?;
    let known_firm: Vec<&str> = PARAM_KEYS.iter().chain(STATE_KEYS.iter()).copied().collect();

    let mut params = Vec::new();
    let mut initial = Vec::new();
    for s in &doc.sections {
        s.check_keys(&known_firm)?;
        let v = |k: &str| lookup(s, g, k);
        params.push(FirmParams {
            omega_a: v("omega_a")?,
            omega_d: v("omega_d")?,
            omega_c: v("omega_c")?,
            rho_t: v("rho_t")?,
            phi_a: v("phi_a")?,
            beta_a: v("beta_a")?,
            lambda_a: v("lambda_a")?,
            delta_a: v("delta_a")?,
            phi_d: v("phi_d")?,
            gamma_d: v("gamma_d")?,
            delta_d: v("delta_d")?,
            g_c: v("g_c")?,
            phi_c: v("phi_c")?,
            delta_c: v("delta_c")?,
            lambda_q: v("lambda_q")?,
            phi_r: v("phi_r")?,
            psi_r: v("psi_r")?,
            delta_r: v("delta_r")?,
            kappa_pos: v("kappa_pos")?,
            eta: v("eta")?,
            delta_pos: v("delta_pos")?,
            kappa_neg: v("kappa_neg")?,
            zeta: v("zeta")?,
            xi: v("xi")?,
            delta_neg: v("delta_neg")?,
            safety: v("safety")?,
            discount_rate: v("discount_rate")?,
            price_slope: v("price_slope")?,
            cost_a: lookup_or(s, g, "cost_a", 0.0)?,
            cost_c: lookup_or(s, g, "cost_c", 0.0)?,
        });
        let z = |k: &str| lookup_or(s, g, k, 0.0);
        initial.push(FirmState {
            t_a: z("t_a")?,
            t_d: z("t_d")?,
            t_c: z("t_c")?,
            q: z("q")?,
            rep: z("rep")?,
            x_pos: z("x_pos")?,
            x_neg: z("x_neg")?,
            e: z("e")?,
            i_a: z("i_a")?,
            i_c: z("i_c")?,
        });
    }
    let market = Market {
        params,
        initial,
        demand: DemandSystem {
            market_size: g.require("market_size")?,
            logit_scale: g.require("logit_scale")?,
        },
        horizon: g.get_or("horizon", 50.0)?,
        step: g.get_or("step", 0.01)?,
    };
    market.validate()?;
    let focal: usize = g.get_or("focal", 0)?;
    if focal >= market.n_firms() {
        return Err(DynamicsError::InvalidParams(format!("focal firm {focal} out of range")));
    }
    let grid = match (list(g, "grid_lambda_a")?, list(g, "grid_kappa_pos")?, list(g, "grid_price_slope")?) {
        (Some(a), Some(b), Some(c)) => Some((a, b, c)),
        (None, None, None) => None,
        _ => return Err(DynamicsError::InvalidParams("grid needs grid_lambda_a, grid_kappa_pos and grid_price_slope".into())),
    };
    Ok(Calibration {
        market,
        focal,
        welfare: WelfareWeights {
            ps: g.get_or("w_ps", 1.0)?,
            cs: g.get_or("w_cs", 1.0)?,
            x: g.get_or("w_x", 1.0)?,
        },
        grid_step: g.get_or("grid_step", 0.01)?,
        grid,
        sweep_lambda_a: list(g, "sweep_lambda_a")?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_baseline_parses() {
        let cal = parse_calibration(crate::fixtures::BASELINE_CALIBRATION).unwrap();
        assert_eq!(cal.market.n_firms(), 2);
        let (a, b, c) = cal.grid.as_ref().unwrap();
        assert_eq!(a.len() * b.len() * c.len(), 27);
        assert_eq!(cal.sweep_lambda_a.as_ref().unwrap().len(), 5);
    }

    #[test]
    fn missing_and_unknown_keys_are_reported() {
        let text = crate::fixtures::BASELINE_CALIBRATION.replace("logit_scale", "logit_scal");
        assert!(parse_calibration(&text).is_err());
        let text = format!("{}\n[firm.x]\nbogus = 1\n", crate::fixtures::BASELINE_CALIBRATION);
        let err = parse_calibration(&text).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }
}
