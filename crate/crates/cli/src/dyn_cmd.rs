use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, Context};
use pgi_lab::dynamics::*;
use pgi_lab::fixtures;

use crate::output::{header_line, open};
use crate::{DynOptimizeArgs, DynSimulateArgs, DynVerifyArgs, Failure, Prop};

fn load(path: Option<&Path>, fallback: &str) -> Result<Calibration, Failure> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p)
            .with_context(|| format!("reading {}", p.display()))
            .map_err(Failure::input)?,
        None => fallback.to_string(),
    };
    let cal = parse_calibration(&text)?;
    cal.market.validate()?;
    Ok(cal)
}

const FIRM_COLUMNS: [&str; 10] = ["q", "t_a", "t_d", "t_c", "rep", "x_pos", "x_neg", "e", "pgi", "profit"];

fn write_trajectory(out: &mut dyn Write, traj: &MarketTrajectory) -> Result<(), Failure> {
    let n = traj.states.first().map_or(0, Vec::len);
    let mut w = csv::Writer::from_writer(out);
    let mut head = vec!["t".to_string()];
    for i in 0..n {
        head.extend(FIRM_COLUMNS.iter().map(|c| format!("{c}_{i}")));
    }
    head.push("cs".into());
    head.push("welfare".into());
    w.write_record(&head)?;
    for k in 0..traj.times.len() {
        let mut row = vec![traj.times[k].to_string()];
        for (i, s) in traj.states[k].iter().enumerate() {
            row.extend(
                [s.q, s.t_a, s.t_d, s.t_c, s.rep, s.x_pos, s.x_neg, s.e, traj.pgi[k][i], traj.profit[k][i]]
                    .iter()
                    .map(f64::to_string),
            );
        }
        row.push(traj.consumer_surplus[k].to_string());
        row.push(traj.welfare[k].to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn simulate(a: &DynSimulateArgs) -> Result<(), Failure> {
    let cal = load(a.config.as_deref(), fixtures::BASELINE_CALIBRATION)?;
    let mut market = cal.market.clone();
    if let Some(e) = a.e {
        if !(0.0..=1.0).contains(&e) {
            return Err(Failure::input(anyhow!("--e must lie in [0, 1], got {e}")));
        }
        market = market.with_policy(cal.focal, e);
    }
    let horizon = a.horizon.unwrap_or(market.horizon);
    let step = a.step.unwrap_or(market.step);
    let header = header_line(a, None);
    match integrate(&market, horizon, step) {
        Ok(traj) => {
            let mut out = open(a.out.as_deref(), &header)?;
            write_trajectory(&mut out, &traj)?;
            if traj.clamp_events > 0 {
                eprintln!("warning: {} negative stocks clamped to zero", traj.clamp_events);
            }
            out.flush()?;
            Ok(())
        }
        Err(err) => {
            if let Some(partial) = err.partial() {
                let mut out = open(a.out.as_deref(), &header)?;
                write_trajectory(&mut out, partial)?;
                out.flush()?;
            }
            Err(err.into())
        }
    }
}

pub fn optimize(a: &DynOptimizeArgs) -> Result<(), Failure> {
    let cal = load(a.config.as_deref(), fixtures::BASELINE_CALIBRATION)?;
    let step = a.grid_step.unwrap_or(cal.grid_step);
    let scan = PolicyScan::run(&cal.market, cal.focal, step)?;
    let (label, best) = if a.social {
        ("social optimum e**", scan.social(&cal.welfare))
    } else {
        ("private optimum e*", scan.private())
    };
    let ev = &scan.evals[best.index];
    println!("{label} = {:.4}", best.e);
    println!(
        "firm value {:.4}  consumer surplus {:.4}  net externality {:.4}  welfare {:.4}  terminal pgi {:.4}",
        ev.value,
        ev.cs,
        ev.net_x,
        ev.welfare(&cal.welfare),
        ev.terminal_pgi
    );
    if let Some(path) = a.out.as_deref() {
        let mut out = open(Some(path), &header_line(a, None))?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["e", "value", "cs", "net_x", "x_pos", "x_neg", "welfare", "terminal_pgi", "clamp_events"])?;
            for ev in &scan.evals {
                w.write_record([
                    ev.e.to_string(),
                    ev.value.to_string(),
                    ev.cs.to_string(),
                    ev.net_x.to_string(),
                    ev.x_pos.to_string(),
                    ev.x_neg.to_string(),
                    ev.welfare(&cal.welfare).to_string(),
                    ev.terminal_pgi.to_string(),
                    ev.clamp_events.to_string(),
                ])?;
            }
            w.flush()?;
        }
        out.flush()?;
    }
    Ok(())
}

/// Data-return levels compared in the tipping check, with the ratio each
/// must stay below or exceed.
const TIPPING_LOW: (f64, f64) = (0.8, 1.5);
const TIPPING_HIGH: (f64, f64) = (1.4, 3.0);

pub fn verify(a: &DynVerifyArgs) -> Result<(), Failure> {
    let fallback = match a.prop {
        Prop::A3 => fixtures::TIPPING_CALIBRATION,
        _ => fixtures::BASELINE_CALIBRATION,
    };
    let cal = load(a.config.as_deref(), fallback)?;
    let m = &cal.market;
    let step = cal.grid_step;
    let mut rows: Vec<Vec<String>> = Vec::new();
    let (head, holds, summary): (&[&str], bool, String) = match a.prop {
        Prop::A1 => {
            let points = match &cal.grid {
                Some((la, kp, p1)) => calibration_grid(m, la, kp, p1),
                None => vec![("calibration".to_string(), m.clone())],
            };
            let rep = verify_market_failure(&points, cal.focal, &cal.welfare, step)?;
            for r in &rep.rows {
                println!("{:<40} e*={:.2} e**={:.2} gap={:+.4} {}", r.label, r.e_private, r.e_social, r.gap(), if r.holds() { "ok" } else { "VIOLATED" });
                rows.push(vec![r.label.clone(), r.e_private.to_string(), r.e_social.to_string(), r.gap().to_string(), r.holds().to_string()]);
            }
            let bad = rep.violations().len();
            (
                &["point", "e_private", "e_social", "pgi_gap", "holds"],
                rep.all_hold(),
                format!("{bad} of {} calibration points violate e* >= e**", rep.rows.len()),
            )
        }
        Prop::A3 => {
            let q0 = m.initial.first().map_or(0.0, |s| s.q);
            let eps = 0.01 * q0;
            let lo = tipping_experiment(m, TIPPING_LOW.0, eps, m.horizon)?;
            let hi = tipping_experiment(m, TIPPING_HIGH.0, eps, m.horizon)?;
            for r in [&lo, &hi] {
                println!("gamma_d={} eps={} terminal q=({:.4}, {:.4}) ratio={:.4}", r.gamma_d, r.eps, r.q_terminal.0, r.q_terminal.1, r.share_ratio);
                rows.push(vec![r.gamma_d.to_string(), r.eps.to_string(), r.q_terminal.0.to_string(), r.q_terminal.1.to_string(), r.share_ratio.to_string()]);
            }
            (
                &["gamma_d", "eps", "q0_terminal", "q1_terminal", "share_ratio"],
                lo.share_ratio < TIPPING_LOW.1 && hi.share_ratio > TIPPING_HIGH.1,
                format!(
                    "ratio {:.3} at gamma_d {} (needs < {}), {:.3} at gamma_d {} (needs > {})",
                    lo.share_ratio, TIPPING_LOW.0, TIPPING_LOW.1, hi.share_ratio, TIPPING_HIGH.0, TIPPING_HIGH.1
                ),
            )
        }
        Prop::A4 => {
            let rep = pigouvian_subsidy(m, cal.focal, &cal.welfare, step, step)?;
            println!(
                "subsidy {:.4}  e*={:.2}  e**={:.2}  subsidized e={:.2}{}",
                rep.subsidy,
                rep.e_private,
                rep.e_social,
                rep.e_subsidized,
                if rep.boundary { "  (one-sided difference)" } else { "" }
            );
            rows.push(vec![rep.subsidy.to_string(), rep.e_private.to_string(), rep.e_social.to_string(), rep.e_subsidized.to_string()]);
            let miss = (rep.e_subsidized - rep.e_social).abs();
            (
                &["subsidy", "e_private", "e_social", "e_subsidized"],
                miss <= step + 1e-9,
                format!("subsidized choice misses e** by {miss:.4} (grid step {step})"),
            )
        }
        Prop::B6 => {
            let values = cal
                .sweep_lambda_a
                .clone()
                .ok_or_else(|| Failure::input(anyhow!("calibration has no sweep_lambda_a list")))?;
            let cs = comparative_static_lambda_a(m, cal.focal, &values, step, 1e-9)?;
            for (la, e) in cs.values.iter().zip(&cs.e_star) {
                println!("lambda_a={la:<6} e*={e:.2}");
                rows.push(vec![la.to_string(), e.to_string()]);
            }
            (
                &["lambda_a", "e_private"],
                cs.monotone(),
                format!("e* rises with lambda_a at {} of {} steps", cs.violations.len(), values.len() - 1),
            )
        }
    };
    if let Some(path) = a.out.as_deref() {
        let mut out = open(Some(path), &header_line(a, None))?;
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(head)?;
            for r in &rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        out.flush()?;
    }
    if holds {
        println!("holds: {summary}");
        Ok(())
    } else {
        Err(Failure::Unmet(summary))
    }
}
