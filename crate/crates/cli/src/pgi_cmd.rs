use std::io::Write;

use anyhow::Context;
use pgi_lab::fixtures;
use pgi_lab::pgi::{compute_ranking, dims_from_scorecard, openai_case, weight_sensitivity, Aggregator, WeightVector};
use pgi_lab::scorecard::{load_scorecards, Scorecard};

use crate::output::{header_line, open};
use crate::{Agg, CaseArgs, Failure, Format, PgiComputeArgs, PgiSensitivityArgs};

fn cards(path: Option<&std::path::Path>) -> Result<Vec<Scorecard>, Failure> {
    match path {
        Some(p) => load_scorecards(p)
            .with_context(|| format!("loading {}", p.display()))
            .map_err(Failure::input),
        None => Ok(fixtures::published_dimension_cards()),
    }
}

pub fn compute(a: &PgiComputeArgs) -> Result<(), Failure> {
    let cards = cards(a.scorecards.as_deref())?;
    let w = match a.weights {
        Some(raw) => WeightVector::normalized(raw)?,
        None => WeightVector::equal(),
    };
    let agg = match a.agg {
        Agg::Linear => Aggregator::Linear,
        Agg::Ces => Aggregator::Ces(a.rho),
    };
    let ranking = compute_ranking(&cards, &w, agg, a.w_pos)?;
    let mut out = open(a.out.as_deref(), &header_line(a, None))?;
    let access = |id: &str| {
        cards
            .iter()
            .find(|c| c.model_id == id)
            .map(|c| c.access_mode.to_string())
            .unwrap_or_default()
    };
    match a.format {
        Format::Csv => {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["rank", "model_id", "access_mode", "c_q", "c_e", "c_x", "pgi"])?;
            for r in &ranking {
                w.write_record([
                    r.rank.to_string(),
                    r.model_id.clone(),
                    access(&r.model_id),
                    r.dims.c_q.to_string(),
                    r.dims.c_e.to_string(),
                    r.dims.c_x.to_string(),
                    r.composite.to_string(),
                ])?;
            }
            w.flush()?;
        }
        Format::Text => {
            writeln!(out, "weights: alpha={:.4} beta={:.4} gamma={:.4}  aggregator: {:?}", w.alpha, w.beta, w.gamma, agg)?;
            writeln!(out, "{:>4}  {:<12} {:<7} {:>6} {:>6} {:>6} {:>7}", "rank", "model", "access", "c_q", "c_e", "c_x", "pgi")?;
            for r in &ranking {
                writeln!(
                    out,
                    "{:>4}  {:<12} {:<7} {:>6.3} {:>6.3} {:>6.3} {:>7.3}",
                    r.rank,
                    r.model_id,
                    access(&r.model_id),
                    r.dims.c_q,
                    r.dims.c_e,
                    r.dims.c_x,
                    r.composite
                )?;
            }
            for c in cards.iter().filter(|c| c.cx_override.is_some() && c.dimension_overrides.is_none()) {
                let (_, cx) = dims_from_scorecard(c, a.w_pos)?;
                writeln!(out, "note: {} externality score {:.3} used; computed {:.3} (delta {:+.3})", c.model_id, cx.value, cx.computed, cx.delta())?;
            }
        }
    }
    out.flush()?;
    Ok(())
}

pub fn sensitivity(a: &PgiSensitivityArgs) -> Result<(), Failure> {
    let cards = cards(a.scorecards.as_deref())?;
    let rep = weight_sensitivity(&cards, a.draws, a.box_lo, a.box_hi, a.seed, a.w_pos)?;
    let n = rep.models.len();
    let mut out = open(a.out.as_deref(), &header_line(a, Some(a.seed)))?;
    let footer = format!(
        "open-weight models hold the top {} ranks in {:.4} of {} draws (reference rate: above 0.95)",
        rep.n_open,
        rep.open_top_rate(),
        rep.n_draws
    );
    match a.format {
        Format::Csv => {
            {
                let mut w = csv::Writer::from_writer(&mut out);
                let mut head = vec!["model_id".to_string()];
                head.extend((1..=n).map(|r| format!("rank_{r}")));
                head.extend(rep.models.iter().map(|m| format!("above_{m}")));
                w.write_record(&head)?;
                for (i, m) in rep.models.iter().enumerate() {
                    let mut row = vec![m.clone()];
                    row.extend((1..=n).map(|r| rep.rank_frequency(i, r).to_string()));
                    row.extend((0..n).map(|j| rep.outrank_frequency(i, j).to_string()));
                    w.write_record(&row)?;
                }
                w.flush()?;
            }
            writeln!(out, "# {footer}")?;
        }
        Format::Text => {
            writeln!(out, "{} weight draws in [{}, {}], seed {:#x}", rep.n_draws, a.box_lo, a.box_hi, rep.seed)?;
            write!(out, "{:<12}", "model")?;
            for r in 1..=n {
                write!(out, " {:>7}", format!("rank{r}"))?;
            }
            writeln!(out)?;
            for (i, m) in rep.models.iter().enumerate() {
                write!(out, "{m:<12}")?;
                for r in 1..=n {
                    write!(out, " {:>7.4}", rep.rank_frequency(i, r))?;
                }
                writeln!(out)?;
            }
            writeln!(out, "{footer}")?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn case_openai(a: &CaseArgs) -> Result<(), Failure> {
    let case = openai_case();
    let mut out = open(a.out.as_deref(), &header_line(a, None))?;
    match a.format {
        Format::Csv => {
            {
                let mut w = csv::Writer::from_writer(&mut out);
                w.write_record(["model_id", "c_q", "c_e", "c_x", "pgi"])?;
                for r in &case.results {
                    w.write_record([
                        r.model_id.clone(),
                        r.dims.c_q.to_string(),
                        r.dims.c_e.to_string(),
                        r.dims.c_x.to_string(),
                        r.composite.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            writeln!(out, "# decline,{}", case.decline)?;
        }
        Format::Text => {
            writeln!(out, "{:<8} {:>6} {:>6} {:>6} {:>6}", "model", "c_q", "c_e", "c_x", "pgi")?;
            for r in &case.results {
                writeln!(out, "{:<8} {:>6.2} {:>6.2} {:>6.2} {:>6.2}", r.model_id, r.dims.c_q, r.dims.c_e, r.dims.c_x, r.composite)?;
            }
            writeln!(out, "decline: {:.0}%", case.decline * 100.0)?;
        }
    }
    out.flush()?;
    Ok(())
}
