use std::io::Write;

use anyhow::Context;
use pgi_lab::abm::config::{parse_scenario_config, write_heterogeneity_csv, write_series_csv, ScenarioConfig};
use pgi_lab::abm::{
    compare_scenarios, run_scenario, segment_report, AbmParams, PolicyScenario, ScenarioId, ScenarioRun, DEFAULT_POLLUTION_TAX, DEFAULT_SHARE_CAP,
    DEFAULT_SUBSIDY_RATE,
};
use pgi_lab::stats::harness::{write_aggregate_csv, write_effects_csv, Comparison};

use crate::output::{header_line, OutDir};
use crate::{AbmCompareArgs, AbmRunArgs, Failure};

const CONVENTIONS: &str = "\
conventions:
  ci95      normal approximation, mean +/- 1.96 * s / sqrt(n), s with n - 1
  std       sample standard deviation (n - 1)
  kurtosis  Pearson (normal = 3)
  jb_p      Jarque-Bera p-value, chi-square with 2 degrees of freedom
  cohens_d  (mean_a - mean_b) / pooled sd, scenario_a is the later scenario
  seeds     replication r of scenario s uses mix64(base_seed, pack(s, r))
  metrics   terminal-step values; NA marks a statistic undefined for the sample
";

fn resolve(a: &AbmRunArgs) -> Result<ScenarioConfig, Failure> {
    let mut cfg = match a.config.as_deref() {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading {}", p.display()))
                .map_err(Failure::input)?;
            parse_scenario_config(&text).with_context(|| format!("in {}", p.display())).map_err(Failure::input)?
        }
        None => ScenarioConfig::preset(ScenarioId::S0),
    };
    if let Some(raw) = a.scenario.as_deref() {
        let id: ScenarioId = raw.parse()?;
        let level = |cur: f64, off: f64, default: f64| if cur == off { default } else { cur };
        cfg.policy = PolicyScenario::with_levels(
            id,
            level(cfg.policy.subsidy_rate, 0.0, DEFAULT_SUBSIDY_RATE),
            level(cfg.policy.pollution_tax_rate, 0.0, DEFAULT_POLLUTION_TAX),
            level(cfg.policy.share_cap, 1.0, DEFAULT_SHARE_CAP),
        );
    }
    if let Some(steps) = a.steps {
        cfg.steps = steps;
    }
    if let Some(users) = a.users {
        cfg.params.n_users = users;
    }
    if let Some(seed) = a.seed {
        cfg.seed = seed;
    }
    cfg.params.validate()?;
    cfg.policy.validate()?;
    Ok(cfg)
}

fn write_firms(out: &mut dyn Write, run: &ScenarioRun) -> Result<(), Failure> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["step", "firm", "strategy", "share", "pgi", "safety", "excludability", "capital", "tech_level", "active"])?;
    for m in &run.series {
        for f in &m.firms {
            w.write_record([
                m.step.to_string(),
                f.firm_id.to_string(),
                f.strategy.name().to_string(),
                f.share.to_string(),
                f.pgi.to_string(),
                f.safety.to_string(),
                f.excludability.to_string(),
                f.capital.to_string(),
                f.tech_level.to_string(),
                f.active.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn run(a: &AbmRunArgs) -> Result<(), Failure> {
    let cfg = resolve(a)?;
    let run = run_scenario(&cfg.params, cfg.policy, cfg.steps, cfg.seed)?;
    let dir = OutDir::create(&a.out, header_line(a, Some(cfg.seed)))?;

    let mut f = dir.file("series.csv")?;
    write_series_csv(&mut f, std::slice::from_ref(&run))?;
    f.flush()?;
    let mut f = dir.file("firms.csv")?;
    write_firms(&mut f, &run)?;
    f.flush()?;
    let mut f = dir.file("scenario.cfg")?;
    f.write_all(cfg.to_text().as_bytes())?;
    f.flush()?;

    let t = run.terminal();
    let max_share = run
        .series
        .iter()
        .flat_map(|m| m.firms.iter().map(|f| f.share))
        .fold(0.0, f64::max);
    println!(
        "{} seed {:#x}, {} users, {} steps -> {}",
        cfg.policy.scenario_id,
        cfg.seed,
        cfg.params.n_users,
        cfg.steps,
        dir.root.display()
    );
    println!(
        "terminal: welfare {:.1}  avg_pgi {:.4}  hhi {:.4}  innovation {:.5}  data_quality {:.4}  safety {:.4}",
        t.social_welfare, t.avg_pgi, t.hhi, t.innovation_index, t.data_quality, t.safety_index
    );
    println!("largest share at any step: {max_share:.4}");
    Ok(())
}

fn print_summary(cmp: &Comparison) {
    println!("{:<4} {:>12} {:>9} {:>8} {:>10}", "", "welfare", "avg_pgi", "hhi", "innovation");
    for s in &cmp.scenarios {
        let mean = |m: &str| cmp.stats_for(m, s).map_or(f64::NAN, |r| r.mean);
        println!(
            "{:<4} {:>12.1} {:>9.4} {:>8.4} {:>10.5}",
            s,
            mean("welfare"),
            mean("avg_pgi"),
            mean("hhi"),
            mean("innovation")
        );
    }
}

pub fn compare(a: &AbmCompareArgs) -> Result<(), Failure> {
    let params = AbmParams {
        n_users: a.users,
        ..AbmParams::default()
    };
    params.validate()?;
    let scenarios: Vec<PolicyScenario> = ScenarioId::ALL.iter().map(|&id| PolicyScenario::preset(id)).collect();
    let (runs, cmp) = compare_scenarios(&params, &scenarios, a.reps, a.steps, a.seed)?;
    let dir = OutDir::create(&a.out, header_line(a, Some(a.seed)))?;

    let all: Vec<ScenarioRun> = runs.iter().flatten().cloned().collect();
    let mut f = dir.file("series.csv")?;
    write_series_csv(&mut f, &all)?;
    f.flush()?;
    let mut f = dir.file("aggregate.csv")?;
    write_aggregate_csv(&mut f, &cmp)?;
    f.flush()?;
    let mut f = dir.file("effects.csv")?;
    write_effects_csv(&mut f, &cmp)?;
    f.flush()?;

    let grouped: Vec<(ScenarioId, Vec<ScenarioRun>)> = scenarios.iter().map(|p| p.scenario_id).zip(runs).collect();
    let report = segment_report(&grouped)?;
    let mut seg = dir.file("segments.csv")?;
    let mut strat = dir.file("strategies.csv")?;
    write_heterogeneity_csv(&mut seg, &mut strat, &report)?;
    seg.flush()?;
    strat.flush()?;

    let mut f = dir.file("conventions.txt")?;
    f.write_all(CONVENTIONS.as_bytes())?;
    if !cmp.undefined_effects.is_empty() {
        writeln!(f, "undefined effect sizes (zero pooled variance):")?;
        for (m, x, y) in &cmp.undefined_effects {
            writeln!(f, "  {m}: {x} vs {y}")?;
        }
    }
    f.flush()?;

    println!("{} scenarios x {} replications, {} users, {} steps, base seed {:#x}", scenarios.len(), a.reps, a.users, a.steps, a.seed);
    print_summary(&cmp);
    println!("outputs in {}", dir.root.display());
    Ok(())
}
