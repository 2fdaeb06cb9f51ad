//! Monte Carlo replication harness.
//!
//! Replication `r` of scenario `s` runs with seed
//! `mix64(base_seed, pack(s, r))` (see [`crate::seeding`]). Replications run
//! in parallel; results are keyed by `(s, r)` and folded in key order, so
//! every output is independent of the schedule.

use std::collections::BTreeMap;
use std::fmt::Display;
use std::io::Write;

use rayon::prelude::*;
use thiserror::Error;

use super::{cohens_d, EffectBand, EffectSize, RunStats, StatsError};
use crate::seeding::{mix64, pack};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("need at least 2 replications, got {0}")]
    TooFewReps(usize),
    #[error("replication {rep} of scenario {scenario} (seed {seed}) failed: {message}")]
    Replication {
        scenario: String,
        rep: usize,
        seed: u64,
        message: String,
    },
    #[error("scenario {scenario}, metric {metric}: {source}")]
    Stats {
        scenario: String,
        metric: String,
        source: StatsError,
    },
    #[error("scenario {scenario} replication {rep} reports metrics {found:?}, expected {expected:?}")]
    MetricMismatch {
        scenario: String,
        rep: usize,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub fn replication_seed(base_seed: u64, scenario: usize, rep: usize) -> u64 {
    mix64(base_seed, pack(scenario as u64, rep as u64))
}

/// Runs `f(scenario_index, seed)` for every scenario and replication.
/// Returns outputs indexed `[scenario][rep]`. On failure the error of the
/// smallest failing `(scenario, rep)` is reported.
pub fn run_replications<T, E, F>(labels: &[String], reps: usize, base_seed: u64, f: F) -> Result<Vec<Vec<T>>, HarnessError>
where
    T: Send,
    E: Display,
    F: Fn(usize, u64) -> Result<T, E> + Sync,
{
    if reps < 2 {
        return Err(HarnessError::TooFewReps(reps));
    }
    let keys: Vec<(usize, usize)> = (0..labels.len()).flat_map(|s| (0..reps).map(move |r| (s, r))).collect();
    let done: BTreeMap<(usize, usize), Result<T, String>> = keys
        .into_par_iter()
        .map(|(s, r)| ((s, r), f(s, replication_seed(base_seed, s, r)).map_err(|e| e.to_string())))
        .collect();
    let mut out: Vec<Vec<T>> = labels.iter().map(|_| Vec::with_capacity(reps)).collect();
    for ((s, r), res) in done {
        match res {
            Ok(v) => out[s].push(v),
            Err(message) => {
                return Err(HarnessError::Replication {
                    scenario: labels[s].clone(),
                    rep: r,
                    seed: replication_seed(base_seed, s, r),
                    message,
                })
            }
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub scenarios: Vec<String>,
    pub metrics: Vec<String>,
    /// Per metric, per scenario, the replication values in rep order.
    pub samples: BTreeMap<String, Vec<Vec<f64>>>,
    /// One entry per (scenario, metric), scenario-major.
    pub stats: Vec<(String, RunStats)>,
    /// Every later scenario against every earlier one, metric-major.
    pub effects: Vec<EffectSize>,
    /// (metric, scenario_a, scenario_b) pairs whose pooled sd is zero.
    pub undefined_effects: Vec<(String, String, String)>,
}

impl Comparison {
    pub fn sample(&self, metric: &str, scenario: &str) -> Option<&[f64]> {
        let s = self.scenarios.iter().position(|x| x == scenario)?;
        self.samples.get(metric).map(|v| v[s].as_slice())
    }

    pub fn stats_for(&self, metric: &str, scenario: &str) -> Option<&RunStats> {
        self.stats
            .iter()
            .find(|(s, r)| s == scenario && r.metric_name == metric)
            .map(|(_, r)| r)
    }

    pub fn effect(&self, metric: &str, scenario_a: &str, scenario_b: &str) -> Option<&EffectSize> {
        self.effects
            .iter()
            .find(|e| e.metric_name == metric && e.scenario_a == scenario_a && e.scenario_b == scenario_b)
    }
}

/// Aggregates named metric values per replication. Every replication must
/// report the same metric names in the same order.
pub fn summarize(labels: &[String], outputs: &[Vec<Vec<(String, f64)>>]) -> Result<Comparison, HarnessError> {
    let metrics: Vec<String> = outputs
        .first()
        .and_then(|reps| reps.first())
        .map(|row| row.iter().map(|(m, _)| m.clone()).collect())
        .unwrap_or_default();
    let mut samples: BTreeMap<String, Vec<Vec<f64>>> = BTreeMap::new();
    for m in &metrics {
        samples.insert(m.clone(), vec![Vec::new(); labels.len()]);
    }
    for (s, reps) in outputs.iter().enumerate() {
        for (r, row) in reps.iter().enumerate() {
            let names: Vec<String> = row.iter().map(|(m, _)| m.clone()).collect();
            if names != metrics {
                return Err(HarnessError::MetricMismatch {
                    scenario: labels[s].clone(),
                    rep: r,
                    expected: metrics.clone(),
                    found: names,
                });
            }
            for (m, v) in row {
                samples.get_mut(m).expect("metric registered")[s].push(*v);
            }
        }
    }

    let mut stats = Vec::new();
    for (s, label) in labels.iter().enumerate() {
        for m in &metrics {
            let st = RunStats::from_sample(m, &samples[m][s]).map_err(|source| HarnessError::Stats {
                scenario: label.clone(),
                metric: m.clone(),
                source,
            })?;
            stats.push((label.clone(), st));
        }
    }

    let mut effects = Vec::new();
    let mut undefined_effects = Vec::new();
    for m in &metrics {
        for a in 0..labels.len() {
            for b in 0..a {
                match cohens_d(&samples[m][a], &samples[m][b]) {
                    Ok(d) => effects.push(EffectSize {
                        metric_name: m.clone(),
                        scenario_a: labels[a].clone(),
                        scenario_b: labels[b].clone(),
                        cohens_d: d,
                        band: EffectBand::of(d),
                    }),
                    Err(StatsError::ZeroVariance) => undefined_effects.push((m.clone(), labels[a].clone(), labels[b].clone())),
                    Err(source) => {
                        return Err(HarnessError::Stats {
                            scenario: labels[a].clone(),
                            metric: m.clone(),
                            source,
                        })
                    }
                }
            }
        }
    }

    Ok(Comparison {
        scenarios: labels.to_vec(),
        metrics,
        samples,
        stats,
        effects,
        undefined_effects,
    })
}

/// [`run_replications`] followed by [`summarize`].
pub fn mc_compare<E, F>(labels: &[String], reps: usize, base_seed: u64, f: F) -> Result<Comparison, HarnessError>
where
    E: Display,
    F: Fn(usize, u64) -> Result<Vec<(String, f64)>, E> + Sync,
{
    let outputs = run_replications(labels, reps, base_seed, f)?;
    summarize(labels, &outputs)
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

/// `scenario,metric,n,mean,std,ci95_lo,ci95_hi,cv,skew,kurtosis,jb_p`
pub fn write_aggregate_csv<W: Write>(out: W, cmp: &Comparison) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["scenario", "metric", "n", "mean", "std", "ci95_lo", "ci95_hi", "cv", "skew", "kurtosis", "jb_p"])?;
    for (scenario, s) in &cmp.stats {
        w.write_record([
            scenario.clone(),
            s.metric_name.clone(),
            s.n.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
            s.ci95_lo.to_string(),
            s.ci95_hi.to_string(),
            opt(s.cv),
            opt(s.shape.map(|x| x.skewness)),
            opt(s.shape.map(|x| x.kurtosis)),
            opt(s.shape.map(|x| x.p_value)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `metric,scenario_a,scenario_b,cohens_d`; undefined effects are written as `NA` after the rest.
pub fn write_effects_csv<W: Write>(out: W, cmp: &Comparison) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["metric", "scenario_a", "scenario_b", "cohens_d"])?;
    for e in &cmp.effects {
        w.write_record([&e.metric_name, &e.scenario_a, &e.scenario_b, &e.cohens_d.to_string()])?;
    }
    for (m, a, b) in &cmp.undefined_effects {
        w.write_record([m.as_str(), a, b, "NA"])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("S{i}")).collect()
    }

    #[test]
    fn constant_metric_has_zero_width_interval() {
        let cmp = mc_compare(&labels(1), 2, 1, |_, _| Ok::<_, String>(vec![("m".to_string(), 3.0)])).unwrap();
        let s = cmp.stats_for("m", "S0").unwrap();
        assert_eq!(s.std, 0.0);
        assert_eq!(s.ci95_hi - s.ci95_lo, 0.0);
    }

    #[test]
    fn failures_name_the_replication() {
        let err = run_replications(&labels(2), 3, 9, |s, seed| if s == 1 { Err(format!("bad {seed}")) } else { Ok(seed) }).unwrap_err();
        match err {
            HarnessError::Replication { scenario, rep, seed, .. } => {
                assert_eq!(scenario, "S1");
                assert_eq!(rep, 0);
                assert_eq!(seed, replication_seed(9, 1, 0));
            }
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn single_replication_is_rejected() {
        assert!(matches!(
            run_replications(&labels(1), 1, 0, |_, s| Ok::<_, String>(s)),
            Err(HarnessError::TooFewReps(1))
        ));
    }

    #[test]
    fn degenerate_pairs_are_listed_not_dropped() {
        let cmp = mc_compare(&labels(2), 3, 0, |s, _| Ok::<_, String>(vec![("m".to_string(), s as f64)])).unwrap();
        assert!(cmp.effects.is_empty());
        assert_eq!(cmp.undefined_effects, vec![("m".to_string(), "S1".to_string(), "S0".to_string())]);
    }
}
