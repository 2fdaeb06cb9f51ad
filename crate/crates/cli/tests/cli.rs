use std::path::Path;
use std::process::{Command, Output};

use pgi_lab::dynamics::{evaluate_policy, parse_calibration};
use pgi_lab::fixtures;

fn pgilab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pgilab")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = pgilab(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    pgilab(args).status.code().expect("exit code")
}

fn body(path: &Path) -> String {
    let text = std::fs::read_to_string(path).unwrap();
    let (head, rest) = text.split_once('\n').unwrap();
    assert!(head.starts_with("# pgilab "), "{head}");
    assert!(head.contains("flags:") && head.contains("seed:"));
    rest.to_string()
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes())
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

#[test]
fn help_and_unknown_flags() {
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["abm", "run", "--help"]), 0);
    assert_eq!(code(&["pgi", "compute", "--bogus"]), 2);
    assert_eq!(code(&["frobnicate"]), 2);
}

#[test]
fn default_ranking() {
    let rows = csv_rows(&ok(&["pgi", "compute", "--format", "csv"]));
    let ids: Vec<&str> = rows.iter().map(|r| r[1].as_str()).collect();
    assert_eq!(ids, ["Llama", "Qwen", "Claude", "Gemini", "ChatGPT"]);
    for (r, want) in rows.iter().zip(fixtures::PUBLISHED_COMPOSITES) {
        let got: f64 = r[6].parse().unwrap();
        assert!((got - want).abs() < 0.005, "{} {got} vs {want}", r[1]);
    }
    let text = ok(&["pgi", "compute"]);
    assert!(text.contains("Llama") && text.contains("0.767"));
}

#[test]
fn single_dimension_weights_rank_by_quality() {
    let rows = csv_rows(&ok(&["pgi", "compute", "--weights", "1,0,0", "--format", "csv"]));
    let cq: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!(cq.windows(2).all(|w| w[0] >= w[1]));
    for r in &rows {
        assert_eq!(r[3], r[6]);
    }
}

#[test]
fn ces_matches_power_mean() {
    let rows = csv_rows(&ok(&["pgi", "compute", "--agg", "ces", "--rho", "2", "--format", "csv"]));
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let d: Vec<f64> = r[3..6].iter().map(|v| v.parse().unwrap()).collect();
        let oracle = (d.iter().map(|x| x * x).sum::<f64>() / 3.0).sqrt();
        let got: f64 = r[6].parse().unwrap();
        assert!((got - oracle).abs() < 1e-9, "{got} vs {oracle}");
    }
}

#[test]
fn bad_scorecards_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("cards.csv");
    std::fs::write(&p, "model_id,access_mode\nX,sideways\n").unwrap();
    let out = pgilab(&["pgi", "compute", "--scorecards", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!out.stderr.is_empty());
    assert_eq!(code(&["pgi", "compute", "--scorecards", "/nonexistent.csv"]), 2);
    assert_eq!(code(&["pgi", "compute", "--weights", "1,2"]), 2);
}

#[test]
fn sensitivity_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sens.csv");
    let ps = p.to_str().unwrap();
    let args = ["pgi", "sensitivity", "--draws", "10000", "--seed", "42", "--format", "csv", "--out", ps];
    ok(&args);
    let first = std::fs::read(&p).unwrap();
    ok(&args);
    assert_eq!(first, std::fs::read(&p).unwrap());
    let text = body(&p);
    assert!(text.contains("reference rate"));
    let rows = csv_rows(&text);
    let head = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes()).headers().unwrap().clone();
    let llama = rows.iter().find(|r| r[0] == "Llama").unwrap();
    for other in ["Claude", "Gemini", "ChatGPT"] {
        let col = head.iter().position(|h| h == format!("above_{other}")).unwrap();
        assert_eq!(llama[col], "1", "Llama vs {other}");
    }

    let one = csv_rows(&ok(&["pgi", "sensitivity", "--draws", "1", "--format", "csv"]));
    for r in &one {
        let ranks: Vec<f64> = r[1..6].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(ranks.iter().filter(|&&v| v == 1.0).count(), 1);
        assert_eq!(ranks.iter().filter(|&&v| v == 0.0).count(), 4);
    }
}

#[test]
fn openai_case() {
    let text = ok(&["case", "openai"]);
    assert!(text.contains("57%"));
    for v in ["0.86", "0.60", "0.37"] {
        assert!(text.contains(v), "{v}");
    }
    let rows = csv_rows(&ok(&["case", "openai", "--format", "csv"]));
    assert_eq!(rows.len(), 3);
    for r in &rows {
        let d: Vec<f64> = r[1..5].iter().map(|v| v.parse().unwrap()).collect();
        assert!(((d[0] + d[1] + d[2]) / 3.0 - d[3]).abs() < 1e-12);
    }
}

#[test]
fn simulate_writes_a_monotone_grid() {
    let rows = csv_rows(&ok(&["dyn", "simulate", "--horizon", "2", "--e", "0.3"]));
    assert_eq!(rows.len(), 201);
    let t: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(t.windows(2).all(|w| w[1] > w[0]));
    assert_eq!(rows[0][8], "0.3");
    assert_eq!(code(&["dyn", "simulate", "--e", "1.5"]), 2);
    assert_eq!(code(&["dyn", "simulate", "--step", "-1"]), 2);
}

#[test]
fn divergence_dumps_the_partial_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("div.cal");
    std::fs::write(&cfg, fixtures::BASELINE_CALIBRATION.replace("g_c = 0.02", "g_c = 2")).unwrap();
    let out = dir.path().join("traj.csv");
    let res = pgilab(&["dyn", "simulate", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
    let rows = csv_rows(&body(&out));
    assert!(rows.len() > 10);
    let last: f64 = rows.last().unwrap()[0].parse().unwrap();
    assert!(last < 50.0);
}

/// Baseline with a single grid point, a coarse policy grid and a short horizon.
fn light_calibration(dir: &Path) -> std::path::PathBuf {
    let text = fixtures::BASELINE_CALIBRATION
        .replace("horizon = 50", "horizon = 20")
        .replace("step = 0.01\ngrid_step = 0.01", "step = 0.02\ngrid_step = 0.1")
        .replace("grid_lambda_a = 0.1, 0.2, 0.4", "grid_lambda_a = 0.1, 0.4")
        .replace("grid_kappa_pos = 0.25, 0.5, 1.0", "grid_kappa_pos = 0.5")
        .replace("grid_price_slope = 1.5, 2, 3", "grid_price_slope = 2")
        .replace("sweep_lambda_a = 0, 0.1, 0.2, 0.4, 0.8", "sweep_lambda_a = 0, 0.4, 0.8");
    let p = dir.join("light.cal");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn verify_properties_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = light_calibration(dir.path());
    let c = cfg.to_str().unwrap();
    let out = dir.path().join("a1.csv");
    let text = ok(&["dyn", "verify", "--prop", "A1", "--config", c, "--out", out.to_str().unwrap()]);
    assert!(text.contains("holds"));
    assert_eq!(csv_rows(&body(&out)).len(), 2);
    ok(&["dyn", "verify", "--prop", "a4", "--config", c]);
    ok(&["dyn", "verify", "--prop", "B6", "--config", c]);
    ok(&["dyn", "verify", "--prop", "A3"]);
}

#[test]
fn unmet_property_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("weak.cal");
    // without data returns nothing amplifies the perturbation
    std::fs::write(&p, fixtures::TIPPING_CALIBRATION.replace("omega_d = 0.6", "omega_d = 0.0").replace("omega_a = 0.2", "omega_a = 0.8")).unwrap();
    let res = pgilab(&["dyn", "verify", "--prop", "A3", "--config", p.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1), "{}", String::from_utf8_lossy(&res.stdout));
}

#[test]
fn social_optimum_matches_exhaustive_search() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = light_calibration(dir.path());
    let text = ok(&["dyn", "optimize", "--social", "--config", cfg.to_str().unwrap()]);
    let cal = parse_calibration(&std::fs::read_to_string(&cfg).unwrap()).unwrap();
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..=10 {
        let e = k as f64 / 10.0;
        let ev = evaluate_policy(&cal.market, 0, e).unwrap();
        let w = cal.welfare.ps * ev.value + cal.welfare.cs * ev.cs + cal.welfare.x * ev.net_x;
        if w > best.0 {
            best = (w, e);
        }
    }
    assert!(text.contains(&format!("e** = {:.4}", best.1)), "{text}");
    assert!(text.contains(&format!("welfare {:.4}", best.0)), "{text}");
}

#[test]
fn abm_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ok(&["abm", "run", "--scenario", "S0", "--seed", "7", "--users", "300", "--out", a.to_str().unwrap()]);
    ok(&["abm", "run", "--scenario", "S0", "--seed", "7", "--users", "300", "--out", b.to_str().unwrap()]);
    for f in ["series.csv", "firms.csv", "scenario.cfg"] {
        assert_eq!(body(&a.join(f)), body(&b.join(f)), "{f}");
    }
    let series = csv_rows(&body(&a.join("series.csv")));
    assert_eq!(series.len(), 21);
}

#[test]
fn abm_run_respects_the_share_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s3");
    let users = 2000.0;
    ok(&["abm", "run", "--scenario", "S3", "--out", out.to_str().unwrap()]);
    let firms = csv_rows(&body(&out.join("firms.csv")));
    for r in firms.iter().filter(|r| r[0] != "0") {
        let share: f64 = r[3].parse().unwrap();
        assert!(share <= 0.35 + 1.0 / users, "step {} firm {} share {share}", r[0], r[1]);
    }
}

#[test]
fn abm_run_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("s.cfg");
    std::fs::write(&cfg, "scenario = S2\nsteps = 4\nusers = 120\nseed = 0x2A\n").unwrap();
    let out = dir.path().join("o");
    ok(&["abm", "run", "--config", cfg.to_str().unwrap(), "--steps", "3", "--out", out.to_str().unwrap()]);
    let saved = body(&out.join("scenario.cfg"));
    assert!(saved.contains("scenario = S2") && saved.contains("steps = 3") && saved.contains("users = 120") && saved.contains("seed = 42"));
    let series = csv_rows(&body(&out.join("series.csv")));
    assert_eq!(series.len(), 4);
    assert!(series.iter().all(|r| r[1] == "S2" && r[2] == "42"));

    std::fs::write(&cfg, "scenario = S2\nsteps = many\n").unwrap();
    assert_eq!(code(&["abm", "run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert_eq!(code(&["abm", "run", "--scenario", "S9"]), 2);
    assert_eq!(code(&["abm", "run", "--users", "3"]), 2);
    assert_eq!(code(&["abm", "run", "--steps", "0"]), 2);
}

#[test]
fn abm_compare_writes_every_table() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    let args = |p: &Path| {
        vec![
            "abm".to_string(),
            "compare".into(),
            "--reps".into(),
            "6".into(),
            "--users".into(),
            "200".into(),
            "--steps".into(),
            "5".into(),
            "--out".into(),
            p.to_str().unwrap().into(),
        ]
    };
    let run = |p: &Path, extra: &[&str]| {
        let mut v = args(p);
        v.extend(extra.iter().map(|s| s.to_string()));
        let refs: Vec<&str> = v.iter().map(String::as_str).collect();
        ok(&refs)
    };
    run(&a, &[]);
    run(&b, &["--threads", "1"]);
    for f in ["series.csv", "aggregate.csv", "effects.csv", "segments.csv", "strategies.csv"] {
        assert_eq!(csv_rows(&body(&a.join(f))), csv_rows(&body(&b.join(f))), "{f}");
    }
    let agg = body(&a.join("aggregate.csv"));
    assert!(agg.starts_with("scenario,metric,n,mean,std,ci95_lo,ci95_hi,cv,skew,kurtosis,jb_p\n"));
    let rows = csv_rows(&agg);
    assert_eq!(rows.len(), 5 * 6);
    assert!(rows.iter().all(|r| r[2] == "6"));
    let eff = body(&a.join("effects.csv"));
    assert!(eff.starts_with("metric,scenario_a,scenario_b,cohens_d\n"));
    assert_eq!(csv_rows(&eff).len(), 6 * 10);
    assert!(body(&a.join("conventions.txt")).contains("Jarque-Bera"));
    assert_eq!(code(&["abm", "compare", "--reps", "1", "--out", a.to_str().unwrap()]), 2);
}
