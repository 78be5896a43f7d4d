use std::process::Command;
use std::sync::Arc;

use qudit_threshold::campaign::store::{Group, PointLine, SampleLine, RECORDS_FILE, VERDICTS_FILE};
use qudit_threshold::campaign::{self, analyze, AnalysisOptions, CampaignConfig, ResultStore};
use qudit_threshold::disorder::nishimori_temperature;
use qudit_threshold::lattice::Lattice;
use qudit_threshold::observables::{LogBins, Verdict};

const CONFIG: &str = r#"
d = 3
p = [0.0, 0.1]
L = [4, 6]
samples = 3
b = 7
t_min = 0.6
t_max = 1.4
temperatures = 6
seed = 2024
workers = 1
"#;

fn run(config: &CampaignConfig) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    campaign::run_campaign(config, dir.path(), |_| {}).unwrap();
    dir
}

#[test]
fn store_echoes_config_and_is_deterministic() {
    let cfg = CampaignConfig::from_toml(CONFIG).unwrap();
    let a = run(&cfg);
    let store = ResultStore::load(a.path()).unwrap();
    assert_eq!(store.config, cfg);
    assert_eq!(store.samples.len(), 2 * 2 * 3);
    assert_eq!(store.points.len(), 2 * 2 * 3 * 6);
    assert!(store.samples.iter().all(|s| s.failure.is_none()));
    assert_eq!(store.group_verdicts.len(), 4);
    assert_eq!(store.sample_verdicts.len(), 12);

    // a different worker count must not change any byte
    let mut parallel = cfg.clone();
    parallel.workers = 3;
    let b = run(&parallel);
    let header_a = std::fs::read_to_string(a.path().join(RECORDS_FILE)).unwrap();
    let header_b = std::fs::read_to_string(b.path().join(RECORDS_FILE)).unwrap();
    let body = |s: &str| s.lines().skip(1).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&header_a), body(&header_b));
    assert_eq!(
        std::fs::read(a.path().join(VERDICTS_FILE)).unwrap(),
        std::fs::read(b.path().join(VERDICTS_FILE)).unwrap()
    );
    let again = run(&cfg);
    assert_eq!(
        std::fs::read(a.path().join(RECORDS_FILE)).unwrap(),
        std::fs::read(again.path().join(RECORDS_FILE)).unwrap()
    );
}

#[test]
fn rerunning_a_sample_reproduces_its_records() {
    let cfg = CampaignConfig::from_toml(CONFIG).unwrap();
    let dir = run(&cfg);
    let store = ResultStore::load(dir.path()).unwrap();
    let group = store.group(0.1, 6);
    let lattice = Arc::new(Lattice::new(6).unwrap());
    let (line, points) = campaign::simulate_sample(&cfg, &cfg.grid().unwrap(), &lattice, 0.1, 2);
    assert_eq!(&line, group.samples.iter().find(|s| s.sample == 2).unwrap());
    let stored: Vec<&PointLine> = group.points.iter().filter(|pt| pt.sample == 2).collect();
    assert_eq!(points.iter().collect::<Vec<_>>(), stored);
    assert_eq!(line.seed, campaign::sample_seed(cfg.seed, 0.1, 6, 2));
}

#[test]
fn analysis_is_repeatable() {
    let cfg = CampaignConfig::from_toml(CONFIG).unwrap();
    let dir = run(&cfg);
    let store = ResultStore::load(dir.path()).unwrap();
    let opts = AnalysisOptions {
        resamples: 20,
        ..Default::default()
    };
    let a = analyze(&store, &opts);
    let b = analyze(&store, &opts);
    assert_eq!(a.to_string(), b.to_string());
    assert_eq!(serde_json::to_string(&a).unwrap(), serde_json::to_string(&b).unwrap());
    let out = tempfile::tempdir().unwrap();
    let files = a.write_plot_data(out.path()).unwrap();
    assert_eq!(files.len(), 3);
    for f in files {
        assert!(std::fs::read_to_string(f).unwrap().starts_with('#'));
    }
}

/// A store whose curves follow a planted boundary `T_c(p) = 1 − 4p` exactly.
fn synthetic_store() -> ResultStore {
    let mut cfg = CampaignConfig::from_toml(CONFIG).unwrap();
    cfg.p = vec![0.05, 0.15];
    cfg.sizes = vec![8, 12, 16];
    let temps: Vec<f64> = (0..24).map(|i| 0.3 + 0.05 * i as f64).collect();
    let mut samples = Vec::new();
    let mut points = Vec::new();
    for &p in &cfg.p {
        let tc = 1.0 - 4.0 * p;
        for &l in &cfg.sizes {
            for s in 0..4u64 {
                samples.push(SampleLine {
                    p,
                    size: l,
                    sample: s,
                    seed: s,
                    errors: 0,
                    exchange_acceptance: vec![],
                    all_replicas_traversed: true,
                    warnings: vec![],
                    failure: None,
                });
                for (t, &temp) in temps.iter().enumerate() {
                    let xi = l as f64 * (0.5 - 0.03 * l as f64 * (temp - tc));
                    let xi = xi.max(0.01 * l as f64);
                    let chik = 2.0 + s as f64;
                    let chi0 = chik * (1.0 + (xi * 2.0 * (std::f64::consts::PI / l as f64).sin()).powi(2));
                    points.push(PointLine {
                        p,
                        size: l,
                        sample: s,
                        t_index: t,
                        temperature: temp,
                        measurements: 1,
                        energy: 0.0,
                        chi0,
                        chik,
                        metropolis_acceptance: 0.5,
                        energy_bins: LogBins::default(),
                        chi0_bins: LogBins::default(),
                        chik_bins: LogBins::default(),
                    });
                }
            }
        }
    }
    ResultStore {
        config: cfg,
        samples,
        points,
        sample_verdicts: vec![],
        group_verdicts: vec![],
    }
}

#[test]
fn synthetic_store_recovers_planted_boundary() {
    let store = synthetic_store();
    let a = analyze(
        &store,
        &AnalysisOptions {
            resamples: 10,
            ..Default::default()
        },
    );
    assert!(a.gaps.is_empty(), "{:?}", a.gaps);
    for r in &a.rates {
        let tc = r.critical_temperature.unwrap();
        assert!((tc - (1.0 - 4.0 * r.p)).abs() < 1e-9, "p = {}: {tc}", r.p);
        assert!(r.error.unwrap() < 1e-9);
    }
    let (pc, _) = a.threshold.unwrap();
    let tc = 1.0 - 4.0 * pc;
    assert!((tc - nishimori_temperature(3, pc).unwrap()).abs() < 1e-9);

    let only = analyze(
        &store,
        &AnalysisOptions {
            resamples: 0,
            p_grid: Some(vec![0.05]),
            ..Default::default()
        },
    );
    assert_eq!(only.rates.len(), 1);
    assert!(only.threshold.is_none() && !only.gaps.is_empty());
}

#[test]
fn unequilibrated_samples_are_flagged_and_excluded() {
    let mut store = synthetic_store();
    // twenty samples with flat bin histories except sample 7, which drifts
    let template = store.group(0.05, 8);
    let mut group = Group::default();
    for s in 0..20u64 {
        let mut line = template.samples[0].clone();
        line.sample = s;
        line.errors = 5;
        group.samples.push(line);
        for pt in template.points.iter().filter(|pt| pt.sample == 0) {
            let mut pt = pt.clone();
            pt.sample = s;
            for b in 0..8u64 {
                let drift = if s == 7 { 5.0 * b as f64 } else { 0.0 };
                let level = 10.0 + (s as f64 - 9.5) * 0.3;
                for bins in [&mut pt.energy_bins, &mut pt.chi0_bins, &mut pt.chik_bins] {
                    bins.push(1 << b, level + drift);
                }
            }
            group.points.push(pt);
        }
    }
    let (per_sample, summary) = group.verdicts();
    let failed: Vec<u64> = per_sample.iter().filter(|v| v.verdict == Verdict::Fail).map(|v| v.sample).collect();
    assert_eq!(failed, vec![7]);
    assert_eq!(summary.excluded, 1);

    store.samples.retain(|s| !(s.p == 0.05 && s.size == 8));
    store.points.retain(|pt| !(pt.p == 0.05 && pt.size == 8));
    store.samples.extend(group.samples.iter().cloned());
    store.points.extend(group.points.iter().cloned());
    store.sample_verdicts = per_sample;
    assert_eq!(store.size_data(0.05, 8).num_samples(), 19);
    assert_eq!(store.size_data(0.05, 12).num_samples(), 4);

    // clean samples are never excluded individually
    for s in &mut group.samples {
        s.errors = 0;
    }
    let (per_sample, _) = group.verdicts();
    assert!(per_sample.iter().all(|v| v.verdict == Verdict::Indeterminate));
}

fn cli() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qudit-threshold"))
}

#[test]
fn command_line_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("campaign.toml");
    std::fs::write(&config, CONFIG).unwrap();
    let store = dir.path().join("store");

    let out = cli()
        .args(["simulate", "--config"])
        .arg(&config)
        .arg("--store")
        .arg(&store)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = cli().args(["analyze", "--resamples", "10", "--store"]).arg(&store).output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bootstrap resamples = 10"));
    assert!(store.join("phase_boundary.dat").exists());

    let out = cli().args(["bounds", "--d", "2,3"]).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("0.1100278644"));

    let out = cli()
        .args(["verify", "--d", "2", "--L", "2", "--p", "0.1", "--beta", "0.8", "--sweeps", "20000"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn command_line_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, CONFIG.replace("d = 3", "d = 1")).unwrap();
    let code = |args: &[&str]| cli().args(args).output().unwrap().status.code();

    assert_eq!(code(&["simulate", "--config", bad.to_str().unwrap()]), Some(2));
    assert_eq!(code(&["verify", "--d", "3", "--L", "5", "--p", "0.1", "--beta", "1"]), Some(2));
    assert_eq!(code(&["bounds", "--d", "1"]), Some(2));
    let missing = dir.path().join("nowhere");
    assert_eq!(code(&["analyze", "--store", missing.to_str().unwrap()]), Some(3));
    assert_eq!(code(&["simulate", "--config", missing.to_str().unwrap()]), Some(3));
}
