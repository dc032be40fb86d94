//! End-to-end tests of the `stringgp` binary: every subcommand is run as a
//! child process against small configs and its file outputs are checked for
//! shape, determinism, and error behavior.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

use stringgp_harness::config::{
    DatasetRef, ExperimentConfig, FitConfig, KernelEvalConfig, KernelSpec, ModelConfig,
    ModelSpec, NoiseKind, SampleConfig, SearchConfig, SplitPolicy, StringSpec, SCHEMA_VERSION,
};
use stringgp_harness::data::GridSpec;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stringgp"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn stringgp");
    assert!(
        out.status.success(),
        "stringgp {args:?} failed:\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr),
    );
    out
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap()).unwrap();
}

fn read_csv(path: &Path) -> (String, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default().to_string();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

fn se_spec() -> KernelSpec {
    KernelSpec::new(
        "squared_exponential",
        &[("variance", 1.0), ("length_scale", 0.3)],
    )
}

#[test]
fn sample_outputs_are_seed_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("sample.json");
    write_json(
        &cfg_path,
        &SampleConfig {
            schema: SCHEMA_VERSION,
            string: StringSpec::uniform(vec![0.0, 0.5, 1.0], se_spec()),
            grid: GridSpec::Line {
                lo: 0.0,
                hi: 1.0,
                step: 0.05,
            },
            draws: 3,
            seed: 7,
        },
    );

    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let out_c = dir.path().join("c");
    let cfg = cfg_path.to_str().unwrap();
    run_ok(&["sample", "--config", cfg, "--out-dir", out_a.to_str().unwrap()]);
    run_ok(&["sample", "--config", cfg, "--out-dir", out_b.to_str().unwrap()]);
    run_ok(&[
        "sample",
        "--config",
        cfg,
        "--out-dir",
        out_c.to_str().unwrap(),
        "--seed",
        "8",
    ]);

    let bytes_a = std::fs::read(out_a.join("samples.csv")).unwrap();
    let bytes_b = std::fs::read(out_b.join("samples.csv")).unwrap();
    let bytes_c = std::fs::read(out_c.join("samples.csv")).unwrap();
    assert_eq!(bytes_a, bytes_b, "same seed must reproduce samples.csv");
    assert_ne!(bytes_a, bytes_c, "--seed must override the config seed");

    let (header, rows) = read_csv(&out_a.join("samples.csv"));
    assert_eq!(header, "time,z,z_prime,string_index,draw_id");
    // 21 grid points x 3 draws.
    assert_eq!(rows.len(), 63);
    for row in &rows {
        // String indices are 1-based, matching the boundary times a_0..a_K.
        let idx: usize = row[3].parse().unwrap();
        assert!(
            (1..=2).contains(&idx),
            "string_index must address one of the two strings, got {idx}"
        );
    }
}

#[test]
fn kernel_eval_grid_is_symmetric_in_value() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("keval.json");
    write_json(
        &cfg_path,
        &KernelEvalConfig {
            schema: SCHEMA_VERSION,
            model: ModelSpec::String(StringSpec::uniform(vec![0.0, 0.5, 1.0], se_spec())),
            grid: GridSpec::Line {
                lo: 0.0,
                hi: 1.0,
                step: 0.25,
            },
        },
    );
    run_ok(&[
        "kernel-eval",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);

    let (header, rows) = read_csv(&dir.path().join("kernel.csv"));
    assert_eq!(header, "x,y,value,dvalue_dx,dvalue_dy,d2value_dxdy");
    assert_eq!(rows.len(), 25, "5x5 grid");
    let mut value = BTreeMap::new();
    for row in &rows {
        let x: f64 = row[0].parse().unwrap();
        let y: f64 = row[1].parse().unwrap();
        let v: f64 = row[2].parse().unwrap();
        value.insert((format!("{x:.3}"), format!("{y:.3}")), v);
    }
    for ((x, y), v) in &value {
        let mirrored = value[&(y.clone(), x.clone())];
        assert!(
            (v - mirrored).abs() <= 1e-12 * v.abs().max(1.0),
            "covariance must be symmetric: k({x},{y})={v} vs k({y},{x})={mirrored}"
        );
    }
}

fn fit_config(search: Option<SearchConfig>, params: Option<BTreeMap<String, f64>>) -> FitConfig {
    FitConfig {
        schema: SCHEMA_VERSION,
        dataset: DatasetRef::Preset {
            preset: "f0".into(),
            step: Some(1.0 / 30.0),
        },
        model: ModelSpec::Kernel(se_spec()),
        noise: NoiseKind::Homoskedastic,
        search,
        params,
        seed: 5,
        predict_grid: Some(GridSpec::Line {
            lo: 0.0,
            hi: 1.0,
            step: 0.1,
        }),
    }
}

#[test]
fn fit_writes_searched_parameters() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("fit.json");
    write_json(
        &cfg_path,
        &fit_config(
            Some(SearchConfig {
                restarts: Some(1),
                max_evals: Some(60),
                ..SearchConfig::default()
            }),
            None,
        ),
    );
    run_ok(&[
        "fit",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);

    let text = std::fs::read_to_string(dir.path().join("fit.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let params = parsed["params"].as_object().unwrap();
    let keys: Vec<&str> = params.keys().map(String::as_str).collect();
    assert_eq!(keys, ["length_scale", "noise_variance", "variance"]);
    assert!(parsed["log_marginal"].as_f64().unwrap().is_finite());
    assert_eq!(parsed["restarts"].as_array().unwrap().len(), 1);
}

#[test]
fn predict_with_explicit_params_skips_search() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("predict.json");
    let params: BTreeMap<String, f64> = [
        ("variance".to_string(), 1.0),
        ("length_scale".to_string(), 0.1),
        ("noise_variance".to_string(), 1e-4),
    ]
    .into();
    write_json(&cfg_path, &fit_config(None, Some(params)));
    run_ok(&[
        "predict",
        "--config",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);

    let (header, rows) = read_csv(&dir.path().join("predictions.csv"));
    assert_eq!(header, "x,mean,latent_std,predictive_std,lo,hi");
    assert_eq!(rows.len(), 11);
    for row in &rows {
        let mean: f64 = row[1].parse().unwrap();
        let latent: f64 = row[2].parse().unwrap();
        let predictive: f64 = row[3].parse().unwrap();
        let lo: f64 = row[4].parse().unwrap();
        let hi: f64 = row[5].parse().unwrap();
        assert!(latent >= 0.0 && predictive >= latent);
        assert!(lo <= mean && mean <= hi);
    }
}

#[test]
fn experiment_and_report_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("exp.json");
    write_json(
        &cfg_path,
        &ExperimentConfig {
            schema: SCHEMA_VERSION,
            name: "tiny".into(),
            dataset: DatasetRef::Preset {
                preset: "f0".into(),
                step: Some(1.0 / 30.0),
            },
            split: SplitPolicy::Extrapolate {
                train_lo: 0.0,
                train_hi: 0.8,
            },
            replications: 1,
            seed: 11,
            noise_sigma: Some(0.01),
            curves: false,
            models: vec![ModelConfig {
                name: "se".into(),
                model: ModelSpec::Kernel(se_spec()),
                noise: NoiseKind::Homoskedastic,
                search: Some(SearchConfig {
                    restarts: Some(1),
                    max_evals: Some(60),
                    ..SearchConfig::default()
                }),
            }],
        },
    );

    let out = dir.path().join("out");
    run_ok(&[
        "experiment",
        cfg_path.to_str().unwrap(),
        "--out-dir",
        out.to_str().unwrap(),
    ]);
    let report_dir = out.join("tiny");
    for file in ["report.json", "metrics.csv", "aggregates.csv"] {
        assert!(report_dir.join(file).exists(), "missing {file}");
    }

    // Re-emitting the report from its JSON must reproduce the CSVs.
    let re_dir = dir.path().join("re");
    run_ok(&[
        "report",
        report_dir.join("report.json").to_str().unwrap(),
        "--out-dir",
        re_dir.to_str().unwrap(),
    ]);
    let a = std::fs::read(report_dir.join("metrics.csv")).unwrap();
    let b = std::fs::read(re_dir.join("metrics.csv")).unwrap();
    assert_eq!(a, b, "report re-emission must be byte-stable");
}

#[test]
fn unknown_preset_fails_with_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args([
            "experiment",
            "no-such-preset",
            "--out-dir",
            dir.path().to_str().unwrap(),
        ])
        .output()
        .expect("spawn stringgp");
    assert!(!out.status.success());
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("error:"), "stderr was: {stderr}");
}
