use std::path::Path;
use std::process::Command;

use safe_universal::acc::{run_scenario, AccParams, ScenarioKind, ScenarioSettings};
use safe_universal::clf_cbf::Region;
use safe_universal::experiment::plot::PANELS;
use safe_universal::experiment::{parse_config_str, render_plots, run_experiment, ExitStatus, ExperimentConfig, CSV_COLUMNS};

const BIN: &str = env!("CARGO_BIN_EXE_safe-universal");

fn short_config(dir: &Path, scenarios: &str) -> ExperimentConfig {
    let mut config = parse_config_str(&format!(
        "scenarios = {scenarios}\n[integrator]\nhorizon = 10.0\n[output]\nrecord_runtime = false\n"
    ))
    .unwrap();
    config.output.dir = dir.to_path_buf();
    config
}

fn legend_entries(svg: &str) -> Vec<String> {
    let doc = roxmltree::Document::parse(svg).expect("well-formed SVG");
    let polylines = doc.descendants().filter(|n| n.has_tag_name("polyline")).count();
    let texts: Vec<String> = doc
        .descendants()
        .filter(|n| n.has_tag_name("text"))
        .filter_map(|n| n.text().map(str::to_string))
        .collect();
    assert!(polylines >= 1);
    texts
}

#[test]
fn experiment_writes_the_documented_layout() {
    let tmp = tempfile::tempdir().unwrap();
    let config = short_config(tmp.path(), r#"["TrueDynamics", "MismatchedDynamics"]"#);
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.status(), ExitStatus::Success);

    let params = AccParams::default();
    for label in ["TrueDynamics", "MismatchedDynamics"] {
        let dir = tmp.path().join(label);
        let mut reader = csv::Reader::from_path(dir.join("trajectory.csv")).unwrap();
        assert_eq!(reader.headers().unwrap().iter().collect::<Vec<_>>(), CSV_COLUMNS);
        let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
        assert_eq!(rows.len(), 1001);
        for row in &rows {
            let u: f64 = row[4].parse().unwrap();
            let scaled: f64 = row[5].parse().unwrap();
            assert_eq!(scaled, u / params.weight());
            assert!(row[8].parse::<Region>().is_ok(), "region {:?}", &row[8]);
        }

        let metrics: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.join("metrics.json")).unwrap()).unwrap();
        for key in ["min_h", "max_speed_error", "region_counts", "u_min", "u_max", "runtime_s", "error"] {
            assert!(metrics.get(key).is_some(), "missing {key}");
        }
        assert!(metrics["runtime_s"].is_null() && metrics["error"].is_null());
        for stem in PANELS {
            let svg = std::fs::read_to_string(dir.join("plots").join(format!("{stem}.svg"))).unwrap();
            legend_entries(&svg);
        }
    }
    let cbf = std::fs::read_to_string(tmp.path().join("comparison/cbf.svg")).unwrap();
    assert!(legend_entries(&cbf).iter().any(|t| t == "h = 0"));
}

#[test]
fn comparison_panels_carry_one_legend_entry_per_log() {
    let params = AccParams::default();
    let settings = ScenarioSettings {
        horizon: 5.0,
        ..ScenarioSettings::default()
    };
    let a = run_scenario(ScenarioKind::TrueDynamics, &params, &settings);
    let b = run_scenario(ScenarioKind::MismatchedDynamics, &params, &settings);
    let labels = ["first", "second", "third"];
    let logs = [(labels[0], &a.log), (labels[1], &b.log), (labels[2], &a.log)];
    let tmp = tempfile::tempdir().unwrap();
    let written = render_plots(&logs, &params, tmp.path()).unwrap();
    assert_eq!(written.len(), 3);
    for path in written {
        let texts = legend_entries(&std::fs::read_to_string(&path).unwrap());
        for label in labels {
            assert_eq!(texts.iter().filter(|t| *t == label).count(), 1, "{label} in {}", path.display());
        }
    }
}

#[test]
fn failed_scenario_still_reports_metrics() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = short_config(tmp.path(), r#"["GpLearned"]"#);
    config.gp.dataset = Some(tmp.path().join("missing.csv"));
    let report = run_experiment(&config).unwrap();
    assert_eq!(report.status(), ExitStatus::ScenarioError);
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("GpLearned/metrics.json")).unwrap()).unwrap();
    assert!(metrics["error"].as_str().unwrap().contains("missing.csv"));
}

#[test]
fn default_config_round_trips() {
    let config = ExperimentConfig::default();
    assert_eq!(parse_config_str(&config.to_toml_string().unwrap()).unwrap(), config);
}

#[test]
fn cli_exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.toml");
    std::fs::write(&bad, "[integrtor]\ndt = 0.01\n").unwrap();
    let out = Command::new(BIN).args(["run", "--config"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("did you mean `integrator`"));

    let out = Command::new(BIN).args(["run", "--scenario", "Bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));

    let out = Command::new(BIN).args(["verify", "--instances", "500"]).output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("max deviation"));

    let cfg = tmp.path().join("short.toml");
    std::fs::write(&cfg, "scenarios = [\"TrueDynamics\"]\n[integrator]\nhorizon = 2.0\n").unwrap();
    let out_dir = tmp.path().join("env-out");
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .env("SAFE_UNIVERSAL_OUT", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out_dir.join("TrueDynamics/trajectory.csv").exists());

    let flag_dir = tmp.path().join("flag-out");
    let out = Command::new(BIN)
        .args(["run", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&flag_dir)
        .env("SAFE_UNIVERSAL_OUT", &out_dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(flag_dir.join("TrueDynamics/metrics.json").exists());

    std::fs::write(&cfg, "scenarios = [\"GpLearned\"]\n[gp]\ndataset = \"/nonexistent/data.csv\"\n").unwrap();
    let out = Command::new(BIN).args(["run", "--config"]).arg(&cfg).arg("--out").arg(tmp.path().join("fail")).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(tmp.path().join("fail/GpLearned/metrics.json").exists());
}
