//! File formats, config validation, aggregation and exit codes of the
//! `generate` / `run` / `report` commands.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use c2al::cli::{cmd_generate, cmd_report, cmd_run, RunSummary, ScenarioConfig};

fn tiny_config_json(output_dir: &Path) -> String {
    serde_json::json!({
        "dataset": {
            "n_instances": 600,
            "n_features": 10,
            "n_informative": 3,
            "n_redundant": 3,
            "class_sep": 0.9,
            "seed": 21
        },
        "partition": { "common_count": 0, "seed": 3 },
        "split": { "warm_size": 60, "test_fraction": 0.25, "seed": 5 },
        "round": {
            "q": 2,
            "n": 10,
            "coordinator": 0,
            "sampling_fn": "uncertainty",
            "collaborators": [
                {
                    "kind": { "name": "linear_logistic" },
                    "band": { "low": 0.35, "high": 0.95 },
                    "min_labels": 10,
                    "base_instances": 50
                },
                {
                    "kind": { "name": "cart", "max_depth": 4 },
                    "band": { "low": 0.35, "high": 0.95 },
                    "min_labels": 10,
                    "base_instances": 50
                }
            ]
        },
        "seeds": [1, 2],
        "output_dir": output_dir,
        "importance_repeats": 5
    })
    .to_string()
}

fn tiny_config(dir: &Path) -> ScenarioConfig {
    let path = dir.join("tiny.json");
    fs::write(&path, tiny_config_json(&dir.join("out"))).unwrap();
    ScenarioConfig::from_path(&path).unwrap()
}

fn read(path: &Path) -> String {
    fs::read_to_string(path).unwrap_or_else(|e| panic!("read {}: {e}", path.display()))
}

#[test]
fn generate_writes_dataset_with_sidecar_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());

    let first = cmd_generate(&config, Some(&tmp.path().join("gen"))).unwrap();
    let csv = read(&first);
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "id,label,f0,f1,f2,f3,f4,f5,f6,f7,f8,f9"
    );
    assert_eq!(csv.lines().count(), 601);

    let second = cmd_generate(&config, Some(&tmp.path().join("gen2"))).unwrap();
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());

    let sidecar: serde_json::Value =
        serde_json::from_str(&read(&tmp.path().join("gen/dataset.json"))).unwrap();
    assert_eq!(sidecar["seed"], 21);
    assert_eq!(sidecar["spec"]["n_instances"], 600);
}

#[test]
fn bundled_default_config_generates_full_scale_csv() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/solo.json");
    let config = ScenarioConfig::from_path(&path).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let csv_path = cmd_generate(&config, Some(tmp.path())).unwrap();
    let csv = read(&csv_path);
    assert_eq!(csv.lines().count(), 3001);
    assert_eq!(csv.lines().next().unwrap().split(',').count(), 22);
}

#[test]
fn odd_instance_count_names_the_field() {
    let tmp = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value =
        serde_json::from_str(&tiny_config_json(tmp.path())).unwrap();
    value["dataset"]["n_instances"] = serde_json::json!(601);
    let path = tmp.path().join("odd.json");
    fs::write(&path, value.to_string()).unwrap();
    let err = ScenarioConfig::from_path(&path).unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("n_instances"), "{err}");
}

#[test]
fn unknown_config_keys_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value =
        serde_json::from_str(&tiny_config_json(tmp.path())).unwrap();
    value["plot_style"] = serde_json::json!("dark");
    let path = tmp.path().join("unknown.json");
    fs::write(&path, value.to_string()).unwrap();
    let err = ScenarioConfig::from_path(&path).unwrap_err();
    assert!(err.is_config_error());
    assert!(err.to_string().contains("plot_style"), "{err}");
}

#[test]
fn run_outputs_have_stable_schemas() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());
    let out = tmp.path().join("run");
    let summary = cmd_run(&config, Some(&out), None, false).unwrap();

    assert_eq!(summary.seeds.len(), 2);
    for seed in [1u64, 2] {
        let seed_dir = out.join(format!("seed_{seed}"));
        let metrics = read(&seed_dir.join("metrics.csv"));
        assert_eq!(
            metrics.lines().next().unwrap(),
            "round,collaborator,model_source,auc"
        );
        // q = 2 rounds x k = 2 collaborators.
        assert_eq!(metrics.lines().count(), 1 + 4);
        let importance = read(&seed_dir.join("importance.csv"));
        assert_eq!(
            importance.lines().next().unwrap(),
            "collaborator,column,importance"
        );
        assert!(seed_dir.join("messages.jsonl").exists());
    }
    let parsed: RunSummary =
        serde_json::from_str(&read(&out.join("summary.json"))).unwrap();
    assert_eq!(parsed.per_collaborator.len(), 2);
}

#[test]
fn zero_round_run_emits_headers_only() {
    let tmp = tempfile::tempdir().unwrap();
    let mut value: serde_json::Value =
        serde_json::from_str(&tiny_config_json(tmp.path())).unwrap();
    value["round"]["q"] = serde_json::json!(0);
    let path = tmp.path().join("q0.json");
    fs::write(&path, value.to_string()).unwrap();
    let config = ScenarioConfig::from_path(&path).unwrap();

    let out = tmp.path().join("q0_run");
    let summary = cmd_run(&config, Some(&out), Some(&[1]), false).unwrap();
    let metrics = read(&out.join("seed_1/metrics.csv"));
    assert_eq!(metrics.trim_end(), "round,collaborator,model_source,auc");
    // Final AUC falls back to the round-0 base metrics.
    assert_eq!(summary.seeds[0].final_auc, summary.seeds[0].initial_auc);
}

#[test]
fn summary_config_reproduces_the_run_bit_exactly() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());
    let out = tmp.path().join("first");
    let summary = cmd_run(&config, Some(&out), None, false).unwrap();

    // Feed the echoed config back, pointed at a fresh directory.
    let echoed_path = tmp.path().join("echoed.json");
    let mut echoed = summary.config.clone();
    echoed.output_dir = tmp.path().join("second");
    fs::write(&echoed_path, serde_json::to_string_pretty(&echoed).unwrap()).unwrap();
    let reloaded = ScenarioConfig::from_path(&echoed_path).unwrap();
    let second = cmd_run(&reloaded, None, None, false).unwrap();

    for (a, b) in summary.seeds.iter().zip(&second.seeds) {
        assert_eq!(a.messages_digest, b.messages_digest);
        assert_eq!(a.final_auc, b.final_auc);
    }
    for seed in [1u64, 2] {
        let first_bytes = fs::read(out.join(format!("seed_{seed}/messages.jsonl"))).unwrap();
        let second_bytes = fs::read(
            tmp.path().join(format!("second/seed_{seed}/messages.jsonl")),
        )
        .unwrap();
        assert_eq!(first_bytes, second_bytes, "seed {seed}");
    }
}

#[test]
fn report_aggregates_match_hand_joined_recomputation() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());
    let out = tmp.path().join("run");
    cmd_run(&config, Some(&out), None, false).unwrap();
    let outputs = cmd_report(&out).unwrap();

    // Independent join: re-read the per-seed metrics files by hand.
    let mut per_key: std::collections::BTreeMap<(String, String), Vec<f64>> = Default::default();
    for seed in [1u64, 2] {
        let metrics = read(&out.join(format!("seed_{seed}/metrics.csv")));
        for line in metrics.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            per_key
                .entry((fields[1].to_string(), fields[0].to_string()))
                .or_default()
                .push(fields[3].parse().unwrap());
        }
    }
    let series = read(&outputs.auc_series);
    assert_eq!(
        series.lines().next().unwrap(),
        "collaborator,round,median,min,max"
    );
    let mut seen = 0;
    for line in series.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let values = &per_key[&(fields[0].to_string(), fields[1].to_string())];
        let mut sorted = values.clone();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let median = (sorted[0] + sorted[1]) / 2.0;
        assert_eq!(fields[2], median.to_string());
        assert_eq!(fields[3], sorted[0].to_string());
        assert_eq!(fields[4], sorted[1].to_string());
        seen += 1;
    }
    assert_eq!(seen, per_key.len());

    let bars = read(&outputs.importance_bars);
    assert_eq!(
        bars.lines().next().unwrap(),
        "collaborator,column,median,min,max"
    );
}

#[test]
fn single_seed_report_band_collapses_to_median() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());
    let out = tmp.path().join("run");
    cmd_run(&config, Some(&out), Some(&[1]), false).unwrap();
    let outputs = cmd_report(&out).unwrap();
    for line in read(&outputs.auc_series).lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[2], fields[3]);
        assert_eq!(fields[2], fields[4]);
    }
}

#[test]
fn report_on_missing_directory_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let err = cmd_report(&tmp.path().join("nope")).unwrap_err();
    assert!(matches!(err, c2al::Error::ReportInput(_)));
}

#[test]
fn debug_flag_dumps_training_matrices() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tiny_config(tmp.path());
    let out = tmp.path().join("run");
    cmd_run(&config, Some(&out), Some(&[1]), true).unwrap();
    let dump_dir = out.join("seed_1/training_matrices");
    let dumps: Vec<PathBuf> = fs::read_dir(&dump_dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    assert!(!dumps.is_empty());
    let text = read(&dumps[0]);
    let header = text.lines().next().unwrap();
    assert!(header.starts_with("x_"));
    assert!(header.ends_with(",label"));
    assert!(header.contains("col1_proba"));
}

#[test]
fn binary_exit_codes_follow_error_class() {
    let bin = env!("CARGO_BIN_EXE_c2al");
    let tmp = tempfile::tempdir().unwrap();

    // Success.
    let config_path = tmp.path().join("ok.json");
    fs::write(&config_path, tiny_config_json(&tmp.path().join("ok_out"))).unwrap();
    let status = Command::new(bin)
        .args(["run", "--config", config_path.to_str().unwrap(), "--seeds", "1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // Config error: unknown key.
    let bad_path = tmp.path().join("bad.json");
    let mut value: serde_json::Value =
        serde_json::from_str(&tiny_config_json(tmp.path())).unwrap();
    value["nope"] = serde_json::json!(1);
    fs::write(&bad_path, value.to_string()).unwrap();
    let status = Command::new(bin)
        .args(["run", "--config", bad_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Runtime error: unreachable band with a tiny attempt budget.
    let mut value: serde_json::Value =
        serde_json::from_str(&tiny_config_json(tmp.path())).unwrap();
    value["round"]["collaborators"][0]["band"] = serde_json::json!({"low": 0.99, "high": 1.0});
    value["round"]["collaborators"][0]["max_band_attempts"] = serde_json::json!(3);
    value["output_dir"] = serde_json::json!(tmp.path().join("rt_out"));
    let runtime_path = tmp.path().join("runtime.json");
    fs::write(&runtime_path, value.to_string()).unwrap();
    let status = Command::new(bin)
        .args(["run", "--config", runtime_path.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}
