//! End-to-end runs of the compiled binary on a small synthetic cohort.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const SMALL_CONFIG: &str = "\
outcome = DM
voxel_sizes = 3
quant_algorithms = unif
gray_levels = 8
reduced_set_size = 8
n_experiments = 4
n_bootstrap = 12
max_order = 2
forest_bootstrap = 12
n_splits = 4
synth_patients = 30
synth_event_rate = 0.35
synth_effect_size = 1.5
synth_dims = 8,8,6
";

fn radiomics(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_radiomics"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_ok(args: &[&str]) -> String {
    let out = radiomics(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8_lossy(&out.stdout).into_owned()
}

struct Workspace {
    _dir: tempfile::TempDir,
    config: PathBuf,
    cohort: PathBuf,
    work: PathBuf,
}

fn setup(seed: &str) -> Workspace {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("run.cfg");
    std::fs::write(&config, SMALL_CONFIG).unwrap();
    let cohort = dir.path().join("cohort");
    let work = dir.path().join("work");
    std::fs::create_dir_all(&work).unwrap();
    run_ok(&[
        "--config",
        config.to_str().unwrap(),
        "--seed",
        seed,
        "synthesize",
        "--out",
        cohort.to_str().unwrap(),
    ]);
    Workspace { _dir: dir, config, cohort, work }
}

fn run_stage(ws: &Workspace, seed: &str, stage: &str, extra: &[(&str, &Path)]) -> String {
    let mut args: Vec<String> = vec![
        "--config".into(),
        ws.config.display().to_string(),
        "--seed".into(),
        seed.into(),
        stage.into(),
        "--manifest".into(),
        ws.cohort.join("manifest.csv").display().to_string(),
    ];
    for (flag, path) in extra {
        args.push((*flag).into());
        args.push(path.display().to_string());
    }
    args.push("--out".into());
    args.push(ws.work.display().to_string());
    let refs: Vec<&str> = args.iter().map(String::as_str).collect();
    run_ok(&refs)
}

#[test]
fn full_pipeline_produces_all_artifacts() {
    let ws = setup("41");
    let features = ws.work.join("features.csv");
    run_stage(&ws, "41", "extract", &[]);
    assert!(features.is_file());
    run_stage(&ws, "41", "univariate", &[("--features", &features)]);
    run_stage(&ws, "41", "build", &[("--features", &features)]);
    run_stage(&ws, "41", "evaluate", &[("--features", &features), ("--models", &ws.work)]);
    run_stage(&ws, "41", "stratify", &[("--features", &features), ("--models", &ws.work)]);

    for name in [
        "extract_log.csv",
        "univariate.csv",
        "univariate_summary.json",
        "radiomic_model.json",
        "clinical_forest.json",
        "combined_forest.json",
        "build_summary.json",
        "evaluation.json",
        "evaluation.csv",
        "risk_groups.csv",
        "stratify_summary.json",
        "km.svg",
    ] {
        assert!(ws.work.join(name).is_file(), "missing artifact {name}");
    }

    let eval: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(ws.work.join("evaluation.json")).unwrap())
            .unwrap();
    let models = eval["models"].as_array().unwrap();
    assert_eq!(models.len(), 3);
    let names: Vec<&str> = models.iter().map(|m| m["model"].as_str().unwrap()).collect();
    assert_eq!(names, ["radiomic", "clinical", "combined"]);
}

#[test]
fn extract_rerun_hits_cache_and_is_identical() {
    let ws = setup("42");
    run_stage(&ws, "42", "extract", &[]);
    let first = std::fs::read(ws.work.join("features.csv")).unwrap();
    run_stage(&ws, "42", "extract", &[]);
    let second = std::fs::read(ws.work.join("features.csv")).unwrap();
    assert_eq!(first, second);
    let log = std::fs::read_to_string(ws.work.join("extract_log.csv")).unwrap();
    assert!(log.lines().skip(1).all(|l| l.contains(",cached,")), "log was: {log}");
}

#[test]
fn corrupt_volume_is_logged_and_the_run_continues() {
    let ws = setup("43");
    // truncate one patient's PET file so the header no longer parses
    std::fs::write(ws.cohort.join("volumes/p003_pet.rvf"), b"garbage").unwrap();
    run_stage(&ws, "43", "extract", &[]);
    let log = std::fs::read_to_string(ws.work.join("extract_log.csv")).unwrap();
    assert!(log.lines().any(|l| l.starts_with("p003,failed,")), "log was: {log}");
    let features = std::fs::read_to_string(ws.work.join("features.csv")).unwrap();
    assert!(!features.lines().any(|l| l.starts_with("p003,")));
    assert_eq!(features.lines().count(), 30, "header plus 29 surviving patients");
}

#[test]
fn invalid_inputs_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad_cfg = dir.path().join("bad.cfg");
    std::fs::write(&bad_cfg, "no_such_key = 1\n").unwrap();
    let out = radiomics(&[
        "--config",
        bad_cfg.to_str().unwrap(),
        "synthesize",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = radiomics(&[
        "extract",
        "--manifest",
        dir.path().join("missing.csv").to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}
