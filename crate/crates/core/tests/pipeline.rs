//! End-to-end pipeline runs on synthetic cohorts: reporting, determinism,
//! and the external-cohort leakage guard.

use std::fs;
use std::path::Path;

use tabsight::dataset::{CohortShift, FeatureSet, InformativeRoi, SyntheticConfig};
use tabsight::models::ModelKind;
use tabsight::pipeline::{
    emit_reports, run_pipeline, AspectConfig, CvConfig, ExplainConfig, ExternalCohort,
    ImportanceConfig, PipelineConfig, TuneConfig, write_synthetic_cohort,
};

fn synthetic_config() -> SyntheticConfig {
    SyntheticConfig {
        n_subjects: 160,
        class_balance: 0.5,
        n_roi_pairs: 3,
        n_unpaired: 1,
        informative_rois: vec![InformativeRoi { index: 1, effect: 2.5 }],
        lr_correlation: 0.9,
        n_cognitive: 2,
        cognitive_effect: 1.2,
        genetic_effect: 0.2,
        missing_rate: 0.02,
        shift: None,
    }
}

fn pipeline_config(dir: &Path) -> PipelineConfig {
    let (train_csv, schema) =
        write_synthetic_cohort(dir, &synthetic_config(), 77, "train").unwrap();
    let mut ext_cfg = synthetic_config();
    ext_cfg.n_subjects = 60;
    ext_cfg.shift = Some(CohortShift { roi_shift: 0.4, cognitive_shift: 0.2, class_balance: Some(0.6) });
    let (ext_csv, _) = write_synthetic_cohort(dir, &ext_cfg, 78, "external_a").unwrap();

    PipelineConfig {
        train_csv,
        schema,
        external_cohorts: vec![ExternalCohort { name: "ext_a".to_string(), csv: ext_csv }],
        feature_set: FeatureSet::Fs3,
        model: ModelKind::Logreg,
        feature_selection: true,
        engineer: true,
        test_fraction: 0.2,
        cv: CvConfig { k: 3, repeats: 1 },
        tune: TuneConfig { init: 3, iters: 2 },
        explain: ExplainConfig {
            n_samples: 96,
            background_size: 10,
            max_subjects: 6,
            cohorts: vec!["test".to_string()],
        },
        aspects: AspectConfig { enabled: true, threshold: 0.5 },
        importance: ImportanceConfig { n_repeats: 3, metric: "accuracy".to_string() },
        seed: 5,
        out_dir: dir.join("out"),
    }
}

#[test]
fn easy_cohort_beats_the_no_information_rate() {
    let tmp = tempfile::tempdir().unwrap();
    let config = pipeline_config(tmp.path());
    let report = run_pipeline(&config).unwrap();

    let (name, test_scores) = &report.cohort_scores[0];
    assert_eq!(name, "test");
    assert!(
        test_scores.acc > test_scores.no_information_rate,
        "accuracy {} vs NIR {}",
        test_scores.acc,
        test_scores.no_information_rate
    );
    assert!(report.cv_mean_accuracy > 0.7);

    // every artifact named in the report exists on disk
    for (name, path) in &report.artifacts {
        assert!(Path::new(path).exists(), "missing artifact {name} at {path}");
    }
    for required in [
        "config.json",
        "model.json",
        "tune_trace.jsonl",
        "selection.json",
        "scores.csv",
        "summary.csv",
        "summary.svg",
        "rankings.json",
        "ranking_correlation.csv",
        "aspects.json",
        "aspect_importance.json",
    ] {
        assert!(report.artifacts.contains_key(required), "artifact {required} not recorded");
    }

    // trace length honors the budget
    let trace = fs::read_to_string(&report.artifacts["tune_trace.jsonl"]).unwrap();
    assert_eq!(trace.lines().filter(|l| !l.trim().is_empty()).count(), 5);

    // emit_reports regenerates files from artifacts
    let written = emit_reports(&config.out_dir, &["csv".to_string(), "svg".to_string()]).unwrap();
    assert!(!written.is_empty());
}

#[test]
fn rerun_with_identical_config_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = pipeline_config(tmp.path());
    config.out_dir = tmp.path().join("run1");
    run_pipeline(&config).unwrap();
    let mut config2 = config.clone();
    config2.out_dir = tmp.path().join("run2");
    run_pipeline(&config2).unwrap();

    for name in ["model.json", "scores.csv", "tune_trace.jsonl", "summary.csv", "rankings.json"] {
        let a = fs::read(config.out_dir.join(name)).unwrap();
        let b = fs::read(config2.out_dir.join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }
    // report.json differs only in artifact paths; compare with paths masked
    let mask = |dir: &Path| {
        fs::read_to_string(dir.join("report.json"))
            .unwrap()
            .replace(&dir.display().to_string(), "OUT")
    };
    assert_eq!(mask(&config.out_dir), mask(&config2.out_dir));
}

#[test]
fn poisoned_external_cohort_never_touches_the_model() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = pipeline_config(tmp.path());
    config.out_dir = tmp.path().join("clean");
    run_pipeline(&config).unwrap();
    let clean_model = fs::read(config.out_dir.join("model.json")).unwrap();

    // poison the external cohort file with adversarial values
    let ext = &config.external_cohorts[0].csv;
    let text = fs::read_to_string(ext).unwrap();
    let mut lines: Vec<String> = text.lines().map(|l| l.to_string()).collect();
    for line in lines.iter_mut().skip(1) {
        let mut fields: Vec<&str> = line.split(',').collect();
        let poisoned = "999999";
        let n = fields.len();
        fields[1] = poisoned;
        fields[n - 2] = poisoned;
        *line = fields.join(",");
    }
    fs::write(ext, lines.join("\n") + "\n").unwrap();

    let mut config2 = config.clone();
    config2.out_dir = tmp.path().join("poisoned");
    run_pipeline(&config2).unwrap();
    let poisoned_model = fs::read(config2.out_dir.join("model.json")).unwrap();
    assert_eq!(clean_model, poisoned_model, "external data leaked into training");
}

#[test]
fn preprocessing_statistics_are_refit_per_cv_fold() {
    use tabsight::dataset::{fit_preprocess, stratified_repeated_kfold, generate_synthetic};
    let (ds, _) = generate_synthetic(&synthetic_config(), 31).unwrap();
    let ds = tabsight::dataset::engineer_roi_features(&ds).unwrap();
    let plan = stratified_repeated_kfold(&ds, 4, 1, 3).unwrap();
    let mut fold_means = Vec::new();
    for f in 0..4 {
        let (train_rows, _) = plan.fold(0, f);
        let params = fit_preprocess(&ds.subset_rows(&train_rows));
        fold_means.push(params.mean);
    }
    // distinct training folds produce distinct statistics: the pipeline has
    // no global pre-fit to fall back on
    for f in 1..4 {
        assert_ne!(fold_means[0], fold_means[f], "fold {f} statistics identical to fold 0");
    }
}

#[test]
fn missing_file_fails_validation_before_any_computation() {
    let tmp = tempfile::tempdir().unwrap();
    let mut config = pipeline_config(tmp.path());
    config.train_csv = tmp.path().join("nope.csv");
    config.out_dir = tmp.path().join("never");
    let err = run_pipeline(&config).unwrap_err();
    assert!(matches!(err, tabsight::Error::Config(_)));
    assert!(!config.out_dir.exists(), "output directory created despite invalid config");
}
