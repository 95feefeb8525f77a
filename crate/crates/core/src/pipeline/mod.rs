//! Configuration-driven orchestration of the full workflow: split, select,
//! tune, train, evaluate, explain, and compare, with every artifact
//! persisted under the output directory.

pub mod report;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::aspects::{
    aspect_permutation_importance, aspect_shap, build_dendrogram, cut_aspects, spearman_matrix,
};
use crate::dataset::{
    apply_preprocess, engineer_roi_features, fit_preprocess, load_csv, select_feature_set,
    stratified_repeated_kfold, stratified_split, FeatureSet, Schema, TabularDataset,
};
use crate::error::{Error, Result};
use crate::explain::{
    explain_dataset, summary_ranking, waterfall_data, BackgroundSet, Explanation,
};
use crate::importance::{permutation_importance, ranking_correlation_matrix, Metric, Ranking};
use crate::metrics::{score_probabilities, ScoreReport};
use crate::models::{train, ModelKind, ParamRecord};
use crate::selection::{forward_select, SelectionResult};
use crate::tuning::{tune, HyperparamSpace, TuneTrace};
use crate::util::rng_stream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExternalCohort {
    pub name: String,
    pub csv: PathBuf,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CvConfig {
    pub k: usize,
    pub repeats: usize,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TuneConfig {
    pub init: usize,
    pub iters: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExplainConfig {
    pub n_samples: usize,
    /// Training rows used as the marginalization background.
    pub background_size: usize,
    /// Cap on explained subjects per cohort.
    pub max_subjects: usize,
    /// Cohorts to explain: "test", "train", or an external cohort name.
    pub cohorts: Vec<String>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AspectConfig {
    pub enabled: bool,
    /// Correlation threshold H; the dendrogram is cut at distance 1 - H.
    pub threshold: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ImportanceConfig {
    pub n_repeats: usize,
    pub metric: String,
}

/// Everything a run needs; all randomness flows from `seed`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub train_csv: PathBuf,
    pub schema: PathBuf,
    #[serde(default)]
    pub external_cohorts: Vec<ExternalCohort>,
    pub feature_set: FeatureSet,
    pub model: ModelKind,
    pub feature_selection: bool,
    /// Apply ROI feature engineering to every cohort before anything else.
    pub engineer: bool,
    pub test_fraction: f64,
    pub cv: CvConfig,
    pub tune: TuneConfig,
    pub explain: ExplainConfig,
    pub aspects: AspectConfig,
    pub importance: ImportanceConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl PipelineConfig {
    /// Workable defaults for a synthetic cohort; paths must still be set.
    pub fn defaults() -> PipelineConfig {
        PipelineConfig {
            train_csv: PathBuf::from("cohort.csv"),
            schema: PathBuf::from("schema.json"),
            external_cohorts: Vec::new(),
            feature_set: FeatureSet::Fs3,
            model: ModelKind::Rforest,
            feature_selection: true,
            engineer: true,
            test_fraction: 0.2,
            cv: CvConfig { k: 10, repeats: 10 },
            tune: TuneConfig { init: 10, iters: 25 },
            explain: ExplainConfig {
                n_samples: 2048,
                background_size: 50,
                max_subjects: 40,
                cohorts: vec!["test".to_string()],
            },
            aspects: AspectConfig { enabled: true, threshold: 0.5 },
            importance: ImportanceConfig { n_repeats: 10, metric: "accuracy".to_string() },
            seed: 42,
            out_dir: PathBuf::from("run_out"),
        }
    }

    pub fn from_file(path: &Path) -> Result<PipelineConfig> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let cfg: PipelineConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("invalid config {}: {e}", path.display())))?;
        Ok(cfg)
    }

    /// Cheap validation before any computation: files exist, ranges hold.
    pub fn validate(&self) -> Result<()> {
        if !self.train_csv.exists() {
            return Err(Error::Config(format!("train csv {} not found", self.train_csv.display())));
        }
        if !self.schema.exists() {
            return Err(Error::Config(format!("schema {} not found", self.schema.display())));
        }
        for e in &self.external_cohorts {
            if !e.csv.exists() {
                return Err(Error::Config(format!(
                    "external cohort '{}' file {} not found",
                    e.name,
                    e.csv.display()
                )));
            }
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction outside (0,1)".into()));
        }
        if self.cv.k < 2 || self.cv.repeats == 0 {
            return Err(Error::Config("cv needs k >= 2 and repeats >= 1".into()));
        }
        if self.tune.init < 2 {
            return Err(Error::Config("tuning needs at least 2 initial evaluations".into()));
        }
        if !(self.aspects.threshold > 0.0 && self.aspects.threshold <= 1.0) {
            return Err(Error::Config("aspect threshold outside (0,1]".into()));
        }
        self.importance.metric.parse::<Metric>()?;
        Ok(())
    }
}

/// Per-cohort evaluation plus pointers to every persisted artifact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub model: ModelKind,
    pub feature_set: FeatureSet,
    pub seed: u64,
    pub cv_mean_accuracy: f64,
    pub cv_std_accuracy: f64,
    pub best_params: ParamRecord,
    pub training_columns: Vec<String>,
    pub selection: Option<SelectionResult>,
    pub cohort_scores: Vec<(String, ScoreReport)>,
    pub artifacts: BTreeMap<String, String>,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Data(format!("stage '{name}': {e}")))
}

fn write_artifact(
    artifacts: &mut BTreeMap<String, String>,
    dir: &Path,
    name: &str,
    content: &str,
) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, content)?;
    artifacts.insert(name.to_string(), path.display().to_string());
    Ok(())
}

/// Loads one cohort file and applies the same transformations as the
/// training cohort: engineering, feature-set filter, column subset.
fn prepare_cohort(
    csv: &Path,
    schema: &Schema,
    config: &PipelineConfig,
    columns: &[String],
) -> Result<TabularDataset> {
    let raw = load_csv(csv, schema)?;
    let engineered = if config.engineer { engineer_roi_features(&raw)? } else { raw };
    let fs = select_feature_set(&engineered, config.feature_set)?;
    fs.select_columns(columns)
}

/// Runs the full workflow and persists every artifact under
/// `config.out_dir`. External cohorts are only read after the trained model
/// artifact is on disk, so they cannot influence selection, tuning,
/// preprocessing, or training.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunReport> {
    config.validate()?;
    fs::create_dir_all(&config.out_dir)?;
    let dir = config.out_dir.clone();
    let mut artifacts = BTreeMap::new();
    write_artifact(&mut artifacts, &dir, "config.json", &serde_json::to_string_pretty(config)?)?;

    // ingest + engineer + feature set
    let schema = stage("load", Schema::from_file(&config.schema))?;
    let raw = stage("load", load_csv(&config.train_csv, &schema))?;
    let engineered =
        if config.engineer { stage("engineer", engineer_roi_features(&raw))? } else { raw };
    let fs_ds = stage("feature_set", select_feature_set(&engineered, config.feature_set))?;

    // split
    let split = stage("split", stratified_split(&fs_ds, config.test_fraction, config.seed))?;
    let train_all = fs_ds.subset_rows(&split.train);
    let test_all = fs_ds.subset_rows(&split.test);

    // forward selection over MRI columns of the training partition
    let selection = if config.feature_selection {
        Some(stage("select", forward_select(&train_all, config.model, config.seed))?)
    } else {
        None
    };
    let columns: Vec<String> = match &selection {
        Some(sel) => fs_ds
            .columns
            .iter()
            .filter(|c| !c.role.is_mri() || sel.selected.contains(&c.name))
            .map(|c| c.name.clone())
            .collect(),
        None => fs_ds.column_names(),
    };
    if let Some(sel) = &selection {
        write_artifact(&mut artifacts, &dir, "selection.json", &sel.to_json()?)?;
    }
    let train_ds = stage("select", train_all.select_columns(&columns))?;
    let test_ds = stage("select", test_all.select_columns(&columns))?;

    // tune on the training partition
    let space = HyperparamSpace::for_kind(config.model, train_ds.n_cols());
    let fold_plan = stage(
        "tune",
        stratified_repeated_kfold(&train_ds, config.cv.k, config.cv.repeats, config.seed),
    )?;
    let trace: TuneTrace = stage(
        "tune",
        tune(
            config.model,
            &train_ds,
            &space,
            &fold_plan,
            config.tune.init,
            config.tune.iters,
            config.seed,
        ),
    )?;
    write_artifact(&mut artifacts, &dir, "tune_trace.jsonl", &trace.to_jsonl()?)?;
    let best = trace.best_entry().clone();

    // final fit on the full training partition
    let pre = fit_preprocess(&train_ds);
    let train_z = stage("train", apply_preprocess(&pre, &train_ds))?;
    let model = stage("train", train(config.model, &best.params, &train_z, config.seed))?;
    write_artifact(&mut artifacts, &dir, "model.json", &model.to_json()?)?;
    write_artifact(&mut artifacts, &dir, "preprocess.json", &serde_json::to_string_pretty(&pre)?)?;

    // evaluation: held-out first, then externals (loaded only now)
    let mut cohort_scores: Vec<(String, ScoreReport)> = Vec::new();
    let test_z = stage("evaluate", apply_preprocess(&pre, &test_ds))?;
    let proba = stage("evaluate", model.predict_proba(&test_z))?;
    cohort_scores.push(("test".to_string(), score_probabilities(&test_z.labels, &proba)?));
    let mut external_sets: Vec<(String, TabularDataset)> = Vec::new();
    for ext in &config.external_cohorts {
        let cohort = stage("evaluate", prepare_cohort(&ext.csv, &schema, config, &columns))?;
        let cohort_z = stage("evaluate", apply_preprocess(&pre, &cohort))?;
        let proba = stage("evaluate", model.predict_proba(&cohort_z))?;
        cohort_scores
            .push((ext.name.clone(), score_probabilities(&cohort_z.labels, &proba)?));
        external_sets.push((ext.name.clone(), cohort_z));
    }
    write_artifact(&mut artifacts, &dir, "scores.csv", &report::scores_csv(&cohort_scores))?;

    // explanations
    let background = {
        let rows: Vec<usize> =
            (0..train_z.n_rows().min(config.explain.background_size)).collect();
        BackgroundSet::from_dataset(&train_z.subset_rows(&rows), &model)?
    };
    let n_samples = config.explain.n_samples.max(2 * train_z.n_cols() + 2);
    let mut first_explained: Option<(Vec<Explanation>, Vec<String>)> = None;
    for cohort_name in &config.explain.cohorts {
        let target = match cohort_name.as_str() {
            "train" => train_z.clone(),
            "test" => test_z.clone(),
            other => match external_sets.iter().find(|(n, _)| n == other) {
                Some((_, ds)) => ds.clone(),
                None => {
                    log::warn!("explain cohort '{other}' unknown; skipping");
                    continue;
                }
            },
        };
        let rows: Vec<usize> = (0..target.n_rows().min(config.explain.max_subjects)).collect();
        let target = target.subset_rows(&rows);
        let explanations = stage(
            "explain",
            explain_dataset(&model, &background, &target, n_samples, config.seed),
        )?;
        let docs: Vec<String> = explanations
            .iter()
            .map(|e| e.to_json())
            .collect::<Result<_>>()?;
        write_artifact(
            &mut artifacts,
            &dir,
            &format!("explanations_{cohort_name}.json"),
            &format!("[\n{}\n]", docs.join(",\n")),
        )?;
        if first_explained.is_none() {
            first_explained = Some((explanations, target.subject_ids.clone()));
        }
    }

    // summary + waterfalls from the first explained cohort
    let mut rankings: Vec<Ranking> = Vec::new();
    if let Some((explanations, subject_ids)) = &first_explained {
        if explanations.is_empty() {
            log::info!("no explanations produced; skipping summary emission");
        } else {
            let ranking = summary_ranking(explanations)?;
            write_artifact(&mut artifacts, &dir, "summary.csv", &ranking.to_csv())?;
            write_artifact(
                &mut artifacts,
                &dir,
                "summary.svg",
                &report::summary_svg(&ranking, subject_ids),
            )?;
            let mut features = Vec::new();
            let mut scores = Vec::new();
            for e in &ranking.entries {
                features.push(e.feature.clone());
                scores.push(e.mean_abs_phi);
            }
            rankings.push(Ranking::new("shap", features, Some(scores))?);
            for (i, expl) in explanations.iter().take(2).enumerate() {
                let wf = waterfall_data(expl);
                let id = &subject_ids[i];
                write_artifact(
                    &mut artifacts,
                    &dir,
                    &format!("waterfall_{}.svg", report::safe_file_stem(id)),
                    &report::waterfall_svg(&wf, id),
                )?;
            }
        }
    }

    // importance comparisons on the held-out partition
    let metric: Metric = config.importance.metric.parse()?;
    let perm = stage(
        "compare",
        permutation_importance(&model, &test_z, metric, config.importance.n_repeats, config.seed),
    )?;
    rankings.push(perm.ranking("permutation"));
    write_artifact(&mut artifacts, &dir, "permutation_importance.json", &serde_json::to_string_pretty(&perm)?)?;
    if config.model.is_tree_based() {
        let imp = model.natural_importance()?;
        let mut order: Vec<usize> = (0..imp.len()).collect();
        order.sort_by(|&a, &b| imp[b].partial_cmp(&imp[a]).unwrap().then(a.cmp(&b)));
        rankings.push(Ranking::new(
            "natural",
            order.iter().map(|&j| model.feature_names[j].clone()).collect(),
            Some(order.iter().map(|&j| imp[j]).collect()),
        )?);
    }
    if config.model == ModelKind::Logreg {
        let (coefs, order) = model.log_odds()?;
        rankings.push(Ranking::new(
            "log_odds",
            order.iter().map(|&j| coefs[j].0.clone()).collect(),
            Some(order.iter().map(|&j| coefs[j].1.abs()).collect()),
        )?);
    }
    write_artifact(&mut artifacts, &dir, "rankings.json", &serde_json::to_string_pretty(&rankings)?)?;
    if rankings.len() >= 2 {
        let matrix = ranking_correlation_matrix(&rankings)?;
        write_artifact(&mut artifacts, &dir, "ranking_correlation.csv", &matrix.to_csv())?;
        write_artifact(&mut artifacts, &dir, "ranking_correlation.json", &serde_json::to_string_pretty(&matrix)?)?;
    }

    // aspect consolidation on the training features
    if config.aspects.enabled {
        let rho = spearman_matrix(train_ds.values.view());
        let dend = stage("aspects", build_dendrogram(&rho, &train_ds.column_names()))?;
        let partition = stage("aspects", cut_aspects(&dend, config.aspects.threshold))?;
        write_artifact(&mut artifacts, &dir, "aspects.json", &partition.to_json()?)?;
        let aspect_perm = stage(
            "aspects",
            aspect_permutation_importance(
                &model,
                &test_z,
                &partition,
                metric,
                config.importance.n_repeats,
                config.seed,
            ),
        )?;
        write_artifact(&mut artifacts, &dir, "aspect_importance.json", &serde_json::to_string_pretty(&aspect_perm)?)?;
        if test_z.n_rows() > 0 {
            let x: Vec<f64> = test_z.values.row(0).to_vec();
            let shap = stage(
                "aspects",
                aspect_shap(&model, &background, &x, &partition, n_samples, config.seed),
            )?;
            write_artifact(&mut artifacts, &dir, "aspect_shap.json", &shap.to_json()?)?;
        }
    }

    let report = RunReport {
        model: config.model,
        feature_set: config.feature_set,
        seed: config.seed,
        cv_mean_accuracy: best.mean_accuracy,
        cv_std_accuracy: best.std_accuracy,
        best_params: best.params,
        training_columns: columns,
        selection,
        cohort_scores,
        artifacts: artifacts.clone(),
    };
    let mut artifacts2 = artifacts;
    write_artifact(&mut artifacts2, &dir, "report.json", &serde_json::to_string_pretty(&report)?)?;
    Ok(report)
}

/// Re-emits renderable outputs (CSV/SVG) from the artifacts of a previous
/// run directory.
pub fn emit_reports(run_dir: &Path, formats: &[String]) -> Result<Vec<PathBuf>> {
    let report_path = run_dir.join("report.json");
    let report: RunReport = serde_json::from_str(&fs::read_to_string(&report_path)?)?;
    let mut written = Vec::new();
    for format in formats {
        match format.as_str() {
            "csv" => {
                let p = run_dir.join("scores.csv");
                fs::write(&p, report::scores_csv(&report.cohort_scores))?;
                written.push(p);
            }
            "svg" => {
                // regenerate from the persisted explanations of the first cohort
                for (name, path) in &report.artifacts {
                    if !name.starts_with("explanations_") {
                        continue;
                    }
                    // prefer the run directory; stored paths may be stale if
                    // the directory moved
                    let local = run_dir.join(name);
                    let text = if local.exists() {
                        fs::read_to_string(&local)?
                    } else {
                        fs::read_to_string(path)?
                    };
                    let docs: Vec<serde_json::Value> = serde_json::from_str(&text)?;
                    let explanations: Vec<Explanation> = docs
                        .iter()
                        .map(|d| {
                            let entries = d["entries"].as_array().cloned().unwrap_or_default();
                            Explanation {
                                base_value: d["base_value"].as_f64().unwrap_or(0.0),
                                prediction: d["prediction"].as_f64().unwrap_or(0.0),
                                names: entries
                                    .iter()
                                    .map(|e| e["feature"].as_str().unwrap_or("").to_string())
                                    .collect(),
                                phi: entries
                                    .iter()
                                    .map(|e| e["phi"].as_f64().unwrap_or(0.0))
                                    .collect(),
                                feature_values: entries
                                    .iter()
                                    .map(|e| e["value"].as_f64())
                                    .collect(),
                                mask_size: entries.len(),
                            }
                        })
                        .collect();
                    if explanations.is_empty() {
                        log::info!("no explanations in {name}; skipping summary");
                        continue;
                    }
                    let ranking = summary_ranking(&explanations)?;
                    let ids: Vec<String> =
                        (0..explanations.len()).map(|i| format!("row{i}")).collect();
                    let p = run_dir.join("summary.svg");
                    fs::write(&p, report::summary_svg(&ranking, &ids))?;
                    written.push(p);
                    break;
                }
            }
            other => return Err(Error::Config(format!("unknown report format '{other}'"))),
        }
    }
    Ok(written)
}

/// Convenience: seeds, file generation, and a full run for tests and the
/// `run` subcommand on synthetic data.
pub fn write_synthetic_cohort(
    dir: &Path,
    config: &crate::dataset::SyntheticConfig,
    seed: u64,
    stem: &str,
) -> Result<(PathBuf, PathBuf)> {
    let (ds, truth) = crate::dataset::generate_synthetic(config, seed)?;
    fs::create_dir_all(dir)?;
    let csv = dir.join(format!("{stem}.csv"));
    let schema_path = dir.join(format!("{stem}.schema.json"));
    crate::dataset::save_csv(&ds, &csv, "diagnosis")?;
    let schema = Schema::describe(&ds, "diagnosis");
    crate::dataset::save_schema(&schema, &schema_path)?;
    fs::write(dir.join(format!("{stem}.truth.json")), serde_json::to_string_pretty(&truth)?)?;
    Ok((csv, schema_path))
}

// keep a compile-time handle on rng_stream for seed plumbing helpers
#[allow(dead_code)]
fn _seed_helper(seed: u64) -> rand_chacha::ChaCha8Rng {
    rng_stream(seed, &[0])
}
