//! tabsight command line: synthetic cohorts, stage-by-stage tools, and the
//! full configured pipeline.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tabsight::aspects::{
    aspect_permutation_importance, build_dendrogram, cut_aspects, spearman_matrix,
};
use tabsight::dataset::{
    apply_preprocess, engineer_roi_features, fit_preprocess, load_csv, save_csv, save_schema,
    select_feature_set, stratified_repeated_kfold, FeatureSet, PreprocessParams, Schema,
    SyntheticConfig, TabularDataset,
};
use tabsight::error::Error;
use tabsight::explain::{
    explain_dataset, summary_ranking, waterfall_data, BackgroundSet,
};
use tabsight::importance::{ranking_correlation_matrix, Metric, Ranking};
use tabsight::metrics::score_probabilities;
use tabsight::models::{train, ModelKind, ParamRecord, TrainedModel};
use tabsight::pipeline::{emit_reports, report, run_pipeline, PipelineConfig};
use tabsight::selection::forward_select;
use tabsight::tuning::{tune_resume, HyperparamSpace, TuneTrace};

#[derive(Parser)]
#[command(name = "tabsight", version, about = "Interpretable ML pipeline for tabular cohort data")]
struct Cli {
    /// Worker threads (0 = all cores).
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// Cohort CSV (first column subject id, header row).
    #[arg(long)]
    data: PathBuf,
    /// Sidecar schema JSON mapping columns to roles.
    #[arg(long)]
    schema: PathBuf,
    /// Apply ROI feature engineering after loading.
    #[arg(long, default_value_t = false)]
    engineer: bool,
    /// Optional feature-set filter (fs1|fs2|fs3).
    #[arg(long)]
    feature_set: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic cohort (CSV + schema + ground truth).
    Synth {
        /// SyntheticConfig JSON; omit for defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// File stem for the generated cohort.
        #[arg(long, default_value = "cohort")]
        name: String,
    },
    /// Engineer sum/diff/ratio features from paired ROI volumes.
    Engineer {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Greedy forward selection over MRI features.
    Select {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Bayesian hyperparameter tuning with CV-accuracy objective.
    Tune {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        #[arg(long, default_value_t = 10)]
        init: usize,
        #[arg(long, default_value_t = 25)]
        iters: usize,
        #[arg(long, default_value_t = 10)]
        cv_k: usize,
        #[arg(long, default_value_t = 10)]
        cv_repeats: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Continue from a previous trace (same data, space, and seed).
        #[arg(long)]
        resume: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit preprocessing and train one model on the given data.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: String,
        /// ParamRecord JSON; omit for family defaults.
        #[arg(long)]
        params: Option<PathBuf>,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a trained model on a cohort.
    Evaluate {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        preprocess: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kernel SHAP explanations plus summary and waterfall plots.
    Explain {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        preprocess: PathBuf,
        /// Background cohort CSV; defaults to the explained data.
        #[arg(long)]
        background: Option<PathBuf>,
        #[arg(long, default_value_t = 2048)]
        n_samples: usize,
        #[arg(long, default_value_t = 50)]
        background_size: usize,
        #[arg(long, default_value_t = 40)]
        max_subjects: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Consolidate correlated features into aspects; optionally compute
    /// aspect permutation importance for a model.
    Aspects {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 0.5)]
        threshold: f64,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        preprocess: Option<PathBuf>,
        #[arg(long, default_value = "accuracy")]
        metric: String,
        #[arg(long, default_value_t = 10)]
        n_repeats: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Kendall-tau correlation matrix across ranking files.
    Compare {
        /// Ranking JSON files (single ranking or list per file).
        #[arg(long, num_args = 1..)]
        rankings: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the full configured pipeline.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-emit reports from a finished run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        /// Comma-separated formats (csv,svg).
        #[arg(long, default_value = "csv,svg")]
        formats: String,
    },
    /// Print the default pipeline configuration.
    Config {
        #[arg(long, default_value_t = true)]
        print_defaults: bool,
    },
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_) => 2,
        Error::Parse(_) | Error::Schema(_) | Error::Integrity(_) | Error::Data(_)
        | Error::Io(_) | Error::Json(_) => 3,
        Error::Numeric(_) | Error::Undefined(_) | Error::Unsupported(_) => 4,
    }
}

fn load_prepared(args: &DataArgs) -> Result<TabularDataset, Error> {
    let schema = Schema::from_file(&args.schema)?;
    let mut ds = load_csv(&args.data, &schema)?;
    if args.engineer {
        ds = engineer_roi_features(&ds)?;
    }
    if let Some(fs) = &args.feature_set {
        ds = select_feature_set(&ds, fs.parse::<FeatureSet>()?)?;
    }
    Ok(ds)
}

fn load_model(path: &Path) -> Result<TrainedModel, Error> {
    TrainedModel::from_json(&fs::read_to_string(path)?)
}

fn load_preprocess(path: &Path) -> Result<PreprocessParams, Error> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Synth { config, out, seed, name } => {
            let cfg: SyntheticConfig = match config {
                Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)
                    .map_err(|e| Error::Config(format!("invalid synth config: {e}")))?,
                None => SyntheticConfig::default(),
            };
            let (csv, schema) =
                tabsight::pipeline::write_synthetic_cohort(&out, &cfg, seed, &name)?;
            println!("wrote {} and {}", csv.display(), schema.display());
        }
        Command::Engineer { data, out } => {
            let ds = load_prepared(&DataArgs { engineer: false, ..data })?;
            let engineered = engineer_roi_features(&ds)?;
            fs::create_dir_all(&out)?;
            let csv = out.join("engineered.csv");
            save_csv(&engineered, &csv, "label")?;
            save_schema(&Schema::describe(&engineered, "label"), &out.join("engineered.schema.json"))?;
            println!("wrote {} ({} features)", csv.display(), engineered.n_cols());
        }
        Command::Select { data, model, seed, out } => {
            let ds = load_prepared(&data)?;
            let kind: ModelKind = model.parse()?;
            let result = forward_select(&ds, kind, seed)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("selection.json"), result.to_json()?)?;
            println!(
                "selected {} features: {}",
                result.selected.len(),
                result.selected.join(", ")
            );
        }
        Command::Tune { data, model, init, iters, cv_k, cv_repeats, seed, resume, out } => {
            let ds = load_prepared(&data)?;
            let kind: ModelKind = model.parse()?;
            let space = HyperparamSpace::for_kind(kind, ds.n_cols());
            let plan = stratified_repeated_kfold(&ds, cv_k, cv_repeats, seed)?;
            let history = match resume {
                Some(path) => TuneTrace::from_jsonl(&fs::read_to_string(&path)?)?.entries,
                None => Vec::new(),
            };
            let trace = tune_resume(kind, &ds, &space, &plan, init, iters, seed, history)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("tune_trace.jsonl"), trace.to_jsonl()?)?;
            let best = trace.best_entry();
            println!(
                "best mean CV accuracy {:.4} (std {:.4}) after {} evaluations",
                best.mean_accuracy,
                best.std_accuracy,
                trace.entries.len()
            );
        }
        Command::Train { data, model, params, seed, out } => {
            let ds = load_prepared(&data)?;
            let kind: ModelKind = model.parse()?;
            let record: ParamRecord = match params {
                Some(path) => serde_json::from_str(&fs::read_to_string(&path)?)?,
                None => ParamRecord::default_for(kind, ds.n_cols()),
            };
            let pre = fit_preprocess(&ds);
            let z = apply_preprocess(&pre, &ds)?;
            let fitted = train(kind, &record, &z, seed)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("model.json"), fitted.to_json()?)?;
            fs::write(out.join("preprocess.json"), serde_json::to_string_pretty(&pre)?)?;
            println!("wrote {}", out.join("model.json").display());
        }
        Command::Evaluate { data, model, preprocess, out } => {
            let model = load_model(&model)?;
            let pre = load_preprocess(&preprocess)?;
            let ds = load_prepared(&data)?.select_columns(&model.feature_names)?;
            let z = apply_preprocess(&pre, &ds)?;
            let proba = model.predict_proba(&z)?;
            let scores = score_probabilities(&z.labels, &proba)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("scores.csv"), report::scores_csv(&[("cohort".into(), scores.clone())]))?;
            fs::write(out.join("scores.json"), serde_json::to_string_pretty(&scores)?)?;
            println!(
                "acc {:.4} bacc {:.4} auroc {:.4} f1 {:.4} mcc {:.4} (NIR {:.4})",
                scores.acc, scores.bacc, scores.auroc, scores.f1_macro, scores.mcc,
                scores.no_information_rate
            );
        }
        Command::Explain {
            data,
            model,
            preprocess,
            background,
            n_samples,
            background_size,
            max_subjects,
            seed,
            out,
        } => {
            let model = load_model(&model)?;
            let pre = load_preprocess(&preprocess)?;
            let ds = load_prepared(&data)?.select_columns(&model.feature_names)?;
            let z = apply_preprocess(&pre, &ds)?;
            let bg_ds = match background {
                Some(path) => {
                    let raw = load_prepared(&DataArgs {
                        data: path,
                        schema: data.schema.clone(),
                        engineer: data.engineer,
                        feature_set: data.feature_set.clone(),
                    })?
                    .select_columns(&model.feature_names)?;
                    apply_preprocess(&pre, &raw)?
                }
                None => z.clone(),
            };
            let bg_rows: Vec<usize> = (0..bg_ds.n_rows().min(background_size)).collect();
            let bg = BackgroundSet::from_dataset(&bg_ds.subset_rows(&bg_rows), &model)?;
            let rows: Vec<usize> = (0..z.n_rows().min(max_subjects)).collect();
            let target = z.subset_rows(&rows);
            let n_samples = n_samples.max(2 * z.n_cols() + 2);
            let explanations = explain_dataset(&model, &bg, &target, n_samples, seed)?;
            fs::create_dir_all(&out)?;
            let docs: Vec<String> = explanations
                .iter()
                .map(|e| e.to_json())
                .collect::<Result<_, _>>()?;
            fs::write(out.join("explanations.json"), format!("[\n{}\n]", docs.join(",\n")))?;
            if explanations.is_empty() {
                log::info!("no rows to explain; skipping summary emission");
            } else {
                let ranking = summary_ranking(&explanations)?;
                fs::write(out.join("summary.csv"), ranking.to_csv())?;
                fs::write(out.join("summary.svg"), report::summary_svg(&ranking, &target.subject_ids))?;
                for (i, e) in explanations.iter().take(2).enumerate() {
                    let id = &target.subject_ids[i];
                    fs::write(
                        out.join(format!("waterfall_{}.svg", report::safe_file_stem(id))),
                        report::waterfall_svg(&waterfall_data(e), id),
                    )?;
                }
            }
            println!("explained {} subjects", explanations.len());
        }
        Command::Aspects {
            data,
            threshold,
            model,
            preprocess,
            metric,
            n_repeats,
            seed,
            out,
        } => {
            let ds = load_prepared(&data)?;
            let rho = spearman_matrix(ds.values.view());
            let dend = build_dendrogram(&rho, &ds.column_names())?;
            let partition = cut_aspects(&dend, threshold)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("aspects.json"), partition.to_json()?)?;
            println!(
                "{} features consolidated into {} aspects at H = {threshold}",
                ds.n_cols(),
                partition.aspects.len()
            );
            if let (Some(model_path), Some(pre_path)) = (model, preprocess) {
                let model = load_model(&model_path)?;
                let pre = load_preprocess(&pre_path)?;
                let z = apply_preprocess(&pre, &ds.select_columns(&model.feature_names)?)?;
                let metric: Metric = metric.parse()?;
                let imp = aspect_permutation_importance(&model, &z, &partition, metric, n_repeats, seed)?;
                fs::write(out.join("aspect_importance.json"), serde_json::to_string_pretty(&imp)?)?;
            }
        }
        Command::Compare { rankings, out } => {
            let mut all: Vec<Ranking> = Vec::new();
            for path in &rankings {
                let text = fs::read_to_string(path)?;
                match serde_json::from_str::<Vec<Ranking>>(&text) {
                    Ok(mut list) => all.append(&mut list),
                    Err(_) => all.push(serde_json::from_str::<Ranking>(&text)?),
                }
            }
            let matrix = ranking_correlation_matrix(&all)?;
            fs::create_dir_all(&out)?;
            fs::write(out.join("ranking_correlation.csv"), matrix.to_csv())?;
            fs::write(out.join("ranking_correlation.json"), serde_json::to_string_pretty(&matrix)?)?;
            println!("compared {} rankings", all.len());
        }
        Command::Run { config, seed, out } => {
            let mut cfg = PipelineConfig::from_file(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let report = run_pipeline(&cfg)?;
            println!(
                "cv accuracy {:.4} ± {:.4}",
                report.cv_mean_accuracy, report.cv_std_accuracy
            );
            for (name, s) in &report.cohort_scores {
                println!(
                    "{name}: acc {:.4} bacc {:.4} auroc {:.4} f1 {:.4} mcc {:.4} (NIR {:.4})",
                    s.acc, s.bacc, s.auroc, s.f1_macro, s.mcc, s.no_information_rate
                );
            }
            println!("artifacts in {}", cfg.out_dir.display());
        }
        Command::Report { run, formats } => {
            let formats: Vec<String> = formats.split(',').map(|s| s.trim().to_string()).collect();
            let written = emit_reports(&run, &formats)?;
            for p in written {
                println!("wrote {}", p.display());
            }
        }
        Command::Config { print_defaults } => {
            if print_defaults {
                println!("{}", serde_json::to_string_pretty(&PipelineConfig::defaults())?);
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if cli.threads > 0 {
        if let Err(e) =
            rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global()
        {
            log::warn!("could not size the thread pool: {e}");
        }
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
