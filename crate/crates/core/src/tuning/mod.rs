//! Bayesian hyperparameter optimization: typed search domains, Latin
//! Hypercube initialization, a GP surrogate with LCB acquisition, and the
//! CV-accuracy objective.

mod gp;
mod lhd;
mod objective;

pub use gp::{acquisition_lcb, gp_fit, GPSurrogate, GpFitCandidate};
pub use lhd::lhd_unit;
pub use objective::cv_objective;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{FoldPlan, TabularDataset};
use crate::error::{Error, Result};
use crate::models::svm::GammaMode;
use crate::models::tree::{Criterion, Splitter};
use crate::models::{ModelKind, ParamRecord, Penalty};
use crate::util::{rng_stream, round_half_up};

/// One tunable dimension.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ParamDomain {
    pub name: String,
    pub kind: DomainKind,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum DomainKind {
    Continuous { lo: f64, hi: f64 },
    LogContinuous { lo: f64, hi: f64 },
    Integer { lo: i64, hi: i64 },
    Categorical { choices: Vec<String> },
}

impl ParamDomain {
    fn validate(&self) -> Result<()> {
        match &self.kind {
            DomainKind::Continuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                    return Err(Error::Config(format!("bad bounds on '{}'", self.name)));
                }
            }
            DomainKind::LogContinuous { lo, hi } => {
                if !(lo.is_finite() && hi.is_finite() && *lo > 0.0 && lo < hi) {
                    return Err(Error::Config(format!(
                        "log domain '{}' needs 0 < lo < hi",
                        self.name
                    )));
                }
            }
            DomainKind::Integer { lo, hi } => {
                if lo > hi {
                    return Err(Error::Config(format!("bad bounds on '{}'", self.name)));
                }
            }
            DomainKind::Categorical { choices } => {
                if choices.is_empty() {
                    return Err(Error::Config(format!("empty categories on '{}'", self.name)));
                }
            }
        }
        Ok(())
    }

    /// Unit-cube coordinate to a raw value (categories map to their index).
    fn decode_unit(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0);
        match &self.kind {
            DomainKind::Continuous { lo, hi } => lo + u * (hi - lo),
            DomainKind::LogContinuous { lo, hi } => {
                (lo.ln() + u * (hi.ln() - lo.ln())).exp()
            }
            DomainKind::Integer { lo, hi } => {
                let v = *lo as f64 + round_half_up(u * (hi - lo) as f64);
                v.clamp(*lo as f64, *hi as f64)
            }
            DomainKind::Categorical { choices } => {
                ((u * choices.len() as f64).floor()).min(choices.len() as f64 - 1.0)
            }
        }
    }

    /// Raw value back to a unit-cube coordinate.
    fn encode_value(&self, v: f64) -> f64 {
        match &self.kind {
            DomainKind::Continuous { lo, hi } => ((v - lo) / (hi - lo)).clamp(0.0, 1.0),
            DomainKind::LogContinuous { lo, hi } => {
                ((v.ln() - lo.ln()) / (hi.ln() - lo.ln())).clamp(0.0, 1.0)
            }
            DomainKind::Integer { lo, hi } => {
                if hi == lo {
                    0.5
                } else {
                    ((v - *lo as f64) / (*hi - *lo) as f64).clamp(0.0, 1.0)
                }
            }
            DomainKind::Categorical { choices } => (v + 0.5) / choices.len() as f64,
        }
    }
}

/// The search space of one model family (the random forest's feature bound
/// depends on the dataset width).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperparamSpace {
    pub kind: ModelKind,
    pub domains: Vec<ParamDomain>,
}

fn cont(name: &str, lo: f64, hi: f64) -> ParamDomain {
    ParamDomain { name: name.into(), kind: DomainKind::Continuous { lo, hi } }
}
fn log_cont(name: &str, lo: f64, hi: f64) -> ParamDomain {
    ParamDomain { name: name.into(), kind: DomainKind::LogContinuous { lo, hi } }
}
fn int(name: &str, lo: i64, hi: i64) -> ParamDomain {
    ParamDomain { name: name.into(), kind: DomainKind::Integer { lo, hi } }
}
fn cat(name: &str, choices: &[&str]) -> ParamDomain {
    ParamDomain {
        name: name.into(),
        kind: DomainKind::Categorical { choices: choices.iter().map(|s| s.to_string()).collect() },
    }
}

impl HyperparamSpace {
    /// The tuned intervals per family.
    pub fn for_kind(kind: ModelKind, n_features: usize) -> HyperparamSpace {
        let domains = match kind {
            ModelKind::Gboost => vec![
                int("n_estimators", 1, 500),
                int("max_depth", 1, 20),
                log_cont("learning_rate", 1e-10, 1.0),
                cont("gamma", 0.0, 20.0),
                int("min_child_weight", 1, 30),
                cont("subsample", 0.0, 1.0),
                cont("colsample_bytree", 0.0, 1.0),
            ],
            ModelKind::Rforest => vec![
                int("n_estimators", 250, 1250),
                int("max_features", 2, (n_features as i64).max(2)),
                int("min_samples_leaf", 1, 20),
            ],
            ModelKind::SvmPoly => vec![
                log_cont("c", 1e-4, 1e2),
                int("degree", 1, 10),
                cat("gamma", &["scale", "auto"]),
            ],
            ModelKind::SvmRadial => {
                vec![log_cont("c", 1e-4, 1e2), cat("gamma", &["scale", "auto"])]
            }
            ModelKind::Dtree => vec![
                cat("criterion", &["gini", "entropy"]),
                cat("splitter", &["best", "random"]),
                int("max_depth", 1, 100),
                cont("min_samples_split", 0.0, 1.0),
            ],
            ModelKind::Logreg => {
                vec![log_cont("c", 1e-4, 1e2), cat("penalty", &["l2", "none"])]
            }
        };
        HyperparamSpace { kind, domains }
    }

    pub fn dims(&self) -> usize {
        self.domains.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.domains.is_empty() {
            return Err(Error::Config("empty search space".into()));
        }
        for d in &self.domains {
            d.validate()?;
        }
        Ok(())
    }

    /// Unit-cube point to a concrete parameter record.
    pub fn decode(&self, u: &[f64]) -> Result<ParamRecord> {
        if u.len() != self.dims() {
            return Err(Error::Config(format!(
                "point has {} dimensions, space has {}",
                u.len(),
                self.dims()
            )));
        }
        let v: Vec<f64> = u.iter().zip(&self.domains).map(|(&ui, d)| d.decode_unit(ui)).collect();
        Ok(match self.kind {
            ModelKind::Gboost => ParamRecord::Gboost {
                n_estimators: v[0] as usize,
                max_depth: v[1] as usize,
                learning_rate: v[2],
                gamma: v[3],
                min_child_weight: v[4],
                subsample: v[5],
                colsample_bytree: v[6],
            },
            ModelKind::Rforest => ParamRecord::Rforest {
                n_estimators: v[0] as usize,
                max_features: v[1] as usize,
                min_samples_leaf: v[2] as usize,
            },
            ModelKind::SvmPoly => ParamRecord::SvmPoly {
                c: v[0],
                degree: v[1] as usize,
                gamma: if v[2] as usize == 0 { GammaMode::Scale } else { GammaMode::Auto },
            },
            ModelKind::SvmRadial => ParamRecord::SvmRadial {
                c: v[0],
                gamma: if v[1] as usize == 0 { GammaMode::Scale } else { GammaMode::Auto },
            },
            ModelKind::Dtree => ParamRecord::Dtree {
                criterion: if v[0] as usize == 0 { Criterion::Gini } else { Criterion::Entropy },
                splitter: if v[1] as usize == 0 { Splitter::Best } else { Splitter::Random },
                max_depth: v[2] as usize,
                min_samples_split: v[3],
            },
            ModelKind::Logreg => ParamRecord::Logreg {
                c: v[0],
                penalty: if v[1] as usize == 0 { Penalty::L2 } else { Penalty::None },
            },
        })
    }

    /// Concrete parameters back onto the unit cube.
    pub fn encode(&self, p: &ParamRecord) -> Result<Vec<f64>> {
        if p.kind() != self.kind {
            return Err(Error::Config("parameter record does not match this space".into()));
        }
        let raw: Vec<f64> = match p.clone() {
            ParamRecord::Gboost {
                n_estimators,
                max_depth,
                learning_rate,
                gamma,
                min_child_weight,
                subsample,
                colsample_bytree,
            } => vec![
                n_estimators as f64,
                max_depth as f64,
                learning_rate,
                gamma,
                min_child_weight,
                subsample,
                colsample_bytree,
            ],
            ParamRecord::Rforest { n_estimators, max_features, min_samples_leaf } => {
                vec![n_estimators as f64, max_features as f64, min_samples_leaf as f64]
            }
            ParamRecord::SvmPoly { c, degree, gamma } => {
                vec![c, degree as f64, (gamma == GammaMode::Auto) as u8 as f64]
            }
            ParamRecord::SvmRadial { c, gamma } => {
                vec![c, (gamma == GammaMode::Auto) as u8 as f64]
            }
            ParamRecord::Dtree { criterion, splitter, max_depth, min_samples_split } => vec![
                (criterion == Criterion::Entropy) as u8 as f64,
                (splitter == Splitter::Random) as u8 as f64,
                max_depth as f64,
                min_samples_split,
            ],
            ParamRecord::Logreg { c, penalty } => {
                vec![c, (penalty == Penalty::None) as u8 as f64]
            }
        };
        Ok(raw.iter().zip(&self.domains).map(|(&v, d)| d.encode_value(v)).collect())
    }
}

/// LHD initialization decoded into parameter records.
pub fn lhd_init(space: &HyperparamSpace, n: usize, seed: u64) -> Result<Vec<ParamRecord>> {
    space.validate()?;
    lhd_unit(space.dims(), n, seed)?
        .iter()
        .map(|u| space.decode(u))
        .collect()
}

/// Proposes the next configuration: 1024 uniform candidates, snapped onto
/// the representable grid, deduplicated against evaluated configs (L-inf
/// distance 1e-9 in encoded space), minimizing the LCB of the surrogate.
/// Falls back to a random candidate when everything is a duplicate.
pub fn propose_next(
    gp: &GPSurrogate,
    space: &HyperparamSpace,
    evaluated: &[Vec<f64>],
    seed: u64,
) -> Result<ParamRecord> {
    const CANDIDATES: usize = 1024;
    let mut rng = rng_stream(seed, &[0xac0]);
    let dims = space.dims();
    let mut best: Option<(f64, ParamRecord)> = None;
    let mut fallback: Option<ParamRecord> = None;
    for _ in 0..CANDIDATES {
        let u: Vec<f64> = (0..dims).map(|_| rng.random::<f64>()).collect();
        let record = space.decode(&u)?;
        if fallback.is_none() {
            fallback = Some(record.clone());
        }
        let snapped = space.encode(&record)?;
        let duplicate = evaluated.iter().any(|e| {
            e.iter().zip(&snapped).all(|(a, b)| (a - b).abs() < 1e-9)
        });
        if duplicate {
            continue;
        }
        let (mu, sigma) = gp.predict(&snapped)?;
        let lcb = acquisition_lcb(mu, sigma);
        if best.as_ref().is_none_or(|(b, _)| lcb < *b) {
            best = Some((lcb, record));
        }
    }
    Ok(match best {
        Some((_, record)) => record,
        None => fallback.expect("at least one candidate drawn"),
    })
}

/// One evaluated configuration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneEntry {
    pub params: ParamRecord,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
}

/// Complete evaluation history of one tuning run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TuneTrace {
    pub entries: Vec<TuneEntry>,
    pub best: usize,
}

impl TuneTrace {
    pub fn best_entry(&self) -> &TuneEntry {
        &self.entries[self.best]
    }

    fn select_best(entries: &[TuneEntry]) -> usize {
        let mut best = 0;
        for (i, e) in entries.iter().enumerate().skip(1) {
            let b = &entries[best];
            if e.mean_accuracy > b.mean_accuracy + 1e-15
                || ((e.mean_accuracy - b.mean_accuracy).abs() <= 1e-15
                    && e.std_accuracy < b.std_accuracy - 1e-15)
            {
                best = i;
            }
        }
        best
    }

    /// One JSON object per line, resumable with [`TuneTrace::from_jsonl`].
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = String::new();
        for e in &self.entries {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(text: &str) -> Result<TuneTrace> {
        let entries: Vec<TuneEntry> = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .map(|l| serde_json::from_str(l).map_err(Error::from))
            .collect::<Result<_>>()?;
        if entries.is_empty() {
            return Err(Error::Data("trace file has no evaluations".into()));
        }
        let best = Self::select_best(&entries);
        Ok(TuneTrace { entries, best })
    }
}

/// Runs `init` LHD evaluations plus `iters` propose-evaluate-refit cycles.
/// The surrogate models 1 - accuracy so the LCB acquisition minimizes; the
/// trace reports accuracies. Best = max mean accuracy, ties by lower std,
/// then earlier index.
pub fn tune(
    kind: ModelKind,
    ds: &TabularDataset,
    space: &HyperparamSpace,
    fold_plan: &FoldPlan,
    init: usize,
    iters: usize,
    seed: u64,
) -> Result<TuneTrace> {
    tune_resume(kind, ds, space, fold_plan, init, iters, seed, Vec::new())
}

/// As [`tune`], seeded with evaluations from a previous run of the same
/// configuration; only the remaining budget is evaluated.
#[allow(clippy::too_many_arguments)]
pub fn tune_resume(
    kind: ModelKind,
    ds: &TabularDataset,
    space: &HyperparamSpace,
    fold_plan: &FoldPlan,
    init: usize,
    iters: usize,
    seed: u64,
    history: Vec<TuneEntry>,
) -> Result<TuneTrace> {
    if space.kind != kind {
        return Err(Error::Config("search space does not match the model kind".into()));
    }
    tune_objective_resume(
        space,
        |params| cv_objective(kind, params, ds, fold_plan, seed),
        init,
        iters,
        seed,
        history,
    )
}

/// The bare optimization loop over an arbitrary (mean accuracy, std)
/// objective: LHD initialization, then propose-evaluate-refit cycles.
pub fn tune_objective(
    space: &HyperparamSpace,
    objective: impl FnMut(&ParamRecord) -> Result<(f64, f64)>,
    init: usize,
    iters: usize,
    seed: u64,
) -> Result<TuneTrace> {
    tune_objective_resume(space, objective, init, iters, seed, Vec::new())
}

fn tune_objective_resume(
    space: &HyperparamSpace,
    mut objective: impl FnMut(&ParamRecord) -> Result<(f64, f64)>,
    init: usize,
    iters: usize,
    seed: u64,
    history: Vec<TuneEntry>,
) -> Result<TuneTrace> {
    space.validate()?;
    if history.len() > init + iters {
        return Err(Error::Config("history is longer than the requested budget".into()));
    }

    let mut entries = history;
    let initial = lhd_init(space, init, seed)?;
    for (i, params) in initial.iter().enumerate() {
        if i < entries.len() {
            continue;
        }
        let (mean, std) = objective(params)?;
        entries.push(TuneEntry { params: params.clone(), mean_accuracy: mean, std_accuracy: std });
    }

    for step in 0..iters {
        if entries.len() > init + step {
            continue;
        }
        let encoded: Vec<Vec<f64>> =
            entries.iter().map(|e| space.encode(&e.params)).collect::<Result<_>>()?;
        let target: Vec<f64> = entries.iter().map(|e| 1.0 - e.mean_accuracy).collect();
        let gp = gp_fit(&encoded, &target)?;
        let params = propose_next(&gp, space, &encoded, seed ^ (step as u64 + 1))?;
        let (mean, std) = objective(&params)?;
        entries.push(TuneEntry { params, mean_accuracy: mean, std_accuracy: std });
    }

    let best = TuneTrace::select_best(&entries);
    Ok(TuneTrace { entries, best })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_family_space_decodes_inside_bounds() {
        let mut rng = rng_stream(2, &[1]);
        for kind in ModelKind::ALL {
            let space = HyperparamSpace::for_kind(kind, 23);
            for _ in 0..50 {
                let u: Vec<f64> = (0..space.dims()).map(|_| rng.random::<f64>()).collect();
                let record = space.decode(&u).unwrap();
                // re-encoding must stay inside the cube
                for v in space.encode(&record).unwrap() {
                    assert!((0.0..=1.0).contains(&v), "{kind:?}: {v}");
                }
                match record {
                    ParamRecord::Gboost { n_estimators, max_depth, learning_rate, .. } => {
                        assert!((1..=500).contains(&n_estimators));
                        assert!((1..=20).contains(&max_depth));
                        assert!((1e-10..=1.0).contains(&learning_rate));
                    }
                    ParamRecord::Rforest { n_estimators, max_features, .. } => {
                        assert!((250..=1250).contains(&n_estimators));
                        assert!((2..=23).contains(&max_features));
                    }
                    ParamRecord::SvmPoly { c, degree, .. } => {
                        assert!((1e-4..=1.0001e2).contains(&c));
                        assert!((1..=10).contains(&degree));
                    }
                    ParamRecord::Dtree { max_depth, min_samples_split, .. } => {
                        assert!((1..=100).contains(&max_depth));
                        assert!((0.0..=1.0).contains(&min_samples_split));
                    }
                    _ => {}
                }
            }
        }
    }

    #[test]
    fn decode_encode_is_identity_on_grid_values() {
        let space = HyperparamSpace::for_kind(ModelKind::Rforest, 30);
        let record = ParamRecord::Rforest {
            n_estimators: 700,
            max_features: 11,
            min_samples_leaf: 3,
        };
        let u = space.encode(&record).unwrap();
        let back = space.decode(&u).unwrap();
        assert_eq!(record, back);

        let space = HyperparamSpace::for_kind(ModelKind::Logreg, 5);
        let record = ParamRecord::Logreg { c: 0.1, penalty: Penalty::None };
        let back = space.decode(&space.encode(&record).unwrap()).unwrap();
        match back {
            ParamRecord::Logreg { c, penalty } => {
                assert!((c - 0.1).abs() / 0.1 < 1e-12);
                assert_eq!(penalty, Penalty::None);
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn lhd_init_covers_every_interval_per_dimension() {
        for kind in ModelKind::ALL {
            let space = HyperparamSpace::for_kind(kind, 40);
            let records = lhd_init(&space, 10, 11).unwrap();
            assert_eq!(records.len(), 10);
        }
        // interval property is checked on the raw design
        let design = lhd_unit(7, 10, 11).unwrap();
        for dim in 0..7 {
            let mut seen = [false; 10];
            for row in &design {
                let k = ((row[dim] * 10.0).floor() as usize).min(9);
                assert!(!seen[k]);
                seen[k] = true;
            }
        }
    }

    #[test]
    fn trace_roundtrips_through_jsonl() {
        let entries = vec![
            TuneEntry {
                params: ParamRecord::Logreg { c: 0.5, penalty: Penalty::L2 },
                mean_accuracy: 0.8,
                std_accuracy: 0.05,
            },
            TuneEntry {
                params: ParamRecord::Logreg { c: 2.0, penalty: Penalty::None },
                mean_accuracy: 0.85,
                std_accuracy: 0.04,
            },
        ];
        let trace = TuneTrace { best: 1, entries };
        let text = trace.to_jsonl().unwrap();
        let back = TuneTrace::from_jsonl(&text).unwrap();
        assert_eq!(back.entries.len(), 2);
        assert_eq!(back.best, 1);
    }

    #[test]
    fn proposals_stay_in_bounds_and_prefer_the_better_region() {
        // toy 1-D objective over the regularization dimension: low c good
        let space = HyperparamSpace::for_kind(ModelKind::SvmRadial, 4);
        let mut hits = 0;
        for seed in 0..100u64 {
            let design = lhd_unit(space.dims(), 8, seed).unwrap();
            let x: Vec<Vec<f64>> = design
                .iter()
                .map(|u| space.encode(&space.decode(u).unwrap()).unwrap())
                .collect();
            // minimized objective rises with the first coordinate
            let y: Vec<f64> = x.iter().map(|u| (u[0] - 0.1).powi(2)).collect();
            let gp = gp_fit(&x, &y).unwrap();
            let proposal = propose_next(&gp, &space, &x, seed).unwrap();
            let encoded = space.encode(&proposal).unwrap();
            assert!(encoded.iter().all(|v| (0.0..=1.0).contains(v)));
            if encoded[0] < 0.5 {
                hits += 1;
            }
        }
        assert!(hits >= 95, "proposal landed in the good half only {hits}/100 times");
    }

    #[test]
    fn never_reproposes_an_evaluated_configuration() {
        // a fully discrete space with 6 distinct configurations
        let space = HyperparamSpace {
            kind: ModelKind::Logreg,
            domains: vec![
                ParamDomain { name: "c".into(), kind: DomainKind::Integer { lo: 1, hi: 3 } },
                ParamDomain {
                    name: "penalty".into(),
                    kind: DomainKind::Categorical {
                        choices: vec!["l2".into(), "none".into()],
                    },
                },
            ],
        };
        let all: Vec<ParamRecord> = [0.0, 0.5, 1.0]
            .iter()
            .flat_map(|&u0| [0.25, 0.75].map(|u1| space.decode(&[u0, u1]).unwrap()))
            .collect();
        let encode_all = |records: &[ParamRecord]| -> Vec<Vec<f64>> {
            records.iter().map(|p| space.encode(p).unwrap()).collect()
        };
        // leave one configuration unevaluated; the proposal must be that one
        for hold_out in 0..all.len() {
            let evaluated: Vec<ParamRecord> = all
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != hold_out)
                .map(|(_, p)| p.clone())
                .collect();
            let encoded = encode_all(&evaluated);
            let y: Vec<f64> = encoded.iter().map(|u| u[0]).collect();
            let gp = gp_fit(&encoded, &y).unwrap();
            let proposal = propose_next(&gp, &space, &encoded, 7).unwrap();
            assert_eq!(proposal, all[hold_out], "re-proposed an evaluated configuration");
        }
        // with everything evaluated, the fallback still returns something valid
        let encoded = encode_all(&all);
        let y: Vec<f64> = encoded.iter().map(|u| u[0]).collect();
        let gp = gp_fit(&encoded, &y).unwrap();
        assert!(propose_next(&gp, &space, &encoded, 7).is_ok());
    }

    #[test]
    fn tune_loop_is_reproducible_end_to_end() {
        use crate::dataset::{stratified_repeated_kfold, TabularDataset};
        let x = ndarray::Array2::from_shape_fn((40, 2), |(i, j)| {
            (i as f64 * 0.7 + j as f64).sin() + if i % 2 == 0 { -1.5 } else { 1.5 }
        });
        let y: Vec<u8> = (0..40).map(|i| (i % 2) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let plan = stratified_repeated_kfold(&ds, 3, 1, 5).unwrap();
        let space = HyperparamSpace::for_kind(ModelKind::Logreg, 2);
        let a = tune(ModelKind::Logreg, &ds, &space, &plan, 3, 2, 9).unwrap();
        let b = tune(ModelKind::Logreg, &ds, &space, &plan, 3, 2, 9).unwrap();
        assert_eq!(a.best, b.best);
        assert_eq!(a.entries.len(), 5);
        for (ea, eb) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ea.params, eb.params);
            assert_eq!(ea.mean_accuracy, eb.mean_accuracy);
            assert_eq!(ea.std_accuracy, eb.std_accuracy);
        }
    }

    #[test]
    fn resume_skips_already_evaluated_configs() {
        use crate::dataset::{stratified_repeated_kfold, TabularDataset};
        let x = ndarray::Array2::from_shape_fn((30, 2), |(i, j)| (i + j) as f64 * 0.1);
        let y: Vec<u8> = (0..30).map(|i| (i % 2) as u8).collect();
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let plan = stratified_repeated_kfold(&ds, 3, 1, 2).unwrap();
        let space = HyperparamSpace::for_kind(ModelKind::Logreg, 2);
        let full = tune(ModelKind::Logreg, &ds, &space, &plan, 3, 2, 4).unwrap();
        let partial = full.entries[..3].to_vec();
        let resumed =
            tune_resume(ModelKind::Logreg, &ds, &space, &plan, 3, 2, 4, partial).unwrap();
        assert_eq!(full.entries.len(), resumed.entries.len());
        for (a, b) in full.entries.iter().zip(&resumed.entries) {
            assert_eq!(a.params, b.params);
        }
    }

    #[test]
    fn best_selection_breaks_ties_by_std_then_index() {
        let e = |mean: f64, std: f64| TuneEntry {
            params: ParamRecord::Logreg { c: 1.0, penalty: Penalty::L2 },
            mean_accuracy: mean,
            std_accuracy: std,
        };
        let entries = vec![e(0.9, 0.05), e(0.9, 0.02), e(0.9, 0.02), e(0.85, 0.0)];
        assert_eq!(TuneTrace::select_best(&entries), 1);
    }
}
