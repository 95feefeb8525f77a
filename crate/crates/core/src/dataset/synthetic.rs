//! Synthetic cohort generator standing in for the access-restricted clinical
//! tables. Emits raw left/right ROI volumes plus eTIV so the full
//! engineering path is exercised, and reports which engineered columns carry
//! signal for use as test oracles.

use ndarray::Array2;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{ColumnMeta, Role, TabularDataset};
use crate::error::{Error, Result};
use crate::util::rng_stream;

/// Effect of one informative ROI pair: class 1 shifts the pair's summed
/// volume by `effect` standard deviations of that sum.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InformativeRoi {
    pub index: usize,
    pub effect: f64,
}

/// Optional covariate-shift profile for generating an "external" cohort from
/// the same mechanism.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct CohortShift {
    /// Additive shift on every raw ROI volume, in volume-noise units.
    #[serde(default)]
    pub roi_shift: f64,
    /// Additive shift on every cognitive score, in score-noise units.
    #[serde(default)]
    pub cognitive_shift: f64,
    /// Overrides the class balance when set.
    #[serde(default)]
    pub class_balance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_subjects: usize,
    /// Fraction of class-1 subjects; counts are balanced exactly.
    pub class_balance: f64,
    pub n_roi_pairs: usize,
    /// Unpaired ROI columns besides eTIV (eTIV is always emitted).
    pub n_unpaired: usize,
    pub informative_rois: Vec<InformativeRoi>,
    /// Pearson correlation between left and right volumes of a pair.
    pub lr_correlation: f64,
    pub n_cognitive: usize,
    /// Class-1 shift on each cognitive score, in its own sd units
    /// (scores decrease with disease).
    pub cognitive_effect: f64,
    /// Probability shift for the genetic risk count in class 1.
    pub genetic_effect: f64,
    /// Independent per-cell probability of a missing feature value.
    pub missing_rate: f64,
    #[serde(default)]
    pub shift: Option<CohortShift>,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_subjects: 200,
            class_balance: 0.5,
            n_roi_pairs: 10,
            n_unpaired: 2,
            informative_rois: vec![InformativeRoi { index: 0, effect: 1.5 }],
            lr_correlation: 0.9,
            n_cognitive: 3,
            cognitive_effect: 1.0,
            genetic_effect: 0.25,
            missing_rate: 0.0,
            shift: None,
        }
    }
}

/// Which engineered columns the generator made informative; test oracles key
/// on these names.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroundTruth {
    pub informative_mri: Vec<String>,
    pub informative_cognitive: Vec<String>,
    pub informative_genetic: Vec<String>,
}

const VOL_BASE: f64 = 300.0;
const VOL_SD: f64 = 20.0;
const ETIV_MEAN: f64 = 1500.0;
const ETIV_SD: f64 = 15.0;
const COG_BASE: f64 = 25.0;
const COG_SD: f64 = 3.0;

/// Generates a cohort with raw paired volumes, eTIV, unpaired volumes,
/// sociodemographics, one genetic count, and cognitive scores.
///
/// Left and right volumes of a pair share a latent component so their
/// correlation equals `lr_correlation`; informative pairs shift both
/// hemispheres for class 1 so the engineered sum carries the declared effect
/// while diff and ratio stay uninformative.
pub fn generate_synthetic(
    config: &SyntheticConfig,
    seed: u64,
) -> Result<(TabularDataset, GroundTruth)> {
    if config.n_subjects < 2 || config.n_roi_pairs == 0 {
        return Err(Error::Config("need at least 2 subjects and 1 ROI pair".into()));
    }
    if !(0.0..=1.0).contains(&config.class_balance)
        || !(0.0..=1.0).contains(&config.missing_rate)
        || !(0.0..1.0).contains(&config.lr_correlation.abs())
    {
        return Err(Error::Config("balance, missing rate, and |correlation| must lie in [0,1)".into()));
    }
    for roi in &config.informative_rois {
        if roi.index >= config.n_roi_pairs {
            return Err(Error::Config(format!(
                "informative ROI index {} out of range (have {} pairs)",
                roi.index, config.n_roi_pairs
            )));
        }
    }

    let shift = config.shift.unwrap_or_default();
    let balance = shift.class_balance.unwrap_or(config.class_balance);

    // exact class counts, then a deterministic shuffle
    let n = config.n_subjects;
    let n1 = (balance * n as f64).round() as usize;
    let mut labels: Vec<u8> = (0..n).map(|i| (i < n1) as u8).collect();
    {
        use rand::seq::SliceRandom;
        let mut rng = rng_stream(seed, &[1]);
        labels.shuffle(&mut rng);
    }

    let mut columns = Vec::new();
    for p in 0..config.n_roi_pairs {
        columns.push(ColumnMeta::paired(format!("roi{p}_left"), Role::RoiLeft, format!("roi{p}")));
        columns.push(ColumnMeta::paired(format!("roi{p}_right"), Role::RoiRight, format!("roi{p}")));
    }
    columns.push(ColumnMeta::new("eTIV", Role::RoiUnpaired));
    for u in 0..config.n_unpaired {
        columns.push(ColumnMeta::new(format!("unpaired{u}"), Role::RoiUnpaired));
    }
    columns.push(ColumnMeta::new("age", Role::Sociodemographic));
    columns.push(ColumnMeta::new("gender", Role::Sociodemographic));
    columns.push(ColumnMeta::new("education", Role::Sociodemographic));
    columns.push(ColumnMeta::new("apoe4", Role::Genetic));
    for c in 0..config.n_cognitive {
        columns.push(ColumnMeta::new(format!("cog{c}"), Role::Cognitive));
    }
    let ncol = columns.len();

    let effect_of: Vec<f64> = {
        let mut e = vec![0.0; config.n_roi_pairs];
        for roi in &config.informative_rois {
            e[roi.index] = roi.effect;
        }
        e
    };
    // share a latent z so corr(L,R) = lr_correlation, unit total variance
    let rho = config.lr_correlation;
    let (shared, own) = (rho.abs().sqrt(), (1.0 - rho.abs()).sqrt());
    // sd of L+R in volume units, used to express effects on the sum
    let sum_sd = VOL_SD * (2.0 + 2.0 * rho).sqrt();

    let std_normal = Normal::new(0.0, 1.0).unwrap();
    let mut values = Array2::zeros((n, ncol));
    for i in 0..n {
        let mut rng = rng_stream(seed, &[2, i as u64]);
        let y = labels[i] as f64;
        let mut j = 0;
        for p in 0..config.n_roi_pairs {
            let z = std_normal.sample(&mut rng);
            let el = std_normal.sample(&mut rng);
            let er = std_normal.sample(&mut rng);
            let class_shift = 0.5 * effect_of[p] * sum_sd * y;
            let common = VOL_BASE + class_shift + shift.roi_shift * VOL_SD;
            values[[i, j]] = common + VOL_SD * (shared * z + own * el);
            values[[i, j + 1]] = common + VOL_SD * (shared * z + own * er);
            j += 2;
        }
        values[[i, j]] = ETIV_MEAN + ETIV_SD * std_normal.sample(&mut rng);
        j += 1;
        for _ in 0..config.n_unpaired {
            values[[i, j]] =
                VOL_BASE + shift.roi_shift * VOL_SD + VOL_SD * std_normal.sample(&mut rng);
            j += 1;
        }
        values[[i, j]] = 72.0 + 6.0 * std_normal.sample(&mut rng); // age
        values[[i, j + 1]] = if rng.random::<f64>() < 0.5 { 0.0 } else { 1.0 }; // gender
        values[[i, j + 2]] = (14.0 + 3.0 * std_normal.sample(&mut rng)).max(6.0); // education
        j += 3;
        // allele count, class 1 enriched
        let p_allele = (0.25 + config.genetic_effect * y).clamp(0.0, 1.0);
        let alleles =
            (rng.random::<f64>() < p_allele) as u8 + (rng.random::<f64>() < p_allele) as u8;
        values[[i, j]] = alleles as f64;
        j += 1;
        for _ in 0..config.n_cognitive {
            values[[i, j]] = COG_BASE - config.cognitive_effect * COG_SD * y
                + shift.cognitive_shift * COG_SD
                + COG_SD * std_normal.sample(&mut rng);
            j += 1;
        }
    }

    if config.missing_rate > 0.0 {
        let mut rng = rng_stream(seed, &[3]);
        for v in values.iter_mut() {
            if rng.random::<f64>() < config.missing_rate {
                *v = f64::NAN;
            }
        }
    }

    let truth = GroundTruth {
        informative_mri: config
            .informative_rois
            .iter()
            .filter(|r| r.effect != 0.0)
            .map(|r| format!("sum_roi{}", r.index))
            .collect(),
        informative_cognitive: if config.cognitive_effect != 0.0 {
            (0..config.n_cognitive).map(|c| format!("cog{c}")).collect()
        } else {
            Vec::new()
        },
        informative_genetic: if config.genetic_effect != 0.0 {
            vec!["apoe4".to_string()]
        } else {
            Vec::new()
        },
    };

    let ds = TabularDataset::new(
        (0..n).map(|i| format!("syn{seed:04x}_{i:04}")).collect(),
        columns,
        values,
        labels,
        ["control".to_string(), "patient".to_string()],
    )?;
    Ok((ds, truth))
}
