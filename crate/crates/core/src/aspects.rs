//! Consolidation of correlated features into aspects: Spearman correlation,
//! complete-linkage clustering, threshold cuts, and aspect-level importance.

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::dataset::TabularDataset;
use crate::error::{Error, Result};
use crate::explain::{kernel_shap_groups, BackgroundSet, Explanation, PredictProba};
use crate::importance::{group_permutation_importance, Metric, PermutationReport};
use crate::models::TrainedModel;
use crate::util::midranks;

/// Spearman rank correlation matrix over columns; missing values are
/// excluded pairwise and every pair is midranked on its complete rows.
pub fn spearman_matrix(x: ArrayView2<'_, f64>) -> Array2<f64> {
    let d = x.ncols();
    let mut rho = Array2::eye(d);
    for i in 0..d {
        for j in i + 1..d {
            let mut a = Vec::new();
            let mut b = Vec::new();
            for r in 0..x.nrows() {
                let (va, vb) = (x[[r, i]], x[[r, j]]);
                if !va.is_nan() && !vb.is_nan() {
                    a.push(va);
                    b.push(vb);
                }
            }
            let r = pairwise_spearman(&a, &b, i, j);
            rho[[i, j]] = r;
            rho[[j, i]] = r;
        }
    }
    rho
}

fn pairwise_spearman(a: &[f64], b: &[f64], i: usize, j: usize) -> f64 {
    if a.len() < 2 {
        log::warn!("columns {i} and {j} share fewer than 2 complete rows; correlation set to 0");
        return 0.0;
    }
    let ra = midranks(a);
    let rb = midranks(b);
    let n = ra.len() as f64;
    let ma = ra.iter().sum::<f64>() / n;
    let mb = rb.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for k in 0..ra.len() {
        cov += (ra[k] - ma) * (rb[k] - mb);
        va += (ra[k] - ma).powi(2);
        vb += (rb[k] - mb).powi(2);
    }
    if va == 0.0 || vb == 0.0 {
        log::warn!("constant column in pair ({i},{j}); correlation set to 0");
        return 0.0;
    }
    (cov / (va * vb).sqrt()).clamp(-1.0, 1.0)
}

/// One agglomeration step: clusters `a` and `b` merge at `height` into a new
/// cluster with id `n_leaves + step`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Merge {
    pub a: usize,
    pub b: usize,
    pub height: f64,
}

/// Complete-linkage dendrogram over features at distance 1 - |rho|.
/// Serializes for inspection only; cuts need the construction-time instance.
#[derive(Debug, Clone, Serialize)]
pub struct Dendrogram {
    pub labels: Vec<String>,
    pub merges: Vec<Merge>,
    /// Leaf-to-leaf distances kept for cut-time verification.
    #[serde(skip)]
    distance: Array2<f64>,
}

/// Builds the dendrogram by complete-linkage agglomeration; ties resolve to
/// the pair whose smallest member indices are lexicographically least.
pub fn build_dendrogram(rho: &Array2<f64>, labels: &[String]) -> Result<Dendrogram> {
    let n = rho.nrows();
    if n != rho.ncols() || n != labels.len() {
        return Err(Error::Data("correlation matrix and labels disagree in size".into()));
    }
    if n == 0 {
        return Err(Error::Data("cannot cluster zero features".into()));
    }
    let distance = Array2::from_shape_fn((n, n), |(i, j)| {
        if i == j { 0.0 } else { 1.0 - rho[[i, j]].abs() }
    });

    // active clusters: (id, smallest member index); dist holds the current
    // complete-linkage distances between active clusters
    let mut active: Vec<(usize, usize)> = (0..n).map(|i| (i, i)).collect();
    let mut dist: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| distance[[i, j]]).collect())
        .collect();
    let mut merges = Vec::with_capacity(n.saturating_sub(1));
    let mut next_id = n;

    while active.len() > 1 {
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..active.len() {
            for j in i + 1..active.len() {
                let d = dist[i][j];
                let key = (active[i].1.min(active[j].1), active[i].1.max(active[j].1));
                let better = match best {
                    None => true,
                    Some((bd, bi, bj)) => {
                        let bkey = (
                            active[bi].1.min(active[bj].1),
                            active[bi].1.max(active[bj].1),
                        );
                        d < bd - 1e-15 || ((d - bd).abs() <= 1e-15 && key < bkey)
                    }
                };
                if better {
                    best = Some((d, i, j));
                }
            }
        }
        let (height, i, j) = best.unwrap();
        merges.push(Merge { a: active[i].0, b: active[j].0, height });
        // complete linkage: distance to the union is the max of the parts
        let merged_min = active[i].1.min(active[j].1);
        for k in 0..active.len() {
            if k != i && k != j {
                dist[i][k] = dist[i][k].max(dist[j][k]);
                dist[k][i] = dist[i][k];
            }
        }
        active[i] = (next_id, merged_min);
        next_id += 1;
        active.remove(j);
        for row in dist.iter_mut() {
            row.remove(j);
        }
        dist.remove(j);
    }

    Ok(Dendrogram { labels: labels.to_vec(), merges, distance })
}

/// A named group of feature indices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Aspect {
    pub name: String,
    pub features: Vec<usize>,
    pub feature_names: Vec<String>,
}

/// Disjoint aspects covering all features, produced by cutting the
/// dendrogram at distance 1 - H.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AspectPartition {
    pub aspects: Vec<Aspect>,
    pub threshold: f64,
}

impl AspectPartition {
    pub fn groups(&self) -> Vec<(String, Vec<usize>)> {
        self.aspects.iter().map(|a| (a.name.clone(), a.features.clone())).collect()
    }

    /// The documented JSON shape: [{name, features:[...names...]}].
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Entry<'a> {
            name: &'a str,
            features: &'a [String],
        }
        let doc: Vec<Entry<'_>> = self
            .aspects
            .iter()
            .map(|a| Entry { name: &a.name, features: &a.feature_names })
            .collect();
        Ok(serde_json::to_string_pretty(&doc)?)
    }

    /// All-singleton partition over the given feature names.
    pub fn singletons(names: &[String]) -> AspectPartition {
        AspectPartition {
            aspects: names
                .iter()
                .enumerate()
                .map(|(j, n)| Aspect {
                    name: n.clone(),
                    features: vec![j],
                    feature_names: vec![n.clone()],
                })
                .collect(),
            threshold: 1.0,
        }
    }
}

/// Cuts at distance 1 - H: merges at or below the cut form the aspects.
/// Singletons keep their feature name; groups are named aspect_k in the
/// order their final merge completed. Every multi-feature aspect is verified
/// to have min pairwise |rho| >= H.
pub fn cut_aspects(dendrogram: &Dendrogram, h: f64) -> Result<AspectPartition> {
    if !(h > 0.0 && h <= 1.0) {
        return Err(Error::Config(format!("threshold H = {h} outside (0, 1]")));
    }
    let n = dendrogram.labels.len();
    let cut = 1.0 - h;

    // replay merges below the cut; component id = cluster id
    let mut members: Vec<Option<Vec<usize>>> = (0..n).map(|i| Some(vec![i])).collect();
    let mut completing_merge: Vec<usize> = vec![0; n]; // merge index that last touched each cluster
    for (step, m) in dendrogram.merges.iter().enumerate() {
        if m.height > cut + 1e-12 {
            break;
        }
        let a = members[m.a].take().expect("cluster merged twice");
        let b = members[m.b].take().expect("cluster merged twice");
        let mut joined = a;
        joined.extend(b);
        joined.sort_unstable();
        members.push(Some(joined));
        completing_merge.push(step);
    }

    let mut live: Vec<(usize, Vec<usize>)> = members
        .into_iter()
        .enumerate()
        .filter_map(|(id, m)| m.map(|v| (id, v)))
        .collect();
    // groups in completing-merge order, singletons interleaved by feature index
    live.sort_by_key(|(id, v)| {
        if v.len() == 1 {
            (1usize, v[0])
        } else {
            (0usize, completing_merge[*id])
        }
    });

    let mut aspects = Vec::with_capacity(live.len());
    let mut group_counter = 0usize;
    for (_, features) in live.iter().filter(|(_, v)| v.len() > 1) {
        group_counter += 1;
        // complete linkage bounds the in-group distance by the cut height
        let worst = features
            .iter()
            .flat_map(|&i| features.iter().map(move |&j| dendrogram.distance[[i, j]]))
            .fold(0.0f64, f64::max);
        if worst > cut + 1e-9 {
            return Err(Error::Numeric(format!(
                "aspect_{group_counter} violates the min-correlation bound: 1-|rho| = {worst}"
            )));
        }
        aspects.push(Aspect {
            name: format!("aspect_{group_counter}"),
            features: features.clone(),
            feature_names: features.iter().map(|&i| dendrogram.labels[i].clone()).collect(),
        });
    }
    for (_, features) in live.iter().filter(|(_, v)| v.len() == 1) {
        aspects.push(Aspect {
            name: dendrogram.labels[features[0]].clone(),
            features: features.clone(),
            feature_names: vec![dendrogram.labels[features[0]].clone()],
        });
    }

    Ok(AspectPartition { aspects, threshold: h })
}

/// Joint-permutation importance of each aspect (shared row permutation over
/// the aspect's columns).
pub fn aspect_permutation_importance(
    model: &TrainedModel,
    ds: &TabularDataset,
    partition: &AspectPartition,
    metric: Metric,
    n_repeats: usize,
    seed: u64,
) -> Result<PermutationReport> {
    group_permutation_importance(model, ds, &partition.groups(), metric, n_repeats, seed)
}

/// Kernel SHAP with aspects as players: one mask bit toggles all features of
/// an aspect together.
pub fn aspect_shap(
    predict: &dyn PredictProba,
    background: &BackgroundSet,
    x: &[f64],
    partition: &AspectPartition,
    n_samples: usize,
    seed: u64,
) -> Result<Explanation> {
    let groups: Vec<Vec<usize>> = partition.aspects.iter().map(|a| a.features.clone()).collect();
    let names: Vec<String> = partition.aspects.iter().map(|a| a.name.clone()).collect();
    kernel_shap_groups(predict, background, x, &groups, &names, n_samples, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn monotone_transform_gives_unit_correlation() {
        let n = 20;
        let x = Array2::from_shape_fn((n, 2), |(i, j)| {
            let v = i as f64 / 3.0 - 2.0;
            if j == 0 { v } else { v.exp() }
        });
        let rho = spearman_matrix(x.view());
        assert!((rho[[0, 1]] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reversed_ranks_give_minus_one() {
        let x = Array2::from_shape_fn((15, 2), |(i, j)| {
            if j == 0 { i as f64 } else { -(i as f64) }
        });
        let rho = spearman_matrix(x.view());
        assert!((rho[[0, 1]] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_difference_hand_formula() {
        let x = arr2(&[[1.0, 1.0], [2.0, 3.0], [3.0, 2.0], [4.0, 4.0]]);
        let rho = spearman_matrix(x.view());
        // 1 - 6*sum(d^2)/(n(n^2-1)) with d = (0,1,-1,0), n=4
        assert!((rho[[0, 1]] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn constant_column_warns_and_zeroes() {
        let x = arr2(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let rho = spearman_matrix(x.view());
        assert_eq!(rho[[0, 1]], 0.0);
        assert_eq!(rho[[1, 1]], 1.0);
    }

    #[test]
    fn perfectly_correlated_pair_merges_at_zero() {
        let rho = arr2(&[[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let dend = build_dendrogram(&rho, &labels(3)).unwrap();
        assert_eq!(dend.merges.len(), 2);
        assert_eq!(dend.merges[0].height, 0.0);
        assert_eq!((dend.merges[0].a, dend.merges[0].b), (0, 1));
    }

    #[test]
    fn three_feature_merge_order_follows_linkage() {
        let rho = arr2(&[[1.0, 0.9, 0.0], [0.9, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let dend = build_dendrogram(&rho, &labels(3)).unwrap();
        assert_eq!((dend.merges[0].a, dend.merges[0].b), (0, 1));
        assert!((dend.merges[0].height - 0.1).abs() < 1e-12);
        // the second merge joins cluster 3 (={0,1}) with leaf 2 at height 1
        assert_eq!((dend.merges[1].a, dend.merges[1].b), (3, 2));
        assert!((dend.merges[1].height - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heights_are_non_decreasing() {
        let mut rng = crate::util::rng_stream(9, &[0]);
        use rand::Rng;
        let n = 12;
        let x = Array2::from_shape_fn((40, n), |_| rng.random::<f64>());
        let rho = spearman_matrix(x.view());
        let dend = build_dendrogram(&rho, &labels(n)).unwrap();
        assert_eq!(dend.merges.len(), n - 1);
        for w in dend.merges.windows(2) {
            assert!(w[1].height >= w[0].height - 1e-12);
        }
    }

    #[test]
    fn h_one_keeps_singletons_unless_duplicated() {
        let rho = arr2(&[[1.0, 0.95, 0.2], [0.95, 1.0, 0.2], [0.2, 0.2, 1.0]]);
        let dend = build_dendrogram(&rho, &labels(3)).unwrap();
        let p = cut_aspects(&dend, 1.0).unwrap();
        assert_eq!(p.aspects.len(), 3);
        assert!(p.aspects.iter().all(|a| a.features.len() == 1));
    }

    #[test]
    fn correlated_pair_lands_in_one_aspect_at_half() {
        let rho = arr2(&[[1.0, 0.95, 0.2], [0.95, 1.0, 0.2], [0.2, 0.2, 1.0]]);
        let dend = build_dendrogram(&rho, &labels(3)).unwrap();
        let p = cut_aspects(&dend, 0.5).unwrap();
        assert_eq!(p.aspects.len(), 2);
        assert_eq!(p.aspects[0].name, "aspect_1");
        assert_eq!(p.aspects[0].features, vec![0, 1]);
        // partition covers everything exactly once
        let mut all: Vec<usize> =
            p.aspects.iter().flat_map(|a| a.features.clone()).collect();
        all.sort_unstable();
        assert_eq!(all, vec![0, 1, 2]);
    }

    #[test]
    fn anticorrelated_features_count_as_redundant() {
        let rho = arr2(&[[1.0, -0.97], [-0.97, 1.0]]);
        let dend = build_dendrogram(&rho, &labels(2)).unwrap();
        let p = cut_aspects(&dend, 0.5).unwrap();
        assert_eq!(p.aspects.len(), 1);
    }

    fn trained_on_duplicated_signal() -> (crate::models::TrainedModel, TabularDataset) {
        use crate::models::{train, ModelKind, ParamRecord, Penalty};
        // columns 0 and 1 are duplicates carrying the signal; 2 is noise
        let mut rng = crate::util::rng_stream(3, &[0xa5]);
        use rand::Rng;
        let n = 80;
        let mut x = Array2::zeros((n, 3));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let signal = rng.random::<f64>() * 2.0 - 1.0;
            x[[i, 0]] = signal;
            x[[i, 1]] = signal;
            x[[i, 2]] = rng.random::<f64>();
            y.push((signal > 0.0) as u8);
        }
        let ds = TabularDataset::from_matrix(x, y).unwrap();
        let model = train(
            ModelKind::Logreg,
            &ParamRecord::Logreg { c: 1.0, penalty: Penalty::L2 },
            &ds,
            0,
        )
        .unwrap();
        (model, ds)
    }

    #[test]
    fn joint_aspect_importance_dominates_split_credit() {
        use crate::importance::permutation_importance;
        let (model, ds) = trained_on_duplicated_signal();
        let partition = AspectPartition {
            aspects: vec![
                Aspect {
                    name: "dup".into(),
                    features: vec![0, 1],
                    feature_names: vec!["f0".into(), "f1".into()],
                },
                Aspect { name: "f2".into(), features: vec![2], feature_names: vec!["f2".into()] },
            ],
            threshold: 0.5,
        };
        let joint =
            aspect_permutation_importance(&model, &ds, &partition, Metric::Accuracy, 8, 5)
                .unwrap();
        let single = permutation_importance(&model, &ds, Metric::Accuracy, 8, 5).unwrap();
        assert!(
            joint.mean_drop[0] >= single.mean_drop[0] - 1e-12
                && joint.mean_drop[0] >= single.mean_drop[1] - 1e-12,
            "joint {} vs singles {} {}",
            joint.mean_drop[0],
            single.mean_drop[0],
            single.mean_drop[1]
        );
    }

    #[test]
    fn unread_aspect_has_exactly_zero_importance() {
        let (_, ds) = trained_on_duplicated_signal();
        // a depth-1 tree provably ignores all but one feature
        use crate::models::{train, ModelKind, ParamRecord};
        use crate::models::tree::{Criterion, Splitter};
        let stump = train(
            ModelKind::Dtree,
            &ParamRecord::Dtree {
                criterion: Criterion::Gini,
                splitter: Splitter::Best,
                max_depth: 1,
                min_samples_split: 0.0,
            },
            &ds,
            0,
        )
        .unwrap();
        let partition = AspectPartition::singletons(&ds.column_names());
        let imp =
            aspect_permutation_importance(&stump, &ds, &partition, Metric::Accuracy, 5, 1)
                .unwrap();
        // the stump reads one feature; at least one other has drop exactly 0
        assert!(imp.mean_drop.iter().filter(|&&d| d == 0.0).count() >= 1);
        // bookkeeping: baseline - drop = permuted score
        for j in 0..3 {
            assert!((imp.baseline - imp.mean_drop[j] - imp.permuted_mean[j]).abs() < 1e-9);
        }
    }

    #[test]
    fn singleton_partition_matches_feature_kernel_shap_exactly() {
        use crate::explain::{kernel_shap_named, BackgroundSet};
        let (model, ds) = trained_on_duplicated_signal();
        let bg = BackgroundSet::from_dataset(&ds.subset_rows(&[0, 1, 2, 3]), &model).unwrap();
        let x: Vec<f64> = ds.values.row(7).to_vec();
        let partition = AspectPartition::singletons(&ds.column_names());
        let via_aspects = aspect_shap(&model, &bg, &x, &partition, 64, 9).unwrap();
        let via_features =
            kernel_shap_named(&model, &bg, &x, &ds.column_names(), 64, 9).unwrap();
        assert_eq!(via_aspects.phi, via_features.phi);
        assert_eq!(via_aspects.base_value, via_features.base_value);
    }

    #[test]
    fn aspect_shap_matches_exact_enumeration_with_aspects_as_players() {
        use crate::explain::BackgroundSet;
        let f = |row: &[f64]| {
            (row[0] + row[1] * 0.5 - row[2] * row[3] + 0.2 * (row[4] + row[5])
                + row[6] * 0.1
                - row[7] * 0.3)
                .tanh()
                * 0.5
                + 0.5
        };
        let mut rng = crate::util::rng_stream(17, &[0xce]);
        use rand::Rng;
        let bg_rows: Vec<Vec<f64>> =
            (0..4).map(|_| (0..8).map(|_| rng.random::<f64>()).collect()).collect();
        let bg = BackgroundSet::new(Array2::from_shape_fn((4, 8), |(i, j)| bg_rows[i][j]))
            .unwrap();
        let x: Vec<f64> = (0..8).map(|_| rng.random::<f64>()).collect();
        let groups = vec![vec![0, 1], vec![2, 3], vec![4, 5], vec![6, 7]];
        let partition = AspectPartition {
            aspects: groups
                .iter()
                .enumerate()
                .map(|(k, g)| Aspect {
                    name: format!("aspect_{}", k + 1),
                    features: g.clone(),
                    feature_names: g.iter().map(|&i| format!("f{i}")).collect(),
                })
                .collect(),
            threshold: 0.5,
        };
        // a 16-mask budget fully enumerates the 4-player domain
        let estimated = aspect_shap(&f, &bg, &x, &partition, 16, 2).unwrap();
        let (base, phi) =
            statsuite::oracle_shapley(&|r: &[f64]| f(r), &bg_rows, &x, &groups).unwrap();
        assert!((estimated.base_value - base).abs() < 1e-6);
        for k in 0..4 {
            assert!(
                (estimated.phi[k] - phi[k]).abs() < 1e-6,
                "aspect {k}: {} vs {}",
                estimated.phi[k],
                phi[k]
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn lowering_h_only_merges_never_splits(values in proptest::collection::vec(0.0f64..1.0, 15)) {
            // random symmetric correlation matrix over 6 features
            let n = 6;
            let mut rho = Array2::eye(n);
            let mut it = values.into_iter();
            for i in 0..n {
                for j in i + 1..n {
                    let v = it.next().unwrap();
                    rho[[i, j]] = v;
                    rho[[j, i]] = v;
                }
            }
            let dend = build_dendrogram(&rho, &labels(n)).unwrap();
            let coarse = cut_aspects(&dend, 0.3).unwrap();
            let fine = cut_aspects(&dend, 0.7).unwrap();
            // refinement: every fine aspect is contained in one coarse aspect
            for fa in &fine.aspects {
                let hit = coarse.aspects.iter().filter(|ca| {
                    fa.features.iter().all(|f| ca.features.contains(f))
                }).count();
                prop_assert_eq!(hit, 1);
            }
        }
    }
}
