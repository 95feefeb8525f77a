//! Brute-force reference implementations ("oracles") used by the tabsight
//! test suites. Every function here trades efficiency for obviousness and
//! shares no code with the implementation it validates.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Exhaustive Shapley values by direct subset enumeration.
///
/// Players are groups of column indices; a player is "present" when the
/// subject's own values fill its columns, otherwise background values do.
/// The value of a coalition is the prediction averaged over background rows.
/// Refuses more than 15 players.
pub fn oracle_shapley(
    predict: &dyn Fn(&[f64]) -> f64,
    background: &[Vec<f64>],
    x: &[f64],
    players: &[Vec<usize>],
) -> Result<(f64, Vec<f64>), String> {
    let m = players.len();
    if m > 15 {
        return Err(format!("{m} players exceed the enumeration limit of 15"));
    }
    let coalition_value = |mask: usize| -> f64 {
        let mut total = 0.0;
        for row in background {
            let mut z = row.clone();
            for (p, cols) in players.iter().enumerate() {
                if mask & (1 << p) != 0 {
                    for &c in cols {
                        z[c] = x[c];
                    }
                }
            }
            total += predict(&z);
        }
        total / background.len() as f64
    };
    let values: Vec<f64> = (0..1usize << m).map(coalition_value).collect();
    let fact: Vec<f64> = (0..=m).scan(1.0, |acc, k| {
        if k > 0 {
            *acc *= k as f64;
        }
        Some(*acc)
    }).collect();
    let mut phi = vec![0.0; m];
    for (i, p) in phi.iter_mut().enumerate() {
        for mask in 0..1usize << m {
            if mask & (1 << i) != 0 {
                continue;
            }
            let s = (mask as u32).count_ones() as usize;
            let w = fact[s] * fact[m - s - 1] / fact[m];
            *p += w * (values[mask | (1 << i)] - values[mask]);
        }
    }
    Ok((values[0], phi))
}

/// Kendall tau-b by explicit double loop with tie bookkeeping.
pub fn oracle_kendall(a: &[f64], b: &[f64]) -> Result<f64, String> {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n < 2 {
        return Err("fewer than 2 observations".into());
    }
    let (mut conc, mut disc, mut tie_a, mut tie_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                tie_a += 1;
                tie_b += 1;
            } else if da == 0.0 {
                tie_a += 1;
            } else if db == 0.0 {
                tie_b += 1;
            } else if da * db > 0.0 {
                conc += 1;
            } else {
                disc += 1;
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as f64;
    let denom = ((n0 - tie_a as f64) * (n0 - tie_b as f64)).sqrt();
    if denom == 0.0 {
        return Err("correlation undefined: one input is fully tied".into());
    }
    Ok((conc - disc) as f64 / denom)
}

/// Exact two-sided Wilcoxon signed-rank p-value by enumerating all 2^n sign
/// assignments of the rank statistic. Zero differences are dropped first;
/// all-zero input yields p = 1. Refuses more than 20 nonzero differences.
pub fn oracle_wilcoxon(differences: &[f64]) -> Result<f64, String> {
    let d: Vec<f64> = differences.iter().copied().filter(|&v| v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Ok(1.0);
    }
    if n > 20 {
        return Err(format!("{n} nonzero differences exceed the enumeration limit of 20"));
    }
    // midranks of |d|, doubled so every statistic is an exact integer
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let ranks2: Vec<i64> = (0..n)
        .map(|i| {
            let less = abs.iter().filter(|&&v| v < abs[i]).count() as i64;
            let equal = abs.iter().filter(|&&v| v == abs[i]).count() as i64;
            2 * less + equal + 1 // 2*(average rank)
        })
        .collect();
    let observed: i64 = (0..n).filter(|&i| d[i] > 0.0).map(|i| ranks2[i]).sum();
    let total: i64 = ranks2.iter().sum();
    let (lo, hi) = (observed.min(total - observed), observed.max(total - observed));
    let mut extreme = 0u64;
    for signs in 0..1u64 << n {
        let w: i64 = (0..n).filter(|&i| signs & (1 << i) != 0).map(|i| ranks2[i]).sum();
        if w <= lo || w >= hi {
            extreme += 1;
        }
    }
    Ok(extreme as f64 / (1u64 << n) as f64)
}

/// Friedman reference: the chi-square statistic recomputed from scratch plus
/// a within-row permutation estimate of its null tail probability.
pub fn oracle_friedman(rows: &[Vec<f64>], n_perm: usize, seed: u64) -> (f64, f64) {
    let stat = friedman_stat(rows);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut at_least = 0usize;
    let mut shuffled: Vec<Vec<f64>> = rows.to_vec();
    for _ in 0..n_perm {
        for row in shuffled.iter_mut() {
            row.shuffle(&mut rng);
        }
        if friedman_stat(&shuffled) >= stat - 1e-12 {
            at_least += 1;
        }
    }
    (stat, at_least as f64 / n_perm as f64)
}

fn friedman_stat(rows: &[Vec<f64>]) -> f64 {
    let (n, k) = (rows.len(), rows[0].len());
    let mut rank_sums = vec![0.0; k];
    let mut sq_sum = 0.0;
    for row in rows {
        for j in 0..k {
            let less = row.iter().filter(|&&v| v < row[j]).count() as f64;
            let equal = row.iter().filter(|&&v| v == row[j]).count() as f64;
            let r = less + (equal + 1.0) / 2.0;
            rank_sums[j] += r;
            sq_sum += r * r;
        }
    }
    let (nf, kf) = (n as f64, k as f64);
    let numer: f64 = (kf - 1.0)
        * rank_sums.iter().map(|&r| (r - nf * (kf + 1.0) / 2.0).powi(2)).sum::<f64>();
    let denom = sq_sum - nf * kf * (kf + 1.0) * (kf + 1.0) / 4.0;
    if denom <= 0.0 { 0.0 } else { numer / denom }
}

/// AUROC by counting pairwise wins of positive over negative scores
/// (ties count one half).
pub fn oracle_auroc(labels: &[u8], scores: &[f64]) -> Result<f64, String> {
    let pos: Vec<f64> = scores.iter().zip(labels).filter(|(_, &y)| y == 1).map(|(&s, _)| s).collect();
    let neg: Vec<f64> = scores.iter().zip(labels).filter(|(_, &y)| y == 0).map(|(&s, _)| s).collect();
    if pos.is_empty() || neg.is_empty() {
        return Err("both classes must be present".into());
    }
    let mut wins = 0.0;
    for &p in &pos {
        for &q in &neg {
            if p > q {
                wins += 1.0;
            } else if p == q {
                wins += 0.5;
            }
        }
    }
    Ok(wins / (pos.len() * neg.len()) as f64)
}

/// Literal transcription of the contingency-table score formulas.
/// Returns (acc, bacc, f1_macro, mcc).
pub fn oracle_scores(tp: u64, fp: u64, fne: u64, tn: u64) -> (f64, f64, f64, f64) {
    let (tp, fp, fne, tn) = (tp as f64, fp as f64, fne as f64, tn as f64);
    let acc = (tp + tn) / (tp + tn + fp + fne);
    let tpr = if tp + fne > 0.0 { tp / (tp + fne) } else { 0.0 };
    let tnr = if tn + fp > 0.0 { tn / (tn + fp) } else { 0.0 };
    let bacc = (tpr + tnr) / 2.0;
    let f1_pos = if tp + 0.5 * (fp + fne) > 0.0 { tp / (tp + 0.5 * (fp + fne)) } else { 0.0 };
    let f1_neg = if tn + 0.5 * (fne + fp) > 0.0 { tn / (tn + 0.5 * (fne + fp)) } else { 0.0 };
    let f1_macro = (f1_pos + f1_neg) / 2.0;
    let denom = ((tp + fp) * (tp + fne) * (tn + fp) * (tn + fne)).sqrt();
    let mcc = if denom == 0.0 { 0.0 } else { (tp * tn - fp * fne) / denom };
    (acc, bacc, f1_macro, mcc)
}

/// Exhaustive best decision stump: every feature, every threshold between
/// consecutive sorted values. Returns (feature, threshold, training accuracy).
pub fn oracle_best_stump(x: &[Vec<f64>], y: &[u8]) -> (usize, f64, f64) {
    let n = x.len();
    let d = x[0].len();
    let mut best = (0usize, 0.0f64, 0.0f64);
    for j in 0..d {
        let mut vals: Vec<f64> = x.iter().map(|row| row[j]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).unwrap());
        vals.dedup();
        for w in vals.windows(2) {
            let t = (w[0] + w[1]) / 2.0;
            for (left_class, right_class) in [(0u8, 1u8), (1u8, 0u8)] {
                let correct = (0..n)
                    .filter(|&i| y[i] == if x[i][j] <= t { left_class } else { right_class })
                    .count();
                let acc = correct as f64 / n as f64;
                if acc > best.2 {
                    best = (j, t, acc);
                }
            }
        }
    }
    best
}
