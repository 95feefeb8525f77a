//! Latin Hypercube initialization on the unit cube.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::util::rng_stream;

/// `n` points in [0,1]^d where every dimension has exactly one sample in
/// each of the n equidistant intervals [k/n, (k+1)/n); dimension columns are
/// permuted independently.
pub fn lhd_unit(dims: usize, n: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    if dims == 0 {
        return Err(Error::Config("empty search space".into()));
    }
    if n < 2 {
        return Err(Error::Config(format!("LHD needs at least 2 samples, got {n}")));
    }
    let mut design = vec![vec![0.0; dims]; n];
    for dim in 0..dims {
        let mut rng = rng_stream(seed, &[0x14d, dim as u64]);
        let mut column: Vec<f64> =
            (0..n).map(|k| (k as f64 + rng.random::<f64>()) / n as f64).collect();
        column.shuffle(&mut rng);
        for (row, &v) in column.iter().enumerate() {
            design[row][dim] = v;
        }
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn occupies_each_interval(column: &[f64]) -> bool {
        let n = column.len();
        let mut seen = vec![false; n];
        for &v in column {
            let k = ((v * n as f64).floor() as usize).min(n - 1);
            if seen[k] {
                return false;
            }
            seen[k] = true;
        }
        seen.iter().all(|&s| s)
    }

    #[test]
    fn one_sample_per_interval_in_1d() {
        let design = lhd_unit(1, 10, 3).unwrap();
        let column: Vec<f64> = design.iter().map(|r| r[0]).collect();
        assert!(occupies_each_interval(&column));
    }

    #[test]
    fn marginals_stratified_in_2d() {
        let design = lhd_unit(2, 10, 8).unwrap();
        for dim in 0..2 {
            let column: Vec<f64> = design.iter().map(|r| r[dim]).collect();
            assert!(occupies_each_interval(&column), "dim {dim}");
        }
    }

    #[test]
    fn deterministic_under_seed_and_columns_shuffled_independently() {
        let a = lhd_unit(3, 12, 5).unwrap();
        let b = lhd_unit(3, 12, 5).unwrap();
        assert_eq!(a, b);
        let c = lhd_unit(3, 12, 6).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_inputs_error() {
        assert!(lhd_unit(0, 10, 0).is_err());
        assert!(lhd_unit(2, 1, 0).is_err());
    }
}
