//! Shared numeric helpers: seeded RNG streams, ranking, small dense solves.

use ndarray::{Array1, Array2};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives an independent RNG from a root seed and a stream path.
///
/// Every randomized routine in the crate draws from a stream identified by
/// (seed, path), so concurrent work is order-independent and a whole run is
/// reproducible from a single seed.
pub fn rng_stream(seed: u64, path: &[u64]) -> ChaCha8Rng {
    let mut state = seed ^ 0x9e37_79b9_7f4a_7c15;
    for &p in path {
        state = splitmix64(state.wrapping_add(p).wrapping_mul(0xff51_afd7_ed55_8ccd));
    }
    ChaCha8Rng::seed_from_u64(state)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Midranks (1-based) of `values`; tied values share the average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Sample mean and standard deviation (n-1 denominator; std is 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, 0.0);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, var.sqrt())
}

pub fn round_half_up(x: f64) -> f64 {
    (x + 0.5).floor()
}

/// Solves the symmetric positive definite system `a * x = b` by Cholesky,
/// escalating a diagonal jitter until factorization succeeds.
pub fn solve_spd(a: &Array2<f64>, b: &Array1<f64>) -> Option<Array1<f64>> {
    let n = a.nrows();
    debug_assert_eq!(n, a.ncols());
    debug_assert_eq!(n, b.len());
    let mut m = nalgebra::DMatrix::from_fn(n, n, |i, j| a[[i, j]]);
    let rhs = nalgebra::DVector::from_fn(n, |i, _| b[i]);
    let mut jitter = 0.0;
    for _ in 0..8 {
        if jitter > 0.0 {
            for i in 0..n {
                m[(i, i)] += jitter;
            }
        }
        if let Some(chol) = m.clone().cholesky() {
            let x = chol.solve(&rhs);
            return Some(Array1::from_iter(x.iter().copied()));
        }
        let scale = (0..n).map(|i| m[(i, i)].abs()).fold(1e-12, f64::max);
        jitter = if jitter == 0.0 { scale * 1e-10 } else { jitter * 100.0 };
    }
    None
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
