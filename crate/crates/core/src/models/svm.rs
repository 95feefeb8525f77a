//! Soft-margin SVM trained by sequential minimal optimization, with a
//! logistic calibration fitted on training decision values.

use ndarray::ArrayView2;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{rng_stream, sigmoid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// (gamma * <x, z>)^degree
    Poly { degree: u32, gamma: f64 },
    /// exp(-gamma * |x - z|^2)
    Radial { gamma: f64 },
}

impl Kernel {
    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Poly { degree, gamma } => {
                let dot: f64 = a.iter().zip(b).map(|(x, z)| x * z).sum();
                (gamma * dot).powi(degree as i32)
            }
            Kernel::Radial { gamma } => {
                let sq: f64 = a.iter().zip(b).map(|(x, z)| (x - z) * (x - z)).sum();
                (-gamma * sq).exp()
            }
        }
    }
}

/// How the kernel width is derived from the training matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GammaMode {
    /// 1 / (n_features * Var(X)) with the population variance of all entries.
    Scale,
    /// 1 / n_features.
    Auto,
}

impl GammaMode {
    pub fn resolve(self, x: ArrayView2<'_, f64>) -> f64 {
        let d = x.ncols() as f64;
        match self {
            GammaMode::Auto => 1.0 / d,
            GammaMode::Scale => {
                let n = (x.nrows() * x.ncols()) as f64;
                let mean = x.iter().sum::<f64>() / n;
                let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
                1.0 / (d * var.max(1e-12))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub support_vectors: Vec<Vec<f64>>,
    /// alpha_i * y_i for each support vector.
    pub dual_coef: Vec<f64>,
    pub bias: f64,
    /// Platt calibration: P(y=1|f) = sigmoid(-(a*f + b)).
    pub platt_a: f64,
    pub platt_b: f64,
}

const SMO_TOL: f64 = 1e-3;
const EPS: f64 = 1e-12;

struct Smo {
    /// labels in {-1, +1}
    y: Vec<f64>,
    c: f64,
    alpha: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
    kcache: Vec<f64>,
    n: usize,
}

impl Smo {
    fn new(x: ArrayView2<'_, f64>, y01: &[u8], c: f64, kernel: Kernel) -> Self {
        let n = x.nrows();
        let y: Vec<f64> = y01.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
        let mut kcache = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let k = kernel.eval(x.row(i).to_slice().unwrap(), x.row(j).to_slice().unwrap());
                kcache[i * n + j] = k;
                kcache[j * n + i] = k;
            }
        }
        let errors: Vec<f64> = y.iter().map(|&yi| -yi).collect(); // f = 0 initially
        Smo { y, c, alpha: vec![0.0; n], bias: 0.0, errors, kcache, n }
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        self.kcache[i * self.n + j]
    }

    /// Optimizes the (i1, i2) pair; returns true when an alpha moved.
    fn step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (a1, a2) = (self.alpha[i1], self.alpha[i2]);
        let (y1, y2) = (self.y[i1], self.y[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let (lo, hi) = if s < 0.0 {
            ((a2 - a1).max(0.0), (self.c + a2 - a1).min(self.c))
        } else {
            ((a1 + a2 - self.c).max(0.0), (a1 + a2).min(self.c))
        };
        if hi - lo < EPS {
            return false;
        }
        let eta = self.k(i1, i1) + self.k(i2, i2) - 2.0 * self.k(i1, i2);
        let a2_new = if eta > EPS {
            (a2 + y2 * (e1 - e2) / eta).clamp(lo, hi)
        } else {
            // flat direction: evaluate the objective at both ends
            let f1 = y1 * (e1 + self.bias) - a1 * self.k(i1, i1) - s * a2 * self.k(i1, i2);
            let f2 = y2 * (e2 + self.bias) - s * a1 * self.k(i1, i2) - a2 * self.k(i2, i2);
            let l1 = a1 + s * (a2 - lo);
            let h1 = a1 + s * (a2 - hi);
            let obj_lo = l1 * f1 + lo * f2 + 0.5 * l1 * l1 * self.k(i1, i1)
                + 0.5 * lo * lo * self.k(i2, i2)
                + s * lo * l1 * self.k(i1, i2);
            let obj_hi = h1 * f1 + hi * f2 + 0.5 * h1 * h1 * self.k(i1, i1)
                + 0.5 * hi * hi * self.k(i2, i2)
                + s * hi * h1 * self.k(i1, i2);
            if obj_lo < obj_hi - EPS {
                lo
            } else if obj_hi < obj_lo - EPS {
                hi
            } else {
                a2
            }
        };
        if (a2_new - a2).abs() < EPS * (a2_new + a2 + EPS) {
            return false;
        }
        let a1_new = a1 + s * (a2 - a2_new);

        let b1 = e1 + y1 * (a1_new - a1) * self.k(i1, i1) + y2 * (a2_new - a2) * self.k(i1, i2)
            + self.bias;
        let b2 = e2 + y1 * (a1_new - a1) * self.k(i1, i2) + y2 * (a2_new - a2) * self.k(i2, i2)
            + self.bias;
        let new_bias = if a1_new > EPS && a1_new < self.c - EPS {
            b1
        } else if a2_new > EPS && a2_new < self.c - EPS {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let db = new_bias - self.bias;
        for i in 0..self.n {
            self.errors[i] += y1 * (a1_new - a1) * self.k(i1, i)
                + y2 * (a2_new - a2) * self.k(i2, i)
                - db;
        }
        self.alpha[i1] = a1_new;
        self.alpha[i2] = a2_new;
        self.bias = new_bias;
        true
    }

    /// Examines one candidate, choosing the partner by maximal |E1 - E2|.
    fn examine(&mut self, i2: usize, rng: &mut rand_chacha::ChaCha8Rng) -> bool {
        let y2 = self.y[i2];
        let a2 = self.alpha[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let violates =
            (r2 < -SMO_TOL && a2 < self.c - EPS) || (r2 > SMO_TOL && a2 > EPS);
        if !violates {
            return false;
        }
        // best heuristic partner first
        let non_bound: Vec<usize> = (0..self.n)
            .filter(|&i| self.alpha[i] > EPS && self.alpha[i] < self.c - EPS)
            .collect();
        if non_bound.len() > 1 {
            let i1 = non_bound
                .iter()
                .copied()
                .max_by(|&a, &b| {
                    let da = (self.errors[a] - e2).abs();
                    let db = (self.errors[b] - e2).abs();
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            if self.step(i1, i2) {
                return true;
            }
        }
        let start = rng.random_range(0..self.n);
        for off in 0..non_bound.len() {
            let i1 = non_bound[(start + off) % non_bound.len()];
            if self.step(i1, i2) {
                return true;
            }
        }
        for off in 0..self.n {
            let i1 = (start + off) % self.n;
            if self.step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn solve(&mut self, seed: u64) {
        let mut rng = rng_stream(seed, &[0x53b0]);
        let max_passes = 10 * self.n.max(10);
        let mut examine_all = true;
        for _ in 0..max_passes {
            let mut changed = 0usize;
            if examine_all {
                for i in 0..self.n {
                    changed += self.examine(i, &mut rng) as usize;
                }
            } else {
                for i in 0..self.n {
                    if self.alpha[i] > EPS && self.alpha[i] < self.c - EPS {
                        changed += self.examine(i, &mut rng) as usize;
                    }
                }
            }
            if examine_all {
                if changed == 0 {
                    break;
                }
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
    }

    /// Largest KKT violation over the training points.
    fn max_kkt_violation(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let r = self.errors[i] * self.y[i];
                let a = self.alpha[i];
                if a < EPS {
                    (-r).max(0.0)
                } else if a > self.c - EPS {
                    r.max(0.0)
                } else {
                    r.abs()
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Platt scaling per Lin, Lin & Weng: Newton iterations with backtracking on
/// the regularized target log-likelihood.
fn fit_platt(decision: &[f64], y: &[u8]) -> (f64, f64) {
    let n = decision.len();
    let n_pos = y.iter().filter(|&&l| l == 1).count() as f64;
    let n_neg = n as f64 - n_pos;
    let (t_pos, t_neg) = ((n_pos + 1.0) / (n_pos + 2.0), 1.0 / (n_neg + 2.0));
    let t: Vec<f64> = y.iter().map(|&l| if l == 1 { t_pos } else { t_neg }).collect();

    let mut a = 0.0f64;
    let mut b = ((n_neg + 1.0) / (n_pos + 1.0)).ln();
    let nll = |a: f64, b: f64| -> f64 {
        decision
            .iter()
            .zip(&t)
            .map(|(&f, &ti)| {
                let z = a * f + b;
                // t*z + log(1 + exp(-z)) stabilized
                if z >= 0.0 {
                    ti * z + (-z).exp().ln_1p()
                } else {
                    (ti - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let mut fval = nll(a, b);
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21) = (1e-12, 1e-12, 0.0);
        let (mut g1, mut g2) = (0.0, 0.0);
        for (&f, &ti) in decision.iter().zip(&t) {
            let p = sigmoid(-(a * f + b));
            let d1 = ti - p;
            let d2 = p * (1.0 - p);
            g1 += f * d1;
            g2 += d1;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
        }
        if g1.abs() < 1e-10 && g2.abs() < 1e-10 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        loop {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = nll(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
            if step < 1e-10 {
                return (a, b);
            }
        }
    }
    (a, b)
}

/// Trains the SVM and reports the final maximal KKT violation.
pub fn fit(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    c: f64,
    kernel: Kernel,
    seed: u64,
) -> Result<(SvmModel, f64)> {
    if x.nrows() < 2 {
        return Err(Error::Data("SVM needs at least 2 training rows".into()));
    }
    let mut smo = Smo::new(x, y, c, kernel);
    smo.solve(seed);
    let kkt = smo.max_kkt_violation();

    let decision: Vec<f64> = (0..smo.n).map(|i| smo.errors[i] + smo.y[i]).collect();
    let (platt_a, platt_b) = fit_platt(&decision, y);

    let mut support_vectors = Vec::new();
    let mut dual_coef = Vec::new();
    for i in 0..smo.n {
        if smo.alpha[i] > EPS {
            support_vectors.push(x.row(i).to_vec());
            dual_coef.push(smo.alpha[i] * smo.y[i]);
        }
    }
    Ok((
        SvmModel { kernel, support_vectors, dual_coef, bias: smo.bias, platt_a, platt_b },
        kkt,
    ))
}

impl SvmModel {
    pub fn decision_value(&self, row: &[f64]) -> f64 {
        let sum: f64 = self
            .support_vectors
            .iter()
            .zip(&self.dual_coef)
            .map(|(sv, &coef)| coef * self.kernel.eval(sv, row))
            .sum();
        sum - self.bias
    }

    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let f = self.decision_value(row);
        sigmoid(-(self.platt_a * f + self.platt_b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr2, Array2};
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, gap: f64, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = rng_stream(seed, &[0]);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let mut x = Array2::zeros((n, 2));
        let mut y = Vec::with_capacity(n);
        for i in 0..n {
            let label = (i % 2) as u8;
            let c = if label == 1 { gap } else { -gap };
            x[[i, 0]] = c + normal.sample(&mut rng);
            x[[i, 1]] = normal.sample(&mut rng);
            y.push(label);
        }
        (x, y)
    }

    #[test]
    fn radial_svm_separates_blobs_with_small_kkt_violation() {
        let (x, y) = blobs(80, 3.0, 7);
        let gamma = GammaMode::Scale.resolve(x.view());
        let (m, kkt) = fit(x.view(), &y, 1.0, Kernel::Radial { gamma }, 3).unwrap();
        assert!(kkt <= 1e-3, "KKT violation {kkt}");
        let correct = (0..x.nrows())
            .filter(|&i| (m.predict_row(&x.row(i).to_vec()) >= 0.5) as u8 == y[i])
            .count();
        assert!(correct as f64 / x.nrows() as f64 >= 0.95);
    }

    #[test]
    fn poly_kernel_solves_quadratic_boundary() {
        // class by |x| with a degree-2 kernel
        let xs: Vec<f64> = vec![-2.0, -1.8, -1.5, 1.5, 1.8, 2.0, -0.5, -0.3, 0.0, 0.3, 0.5, 0.1];
        let y: Vec<u8> = xs.iter().map(|&v| (v.abs() > 1.0) as u8).collect();
        let x = Array2::from_shape_vec((12, 1), xs).unwrap();
        let (m, kkt) = fit(x.view(), &y, 10.0, Kernel::Poly { degree: 2, gamma: 1.0 }, 5).unwrap();
        assert!(kkt <= 1e-3);
        let correct = (0..12)
            .filter(|&i| (m.predict_row(&[x[[i, 0]]]) >= 0.5) as u8 == y[i])
            .count();
        assert!(correct >= 11, "{correct}/12");
    }

    #[test]
    fn calibration_is_increasing_in_decision_value() {
        let (x, y) = blobs(60, 2.0, 9);
        let (m, _) = fit(x.view(), &y, 1.0, Kernel::Radial { gamma: 0.5 }, 1).unwrap();
        let mut pairs: Vec<(f64, f64)> = (0..x.nrows())
            .map(|i| {
                let row = x.row(i).to_vec();
                (m.decision_value(&row), m.predict_row(&row))
            })
            .collect();
        pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        for w in pairs.windows(2) {
            if w[1].0 > w[0].0 + 1e-12 {
                assert!(w[1].1 > w[0].1, "probability not increasing: {w:?}");
            }
        }
    }

    #[test]
    fn gamma_modes_match_definitions() {
        let x = arr2(&[[1.0, 2.0], [3.0, 4.0]]);
        assert!((GammaMode::Auto.resolve(x.view()) - 0.5).abs() < 1e-12);
        // entries 1..4: population variance 1.25; scale = 1/(2 * 1.25)
        assert!((GammaMode::Scale.resolve(x.view()) - 0.4).abs() < 1e-12);
    }
}
