//! Logistic regression fitted by iteratively reweighted least squares.

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::util::{sigmoid, solve_spd};

/// P(Y=1|x) = sigmoid(intercept + x . theta). The intercept is never
/// penalized.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LogregModel {
    pub intercept: f64,
    pub theta: Vec<f64>,
}

const MAX_ITER: usize = 100;
const TOL: f64 = 1e-8;

/// Fits with ridge strength 1/C on the coefficients; `ridge = 1e-10` stands
/// in for the unpenalized model to keep the normal matrix conditioned.
pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], ridge: f64) -> Result<LogregModel> {
    let n = x.nrows();
    let d = x.ncols();
    // design with a leading intercept column
    let mut design = Array2::ones((n, d + 1));
    design.slice_mut(ndarray::s![.., 1..]).assign(&x);
    let yv: Vec<f64> = y.iter().map(|&l| l as f64).collect();

    let mut beta = Array1::zeros(d + 1);
    for _ in 0..MAX_ITER {
        let eta: Vec<f64> = (0..n)
            .map(|i| design.row(i).iter().zip(beta.iter()).map(|(a, b)| a * b).sum())
            .collect();
        let p: Vec<f64> = eta.iter().map(|&e| sigmoid(e)).collect();
        let w: Vec<f64> = p.iter().map(|&pi| (pi * (1.0 - pi)).max(1e-10)).collect();
        // working response z = eta + (y - p)/w
        let z: Vec<f64> = (0..n).map(|i| eta[i] + (yv[i] - p[i]) / w[i]).collect();

        let mut xtwx = Array2::zeros((d + 1, d + 1));
        let mut xtwz = Array1::zeros(d + 1);
        for i in 0..n {
            let row = design.row(i);
            for a in 0..d + 1 {
                let wa = w[i] * row[a];
                xtwz[a] += wa * z[i];
                for b in a..d + 1 {
                    xtwx[[a, b]] += wa * row[b];
                }
            }
        }
        for a in 0..d + 1 {
            for b in 0..a {
                xtwx[[a, b]] = xtwx[[b, a]];
            }
        }
        for j in 1..d + 1 {
            xtwx[[j, j]] += ridge;
        }

        let next = solve_spd(&xtwx, &xtwz)
            .ok_or_else(|| Error::Numeric("IRLS normal equations are singular".into()))?;
        let delta = next
            .iter()
            .zip(beta.iter())
            .map(|(a, b): (&f64, &f64)| (a - b).abs())
            .fold(0.0f64, f64::max);
        beta = next;
        if delta < TOL {
            break;
        }
    }
    Ok(LogregModel { intercept: beta[0], theta: beta.iter().skip(1).copied().collect() })
}

impl LogregModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let z = self.intercept
            + self.theta.iter().zip(row).map(|(t, v)| t * v).sum::<f64>();
        sigmoid(z)
    }
}
