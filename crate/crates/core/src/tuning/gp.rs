//! Gaussian process surrogate on the unit cube with a Matern 5/2 kernel and
//! the lower-confidence-bound acquisition.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};

const JITTER: f64 = 1e-8;
/// Length-scale grid: 7 log-spaced values.
const LENGTH_SCALES: [f64; 7] = [0.05, 0.1083, 0.2345, 0.5078, 1.0997, 2.3813, 5.0];
/// Noise grid relative to the target variance.
const NOISE_FRACS: [f64; 4] = [1e-6, 1e-4, 1e-2, 1e-1];

fn matern52(r: f64, length_scale: f64) -> f64 {
    let z = 5f64.sqrt() * r / length_scale;
    (1.0 + z + z * z / 3.0) * (-z).exp()
}

fn euclid(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// One hyperparameter combination tried during the fit, with its log
/// marginal likelihood.
#[derive(Debug, Clone, Copy)]
pub struct GpFitCandidate {
    pub length_scale: f64,
    pub noise: f64,
    pub log_marginal_likelihood: f64,
    pub selected: bool,
}

/// Fitted surrogate: mean-centered targets, amplitude fixed at the target
/// variance, length scale and noise chosen by maximizing the log marginal
/// likelihood over a small grid.
pub struct GPSurrogate {
    inputs: Vec<Vec<f64>>,
    y_mean: f64,
    amplitude: f64,
    length_scale: f64,
    noise: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    fit_trace: Vec<GpFitCandidate>,
}

pub fn gp_fit(inputs: &[Vec<f64>], targets: &[f64]) -> Result<GPSurrogate> {
    let n = inputs.len();
    if n < 2 || targets.len() != n {
        return Err(Error::Data("GP fit needs at least 2 matching observations".into()));
    }
    let dims = inputs[0].len();
    if inputs.iter().any(|v| v.len() != dims) {
        return Err(Error::Data("GP inputs must share one dimension".into()));
    }
    let y_mean = targets.iter().sum::<f64>() / n as f64;
    let centered = DVector::from_iterator(n, targets.iter().map(|&y| y - y_mean));
    let var_y = centered.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let amplitude = var_y.max(1e-12);

    let mut dist = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let d = euclid(&inputs[i], &inputs[j]);
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }

    let mut best: Option<(f64, f64, f64, Cholesky<f64, Dyn>, DVector<f64>)> = None;
    let mut fit_trace = Vec::with_capacity(LENGTH_SCALES.len() * NOISE_FRACS.len());
    for &ls in &LENGTH_SCALES {
        for &nf in &NOISE_FRACS {
            let noise = nf * amplitude;
            let mut k = DMatrix::from_fn(n, n, |i, j| amplitude * matern52(dist[(i, j)], ls));
            for i in 0..n {
                k[(i, i)] += noise + JITTER;
            }
            let Some(chol) = Cholesky::new(k) else {
                fit_trace.push(GpFitCandidate {
                    length_scale: ls,
                    noise,
                    log_marginal_likelihood: f64::NEG_INFINITY,
                    selected: false,
                });
                continue;
            };
            let alpha = chol.solve(&centered);
            let log_det: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum::<f64>() * 2.0;
            let lml = -0.5 * centered.dot(&alpha)
                - 0.5 * log_det
                - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();
            fit_trace.push(GpFitCandidate {
                length_scale: ls,
                noise,
                log_marginal_likelihood: lml,
                selected: false,
            });
            if best.as_ref().is_none_or(|(b, ..)| lml > *b) {
                best = Some((lml, ls, noise, chol, alpha));
            }
        }
    }
    let (best_lml, length_scale, noise, chol, alpha) =
        best.ok_or_else(|| Error::Numeric("GP grid produced no valid factorization".into()))?;
    for c in fit_trace.iter_mut() {
        if c.length_scale == length_scale && c.noise == noise {
            c.selected = (c.log_marginal_likelihood - best_lml).abs() < 1e-12;
        }
    }
    Ok(GPSurrogate {
        inputs: inputs.to_vec(),
        y_mean,
        amplitude,
        length_scale,
        noise,
        chol,
        alpha,
        fit_trace,
    })
}

impl GPSurrogate {
    pub fn dims(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn fit_trace(&self) -> &[GpFitCandidate] {
        &self.fit_trace
    }

    /// (length scale, noise variance) selected by the grid search.
    pub fn kernel_params(&self) -> (f64, f64) {
        (self.length_scale, self.noise)
    }

    /// Posterior mean and standard deviation of the latent function.
    pub fn predict(&self, x: &[f64]) -> Result<(f64, f64)> {
        if x.len() != self.dims() {
            return Err(Error::Data(format!(
                "query has {} dimensions, GP was fitted on {}",
                x.len(),
                self.dims()
            )));
        }
        let n = self.inputs.len();
        let kstar = DVector::from_iterator(
            n,
            self.inputs
                .iter()
                .map(|xi| self.amplitude * matern52(euclid(xi, x), self.length_scale)),
        );
        let mu = self.y_mean + kstar.dot(&self.alpha);
        let v = self.chol.l_dirty().solve_lower_triangular(&kstar).ok_or_else(|| {
            Error::Numeric("triangular solve failed in GP prediction".into())
        })?;
        let var = (self.amplitude - v.dot(&v)).max(0.0);
        Ok((mu, var.sqrt()))
    }
}

/// Lower confidence bound on a minimized objective: mu - sigma.
pub fn acquisition_lcb(mu: f64, sigma: f64) -> f64 {
    debug_assert!(sigma >= 0.0);
    mu - sigma
}
