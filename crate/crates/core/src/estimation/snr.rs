// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Signal-to-noise ratio between the main Gaussians of the two preparations.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gmm::{fit_double_gaussian, fit_double_gaussian_with, DoubleGaussianFit};
use crate::error::{Error, Result};
use crate::homodyne::rng::{mix, shot_rng};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrPoint {
    pub epsilon: f64,
    pub snr: f64,
    pub snr_err: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "lowercase", deny_unknown_fields)]
pub enum SnrError {
    /// First-order propagation of the fitted means and widths, each estimated
    /// from `n·frac_main` shots.
    Delta,
    /// Standard deviation over resampled-and-refitted shot sets.
    Bootstrap { resamples: usize, seed: u64 },
}

impl Default for SnrError {
    fn default() -> Self {
        SnrError::Delta
    }
}

fn snr_value(f0: &DoubleGaussianFit, f1: &DoubleGaussianFit) -> f64 {
    let noise = 0.5 * (f0.sigma_main + f1.sigma_main);
    (f1.mu_main - f0.mu_main).abs() / noise
}

/// `|μ₁ − μ₀| / ((σ₀ + σ₁)/2)` with its delta-method standard error.
pub fn compute_snr(fit0: &DoubleGaussianFit, fit1: &DoubleGaussianFit, epsilon: f64) -> SnrPoint {
    let snr = snr_value(fit0, fit1);
    let noise = 0.5 * (fit0.sigma_main + fit1.sigma_main);
    let n0 = fit0.n_shots as f64 * fit0.frac_main;
    let n1 = fit1.n_shots as f64 * fit1.frac_main;
    let var_mu = fit0.sigma_main.powi(2) / n0 + fit1.sigma_main.powi(2) / n1;
    let var_sigma = fit0.sigma_main.powi(2) / (2.0 * n0) + fit1.sigma_main.powi(2) / (2.0 * n1);
    let var = var_mu / noise.powi(2) + snr * snr * var_sigma / (4.0 * noise.powi(2));
    SnrPoint {
        epsilon,
        snr,
        snr_err: var.sqrt(),
    }
}

fn resample(values: &[f64], seed: u64, stream: u64, b: usize) -> Vec<f64> {
    let mut rng = shot_rng(seed, stream, b as u64);
    (0..values.len()).map(|_| values[rng.random_range(0..values.len())]).collect()
}

/// Fit both shot sets and compute the SNR with the requested error estimate.
pub fn snr_from_shots(shots0: &[f64], shots1: &[f64], epsilon: f64, method: SnrError) -> Result<(SnrPoint, [DoubleGaussianFit; 2])> {
    let f0 = fit_double_gaussian(shots0)?;
    let f1 = fit_double_gaussian(shots1)?;
    let mut point = compute_snr(&f0, &f1, epsilon);
    if let SnrError::Bootstrap { resamples, seed } = method {
        if resamples < 200 {
            return Err(Error::invalid(format!("bootstrap needs at least 200 resamples, got {resamples}")));
        }
        let stream = mix(&[epsilon.to_bits()]);
        let fits: Vec<Option<f64>> = (0..resamples)
            .into_par_iter()
            .map(|b| {
                // duplicated shots favour a second component; keep the original model
                let r0 = fit_double_gaussian_with(&resample(shots0, seed, mix(&[stream, 0]), b), f0.components).ok()?;
                let r1 = fit_double_gaussian_with(&resample(shots1, seed, mix(&[stream, 1]), b), f1.components).ok()?;
                Some(snr_value(&r0, &r1))
            })
            .collect();
        // an occasional resample can leave the mixture unidentifiable; too many means the input is
        let draws: Vec<f64> = fits.into_iter().flatten().collect();
        if draws.len() * 10 < resamples * 9 {
            return Err(Error::FitFailure(format!(
                "only {} of {resamples} bootstrap refits succeeded",
                draws.len()
            )));
        }
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = draws.iter().map(|d| (d - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        point.snr_err = v.sqrt();
    }
    Ok((point, [f0, f1]))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(mu: f64, sigma: f64) -> DoubleGaussianFit {
        DoubleGaussianFit {
            mu_main: mu,
            mu_spur: mu,
            sigma_main: sigma,
            sigma_spur: sigma,
            frac_main: 1.0,
            n_shots: 4096,
            components: 1,
            iterations: 0,
            log_likelihood: 0.0,
        }
    }

    #[test]
    fn identical_fits_give_zero() {
        assert_eq!(compute_snr(&fit(1.0, 2.0), &fit(1.0, 2.0), 0.0).snr, 0.0);
    }

    #[test]
    fn definition() {
        let p = compute_snr(&fit(-1.5, 0.5), &fit(1.5, 0.5), 0.1);
        assert!((p.snr - 6.0).abs() < 1e-15);
        assert!(p.snr_err > 0.0);
    }

    #[test]
    fn bootstrap_error_matches_delta_method() {
        use rand::SeedableRng;
        use rand_distr::StandardNormal;
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(9);
        let a: Vec<f64> = (0..1500).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let b: Vec<f64> = (0..1500).map(|_| 2.0 + rng.sample::<f64, _>(StandardNormal)).collect();
        let (d, _) = snr_from_shots(&a, &b, 1.0, SnrError::Delta).unwrap();
        let (s, _) = snr_from_shots(&a, &b, 1.0, SnrError::Bootstrap { resamples: 200, seed: 1 }).unwrap();
        assert_eq!(d.snr, s.snr);
        assert!((s.snr_err / d.snr_err - 1.0).abs() < 0.25, "{} vs {}", s.snr_err, d.snr_err);
    }
}
