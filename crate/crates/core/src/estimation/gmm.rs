// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Two-component Gaussian mixtures for integrated-shot histograms.
//!
//! The maximum-likelihood mixture is found by EM. A single Gaussian is
//! preferred whenever it has the lower BIC; the spurious component then
//! coincides with the main one and `frac_main = 1`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optim::{levenberg_marquardt, LmOptions};

pub const MIN_SHOTS: usize = 1000;
const MAX_ITERATIONS: usize = 500;
const LL_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DoubleGaussianFit {
    pub mu_main: f64,
    pub mu_spur: f64,
    pub sigma_main: f64,
    pub sigma_spur: f64,
    pub frac_main: f64,
    pub n_shots: usize,
    /// 1 when the single-Gaussian model was selected.
    pub components: usize,
    pub iterations: usize,
    pub log_likelihood: f64,
}

impl DoubleGaussianFit {
    /// Mixture density at `x`.
    pub fn density(&self, x: f64) -> f64 {
        self.frac_main * gauss(x, self.mu_main, self.sigma_main)
            + (1.0 - self.frac_main) * gauss(x, self.mu_spur, self.sigma_spur)
    }

    /// Main-component density at `x`, scaled by its weight.
    pub fn main_density(&self, x: f64) -> f64 {
        self.frac_main * gauss(x, self.mu_main, self.sigma_main)
    }
}

fn gauss(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    (-0.5 * z * z).exp() / (sigma * (2.0 * PI).sqrt())
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    (m, v.sqrt())
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Debug, Clone, Copy)]
struct Theta {
    w: f64,
    mu: [f64; 2],
    sigma: [f64; 2],
}

impl Theta {
    // unconstrained coordinates for extrapolation: logit weight, log widths
    fn to_vec(self) -> [f64; 5] {
        [
            (self.w / (1.0 - self.w)).ln(),
            self.mu[0],
            self.mu[1],
            self.sigma[0].ln(),
            self.sigma[1].ln(),
        ]
    }

    fn from_vec(v: [f64; 5]) -> Self {
        Theta {
            w: 1.0 / (1.0 + (-v[0]).exp()),
            mu: [v[1], v[2]],
            sigma: [v[3].exp(), v[4].exp()],
        }
    }

    fn is_valid(&self) -> bool {
        self.w > 0.0 && self.w < 1.0 && self.to_vec().iter().all(|v| v.is_finite())
    }
}

/// One EM map application: log-likelihood at `t` and the updated parameters,
/// or `None` when a component lost all its weight.
fn em_step(x: &[f64], t: &Theta, floor: f64) -> (f64, Option<Theta>) {
    let c0 = t.w / (t.sigma[0] * (2.0 * PI).sqrt());
    let c1 = (1.0 - t.w) / (t.sigma[1] * (2.0 * PI).sqrt());
    let (h0, h1) = (-0.5 / (t.sigma[0] * t.sigma[0]), -0.5 / (t.sigma[1] * t.sigma[1]));
    let (mut ll, mut s0, mut s1, mut m0, mut m1, mut q0, mut q1) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
    for &xi in x {
        let p0 = c0 * (h0 * (xi - t.mu[0]).powi(2)).exp();
        let p1 = c1 * (h1 * (xi - t.mu[1]).powi(2)).exp();
        let tot = (p0 + p1).max(f64::MIN_POSITIVE);
        let r = p0 / tot;
        ll += tot.ln();
        s0 += r;
        s1 += 1.0 - r;
        m0 += r * xi;
        m1 += (1.0 - r) * xi;
        q0 += r * xi * xi;
        q1 += (1.0 - r) * xi * xi;
    }
    if s0 < 1.0 || s1 < 1.0 {
        return (ll, None);
    }
    let mu = [m0 / s0, m1 / s1];
    let var = [q0 / s0 - mu[0] * mu[0], q1 / s1 - mu[1] * mu[1]];
    let next = Theta {
        w: s0 / x.len() as f64,
        mu,
        sigma: [var[0].max(0.0).sqrt().max(floor), var[1].max(0.0).sqrt().max(floor)],
    };
    (ll, Some(next))
}

struct Em {
    theta: Theta,
    ll: f64,
    iterations: usize,
    converged: bool,
}

/// EM with squared-extrapolation (SQUAREM) acceleration. Each cycle applies
/// the EM map twice, extrapolates along the observed steps, and applies the
/// map once more; it falls back to the plain EM iterate whenever the
/// extrapolation does not improve the likelihood. `iterations` counts EM map
/// applications.
fn run_em(x: &[f64], centered: f64, spread: f64) -> Em {
    let mut sorted = x.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut theta = Theta {
        w: 0.5,
        mu: [percentile(&sorted, 0.1) - centered, percentile(&sorted, 0.9) - centered],
        sigma: [0.5 * spread; 2],
    };
    let xs: Vec<f64> = x.iter().map(|v| v - centered).collect();
    let n = x.len() as f64;
    // variance floor keeps a component from collapsing onto one sample
    let floor = 1e-6 * spread;
    let mut ll_prev = f64::NEG_INFINITY;
    let mut iterations = 0;

    let done = |t: Theta, ll: f64, iterations: usize, converged: bool| Em {
        theta: Theta {
            mu: [t.mu[0] + centered, t.mu[1] + centered],
            ..t
        },
        ll,
        iterations,
        converged,
    };

    while iterations < MAX_ITERATIONS {
        let (ll0, t1) = em_step(&xs, &theta, floor);
        iterations += 1;
        if (ll0 - ll_prev).abs() < LL_TOLERANCE * n {
            return done(theta, ll0, iterations, true);
        }
        let Some(t1) = t1 else {
            return done(theta, ll0, iterations, false);
        };
        ll_prev = ll0;
        let (ll1, t2) = em_step(&xs, &t1, floor);
        iterations += 1;
        let Some(t2) = t2 else {
            return done(t1, ll1, iterations, false);
        };
        let (v0, v1, v2) = (theta.to_vec(), t1.to_vec(), t2.to_vec());
        let r: Vec<f64> = (0..5).map(|i| v1[i] - v0[i]).collect();
        let v: Vec<f64> = (0..5).map(|i| v2[i] - 2.0 * v1[i] + v0[i]).collect();
        let (rn, vn) = (r.iter().map(|a| a * a).sum::<f64>().sqrt(), v.iter().map(|a| a * a).sum::<f64>().sqrt());
        theta = t2;
        if vn > 0.0 && iterations < MAX_ITERATIONS {
            let alpha = -(rn / vn).max(1.0);
            let mut ext = [0.0; 5];
            for i in 0..5 {
                ext[i] = v0[i] - 2.0 * alpha * r[i] + alpha * alpha * v[i];
            }
            let te = Theta::from_vec(ext);
            if te.is_valid() {
                let (lle, ts) = em_step(&xs, &te, floor);
                iterations += 1;
                if let Some(ts) = ts.filter(|_| lle.is_finite() && lle >= ll1) {
                    theta = ts;
                }
            }
        }
    }
    let (ll, _) = em_step(&xs, &theta, floor);
    let converged = (ll - ll_prev).abs() < LL_TOLERANCE * n;
    done(theta, ll, iterations, converged)
}

/// Maximum-likelihood mixture of at most two Gaussians.
pub fn fit_double_gaussian(values: &[f64]) -> Result<DoubleGaussianFit> {
    fit_mixture(values, None)
}

/// As [`fit_double_gaussian`] but with the number of components fixed, for
/// refits where model selection must not change between resamples.
pub(crate) fn fit_double_gaussian_with(values: &[f64], components: usize) -> Result<DoubleGaussianFit> {
    fit_mixture(values, Some(components))
}

fn fit_mixture(values: &[f64], components: Option<usize>) -> Result<DoubleGaussianFit> {
    if values.len() < MIN_SHOTS {
        return Err(Error::invalid(format!(
            "mixture fit needs at least {MIN_SHOTS} shots, got {}",
            values.len()
        )));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("non-finite shot value"));
    }
    let (mean, sd) = mean_sd(values);
    if !(sd > 1e-12 * mean.abs()) || sd == 0.0 {
        return Err(Error::invalid("all shot values are equal"));
    }
    let n = values.len() as f64;
    let ll1 = -0.5 * n * (2.0 * PI * sd * sd).ln() - 0.5 * n;
    let single = DoubleGaussianFit {
        mu_main: mean,
        mu_spur: mean,
        sigma_main: sd,
        sigma_spur: sd,
        frac_main: 1.0,
        n_shots: values.len(),
        components: 1,
        iterations: 0,
        log_likelihood: ll1,
    };

    if components == Some(1) {
        return Ok(single);
    }
    let em = run_em(values, mean, sd);
    let bic1 = 2.0 * n.ln() - 2.0 * ll1;
    let bic2 = 5.0 * n.ln() - 2.0 * em.ll;
    if components.is_none() && !(em.ll.is_finite() && bic2 < bic1) {
        return Ok(DoubleGaussianFit {
            iterations: em.iterations,
            ..single
        });
    }
    if !em.converged {
        return Err(Error::FitFailure(format!(
            "mixture EM did not converge in {} iterations (weight {:.4}, means {:.6e}/{:.6e}, sigmas {:.6e}/{:.6e})",
            em.iterations, em.theta.w, em.theta.mu[0], em.theta.mu[1], em.theta.sigma[0], em.theta.sigma[1]
        )));
    }
    let t = em.theta;
    let (m, s) = if t.w >= 0.5 { (0, 1) } else { (1, 0) };
    Ok(DoubleGaussianFit {
        mu_main: t.mu[m],
        mu_spur: t.mu[s],
        sigma_main: t.sigma[m],
        sigma_spur: t.sigma[s],
        frac_main: t.w.max(1.0 - t.w),
        n_shots: values.len(),
        components: 2,
        iterations: em.iterations,
        log_likelihood: em.ll,
    })
}

/// Histogram of `values` on `n_bins` equal bins spanning the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub centers: Vec<f64>,
    pub counts: Vec<f64>,
    pub width: f64,
}

pub fn histogram(values: &[f64], n_bins: usize) -> Result<Histogram> {
    if values.is_empty() || n_bins == 0 {
        return Err(Error::invalid("histogram needs data and at least one bin"));
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::invalid("all shot values are equal"));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0.0; n_bins];
    for v in values {
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1.0;
    }
    Ok(Histogram {
        centers: (0..n_bins).map(|k| lo + (k as f64 + 0.5) * width).collect(),
        counts,
        width,
    })
}

/// Least-squares fit of the mixture to binned counts with Poisson errors,
/// started from the EM solution.
pub fn fit_double_gaussian_histogram(values: &[f64], n_bins: usize) -> Result<DoubleGaussianFit> {
    let em = fit_double_gaussian(values)?;
    let h = histogram(values, n_bins)?;
    let n = values.len() as f64;
    let scale = n * h.width;
    let err: Vec<f64> = h.counts.iter().map(|c| c.max(1.0).sqrt()).collect();

    if em.components == 1 {
        let res = levenberg_marquardt(
            |p| {
                h.centers
                    .iter()
                    .zip(&h.counts)
                    .zip(&err)
                    .map(|((x, c), e)| (c - scale * gauss(*x, p[0], p[1])) / e)
                    .collect()
            },
            &[em.mu_main, em.sigma_main],
            &LmOptions {
                lower: Some(vec![f64::NEG_INFINITY, 1e-12 * em.sigma_main]),
                ..Default::default()
            },
        )?;
        return Ok(DoubleGaussianFit {
            mu_main: res.x[0],
            mu_spur: res.x[0],
            sigma_main: res.x[1],
            sigma_spur: res.x[1],
            iterations: res.iterations,
            ..em
        });
    }

    let res = levenberg_marquardt(
        |p| {
            h.centers
                .iter()
                .zip(&h.counts)
                .zip(&err)
                .map(|((x, c), e)| (c - scale * (p[4] * gauss(*x, p[0], p[1]) + (1.0 - p[4]) * gauss(*x, p[2], p[3]))) / e)
                .collect()
        },
        &[em.mu_main, em.sigma_main, em.mu_spur, em.sigma_spur, em.frac_main],
        &LmOptions {
            lower: Some(vec![f64::NEG_INFINITY, 1e-12 * em.sigma_main, f64::NEG_INFINITY, 1e-12 * em.sigma_main, 0.0]),
            upper: Some(vec![f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 1.0]),
            ..Default::default()
        },
    )?;
    let p = &res.x;
    let (main, spur, frac) = if p[4] >= 0.5 {
        ((p[0], p[1]), (p[2], p[3]), p[4])
    } else {
        ((p[2], p[3]), (p[0], p[1]), 1.0 - p[4])
    };
    Ok(DoubleGaussianFit {
        mu_main: main.0,
        sigma_main: main.1,
        mu_spur: spur.0,
        sigma_spur: spur.1,
        frac_main: frac,
        iterations: res.iterations,
        ..em
    })
}
