// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Bounded Levenberg–Marquardt for small weighted least-squares problems.
//!
//! The residual function returns already-weighted residuals `(y − model)/σ`.
//! The Jacobian is taken by central differences; bounds are enforced by
//! projecting every trial step onto the box.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LmOptions {
    pub max_iterations: usize,
    /// Stop when the relative decrease of the cost falls below this.
    pub cost_tolerance: f64,
    /// Stop when the relative step size falls below this.
    pub step_tolerance: f64,
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Default for LmOptions {
    fn default() -> Self {
        LmOptions {
            max_iterations: 200,
            cost_tolerance: 1e-14,
            step_tolerance: 1e-12,
            lower: None,
            upper: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LmResult {
    pub x: Vec<f64>,
    /// `Σ r²` at the solution.
    pub chi2: f64,
    /// `(JᵀJ)⁻¹` at the solution, when invertible.
    pub covariance: Option<DMatrix<f64>>,
    pub iterations: usize,
    pub converged: bool,
}

fn project(x: &mut [f64], opts: &LmOptions) {
    if let Some(lo) = &opts.lower {
        for (v, l) in x.iter_mut().zip(lo) {
            *v = v.max(*l);
        }
    }
    if let Some(hi) = &opts.upper {
        for (v, h) in x.iter_mut().zip(hi) {
            *v = v.min(*h);
        }
    }
}

fn jacobian<F>(f: &F, x: &[f64], m: usize, opts: &LmOptions) -> DMatrix<f64>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let mut jac = DMatrix::zeros(m, n);
    for j in 0..n {
        let h = 1e-6 * x[j].abs().max(1e-3);
        let mut xp = x.to_vec();
        let mut xm = x.to_vec();
        xp[j] += h;
        xm[j] -= h;
        project(&mut xp, opts);
        project(&mut xm, opts);
        let width = xp[j] - xm[j];
        if width == 0.0 {
            continue;
        }
        let (rp, rm) = (f(&xp), f(&xm));
        for i in 0..m {
            jac[(i, j)] = (rp[i] - rm[i]) / width;
        }
    }
    jac
}

fn sum_sq(r: &[f64]) -> f64 {
    r.iter().map(|v| v * v).sum()
}

pub fn levenberg_marquardt<F>(f: F, x0: &[f64], opts: &LmOptions) -> Result<LmResult>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let mut x = x0.to_vec();
    project(&mut x, opts);
    let mut r = f(&x);
    let m = r.len();
    if m < x.len() {
        return Err(Error::FitFailure(format!(
            "{m} residuals cannot determine {} parameters",
            x.len()
        )));
    }
    let mut cost = sum_sq(&r);
    if !cost.is_finite() {
        return Err(Error::FitFailure("non-finite residuals at the starting point".into()));
    }
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;

    while iterations < opts.max_iterations {
        iterations += 1;
        let jac = jacobian(&f, &x, m, opts);
        let jt = jac.transpose();
        let jtj = &jt * &jac;
        let g = &jt * DVector::from_column_slice(&r);

        let mut improved = false;
        while lambda < 1e16 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += lambda * jtj[(i, i)].max(1e-30);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                lambda *= 10.0;
                continue;
            };
            let mut trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            project(&mut trial, opts);
            let rt = f(&trial);
            let ct = sum_sq(&rt);
            if ct.is_finite() && ct < cost {
                let rel_step = trial
                    .iter()
                    .zip(&x)
                    .map(|(a, b)| (a - b).abs() / b.abs().max(1e-12))
                    .fold(0.0, f64::max);
                let rel_cost = (cost - ct) / cost.max(1e-300);
                x = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 10.0).max(1e-12);
                improved = true;
                if rel_cost < opts.cost_tolerance || rel_step < opts.step_tolerance {
                    converged = true;
                }
                break;
            }
            lambda *= 10.0;
        }
        if !improved {
            // no downhill step at any damping: stationary point
            converged = true;
        }
        if converged {
            break;
        }
    }

    let jac = jacobian(&f, &x, m, opts);
    let covariance = (jac.transpose() * &jac).try_inverse();
    Ok(LmResult {
        x,
        chi2: cost,
        covariance,
        iterations,
        converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits_exponential() {
        let t: Vec<f64> = (0..20).map(|k| k as f64 * 0.25).collect();
        let y: Vec<f64> = t.iter().map(|t| 3.0 * (-0.7 * t).exp()).collect();
        let res = levenberg_marquardt(
            |p| t.iter().zip(&y).map(|(t, y)| y - p[0] * (-p[1] * t).exp()).collect(),
            &[1.0, 0.1],
            &LmOptions::default(),
        )
        .unwrap();
        assert!(res.converged);
        assert!((res.x[0] - 3.0).abs() < 1e-8 && (res.x[1] - 0.7).abs() < 1e-8);
    }

    #[test]
    fn respects_bounds() {
        // unconstrained optimum at p = -2
        let opts = LmOptions {
            lower: Some(vec![0.0]),
            ..Default::default()
        };
        let res = levenberg_marquardt(|p| vec![p[0] + 2.0, 0.5 * (p[0] + 2.0)], &[3.0], &opts).unwrap();
        assert!(res.x[0].abs() < 1e-12);
    }

    #[test]
    fn underdetermined_is_an_error() {
        assert!(levenberg_marquardt(|p| vec![p[0] - p[1]], &[0.0, 0.0], &LmOptions::default()).is_err());
    }
}
