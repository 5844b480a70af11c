// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Anderson–Darling test for normality with estimated mean and variance.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AndersonDarling {
    pub statistic: f64,
    /// Small-sample corrected statistic `A²(1 + 0.75/n + 2.25/n²)`.
    pub adjusted: f64,
    pub p_value: f64,
}

pub fn anderson_darling(values: &[f64]) -> Result<AndersonDarling> {
    let n = values.len();
    if n < 8 {
        return Err(Error::invalid(format!("normality test needs at least 8 values, got {n}")));
    }
    let nf = n as f64;
    let mean = values.iter().sum::<f64>() / nf;
    let sd = (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt();
    if !(sd > 0.0) {
        return Err(Error::invalid("all values are equal"));
    }
    let mut z: Vec<f64> = values.iter().map(|v| (v - mean) / sd).collect();
    z.sort_by(f64::total_cmp);
    let std = Normal::standard();
    let ln_cdf = |x: f64| std.cdf(x).max(f64::MIN_POSITIVE).ln();
    let s: f64 = (0..n)
        .map(|i| (2 * i + 1) as f64 * (ln_cdf(z[i]) + ln_cdf(-z[n - 1 - i])))
        .sum();
    let statistic = -nf - s / nf;
    let a = statistic * (1.0 + 0.75 / nf + 2.25 / (nf * nf));
    let p_value = if a >= 0.6 {
        (1.2937 - 5.709 * a + 0.0186 * a * a).exp()
    } else if a >= 0.34 {
        (0.9177 - 4.279 * a - 1.38 * a * a).exp()
    } else if a >= 0.2 {
        1.0 - (-8.318 + 42.796 * a - 59.938 * a * a).exp()
    } else {
        1.0 - (-13.436 + 101.14 * a - 223.73 * a * a).exp()
    };
    Ok(AndersonDarling {
        statistic,
        adjusted: a,
        p_value: p_value.clamp(0.0, 1.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_distr::{Exp1, StandardNormal};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn accepts_normal_rejects_exponential() {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(11);
        let g: Vec<f64> = (0..4096).map(|_| rng.sample(StandardNormal)).collect();
        let e: Vec<f64> = (0..4096).map(|_| rng.sample(Exp1)).collect();
        assert!(anderson_darling(&g).unwrap().p_value > 0.001);
        assert!(anderson_darling(&e).unwrap().p_value < 1e-6);
    }

    #[test]
    fn known_statistic() {
        // evenly spaced normal quantiles give a tiny statistic
        let n = 200;
        let std = Normal::standard();
        let q: Vec<f64> = (0..n).map(|i| std.inverse_cdf((i as f64 + 0.5) / n as f64)).collect();
        let r = anderson_darling(&q).unwrap();
        assert!(r.statistic < 0.05 && r.p_value > 0.99, "{r:?}");
    }
}
