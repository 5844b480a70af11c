// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Time integrals over sampled trajectories.
//!
//! Inside one sample interval of length `h` a held-drive field is
//! `a(s) = a_ss + (a_k − a_ss)·e^{−λs}`, and `a_ss` follows from the two
//! endpoint samples. Products of two such fields integrate in closed form, so
//! bilinear integrals of generated trajectories carry no discretization error.

use num_complex::Complex64;

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Trapezoid weights `c_k` such that `Σ c_k f_k` is the trapezoid integral.
pub fn trapezoid_weight(k: usize, n: usize, dt: f64) -> f64 {
    if k == 0 || k + 1 == n {
        0.5 * dt
    } else {
        dt
    }
}

/// `(1 − e^{−z h}) / z`, continuous at `z = 0`.
fn phi(z: Complex64, h: f64) -> Complex64 {
    let x = z * h;
    if x.norm() < 1e-3 {
        // series of (1 − e^{−x})/x
        let x2 = x * x;
        h * (1.0 - x / 2.0 + x2 / 6.0 - x2 * x / 24.0 + x2 * x2 / 120.0)
    } else {
        (1.0 - (-x).exp()) / z
    }
}

/// Steady-state offset and transient coefficient of a held-drive interval.
fn interval_path(a0: Complex64, a1: Complex64, decay: Complex64) -> (Complex64, Complex64) {
    let ss = (a1 - a0 * decay) / (1.0 - decay);
    (ss, a0 - ss)
}

/// `∫ a(t)·conj(b(t)) dt` over the grid, exact for fields relaxing with the
/// complex rates `la` and `lb` under a drive held constant per interval.
pub fn bilinear_exact(a: &[Complex64], la: Complex64, b: &[Complex64], lb: Complex64, dt: f64) -> Complex64 {
    debug_assert_eq!(a.len(), b.len());
    let ea = (-la * dt).exp();
    let eb = (-lb * dt).exp();
    let lbc = lb.conj();
    let (pa, pb, pab) = (phi(la, dt), phi(lbc, dt), phi(la + lbc, dt));
    let mut total = Complex64::new(0.0, 0.0);
    for k in 0..a.len().saturating_sub(1) {
        let (sa, ca) = interval_path(a[k], a[k + 1], ea);
        let (sb, cb) = interval_path(b[k], b[k + 1], eb);
        let (sb, cb) = (sb.conj(), cb.conj());
        total += sa * sb * dt + sa * cb * pb + ca * sb * pa + ca * cb * pab;
    }
    total
}

/// `∫ a(t)·conj(b(t)) dt` by the trapezoid rule.
pub fn bilinear_trapezoid(a: &[Complex64], b: &[Complex64], dt: f64) -> Complex64 {
    let n = a.len();
    a.iter()
        .zip(b)
        .enumerate()
        .map(|(k, (x, y))| x * y.conj() * trapezoid_weight(k, n, dt))
        .sum()
}
