// Copyright 2026 The readout-eta Authors
// SPDX-License-Identifier: Apache-2.0

//! Nelder–Mead downhill simplex.

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMeadOptions {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop when `f(worst) − f(best)` over the simplex drops below this.
    pub spread_tolerance: f64,
    pub max_evaluations: usize,
    /// Re-evaluate the best vertex every iteration. For noisy objectives a
    /// single lucky evaluation otherwise stays best and the simplex shrinks
    /// onto it.
    pub reevaluate_best: bool,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        NelderMeadOptions {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            spread_tolerance: 1e-10,
            max_evaluations: 2000,
            reevaluate_best: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct NelderMeadResult {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub iterations: usize,
    /// False when the evaluation budget ran out before the spread criterion held.
    pub converged: bool,
    /// Best vertex and its value after every iteration.
    pub trace: Vec<(Vec<f64>, f64)>,
}

/// Simplex with vertex `x0` and one vertex displaced by `steps[i]` along each axis.
pub fn axis_simplex(x0: &[f64], steps: &[f64]) -> Vec<Vec<f64>> {
    let mut simplex = vec![x0.to_vec()];
    for (i, &h) in steps.iter().enumerate() {
        let mut v = x0.to_vec();
        v[i] += h;
        simplex.push(v);
    }
    simplex
}

/// Minimize `f` starting from the given simplex of `n + 1` vertices.
pub fn nelder_mead<F>(mut f: F, simplex: Vec<Vec<f64>>, opts: &NelderMeadOptions) -> NelderMeadResult
where
    F: FnMut(&[f64]) -> f64,
{
    let n = simplex.len().saturating_sub(1);
    assert!(n >= 1 && simplex.iter().all(|v| v.len() == n), "simplex must have n+1 vertices of dimension n");

    let mut evaluations = 0;
    let mut eval = |x: &[f64], count: &mut usize| {
        *count += 1;
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut verts: Vec<(Vec<f64>, f64)> = simplex
        .into_iter()
        .map(|x| {
            let v = eval(&x, &mut evaluations);
            (x, v)
        })
        .collect();
    let mut trace = Vec::new();
    let mut iterations = 0;

    let converged = loop {
        if opts.reevaluate_best && iterations > 0 {
            verts[0].1 = eval(&verts[0].0, &mut evaluations);
        }
        verts.sort_by(|a, b| a.1.total_cmp(&b.1));
        trace.push(verts[0].clone());
        if verts[n].1 - verts[0].1 <= opts.spread_tolerance {
            break true;
        }
        if evaluations >= opts.max_evaluations {
            break false;
        }
        iterations += 1;

        let centroid: Vec<f64> = (0..n)
            .map(|j| verts[..n].iter().map(|v| v.0[j]).sum::<f64>() / n as f64)
            .collect();
        let toward = |coef: f64, worst: &[f64]| -> Vec<f64> {
            centroid
                .iter()
                .zip(worst)
                .map(|(c, w)| c + coef * (c - w))
                .collect()
        };

        let worst = verts[n].0.clone();
        let reflected = toward(opts.reflection, &worst);
        let fr = eval(&reflected, &mut evaluations);

        if fr < verts[0].1 {
            let expanded = toward(opts.reflection * opts.expansion, &worst);
            let fe = eval(&expanded, &mut evaluations);
            verts[n] = if fe < fr { (expanded, fe) } else { (reflected, fr) };
            continue;
        }
        if fr < verts[n - 1].1 {
            verts[n] = (reflected, fr);
            continue;
        }
        // contraction: outside if the reflection beat the worst vertex, else inside
        let (candidate, reference) = if fr < verts[n].1 {
            (toward(opts.reflection * opts.contraction, &worst), fr)
        } else {
            (toward(-opts.contraction, &worst), verts[n].1)
        };
        let fc = eval(&candidate, &mut evaluations);
        if fc < reference {
            verts[n] = (candidate, fc);
            continue;
        }
        let best = verts[0].0.clone();
        for v in verts.iter_mut().skip(1) {
            let x: Vec<f64> = best
                .iter()
                .zip(&v.0)
                .map(|(b, x)| b + opts.shrink * (x - b))
                .collect();
            let fx = eval(&x, &mut evaluations);
            *v = (x, fx);
        }
    };

    let (x, value) = verts.swap_remove(0);
    NelderMeadResult {
        x,
        value,
        evaluations,
        iterations,
        converged,
        trace,
    }
}
