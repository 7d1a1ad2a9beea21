//! Shared test oracles, kept independent of the solver's internal path:
//! objectives are rebuilt from the public loss/risk API and minimized by
//! coordinate-wise golden-section style search.

// Each integration-test binary compiles this module separately and uses
// a different subset of the helpers.
#![allow(dead_code)]

use total_stab::kernels::Kernel;
use total_stab::losses::{Loss, PairwiseLoss};
use total_stab::solver::{pairwise_risk, risk, Hypothesis};
use total_stab::space::DiscreteMeasure;

/// Distinct x-indices of a measure's atoms in first-appearance order.
pub fn support_of(p: &DiscreteMeasure) -> Vec<usize> {
    let mut support = Vec::new();
    for a in p.atoms() {
        if !support.contains(&a.x) {
            support.push(a.x);
        }
    }
    support
}

pub fn classical_objective(
    p: &DiscreteMeasure,
    lambda: f64,
    kernel: &Kernel,
    loss: &Loss,
    support: &[usize],
    alpha: &[f64],
) -> f64 {
    let f = Hypothesis::new(
        p.space().clone(),
        kernel.clone(),
        support.to_vec(),
        alpha.to_vec(),
    )
    .unwrap();
    let h = f.h_norm().unwrap();
    risk(p, loss, &f).unwrap() + lambda * h * h
}

pub fn pairwise_objective(
    p: &DiscreteMeasure,
    lambda: f64,
    kernel: &Kernel,
    ploss: &PairwiseLoss,
    support: &[usize],
    alpha: &[f64],
) -> f64 {
    let f = Hypothesis::new(
        p.space().clone(),
        kernel.clone(),
        support.to_vec(),
        alpha.to_vec(),
    )
    .unwrap();
    let h = f.h_norm().unwrap();
    pairwise_risk(p, ploss, &f).unwrap() + lambda * h * h
}

/// Minimizes a convex objective by cyclic coordinate search: a coarse
/// bracketing scan over [xᵢ−radius, xᵢ+radius] followed by ternary
/// refinement (each coordinate section is convex, hence unimodal).
pub fn coordinate_descent_min<F: Fn(&[f64]) -> f64>(
    obj: F,
    dim: usize,
    radius: f64,
) -> (Vec<f64>, f64) {
    let mut x = vec![0.0; dim];
    let mut fx = obj(&x);
    for _pass in 0..400 {
        let before = fx;
        for i in 0..dim {
            let center = x[i];
            // Coarse scan to bracket the coordinate minimum.
            let scan = 32;
            let mut best_j: usize = 0;
            let mut best_v = f64::INFINITY;
            for j in 0..=scan {
                let cand = center - radius + 2.0 * radius * j as f64 / scan as f64;
                x[i] = cand;
                let v = obj(&x);
                if v < best_v {
                    best_v = v;
                    best_j = j;
                }
            }
            let step = 2.0 * radius / scan as f64;
            let mut lo = center - radius + step * (best_j.saturating_sub(1)) as f64;
            let mut hi = (center - radius + step * (best_j + 1) as f64).min(center + radius);
            // Ternary refinement.
            for _ in 0..200 {
                if hi - lo < 1e-14 {
                    break;
                }
                let m1 = lo + (hi - lo) / 3.0;
                let m2 = hi - (hi - lo) / 3.0;
                x[i] = m1;
                let f1 = obj(&x);
                x[i] = m2;
                let f2 = obj(&x);
                if f1 < f2 {
                    hi = m2;
                } else {
                    lo = m1;
                }
            }
            x[i] = 0.5 * (lo + hi);
            fx = obj(&x);
        }
        if before - fx < 1e-15 {
            break;
        }
    }
    (x, fx)
}

/// Least-squares slope of log(y) against log(x), skipping zero entries.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = xs
        .iter()
        .zip(ys)
        .filter(|(x, y)| **x > 0.0 && **y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let cov: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let var: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    cov / var
}
