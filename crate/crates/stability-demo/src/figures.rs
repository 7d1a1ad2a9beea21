//! Figure data for the browser demo: plain serializable structs computed
//! with the core crate, so they are testable natively and renderable from
//! wasm.

use serde::Serialize;

use total_stab::bounds::{verify, Scenario, Theorem};
use total_stab::error::{Error, Result};
use total_stab::kernels::{gaussian_bandwidth_bound, sup_distance, Kernel};
use total_stab::losses::{smooth, Loss, PairwiseLoss, ProblemLoss};
use total_stab::solver::SolverOptions;
use total_stab::space::{contaminate, Atom, DiscreteMeasure, GroundSpace};

fn line_grid(n: usize) -> Vec<f64> {
    let n = n.clamp(16, 512);
    (0..n)
        .map(|i| -1.0 + 2.0 * i as f64 / (n - 1) as f64)
        .collect()
}

/// Two Gaussian kernel slices k(·, 0) plus their measured sup-distance
/// on the grid and the bandwidth perturbation bound.
#[derive(Debug, Clone, Serialize)]
pub struct BandwidthFigure {
    pub xs: Vec<f64>,
    pub k1: Vec<f64>,
    pub k2: Vec<f64>,
    pub measured: f64,
    pub bound: f64,
}

pub fn bandwidth_figure(
    gamma1: f64,
    gamma2: f64,
    a: f64,
    resolution: usize,
) -> Result<BandwidthFigure> {
    let xs = line_grid(resolution);
    let space = GroundSpace::new(xs.iter().map(|&x| vec![x]).collect())?;
    let k1 = Kernel::gaussian_rbf(gamma1)?;
    let k2 = Kernel::gaussian_rbf(gamma2)?;
    let origin = [0.0];
    let slice =
        |k: &Kernel| -> Result<Vec<f64>> { xs.iter().map(|&x| k.eval(&[x], &origin)).collect() };
    Ok(BandwidthFigure {
        k1: slice(&k1)?,
        k2: slice(&k2)?,
        measured: sup_distance(&k1, &k2, &space)?,
        bound: gaussian_bandwidth_bound(gamma1, gamma2, a, space.diameter())?,
        xs,
    })
}

/// A kinked 1-d loss representation, its convolution smoothing, the
/// smoothed derivative, and the sup-deviation against |ρ|₁δ/2.
#[derive(Debug, Clone, Serialize)]
pub struct SmoothingFigure {
    pub xs: Vec<f64>,
    pub rho: Vec<f64>,
    pub rho_delta: Vec<f64>,
    pub deriv: Vec<f64>,
    pub sup_deviation: f64,
    pub deviation_bound: f64,
}

pub fn smoothing_figure(
    loss: &str,
    param: f64,
    delta: f64,
    resolution: usize,
) -> Result<SmoothingFigure> {
    let rep = match loss {
        "hinge" => Loss::hinge().rep_piecewise()?,
        "pinball" => Loss::pinball(param)?.rep_piecewise()?,
        "eps_insensitive" => Loss::eps_insensitive(param)?.rep_piecewise()?,
        "abs" => PairwiseLoss::abs_rho().rep_piecewise()?,
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown representation `{other}`; use hinge | pinball | eps_insensitive | abs"
            )))
        }
    };
    let sm = smooth(rep.clone(), delta)?;
    let n = resolution.clamp(16, 1024);
    let xs: Vec<f64> = (0..n)
        .map(|i| -3.0 + 6.0 * i as f64 / (n - 1) as f64)
        .collect();
    let mut sup_dev = 0.0f64;
    let mut rho = Vec::with_capacity(n);
    let mut rho_delta = Vec::with_capacity(n);
    let mut deriv = Vec::with_capacity(n);
    for &x in &xs {
        rho.push(rep.value(x));
        rho_delta.push(sm.value(x));
        deriv.push(sm.deriv(x));
        sup_dev = sup_dev.max(sm.deviation(x));
    }
    Ok(SmoothingFigure {
        xs,
        rho,
        rho_delta,
        deriv,
        sup_deviation: sup_dev,
        deviation_bound: rep.lip() * delta / 2.0,
    })
}

/// Two trained classifiers under simultaneous contamination, λ shift and
/// bandwidth shift, with the three-term sup-norm bound decomposition.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityFigure {
    pub xs: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    /// (x, y) pairs of the two data sets.
    pub data1: Vec<(f64, f64)>,
    pub data2: Vec<(f64, f64)>,
    pub tv: f64,
    pub lhs_sup: f64,
    pub tv_term: f64,
    pub lambda_term: f64,
    pub kernel_term: f64,
    pub rhs_total: f64,
    pub margin: f64,
}

/// Deterministic jagged sign pattern for the demo data set.
fn demo_labels(n: usize, seed: u64) -> Vec<f64> {
    let mut state = seed.wrapping_mul(0x9e37_79b9_7f4a_7c15).max(1);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            if state % 2 == 0 {
                1.0
            } else {
                -1.0
            }
        })
        .collect()
}

pub fn stability_figure(
    ell: usize,
    lambda1: f64,
    lambda2: f64,
    gamma1: f64,
    gamma2: f64,
    seed: u64,
) -> Result<StabilityFigure> {
    let n_atoms = 16;
    let ell = ell.min(n_atoms);
    let space = GroundSpace::new(
        (0..n_atoms)
            .map(|i| vec![-0.9 + 1.8 * i as f64 / (n_atoms - 1) as f64])
            .collect(),
    )?;
    let labels = demo_labels(n_atoms, seed);
    let atoms: Vec<Atom> = labels
        .iter()
        .enumerate()
        .map(|(i, &y)| Atom::new(i, y))
        .collect();
    let measure1 = DiscreteMeasure::uniform(space.clone(), atoms)?;
    // Flip the first ell labels: disjoint replacements, TV = ell/n.
    let replacements: Vec<Atom> = (0..ell).map(|i| Atom::new(i, -labels[i])).collect();
    let measure2 = contaminate(&measure1, ell, &replacements)?;

    let scenario = Scenario {
        theorem: Theorem::ClassicalSup,
        loss: ProblemLoss::Classical(Loss::c_logistic()),
        measure1: measure1.clone(),
        lambda1,
        kernel1: Kernel::gaussian_rbf(gamma1)?,
        measure2: measure2.clone(),
        lambda2,
        kernel2: Kernel::gaussian_rbf(gamma2)?,
    };
    let report = verify(&scenario, &SolverOptions::default())?;
    if !report.precondition_ok {
        return Err(Error::Precondition(
            report.note.unwrap_or_else(|| "precondition failed".into()),
        ));
    }
    let (r1, r2) = *report
        .solver_reports
        .expect("verified reports carry solves");

    let xs = line_grid(240);
    let f1: Result<Vec<f64>> = xs.iter().map(|&x| r1.hypothesis.value_at(&[x])).collect();
    let f2: Result<Vec<f64>> = xs.iter().map(|&x| r2.hypothesis.value_at(&[x])).collect();
    let pairs = |m: &DiscreteMeasure| -> Vec<(f64, f64)> {
        m.atoms()
            .iter()
            .map(|a| (m.space().point(a.x)[0], a.y))
            .collect()
    };
    Ok(StabilityFigure {
        xs,
        f1: f1?,
        f2: f2?,
        data1: pairs(&measure1),
        data2: pairs(&measure2),
        tv: total_stab::space::tv_distance(&measure1, &measure2)?.distance,
        lhs_sup: report.lhs.unwrap(),
        tv_term: report.tv_term.unwrap(),
        lambda_term: report.lambda_term.unwrap(),
        kernel_term: report.kernel_term.unwrap(),
        rhs_total: report.rhs_total.unwrap(),
        margin: report.margin.unwrap(),
    })
}
