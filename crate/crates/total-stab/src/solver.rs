//! Exact desk-scale training of regularized risk minimizers over the
//! atoms of a discrete measure, for classical and pairwise losses.
//!
//! The minimizer of `E_P L*(X, Y, f(X)) + λ‖f‖²_H` over the RKHS of `k`
//! is supported on the distinct x-atoms of P, so the solve runs in
//! coefficient space with the Gram matrix fixed. Convergence is certified
//! through the representer identity: the reported fixed-point residual is
//! the H-norm of `f + (1/2λ)·E_P[L'·Φ]`, which vanishes at the exact
//! minimizer. Nondifferentiable losses are handled by solving the
//! convolution-smoothed problem along a decreasing δ-schedule with warm
//! starts; the Cauchy increments between consecutive δ-solutions are
//! reported.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::linalg;
use crate::losses::{Loss, LossKind, PairwiseLoss, ProblemLoss, Smoothed1d};
use crate::space::{DiscreteMeasure, GroundSpace};

/// f = Σᵢ αᵢ·k(·, xᵢ) over a set of support points of a ground space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hypothesis {
    space: GroundSpace,
    kernel: Kernel,
    support: Vec<usize>,
    alpha: Vec<f64>,
}

impl Hypothesis {
    pub fn new(
        space: GroundSpace,
        kernel: Kernel,
        support: Vec<usize>,
        alpha: Vec<f64>,
    ) -> Result<Self> {
        if support.len() != alpha.len() {
            return Err(Error::Construction(format!(
                "{} support points but {} coefficients",
                support.len(),
                alpha.len()
            )));
        }
        let mut seen = vec![false; space.len()];
        for &s in &support {
            if s >= space.len() {
                return Err(Error::Construction(format!(
                    "support index {s} outside the {}-point space",
                    space.len()
                )));
            }
            if seen[s] {
                return Err(Error::Construction(format!("duplicate support index {s}")));
            }
            seen[s] = true;
        }
        Ok(Hypothesis {
            space,
            kernel,
            support,
            alpha,
        })
    }

    /// The zero function.
    pub fn zero(space: GroundSpace, kernel: Kernel) -> Self {
        Hypothesis {
            space,
            kernel,
            support: vec![],
            alpha: vec![],
        }
    }

    pub fn space(&self) -> &GroundSpace {
        &self.space
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn alpha(&self) -> &[f64] {
        &self.alpha
    }

    /// f(x) at an arbitrary point of the ambient space.
    pub fn value_at(&self, x: &[f64]) -> Result<f64> {
        let mut acc = 0.0;
        for (&s, a) in self.support.iter().zip(&self.alpha) {
            acc += a * self.kernel.eval(x, self.space.point(s))?;
        }
        Ok(acc)
    }

    /// f(x_i) for a ground-space point index.
    pub fn value_at_index(&self, i: usize) -> Result<f64> {
        let gram = self.kernel.gram(&self.space)?;
        Ok(self
            .support
            .iter()
            .zip(&self.alpha)
            .map(|(&s, a)| a * gram[(i, s)])
            .sum())
    }

    /// f evaluated on every point of the space.
    pub fn values_on_space(&self) -> Result<Vec<f64>> {
        let gram = self.kernel.gram(&self.space)?;
        Ok((0..self.space.len())
            .map(|i| {
                self.support
                    .iter()
                    .zip(&self.alpha)
                    .map(|(&s, a)| a * gram[(i, s)])
                    .sum()
            })
            .collect())
    }

    /// ‖f‖_H = √(αᵀKα) over the support.
    pub fn h_norm(&self) -> Result<f64> {
        let gram = self.kernel.gram(&self.space)?;
        let mut acc = 0.0;
        for (i, (&si, ai)) in self.support.iter().zip(&self.alpha).enumerate() {
            for (j, (&sj, aj)) in self.support.iter().zip(&self.alpha).enumerate() {
                let _ = (i, j);
                acc += ai * aj * gram[(si, sj)];
            }
        }
        Ok(acc.max(0.0).sqrt())
    }

    /// max over the space of |f(x)|.
    pub fn sup_norm(&self) -> Result<f64> {
        Ok(self
            .values_on_space()?
            .iter()
            .fold(0.0f64, |m, v| m.max(v.abs())))
    }

    /// ‖f − g‖_H in the shared kernel's RKHS; both hypotheses must use
    /// the same kernel and space.
    pub fn h_distance(&self, other: &Hypothesis) -> Result<f64> {
        if self.kernel != other.kernel || !(self.space == other.space) {
            return Err(Error::DomainMismatch(
                "h_distance needs a shared kernel and space".into(),
            ));
        }
        let gram = self.kernel.gram(&self.space)?;
        let mut coeffs = vec![0.0f64; self.space.len()];
        for (&s, a) in self.support.iter().zip(&self.alpha) {
            coeffs[s] += a;
        }
        for (&s, a) in other.support.iter().zip(&other.alpha) {
            coeffs[s] -= a;
        }
        Ok(linalg::quad_form(&gram, &coeffs).max(0.0).sqrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverMode {
    /// Damped fixed-point iteration when the contraction condition on λ
    /// holds, descent otherwise.
    Auto,
    FixedPoint,
    Gradient,
}

/// Options for [`solve_svm`] / [`solve_rpl`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverOptions {
    /// Convergence tolerance on the fixed-point residual (H-norm) and
    /// the objective-gradient H-norm. `None` picks
    /// 1e-10 · n_atoms · max(1, |L|₁).
    pub grad_tol: Option<f64>,
    pub max_iters: usize,
    /// Initial damping θ ∈ (0,1] for fixed-point mode.
    pub damping: f64,
    /// Strictly decreasing smoothing parameters for nondifferentiable
    /// losses.
    pub delta_schedule: Vec<f64>,
    pub mode: SolverMode,
    /// Starting coefficients over the support (zeros when absent).
    pub initial_alpha: Option<Vec<f64>>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            grad_tol: None,
            max_iters: 50_000,
            damping: 0.5,
            delta_schedule: vec![1e-2, 1e-3, 1e-4, 1e-5, 1e-6],
            mode: SolverMode::Auto,
            initial_alpha: None,
        }
    }
}

impl SolverOptions {
    fn validate(&self) -> Result<()> {
        if let Some(t) = self.grad_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidArgument("grad_tol must be positive".into()));
            }
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidArgument("damping must lie in (0, 1]".into()));
        }
        if self.delta_schedule.windows(2).any(|w| !(w[1] < w[0])) {
            return Err(Error::InvalidArgument(
                "delta_schedule must be strictly decreasing".into(),
            ));
        }
        if self.delta_schedule.iter().any(|d| !(*d > 0.0 && *d <= 1.0)) {
            return Err(Error::InvalidArgument("deltas must lie in (0, 1]".into()));
        }
        Ok(())
    }

    fn tol_for(&self, n_atoms: usize, lip: f64) -> f64 {
        self.grad_tol
            .unwrap_or(1e-10 * n_atoms as f64 * lip.max(1.0))
    }
}

/// Outcome of a solve: the trained hypothesis plus its certification
/// numbers. All scalars serialize at full round-trip precision.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub hypothesis: Hypothesis,
    /// Shifted regularized objective at the solution (exact, nonsmoothed
    /// loss even when a δ-schedule was used).
    pub objective: f64,
    pub iterations: usize,
    /// H-norm of the objective gradient 2λf + E_P[L'·Φ] at the solution.
    pub grad_norm: f64,
    /// H-norm of f + (1/2λ)·E_P[L'·Φ]; for δ-schedule solves, with
    /// respect to the final smoothed loss.
    pub fixed_point_residual: f64,
    pub delta_schedule_used: Option<Vec<f64>>,
    /// ‖f_{δⱼ} − f_{δⱼ₊₁}‖_H along the schedule.
    pub delta_cauchy_increments: Option<Vec<f64>>,
    /// Set when the gradient norm reached tolerance but the fixed-point
    /// residual stalled at the f64 noise floor (small-λ regimes).
    #[serde(default)]
    pub residual_floor_hit: bool,
    /// Set when the support Gram matrix has condition number above 1e12.
    pub conditioning_warning: bool,
}

// ---------------------------------------------------------------------------
// Effective (possibly smoothed) loss evaluation
// ---------------------------------------------------------------------------

enum CEval<'a> {
    Exact(&'a Loss),
    Smooth { kind: LossKind, sm: Smoothed1d },
}

impl CEval<'_> {
    fn rep_arg(&self, y: f64, t: f64) -> f64 {
        let kind = match self {
            CEval::Exact(l) => l.kind(),
            CEval::Smooth { kind, .. } => *kind,
        };
        match kind {
            LossKind::Margin => y * t,
            LossKind::Distance => y - t,
        }
    }

    fn shifted(&self, y: f64, t: f64) -> f64 {
        match self {
            CEval::Exact(l) => l.shifted_value(y, t),
            CEval::Smooth { sm, .. } => {
                sm.value(self.rep_arg(y, t)) - sm.value(self.rep_arg(y, 0.0))
            }
        }
    }

    fn deriv(&self, y: f64, t: f64) -> f64 {
        match self {
            CEval::Exact(l) => l.deriv_t(y, t).expect("differentiable loss"),
            CEval::Smooth { kind, sm } => {
                let d = sm.deriv(self.rep_arg(y, t));
                match kind {
                    LossKind::Margin => y * d,
                    LossKind::Distance => -d,
                }
            }
        }
    }

    fn curvature(&self, y: f64, t: f64) -> f64 {
        match self {
            CEval::Exact(l) => l.curvature_t(y, t),
            CEval::Smooth { kind, sm } => {
                let s = sm.second(self.rep_arg(y, t));
                match kind {
                    LossKind::Margin => y * y * s,
                    LossKind::Distance => s,
                }
            }
        }
    }

    fn lip_deriv(&self) -> Option<f64> {
        match self {
            CEval::Exact(l) => l.lip_deriv(),
            CEval::Smooth { sm, .. } => Some(sm.deriv_lip()),
        }
    }
}

enum PEval<'a> {
    Exact(&'a PairwiseLoss),
    Smooth(Smoothed1d),
}

impl PEval<'_> {
    fn rho(&self, xi: f64) -> f64 {
        match self {
            PEval::Exact(p) => p.rho(xi),
            PEval::Smooth(sm) => sm.value(xi),
        }
    }

    fn rho_deriv(&self, xi: f64) -> f64 {
        match self {
            PEval::Exact(p) => p.rho_deriv(xi).expect("differentiable pairwise loss"),
            PEval::Smooth(sm) => sm.deriv(xi),
        }
    }

    fn rho_second(&self, xi: f64) -> f64 {
        match self {
            PEval::Exact(p) => p.rho_second(xi),
            PEval::Smooth(sm) => sm.second(xi),
        }
    }

    fn deriv_lip(&self) -> Option<f64> {
        match self {
            PEval::Exact(p) => p.deriv_lip(),
            PEval::Smooth(sm) => Some(sm.deriv_lip()),
        }
    }
}

// ---------------------------------------------------------------------------
// Risk models over support values
// ---------------------------------------------------------------------------

/// The data of one solve: atoms grouped onto the distinct x-support.
struct ProblemData {
    support: Vec<usize>,
    /// Per atom: (position in support, y, weight).
    atoms: Vec<(usize, f64, f64)>,
    k_supp: DMatrix<f64>,
}

fn problem_data(p: &DiscreteMeasure, kernel: &Kernel) -> Result<ProblemData> {
    let space = p.space();
    let gram = kernel.gram(space)?;
    let mut support: Vec<usize> = Vec::new();
    let mut atoms = Vec::with_capacity(p.len());
    for (a, &w) in p.atoms().iter().zip(p.weights()) {
        let pos = match support.iter().position(|&s| s == a.x) {
            Some(pos) => pos,
            None => {
                support.push(a.x);
                support.len() - 1
            }
        };
        atoms.push((pos, a.y, w));
    }
    let m = support.len();
    let mut k_supp = DMatrix::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            k_supp[(i, j)] = gram[(support[i], support[j])];
        }
    }
    Ok(ProblemData {
        support,
        atoms,
        k_supp,
    })
}

trait RiskModel {
    fn risk(&self, v: &DVector<f64>) -> f64;
    fn grad(&self, v: &DVector<f64>) -> DVector<f64>;
    fn hess(&self, v: &DVector<f64>) -> DMatrix<f64>;
}

struct ClassicalModel<'a> {
    atoms: &'a [(usize, f64, f64)],
    eval: &'a CEval<'a>,
    m: usize,
}

impl RiskModel for ClassicalModel<'_> {
    fn risk(&self, v: &DVector<f64>) -> f64 {
        self.atoms
            .iter()
            .map(|&(p, y, w)| w * self.eval.shifted(y, v[p]))
            .sum()
    }

    fn grad(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.m);
        for &(p, y, w) in self.atoms {
            g[p] += w * self.eval.deriv(y, v[p]);
        }
        g
    }

    fn hess(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.m, self.m);
        for &(p, y, w) in self.atoms {
            h[(p, p)] += w * self.eval.curvature(y, v[p]);
        }
        h
    }
}

struct PairwiseModel<'a> {
    atoms: &'a [(usize, f64, f64)],
    eval: &'a PEval<'a>,
    m: usize,
}

impl PairwiseModel<'_> {
    fn xi(a: &(usize, f64, f64), b: &(usize, f64, f64), v: &DVector<f64>) -> f64 {
        (a.1 - v[a.0]) - (b.1 - v[b.0])
    }
}

impl RiskModel for PairwiseModel<'_> {
    fn risk(&self, v: &DVector<f64>) -> f64 {
        let mut acc = 0.0;
        for a in self.atoms {
            for b in self.atoms {
                let xi = Self::xi(a, b, v);
                acc += a.2 * b.2 * (self.eval.rho(xi) - self.eval.rho(a.1 - b.1));
            }
        }
        acc
    }

    fn grad(&self, v: &DVector<f64>) -> DVector<f64> {
        let mut g = DVector::zeros(self.m);
        for a in self.atoms {
            for b in self.atoms {
                let d = self.eval.rho_deriv(Self::xi(a, b, v));
                // ξ = (y_a − t_a) − (y_b − t_b): ∂ξ/∂t_a = −1, ∂ξ/∂t_b = +1.
                g[a.0] -= a.2 * b.2 * d;
                g[b.0] += a.2 * b.2 * d;
            }
        }
        g
    }

    fn hess(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.m, self.m);
        for a in self.atoms {
            for b in self.atoms {
                let s = a.2 * b.2 * self.eval.rho_second(Self::xi(a, b, v));
                h[(a.0, a.0)] += s;
                h[(b.0, b.0)] += s;
                h[(a.0, b.0)] -= s;
                h[(b.0, a.0)] -= s;
            }
        }
        h
    }
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

struct SubSolve {
    alpha: DVector<f64>,
    iterations: usize,
    fp_residual: f64,
    grad_norm: f64,
    floor_hit: bool,
}

/// Tracks the best iterate and detects the float noise floor: when the
/// residual stops improving for many iterations while the gradient norm
/// already meets the tolerance, the best iterate is accepted and the
/// report flags that the fixed-point headroom was limited by f64
/// arithmetic (coefficients scale like 1/λ, so their Gram products carry
/// noise of order eps/λ).
struct StallTracker {
    best_fp: f64,
    best_gn: f64,
    best_alpha: Option<DVector<f64>>,
    stalled: usize,
}

impl StallTracker {
    fn new() -> Self {
        StallTracker {
            best_fp: f64::INFINITY,
            best_gn: f64::INFINITY,
            best_alpha: None,
            stalled: 0,
        }
    }

    /// Smallest gradient H-norm resolvable in f64 for this iterate: the
    /// risk gradient is evaluated through v = Kα, whose rounding of
    /// order eps·‖α‖₁ is amplified by the loss curvature.
    fn noise_floor(curvature_scale: f64, alpha: &DVector<f64>) -> f64 {
        let l1: f64 = alpha.iter().map(|a| a.abs()).sum();
        32.0 * f64::EPSILON * (1.0 + curvature_scale * (1.0 + l1))
    }

    /// Returns true when iteration should stop at the stored best.
    fn observe(&mut self, fp: f64, gn: f64, alpha: &DVector<f64>, accept_gn: f64) -> bool {
        if fp < self.best_fp * 0.999 {
            self.best_fp = fp;
            self.best_gn = gn;
            self.best_alpha = Some(alpha.clone());
            self.stalled = 0;
        } else {
            self.stalled += 1;
        }
        self.stalled >= 200 && self.best_gn <= accept_gn
    }

    fn take(self, iterations: usize) -> SubSolve {
        SubSolve {
            alpha: self.best_alpha.expect("observe was called"),
            iterations,
            fp_residual: self.best_fp,
            grad_norm: self.best_gn,
            floor_hit: true,
        }
    }
}

/// H-norm pair (fixed-point residual, gradient norm) at coefficients α.
fn residuals(k: &DMatrix<f64>, res: &DVector<f64>, lambda: f64) -> (f64, f64) {
    let grad_norm = linalg::quad_form(k, res.as_slice()).max(0.0).sqrt();
    (grad_norm / (2.0 * lambda), grad_norm)
}

/// Success requires the gradient H-norm at the tolerance and the
/// fixed-point residual within its 10x headroom. The residual equals
/// grad/(2λ), so for small λ it sits above the float noise floor of the
/// coefficient arithmetic (‖α‖ ~ 1/λ) and only the headroom is
/// reachable.
fn converged(fp: f64, grad_norm: f64, tol: f64) -> bool {
    grad_norm <= tol && fp <= 10.0 * tol
}

fn downsample(trace: &[f64]) -> Vec<f64> {
    const KEEP: usize = 64;
    if trace.len() <= KEEP {
        return trace.to_vec();
    }
    let stride = trace.len().div_ceil(KEEP);
    let mut out: Vec<f64> = trace.iter().step_by(stride).copied().collect();
    if let Some(&last) = trace.last() {
        if out.last() != Some(&last) {
            out.push(last);
        }
    }
    out
}

/// Damped fixed-point iteration on the representer map
/// α ↦ −g(Kα)/(2λ), doubling the damping on monotone progress.
fn fixed_point_iterate<M: RiskModel>(
    model: &M,
    k: &DMatrix<f64>,
    lambda: f64,
    tol: f64,
    curvature_scale: f64,
    max_iters: usize,
    mut theta: f64,
    start: DVector<f64>,
) -> Result<SubSolve> {
    let mut alpha = start;
    let mut last_fp = f64::INFINITY;
    let mut trace = Vec::new();
    let mut stall = StallTracker::new();
    for it in 0..max_iters {
        let v = k * &alpha;
        let g = model.grad(&v);
        let res = &g + &alpha * (2.0 * lambda);
        let (fp, gn) = residuals(k, &res, lambda);
        trace.push(fp);
        if converged(fp, gn, tol) {
            return Ok(SubSolve {
                alpha,
                iterations: it,
                fp_residual: fp,
                grad_norm: gn,
                floor_hit: false,
            });
        }
        let accept = tol.max(StallTracker::noise_floor(curvature_scale, &alpha));
        if stall.observe(fp, gn, &alpha, accept) {
            return Ok(stall.take(it));
        }
        if fp < last_fp {
            theta = (theta * 2.0).min(1.0);
        } else {
            theta = (theta * 0.5).max(1.0 / 64.0);
        }
        last_fp = fp;
        let target = -&g / (2.0 * lambda);
        alpha = &alpha * (1.0 - theta) + target * theta;
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: last_fp,
        tolerance: tol,
        trace: downsample(&trace),
    })
}

/// Armijo-backtracked descent. The direction solves
/// (H·K + 2λI)·d = −(g + 2λα), the curvature-preconditioned form of the
/// residual field; it falls back to the plain preconditioned direction
/// −(g + 2λα) whenever that solve stalls.
fn descent_iterate<M: RiskModel>(
    model: &M,
    k: &DMatrix<f64>,
    lambda: f64,
    tol: f64,
    curvature_scale: f64,
    max_iters: usize,
    start: DVector<f64>,
) -> Result<SubSolve> {
    let m = k.nrows();
    let mut alpha = start;
    let mut trace = Vec::new();
    let mut stall = StallTracker::new();
    let objective = |a: &DVector<f64>| -> f64 {
        let v = k * a;
        model.risk(&v) + lambda * a.dot(&v)
    };
    let mut f_cur = objective(&alpha);
    for it in 0..max_iters {
        let v = k * &alpha;
        let g = model.grad(&v);
        let res = &g + &alpha * (2.0 * lambda);
        let (fp, gn) = residuals(k, &res, lambda);
        trace.push(fp);
        if converged(fp, gn, tol) {
            return Ok(SubSolve {
                alpha,
                iterations: it,
                fp_residual: fp,
                grad_norm: gn,
                floor_hit: false,
            });
        }
        let accept = tol.max(StallTracker::noise_floor(curvature_scale, &alpha));
        if stall.observe(fp, gn, &alpha, accept) {
            return Ok(stall.take(it));
        }
        let h = model.hess(&v);
        let a_mat = &h * k + DMatrix::identity(m, m) * (2.0 * lambda);
        let mut dir = match a_mat.lu().solve(&(-&res)) {
            Some(d) => d,
            None => -&res,
        };
        // ∇Fᵀd must be negative; otherwise use the plain residual field.
        let k_res = k * &res;
        let mut slope = k_res.dot(&dir);
        if !(slope < 0.0) {
            dir = -&res;
            slope = -k_res.dot(&res);
            if !(slope < 0.0) {
                // Residual is invisible to the Gram metric: f is optimal.
                return Ok(SubSolve {
                    alpha,
                    iterations: it,
                    fp_residual: fp,
                    grad_norm: gn,
                    floor_hit: false,
                });
            }
        }
        let mut step = 1.0;
        let mut accepted = false;
        // Near the solution the predicted decrease sinks below the f64
        // resolution of the objective; the acceptance test carries that
        // noise level so full curvature steps keep landing.
        let noise = 8.0 * f64::EPSILON * f_cur.abs().max(1.0);
        for _ in 0..80 {
            let cand = &alpha + &dir * step;
            let f_new = objective(&cand);
            if f_new <= f_cur + 1e-4 * step * slope + noise {
                alpha = cand;
                f_cur = f_new;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            let accept = tol.max(StallTracker::noise_floor(curvature_scale, &alpha));
            if stall.best_gn <= accept {
                return Ok(stall.take(it));
            }
            return Err(Error::NonConvergence {
                iterations: it,
                residual: fp,
                tolerance: tol,
                trace: downsample(&trace),
            });
        }
    }
    let v = k * &alpha;
    let res = &model.grad(&v) + &alpha * (2.0 * lambda);
    let (fp, _) = residuals(k, &res, lambda);
    Err(Error::NonConvergence {
        iterations: max_iters,
        residual: fp,
        tolerance: tol,
        trace: downsample(&trace),
    })
}

fn run_subsolve<M: RiskModel>(
    model: &M,
    data: &ProblemData,
    lambda: f64,
    tol: f64,
    curvature_scale: f64,
    opts: &SolverOptions,
    contraction_threshold: Option<f64>,
    start: DVector<f64>,
) -> Result<SubSolve> {
    let use_fixed_point = match opts.mode {
        SolverMode::FixedPoint => true,
        SolverMode::Gradient => false,
        SolverMode::Auto => contraction_threshold.is_some_and(|th| lambda > th),
    };
    if use_fixed_point {
        fixed_point_iterate(
            model,
            &data.k_supp,
            lambda,
            tol,
            curvature_scale,
            opts.max_iters,
            opts.damping,
            start,
        )
    } else {
        descent_iterate(
            model,
            &data.k_supp,
            lambda,
            tol,
            curvature_scale,
            opts.max_iters,
            start,
        )
    }
}

fn start_vector(data: &ProblemData, opts: &SolverOptions) -> Result<DVector<f64>> {
    match &opts.initial_alpha {
        None => Ok(DVector::zeros(data.support.len())),
        Some(a) => {
            if a.len() != data.support.len() {
                return Err(Error::InvalidArgument(format!(
                    "initial_alpha has {} entries but the support has {}",
                    a.len(),
                    data.support.len()
                )));
            }
            Ok(DVector::from_column_slice(a))
        }
    }
}

fn conditioning_warning(k: &DMatrix<f64>) -> bool {
    let eigs = linalg::sym_eigenvalues(k);
    let max = eigs.iter().copied().fold(0.0f64, f64::max);
    let min = eigs.iter().copied().fold(f64::INFINITY, f64::min);
    !(min > max * 1e-12)
}

fn h_increment(k: &DMatrix<f64>, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let d = a - b;
    linalg::quad_form(k, d.as_slice()).max(0.0).sqrt()
}

// ---------------------------------------------------------------------------
// Public solves
// ---------------------------------------------------------------------------

/// Trains the classical regularized risk minimizer for `loss` on the
/// atoms of `p`. Nondifferentiable losses run through the δ-schedule.
pub fn solve_svm(
    p: &DiscreteMeasure,
    lambda: f64,
    kernel: &Kernel,
    loss: &Loss,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    opts.validate()?;
    let data = problem_data(p, kernel)?;
    let tol = opts.tol_for(p.len(), loss.lip());
    let kappa = kernel.sup_norm(p.space())?;
    let mut alpha = start_vector(&data, opts)?;
    let mut iterations = 0;
    let mut fp = f64::INFINITY;
    let mut gn = f64::INFINITY;
    let mut floor_hit = false;
    let mut schedule_used = None;
    let mut increments = None;

    if loss.differentiable() {
        let eval = CEval::Exact(loss);
        let model = ClassicalModel {
            atoms: &data.atoms,
            eval: &eval,
            m: data.support.len(),
        };
        let threshold = eval.lip_deriv().map(|ld| 0.5 * kappa * kappa * ld);
        let curv = eval.lip_deriv().unwrap_or(1.0);
        let sub = run_subsolve(&model, &data, lambda, tol, curv, opts, threshold, alpha)?;
        alpha = sub.alpha;
        iterations = sub.iterations;
        fp = sub.fp_residual;
        gn = sub.grad_norm;
        floor_hit = sub.floor_hit;
    } else {
        if opts.delta_schedule.is_empty() {
            return Err(Error::Capability(format!(
                "{loss:?} is not differentiable and the delta schedule is empty"
            )));
        }
        let rep = loss.rep_piecewise()?;
        let kind = loss.kind();
        let mut incs = Vec::new();
        let mut prev: Option<DVector<f64>> = None;
        for &delta in &opts.delta_schedule {
            let sm = crate::losses::smooth(rep.clone(), delta)?;
            let eval = CEval::Smooth { kind, sm };
            let model = ClassicalModel {
                atoms: &data.atoms,
                eval: &eval,
                m: data.support.len(),
            };
            let threshold = eval.lip_deriv().map(|ld| 0.5 * kappa * kappa * ld);
            let curv = eval.lip_deriv().unwrap_or(1.0);
            let sub = run_subsolve(&model, &data, lambda, tol, curv, opts, threshold, alpha)?;
            if let Some(prev) = &prev {
                incs.push(h_increment(&data.k_supp, &sub.alpha, prev));
            }
            prev = Some(sub.alpha.clone());
            alpha = sub.alpha;
            iterations += sub.iterations;
            fp = sub.fp_residual;
            gn = sub.grad_norm;
            floor_hit |= sub.floor_hit;
        }
        schedule_used = Some(opts.delta_schedule.clone());
        increments = Some(incs);
    }

    // Objective reported against the exact (nonsmoothed) shifted loss.
    let v = &data.k_supp * &alpha;
    let shifted_risk: f64 = data
        .atoms
        .iter()
        .map(|&(pos, y, w)| w * loss.shifted_value(y, v[pos]))
        .sum();
    let objective = shifted_risk + lambda * alpha.dot(&v);
    let hypothesis = Hypothesis::new(
        p.space().clone(),
        kernel.clone(),
        data.support.clone(),
        alpha.as_slice().to_vec(),
    )?;
    Ok(SolveReport {
        hypothesis,
        objective,
        iterations,
        grad_norm: gn,
        fixed_point_residual: fp,
        delta_schedule_used: schedule_used,
        delta_cauchy_increments: increments,
        residual_floor_hit: floor_hit,
        conditioning_warning: conditioning_warning(&data.k_supp),
    })
}

/// Trains the pairwise regularized risk minimizer for `ploss` on the
/// atoms of `p`; the risk is the exact O(n²) double sum.
pub fn solve_rpl(
    p: &DiscreteMeasure,
    lambda: f64,
    kernel: &Kernel,
    ploss: &PairwiseLoss,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    opts.validate()?;
    let data = problem_data(p, kernel)?;
    let tol = opts.tol_for(p.len(), ploss.lip());
    let kappa = kernel.sup_norm(p.space())?;
    let mut alpha = start_vector(&data, opts)?;
    let mut iterations = 0;
    let mut fp = f64::INFINITY;
    let mut gn = f64::INFINITY;
    let mut floor_hit = false;
    let mut schedule_used = None;
    let mut increments = None;

    if ploss.differentiable() {
        let eval = PEval::Exact(ploss);
        let model = PairwiseModel {
            atoms: &data.atoms,
            eval: &eval,
            m: data.support.len(),
        };
        let threshold = eval.deriv_lip().map(|dl| kappa * kappa * 2.0 * dl);
        let curv = eval.deriv_lip().unwrap_or(1.0);
        let sub = run_subsolve(&model, &data, lambda, tol, curv, opts, threshold, alpha)?;
        alpha = sub.alpha;
        iterations = sub.iterations;
        fp = sub.fp_residual;
        gn = sub.grad_norm;
        floor_hit = sub.floor_hit;
    } else {
        if opts.delta_schedule.is_empty() {
            return Err(Error::Capability(format!(
                "{ploss:?} is not differentiable and the delta schedule is empty"
            )));
        }
        let rep = ploss.rep_piecewise()?;
        let mut incs = Vec::new();
        let mut prev: Option<DVector<f64>> = None;
        for &delta in &opts.delta_schedule {
            let sm = crate::losses::smooth(rep.clone(), delta)?;
            let eval = PEval::Smooth(sm);
            let model = PairwiseModel {
                atoms: &data.atoms,
                eval: &eval,
                m: data.support.len(),
            };
            let threshold = eval.deriv_lip().map(|dl| kappa * kappa * 2.0 * dl);
            let curv = eval.deriv_lip().unwrap_or(1.0);
            let sub = run_subsolve(&model, &data, lambda, tol, curv, opts, threshold, alpha)?;
            if let Some(prev) = &prev {
                incs.push(h_increment(&data.k_supp, &sub.alpha, prev));
            }
            prev = Some(sub.alpha.clone());
            alpha = sub.alpha;
            iterations += sub.iterations;
            fp = sub.fp_residual;
            gn = sub.grad_norm;
            floor_hit |= sub.floor_hit;
        }
        schedule_used = Some(opts.delta_schedule.clone());
        increments = Some(incs);
    }

    let v = &data.k_supp * &alpha;
    let mut shifted_risk = 0.0;
    for a in &data.atoms {
        for b in &data.atoms {
            shifted_risk += a.2 * b.2 * ploss.shifted_value(a.1, b.1, v[a.0], v[b.0]);
        }
    }
    let objective = shifted_risk + lambda * alpha.dot(&v);
    let hypothesis = Hypothesis::new(
        p.space().clone(),
        kernel.clone(),
        data.support.clone(),
        alpha.as_slice().to_vec(),
    )?;
    Ok(SolveReport {
        hypothesis,
        objective,
        iterations,
        grad_norm: gn,
        fixed_point_residual: fp,
        delta_schedule_used: schedule_used,
        delta_cauchy_increments: increments,
        residual_floor_hit: floor_hit,
        conditioning_warning: conditioning_warning(&data.k_supp),
    })
}

/// Dispatches on the loss family.
pub fn solve(
    p: &DiscreteMeasure,
    lambda: f64,
    kernel: &Kernel,
    loss: &ProblemLoss,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    match loss {
        ProblemLoss::Classical(l) => solve_svm(p, lambda, kernel, l, opts),
        ProblemLoss::Pairwise(pl) => solve_rpl(p, lambda, kernel, pl, opts),
    }
}

/// Exact shifted risk E_P L*(X, Y, f(X)).
pub fn risk(p: &DiscreteMeasure, loss: &Loss, f: &Hypothesis) -> Result<f64> {
    if !p.space().same_space(f.space()) {
        return Err(Error::DomainMismatch(
            "hypothesis lives on a different space".into(),
        ));
    }
    let values = f.values_on_space()?;
    Ok(p.atoms()
        .iter()
        .zip(p.weights())
        .map(|(a, w)| w * loss.shifted_value(a.y, values[a.x]))
        .sum())
}

/// Exact shifted pairwise risk E_{P²} L*(X, Y, X̃, Ỹ, f(X), f(X̃)).
pub fn pairwise_risk(p: &DiscreteMeasure, ploss: &PairwiseLoss, f: &Hypothesis) -> Result<f64> {
    if !p.space().same_space(f.space()) {
        return Err(Error::DomainMismatch(
            "hypothesis lives on a different space".into(),
        ));
    }
    let values = f.values_on_space()?;
    let mut acc = 0.0;
    for (a, wa) in p.atoms().iter().zip(p.weights()) {
        for (b, wb) in p.atoms().iter().zip(p.weights()) {
            acc += wa * wb * ploss.shifted_value(a.y, b.y, values[a.x], values[b.x]);
        }
    }
    Ok(acc)
}

/// H-norm of f − (−1/(2λ))·E_P[L'·Φ], the representer-identity residual,
/// recomputed from scratch by Gram arithmetic. Requires a differentiable
/// loss.
pub fn fixed_point_residual(
    f: &Hypothesis,
    p: &DiscreteMeasure,
    lambda: f64,
    loss: &ProblemLoss,
) -> Result<f64> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument("lambda must be positive".into()));
    }
    if !p.space().same_space(f.space()) {
        return Err(Error::DomainMismatch(
            "hypothesis lives on a different space".into(),
        ));
    }
    let space = f.space();
    let values = f.values_on_space()?;
    let mut coeffs = vec![0.0f64; space.len()];
    for (&s, a) in f.support().iter().zip(f.alpha()) {
        coeffs[s] += a;
    }
    match loss {
        ProblemLoss::Classical(l) => {
            if !l.differentiable() {
                return Err(Error::Capability(format!(
                    "{l:?} is not differentiable; the representer residual needs L'"
                )));
            }
            for (a, w) in p.atoms().iter().zip(p.weights()) {
                coeffs[a.x] += w * l.deriv_t(a.y, values[a.x])? / (2.0 * lambda);
            }
        }
        ProblemLoss::Pairwise(pl) => {
            if !pl.differentiable() {
                return Err(Error::Capability(format!(
                    "{pl:?} is not differentiable; the representer residual needs its partials"
                )));
            }
            for (a, wa) in p.atoms().iter().zip(p.weights()) {
                for (b, wb) in p.atoms().iter().zip(p.weights()) {
                    let d5 = pl.d5(a.y, b.y, values[a.x], values[b.x])?;
                    let d6 = pl.d6(a.y, b.y, values[a.x], values[b.x])?;
                    coeffs[a.x] += wa * wb * d5 / (2.0 * lambda);
                    coeffs[b.x] += wa * wb * d6 / (2.0 * lambda);
                }
            }
        }
    }
    let gram = f.kernel().gram(space)?;
    Ok(linalg::quad_form(&gram, &coeffs).max(0.0).sqrt())
}
