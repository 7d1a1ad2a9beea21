//! Constant calculators and verification drivers for the total-stability
//! inequalities: compute the right-hand side from the explicit constants,
//! compute the left-hand side from two exact solves, and certify
//! LHS ≤ RHS up to the propagated solver allowance.
//!
//! Every bound has the three-term shape
//! `coeff_tv·d_tv(P₁,P₂) + coeff_λ·|λ₁−λ₂| + coeff_k·dist(k₁,k₂)`
//! where the kernel distance is the sup-norm feature-map distance for the
//! sup-norm bounds and the H₁-norm feature-map distance for the RKHS-norm
//! bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{h1_distance, strict_pd_cholesky, sup_distance, Kernel};
use crate::losses::{Loss, PairwiseLoss, ProblemLoss};
use crate::solver::{
    pairwise_risk, risk, solve_rpl, solve_svm, Hypothesis, SolveReport, SolverOptions,
};
use crate::space::{tv_distance, DiscreteMeasure};

/// Which stability inequality a scenario verifies.
///
/// `Classical*` statements cover ordinary losses L(x, y, f(x)),
/// `Pairwise*` the losses L(x, y, x̃, ỹ, f(x), f(x̃)). The `Sup` variants
/// bound the sup-norm of the difference of minimizers and require the
/// regularization parameters to clear a loss-dependent threshold; the
/// `H1` variants bound the H₁-norm, hold for every positive λ, and need
/// the second RKHS included in the first (automatic on a finite space
/// when the first Gram matrix is strictly positive definite). The `Gap`
/// variants fix the free constant s at half the precondition gap; `Risk`
/// bounds the difference of shifted risks instead of functions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Same measure and kernel, only λ changes; H-norm bound
    /// (|L|₁‖k‖_∞/r²)·|λ−μ| with r = min{λ, μ}.
    LambdaHNorm,
    ClassicalSup,
    ClassicalSupGap,
    ClassicalRisk,
    ClassicalH1Smooth,
    ClassicalH1Lipschitz,
    PairwiseSup,
    PairwiseSupGap,
    PairwiseRisk,
    PairwiseH1Smooth,
    PairwiseH1Lipschitz,
}

impl Theorem {
    pub const ALL: [Theorem; 11] = [
        Theorem::LambdaHNorm,
        Theorem::ClassicalSup,
        Theorem::ClassicalSupGap,
        Theorem::ClassicalRisk,
        Theorem::ClassicalH1Smooth,
        Theorem::ClassicalH1Lipschitz,
        Theorem::PairwiseSup,
        Theorem::PairwiseSupGap,
        Theorem::PairwiseRisk,
        Theorem::PairwiseH1Smooth,
        Theorem::PairwiseH1Lipschitz,
    ];

    pub fn is_pairwise(&self) -> bool {
        matches!(
            self,
            Theorem::PairwiseSup
                | Theorem::PairwiseSupGap
                | Theorem::PairwiseRisk
                | Theorem::PairwiseH1Smooth
                | Theorem::PairwiseH1Lipschitz
        )
    }

    /// True when the kernel term is measured in the H₁ norm.
    pub fn uses_h1_kernel_distance(&self) -> bool {
        matches!(
            self,
            Theorem::ClassicalH1Smooth
                | Theorem::ClassicalH1Lipschitz
                | Theorem::PairwiseH1Smooth
                | Theorem::PairwiseH1Lipschitz
        )
    }

    pub fn name(&self) -> &'static str {
        match self {
            Theorem::LambdaHNorm => "lambda_h_norm",
            Theorem::ClassicalSup => "classical_sup",
            Theorem::ClassicalSupGap => "classical_sup_gap",
            Theorem::ClassicalRisk => "classical_risk",
            Theorem::ClassicalH1Smooth => "classical_h1_smooth",
            Theorem::ClassicalH1Lipschitz => "classical_h1_lipschitz",
            Theorem::PairwiseSup => "pairwise_sup",
            Theorem::PairwiseSupGap => "pairwise_sup_gap",
            Theorem::PairwiseRisk => "pairwise_risk",
            Theorem::PairwiseH1Smooth => "pairwise_h1_smooth",
            Theorem::PairwiseH1Lipschitz => "pairwise_h1_lipschitz",
        }
    }
}

/// One verification instance: two training triples plus the loss and the
/// inequality to check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub theorem: Theorem,
    pub loss: ProblemLoss,
    pub measure1: DiscreteMeasure,
    pub lambda1: f64,
    pub kernel1: Kernel,
    pub measure2: DiscreteMeasure,
    pub lambda2: f64,
    pub kernel2: Kernel,
}

/// The explicit constants entering one bound.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    /// max{‖k₁‖_∞, ‖k₂‖_∞} on the scenario's space.
    pub kappa: f64,
    /// The λ threshold of the statement: ½κ²|L'|₁ for classical sup
    /// bounds, κ²·d_L for pairwise sup bounds, 0 when every λ > 0 works.
    pub threshold: f64,
    /// The free constant of the gap/risk variants, fixed at half the
    /// precondition gap.
    pub s: Option<f64>,
    /// d_L = |D₅L*|₁ + |D₆L*|₁ for pairwise losses.
    pub d_l: Option<f64>,
    pub tv_coeff: f64,
    pub lambda_coeff: f64,
    pub kernel_coeff: f64,
}

/// Outcome of verifying one scenario.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub theorem: Theorem,
    /// False when the statement's precondition does not hold for the
    /// scenario; no LHS/RHS comparison is claimed then.
    pub precondition_ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub lhs: Option<f64>,
    pub tv_term: Option<f64>,
    pub lambda_term: Option<f64>,
    pub kernel_term: Option<f64>,
    pub rhs_total: Option<f64>,
    /// rhs_total − lhs; the bound is certified when this is at least
    /// −epsilon_solve.
    pub margin: Option<f64>,
    /// Allowance propagated from the two solver residuals,
    /// κ·(res₁+res₂)/min{λ₁,λ₂}, plus |L|₁·δ_final/(2·min λ) when a
    /// δ-schedule was used.
    pub epsilon_solve: Option<f64>,
    pub constants: Option<BoundConstants>,
    pub solver_reports: Option<Box<(SolveReport, SolveReport)>>,
}

impl BoundReport {
    fn flagged(theorem: Theorem, note: String) -> Self {
        BoundReport {
            theorem,
            precondition_ok: false,
            note: Some(note),
            lhs: None,
            tv_term: None,
            lambda_term: None,
            kernel_term: None,
            rhs_total: None,
            margin: None,
            epsilon_solve: None,
            constants: None,
            solver_reports: None,
        }
    }

    /// Certified: precondition holds and margin ≥ −ε_solve.
    pub fn passed(&self) -> bool {
        self.precondition_ok
            && match (self.margin, self.epsilon_solve) {
                (Some(m), Some(e)) => m >= -e,
                _ => false,
            }
    }

    /// Precondition held but the margin fell below the allowance.
    pub fn violated(&self) -> bool {
        self.precondition_ok && !self.passed()
    }
}

fn classical_loss<'a>(s: &'a Scenario) -> Result<&'a Loss> {
    match &s.loss {
        ProblemLoss::Classical(l) => Ok(l),
        ProblemLoss::Pairwise(_) => Err(Error::InvalidArgument(format!(
            "{} needs a classical loss",
            s.theorem.name()
        ))),
    }
}

fn pairwise_loss<'a>(s: &'a Scenario) -> Result<&'a PairwiseLoss> {
    match &s.loss {
        ProblemLoss::Pairwise(p) => Ok(p),
        ProblemLoss::Classical(_) => Err(Error::InvalidArgument(format!(
            "{} needs a pairwise loss",
            s.theorem.name()
        ))),
    }
}

/// Computes the bound constants for a scenario. Errors are hard
/// (wrong loss family, missing loss constants); λ-threshold violations
/// are soft and surface as `precondition_ok = false` in [`verify`].
pub fn constants_for(scenario: &Scenario) -> Result<BoundConstants> {
    constants_for_with_s(scenario, None)
}

/// [`constants_for`] with an explicit free constant for the gap/risk
/// variants. The default places s at half the precondition gap; any
/// value in (0, min λ − threshold) is admissible.
pub fn constants_for_with_s(
    scenario: &Scenario,
    s_override: Option<f64>,
) -> Result<BoundConstants> {
    let space = scenario.measure1.space();
    let kappa = scenario
        .kernel1
        .sup_norm(space)?
        .max(scenario.kernel2.sup_norm(space)?);
    let lmin = scenario.lambda1.min(scenario.lambda2);
    let lmin2 = lmin * lmin;

    let need_lip_deriv = |l: &Loss| -> Result<f64> {
        l.lip_deriv().ok_or_else(|| {
            Error::Capability(format!(
                "{l:?} has no derivative Lipschitz constant; {} needs one",
                scenario.theorem.name()
            ))
        })
    };
    let need_second_order = |p: &PairwiseLoss| -> Result<f64> {
        if !p.has_continuous_second_partials() {
            return Err(Error::Capability(format!(
                "{p:?} lacks continuous bounded second partials; {} needs them",
                scenario.theorem.name()
            )));
        }
        Ok(p.d_l().expect("second-order pairwise losses have d_L"))
    };

    Ok(match scenario.theorem {
        Theorem::LambdaHNorm => {
            let l = classical_loss(scenario)?;
            need_lip_deriv(l)?;
            // r is taken as min{λ, μ} itself, the tightest admissible.
            BoundConstants {
                kappa,
                threshold: 0.0,
                s: None,
                d_l: None,
                tv_coeff: 0.0,
                lambda_coeff: l.lip() * kappa / lmin2,
                kernel_coeff: 0.0,
            }
        }
        Theorem::ClassicalSup | Theorem::ClassicalSupGap | Theorem::ClassicalRisk => {
            let l = classical_loss(scenario)?;
            let lip = l.lip();
            let lipd = need_lip_deriv(l)?;
            let r = 0.5 * kappa * kappa * lipd;
            let gap = lmin - r;
            let s = pick_s(s_override, gap)?;
            match scenario.theorem {
                Theorem::ClassicalSup => BoundConstants {
                    kappa,
                    threshold: r,
                    s: None,
                    d_l: None,
                    tv_coeff: 2.0 * lip / lipd,
                    lambda_coeff: 4.0 * lip / (kappa * kappa * lipd * lipd),
                    kernel_coeff: lip / (2.0 * gap),
                },
                Theorem::ClassicalSupGap => BoundConstants {
                    kappa,
                    threshold: r,
                    s: Some(s),
                    d_l: None,
                    tv_coeff: 2.0 * lip / lipd,
                    lambda_coeff: 4.0 * lip / (kappa * kappa * lipd * lipd),
                    kernel_coeff: lip / (2.0 * s),
                },
                _ => BoundConstants {
                    kappa,
                    threshold: r,
                    s: Some(s),
                    d_l: None,
                    tv_coeff: 4.0 * lip * lip / lipd,
                    lambda_coeff: 4.0 * lip * lip / (kappa * kappa * lipd * lipd),
                    kernel_coeff: lip * lip / (2.0 * s),
                },
            }
        }
        Theorem::ClassicalH1Smooth | Theorem::ClassicalH1Lipschitz => {
            let l = classical_loss(scenario)?;
            if scenario.theorem == Theorem::ClassicalH1Smooth && !l.differentiable() {
                return Err(Error::Capability(format!(
                    "{l:?} is not differentiable; use classical_h1_lipschitz"
                )));
            }
            let lip = l.lip();
            BoundConstants {
                kappa,
                threshold: 0.0,
                s: None,
                d_l: None,
                tv_coeff: kappa * lip / lmin,
                lambda_coeff: kappa * lip / lmin2,
                kernel_coeff: lip / (2.0 * lmin),
            }
        }
        Theorem::PairwiseSup | Theorem::PairwiseSupGap | Theorem::PairwiseRisk => {
            let p = pairwise_loss(scenario)?;
            let d_l = need_second_order(p)?;
            let lip = p.lip();
            let c1 = p.partial_bound();
            let threshold = kappa * kappa * d_l;
            let gap = lmin - threshold;
            let s = pick_s(s_override, gap)?;
            match scenario.theorem {
                Theorem::PairwiseSup => BoundConstants {
                    kappa,
                    threshold,
                    s: None,
                    d_l: Some(d_l),
                    tv_coeff: 4.0 * c1 / d_l,
                    lambda_coeff: lip / d_l,
                    kernel_coeff: c1 / gap,
                },
                Theorem::PairwiseSupGap => BoundConstants {
                    kappa,
                    threshold,
                    s: Some(s),
                    d_l: Some(d_l),
                    tv_coeff: 4.0 * c1 / d_l,
                    lambda_coeff: lip / d_l,
                    kernel_coeff: c1 / s,
                },
                _ => BoundConstants {
                    kappa,
                    threshold,
                    s: Some(s),
                    d_l: Some(d_l),
                    tv_coeff: 4.0 * lip * (lip + 2.0 * c1) / d_l,
                    lambda_coeff: 2.0 * lip * lip / d_l,
                    kernel_coeff: 2.0 * lip * c1 / s,
                },
            }
        }
        Theorem::PairwiseH1Smooth => {
            let p = pairwise_loss(scenario)?;
            need_second_order(p)?;
            let lip = p.lip();
            let c1 = p.partial_bound();
            BoundConstants {
                kappa,
                threshold: 0.0,
                s: None,
                d_l: p.d_l(),
                tv_coeff: 4.0 * kappa * c1 / lmin,
                lambda_coeff: kappa * lip / lmin2,
                kernel_coeff: c1 / lmin,
            }
        }
        Theorem::PairwiseH1Lipschitz => {
            let p = pairwise_loss(scenario)?;
            let lip = p.lip();
            BoundConstants {
                kappa,
                threshold: 0.0,
                s: None,
                d_l: p.d_l(),
                tv_coeff: 4.0 * kappa * lip / lmin,
                lambda_coeff: kappa * lip / lmin2,
                kernel_coeff: lip / lmin,
            }
        }
    })
}

fn pick_s(s_override: Option<f64>, gap: f64) -> Result<f64> {
    match s_override {
        None => Ok(0.5 * gap),
        Some(s) if s > 0.0 && s < gap => Ok(s),
        Some(s) => Err(Error::InvalidArgument(format!(
            "s = {s} must lie strictly between 0 and the precondition gap {gap}"
        ))),
    }
}

/// Rebinds the second measure onto the first measure's space when they
/// are structurally equal; errors when the spaces genuinely differ.
fn unify(scenario: &Scenario) -> Result<Scenario> {
    let s1 = scenario.measure1.space();
    let s2 = scenario.measure2.space();
    if s1.same_space(s2) {
        return Ok(scenario.clone());
    }
    if !(s1 == s2) {
        return Err(Error::DomainMismatch(
            "both measures of a scenario must live on the same ground space".into(),
        ));
    }
    let measure2 = DiscreteMeasure::new(
        s1.clone(),
        scenario.measure2.atoms().to_vec(),
        scenario.measure2.weights().to_vec(),
    )?;
    Ok(Scenario {
        measure2,
        ..scenario.clone()
    })
}

/// Verifies one scenario: solves both triples exactly, computes the
/// measured LHS in the statement's norm and the three-term RHS from the
/// explicit constants, and reports the margin together with the solver
/// allowance.
pub fn verify(scenario: &Scenario, opts: &SolverOptions) -> Result<BoundReport> {
    let scenario = unify(scenario)?;
    let theorem = scenario.theorem;
    if !(scenario.lambda1 > 0.0 && scenario.lambda2 > 0.0) {
        return Err(Error::InvalidArgument(
            "both lambdas must be positive".into(),
        ));
    }
    let constants = constants_for(&scenario)?;
    let lmin = scenario.lambda1.min(scenario.lambda2);

    // Soft preconditions: threshold clearance, shared triple pieces for
    // the λ-only statement, strict positive definiteness for H₁ norms.
    if constants.threshold > 0.0 && !(lmin > constants.threshold) {
        return Ok(BoundReport::flagged(
            theorem,
            format!(
                "min lambda {lmin} does not clear the threshold {}",
                constants.threshold
            ),
        ));
    }
    if theorem == Theorem::LambdaHNorm
        && (scenario.measure1 != scenario.measure2 || scenario.kernel1 != scenario.kernel2)
    {
        return Ok(BoundReport::flagged(
            theorem,
            "the λ-perturbation bound needs one shared measure and kernel".into(),
        ));
    }

    let space = scenario.measure1.space();
    let kernel_dist = if theorem.uses_h1_kernel_distance() {
        match h1_distance(&scenario.kernel1, &scenario.kernel2, space) {
            Ok(d) => d,
            Err(Error::Precondition(msg)) => {
                return Ok(BoundReport::flagged(theorem, msg));
            }
            Err(e) => return Err(e),
        }
    } else {
        sup_distance(&scenario.kernel1, &scenario.kernel2, space)?
    };

    let report1 = solve_side(
        &scenario.measure1,
        scenario.lambda1,
        &scenario.kernel1,
        &scenario.loss,
        opts,
    )?;
    let report2 = solve_side(
        &scenario.measure2,
        scenario.lambda2,
        &scenario.kernel2,
        &scenario.loss,
        opts,
    )?;

    let lhs = measured_lhs(&scenario, &report1.hypothesis, &report2.hypothesis)?;

    let tv = tv_distance(&scenario.measure1, &scenario.measure2)?.distance;
    let dlambda = (scenario.lambda1 - scenario.lambda2).abs();
    let tv_term = constants.tv_coeff * tv;
    let lambda_term = constants.lambda_coeff * dlambda;
    let kernel_term = constants.kernel_coeff * kernel_dist;
    let rhs_total = tv_term + lambda_term + kernel_term;

    let mut epsilon_solve =
        constants.kappa * (report1.fixed_point_residual + report2.fixed_point_residual) / lmin;
    if let Some(schedule) = &report1.delta_schedule_used {
        if let Some(&last) = schedule.last() {
            let lip = match &scenario.loss {
                ProblemLoss::Classical(l) => l.lip(),
                ProblemLoss::Pairwise(p) => p.lip(),
            };
            epsilon_solve += lip * last / (2.0 * lmin);
        }
    }

    log::debug!(
        "{}: lhs {lhs:.3e} vs rhs {rhs_total:.3e} (tv {tv_term:.3e}, lambda {lambda_term:.3e}, kernel {kernel_term:.3e})",
        theorem.name()
    );

    let note = if theorem.uses_h1_kernel_distance() && scenario.kernel1 != scenario.kernel2 {
        Some(
            "H1-norm LHS re-expresses both trained functions through their values              on the space against the first kernel's Gram matrix (Cholesky solve)"
                .into(),
        )
    } else {
        None
    };

    Ok(BoundReport {
        theorem,
        precondition_ok: true,
        note,
        lhs: Some(lhs),
        tv_term: Some(tv_term),
        lambda_term: Some(lambda_term),
        kernel_term: Some(kernel_term),
        rhs_total: Some(rhs_total),
        margin: Some(rhs_total - lhs),
        epsilon_solve: Some(epsilon_solve),
        constants: Some(constants),
        solver_reports: Some(Box::new((report1, report2))),
    })
}

fn solve_side(
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

fn measured_lhs(scenario: &Scenario, f1: &Hypothesis, f2: &Hypothesis) -> Result<f64> {
    match scenario.theorem {
        Theorem::LambdaHNorm => f1.h_distance(f2),
        Theorem::ClassicalSup
        | Theorem::ClassicalSupGap
        | Theorem::PairwiseSup
        | Theorem::PairwiseSupGap => {
            let v1 = f1.values_on_space()?;
            let v2 = f2.values_on_space()?;
            Ok(v1
                .iter()
                .zip(&v2)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max))
        }
        Theorem::ClassicalRisk => {
            let l = classical_loss(scenario)?;
            let r1 = risk(&scenario.measure1, l, f1)?;
            let r2 = risk(&scenario.measure2, l, f2)?;
            Ok((r1 - r2).abs())
        }
        Theorem::PairwiseRisk => {
            let p = pairwise_loss(scenario)?;
            let r1 = pairwise_risk(&scenario.measure1, p, f1)?;
            let r2 = pairwise_risk(&scenario.measure2, p, f2)?;
            Ok((r1 - r2).abs())
        }
        Theorem::ClassicalH1Smooth
        | Theorem::ClassicalH1Lipschitz
        | Theorem::PairwiseH1Smooth
        | Theorem::PairwiseH1Lipschitz => {
            // ‖f₁ − f₂‖_{H₁}: both functions re-expressed through their
            // values on the space, with K₁ strictly pd guaranteed above.
            let space = scenario.measure1.space();
            let gram1 = scenario.kernel1.gram(space)?;
            let chol = strict_pd_cholesky(gram1.as_ref())?;
            let v1 = f1.values_on_space()?;
            let v2 = f2.values_on_space()?;
            let d =
                nalgebra::DVector::from_iterator(v1.len(), v1.iter().zip(&v2).map(|(a, b)| a - b));
            let solved = chol.solve(&d);
            Ok(d.dot(&solved).max(0.0).sqrt())
        }
    }
}

/// Summary statistics over a batch of verifications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSummary {
    pub total: usize,
    /// Scenarios whose preconditions held.
    pub verified: usize,
    pub passed: usize,
    pub violated: usize,
    /// Precondition failures (reported, not counted as violations).
    pub flagged: usize,
    pub min_margin: Option<f64>,
    /// Mean share of the RHS carried by each term, over verified
    /// scenarios with a positive RHS.
    pub tv_share: f64,
    pub lambda_share: f64,
    pub kernel_share: f64,
}

/// Verifies a list of scenarios, never aborting on a single failure:
/// hard per-scenario errors surface as flagged reports. Reports are
/// returned in input order.
pub fn batch_verify(
    scenarios: &[Scenario],
    opts: &SolverOptions,
) -> (Vec<BoundReport>, BatchSummary) {
    batch_verify_jobs(scenarios, opts, 1)
}

/// [`batch_verify`] with a thread count; scenario evaluation is pure, so
/// only the report assembly order matters and it stays input order.
pub fn batch_verify_jobs(
    scenarios: &[Scenario],
    opts: &SolverOptions,
    jobs: usize,
) -> (Vec<BoundReport>, BatchSummary) {
    let jobs = jobs.max(1).min(scenarios.len().max(1));
    let run = |s: &Scenario| -> BoundReport {
        verify(s, opts).unwrap_or_else(|e| BoundReport::flagged(s.theorem, format!("error: {e}")))
    };
    let reports: Vec<BoundReport> = if jobs == 1 {
        scenarios.iter().map(run).collect()
    } else {
        let mut slots: Vec<Option<BoundReport>> = vec![None; scenarios.len()];
        let next = std::sync::atomic::AtomicUsize::new(0);
        let slots_mutex = std::sync::Mutex::new(&mut slots);
        std::thread::scope(|scope| {
            for _ in 0..jobs {
                scope.spawn(|| loop {
                    let i = next.fetch_add(1, std::sync::atomic::Ordering::Relaxed);
                    if i >= scenarios.len() {
                        break;
                    }
                    let report = run(&scenarios[i]);
                    slots_mutex.lock().unwrap()[i] = Some(report);
                });
            }
        });
        slots
            .into_iter()
            .map(|r| r.expect("all scenarios evaluated"))
            .collect()
    };
    let summary = summarize(&reports);
    (reports, summary)
}

pub fn summarize(reports: &[BoundReport]) -> BatchSummary {
    let mut summary = BatchSummary {
        total: reports.len(),
        verified: 0,
        passed: 0,
        violated: 0,
        flagged: 0,
        min_margin: None,
        tv_share: 0.0,
        lambda_share: 0.0,
        kernel_share: 0.0,
    };
    let mut shares = (0.0, 0.0, 0.0);
    let mut share_count = 0usize;
    for r in reports {
        if !r.precondition_ok {
            summary.flagged += 1;
            continue;
        }
        summary.verified += 1;
        if r.passed() {
            summary.passed += 1;
        } else {
            summary.violated += 1;
        }
        if let Some(m) = r.margin {
            summary.min_margin = Some(summary.min_margin.map_or(m, |c: f64| c.min(m)));
        }
        if let (Some(tv), Some(la), Some(ke), Some(total)) =
            (r.tv_term, r.lambda_term, r.kernel_term, r.rhs_total)
        {
            if total > 0.0 {
                shares.0 += tv / total;
                shares.1 += la / total;
                shares.2 += ke / total;
                share_count += 1;
            }
        }
    }
    if share_count > 0 {
        summary.tv_share = shares.0 / share_count as f64;
        summary.lambda_share = shares.1 / share_count as f64;
        summary.kernel_share = shares.2 / share_count as f64;
    }
    summary
}
