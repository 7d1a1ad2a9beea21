//! Classical and pairwise loss functions with shifted versions, exact
//! Lipschitz constants, and piecewise-exact convolution smoothing.
//!
//! Every classical loss here is represented by a convex 1-d function of
//! either the margin y·t or the residual y−t; every pairwise loss by a
//! convex 1-d function ρ of ξ = (y−t) − (ỹ−t̃) with ρ(0) = 0. Shifting
//! (subtracting the value at t = 0, resp. at (t,t̃) = (0,0)) removes
//! moment conditions without changing minimizers or Lipschitz constants.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a classical loss reads the margin y·t or the residual y−t.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Margin,
    Distance,
}

/// The classical loss zoo.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "loss", rename_all = "snake_case")]
pub enum Loss {
    /// max{0, 1 − y·t}
    Hinge,
    /// ln(1 + exp(−y·t))
    CLogistic,
    /// max{0, |y−t| − ε}
    EpsInsensitive { epsilon: f64 },
    /// ½(y−t)² for |y−t| ≤ α, else α|y−t| − ½α²
    Huber { alpha: f64 },
    /// −ln(4·exp(y−t)/(1+exp(y−t))²) = 2·ln cosh((y−t)/2)
    RLogistic,
    /// (τ−1)(y−t) for y−t < 0, τ(y−t) otherwise
    Pinball { tau: f64 },
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

/// 2·ln cosh(u/2), computed without overflow.
fn log_cosh_twice(u: f64) -> f64 {
    let a = u.abs();
    a + 2.0 * (-a).exp().ln_1p() - 2.0 * std::f64::consts::LN_2
}

impl Loss {
    pub fn hinge() -> Self {
        Loss::Hinge
    }

    pub fn c_logistic() -> Self {
        Loss::CLogistic
    }

    pub fn eps_insensitive(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0) {
            return Err(Error::Construction("epsilon must be positive".into()));
        }
        Ok(Loss::EpsInsensitive { epsilon })
    }

    pub fn huber(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Construction("alpha must be positive".into()));
        }
        Ok(Loss::Huber { alpha })
    }

    pub fn r_logistic() -> Self {
        Loss::RLogistic
    }

    pub fn pinball(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Construction("tau must lie in (0, 1)".into()));
        }
        Ok(Loss::Pinball { tau })
    }

    pub fn kind(&self) -> LossKind {
        match self {
            Loss::Hinge | Loss::CLogistic => LossKind::Margin,
            _ => LossKind::Distance,
        }
    }

    pub fn differentiable(&self) -> bool {
        matches!(self, Loss::CLogistic | Loss::Huber { .. } | Loss::RLogistic)
    }

    /// Lipschitz constant |L|₁ in t.
    pub fn lip(&self) -> f64 {
        match self {
            Loss::Hinge | Loss::CLogistic | Loss::EpsInsensitive { .. } | Loss::RLogistic => 1.0,
            Loss::Huber { alpha } => *alpha,
            Loss::Pinball { tau } => tau.max(1.0 - tau),
        }
    }

    /// Lipschitz constant |L'|₁ of the derivative, for differentiable
    /// variants.
    pub fn lip_deriv(&self) -> Option<f64> {
        match self {
            Loss::CLogistic => Some(0.25),
            Loss::Huber { .. } => Some(1.0),
            Loss::RLogistic => Some(0.5),
            _ => None,
        }
    }

    /// (|L|₁, |L'|₁) as used by the stability constants.
    pub fn constants(&self) -> (f64, Option<f64>) {
        (self.lip(), self.lip_deriv())
    }

    /// The representing argument: y·t for margin losses, y−t otherwise.
    fn rep_arg(&self, y: f64, t: f64) -> f64 {
        match self.kind() {
            LossKind::Margin => y * t,
            LossKind::Distance => y - t,
        }
    }

    /// The 1-d representing function evaluated at its argument.
    pub fn rep_value(&self, u: f64) -> f64 {
        match self {
            Loss::Hinge => (1.0 - u).max(0.0),
            Loss::CLogistic => softplus(-u),
            Loss::EpsInsensitive { epsilon } => (u.abs() - epsilon).max(0.0),
            Loss::Huber { alpha } => {
                if u.abs() <= *alpha {
                    0.5 * u * u
                } else {
                    alpha * u.abs() - 0.5 * alpha * alpha
                }
            }
            Loss::RLogistic => log_cosh_twice(u),
            Loss::Pinball { tau } => {
                if u < 0.0 {
                    (tau - 1.0) * u
                } else {
                    tau * u
                }
            }
        }
    }

    fn rep_deriv(&self, u: f64) -> Result<f64> {
        match self {
            Loss::CLogistic => Ok(-1.0 / (1.0 + u.exp())),
            Loss::Huber { alpha } => Ok(u.clamp(-alpha, *alpha)),
            Loss::RLogistic => Ok((u / 2.0).tanh()),
            _ => Err(Error::Capability(format!(
                "{self:?} is not differentiable; solve it through the delta-schedule smoothing"
            ))),
        }
    }

    /// Second derivative of the representing function where defined.
    pub(crate) fn rep_second(&self, u: f64) -> f64 {
        match self {
            Loss::CLogistic => {
                let s = 1.0 / (1.0 + (-u).exp());
                s * (1.0 - s)
            }
            Loss::Huber { alpha } => {
                if u.abs() <= *alpha {
                    1.0
                } else {
                    0.0
                }
            }
            Loss::RLogistic => {
                let c = (u / 2.0).cosh();
                if c.is_finite() {
                    0.5 / (c * c)
                } else {
                    0.0
                }
            }
            _ => 0.0,
        }
    }

    /// L(x, y, t); nonnegative.
    pub fn value(&self, y: f64, t: f64) -> f64 {
        self.rep_value(self.rep_arg(y, t))
    }

    /// Shifted loss L*(x, y, t) = L(x, y, t) − L(x, y, 0); zero at t = 0.
    pub fn shifted_value(&self, y: f64, t: f64) -> f64 {
        self.value(y, t) - self.value(y, 0.0)
    }

    /// ∂L/∂t for differentiable variants.
    pub fn deriv_t(&self, y: f64, t: f64) -> Result<f64> {
        let d = self.rep_deriv(self.rep_arg(y, t))?;
        Ok(match self.kind() {
            LossKind::Margin => y * d,
            LossKind::Distance => -d,
        })
    }

    /// ∂²L/∂t² where defined.
    pub(crate) fn curvature_t(&self, y: f64, t: f64) -> f64 {
        let s = self.rep_second(self.rep_arg(y, t));
        match self.kind() {
            LossKind::Margin => y * y * s,
            LossKind::Distance => s,
        }
    }

    /// The representing function as an exact piecewise-linear object, for
    /// the nondifferentiable variants.
    pub fn rep_piecewise(&self) -> Result<PiecewiseLinear> {
        match self {
            Loss::Hinge => PiecewiseLinear::new(vec![1.0], vec![-1.0, 0.0], 1.0, 0.0),
            Loss::EpsInsensitive { epsilon } => PiecewiseLinear::new(
                vec![-epsilon, *epsilon],
                vec![-1.0, 0.0, 1.0],
                -epsilon,
                0.0,
            ),
            Loss::Pinball { tau } => {
                PiecewiseLinear::new(vec![0.0], vec![tau - 1.0, *tau], 0.0, 0.0)
            }
            _ => Err(Error::Capability(format!(
                "{self:?} is differentiable; smoothing applies to the nondifferentiable variants"
            ))),
        }
    }
}

/// The pairwise loss zoo: each loss is ρ((y−t) − (ỹ−t̃)) for a convex
/// Lipschitz ρ normalized to ρ(0) = 0, so the loss vanishes on the
/// diagonal (x, y, x, y, t, t).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "pairwise", rename_all = "snake_case")]
pub enum PairwiseLoss {
    /// ρ(ξ) = 2·ln cosh(ξ/2): differentiable with continuous bounded
    /// second derivative, the canonical choice for the second-order
    /// pairwise results.
    RLogisticRho,
    /// Huber's function as ρ: differentiable, but ρ'' jumps at ±α.
    HuberRho { alpha: f64 },
    /// ρ(ξ) = |ξ|.
    AbsRho,
    /// The pinball function as ρ.
    PinballRho { tau: f64 },
}

impl PairwiseLoss {
    pub fn r_logistic_rho() -> Self {
        PairwiseLoss::RLogisticRho
    }

    pub fn huber_rho(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0) {
            return Err(Error::Construction("alpha must be positive".into()));
        }
        Ok(PairwiseLoss::HuberRho { alpha })
    }

    pub fn abs_rho() -> Self {
        PairwiseLoss::AbsRho
    }

    pub fn pinball_rho(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau < 1.0) {
            return Err(Error::Construction("tau must lie in (0, 1)".into()));
        }
        Ok(PairwiseLoss::PinballRho { tau })
    }

    fn as_classical_rep(&self) -> Loss {
        match self {
            PairwiseLoss::RLogisticRho => Loss::RLogistic,
            PairwiseLoss::HuberRho { alpha } => Loss::Huber { alpha: *alpha },
            PairwiseLoss::AbsRho => Loss::EpsInsensitive { epsilon: 0.0 },
            PairwiseLoss::PinballRho { tau } => Loss::Pinball { tau: *tau },
        }
    }

    pub fn differentiable(&self) -> bool {
        matches!(
            self,
            PairwiseLoss::RLogisticRho | PairwiseLoss::HuberRho { .. }
        )
    }

    /// True when both second partials with respect to (t, t̃) exist, are
    /// continuous, and are uniformly bounded. Huber's ρ'' jumps, so only
    /// the logistic-type ρ qualifies.
    pub fn has_continuous_second_partials(&self) -> bool {
        matches!(self, PairwiseLoss::RLogisticRho)
    }

    /// Separate Lipschitz constant |L|₁ = |ρ|₁.
    pub fn lip(&self) -> f64 {
        match self {
            PairwiseLoss::RLogisticRho | PairwiseLoss::AbsRho => 1.0,
            PairwiseLoss::HuberRho { alpha } => *alpha,
            PairwiseLoss::PinballRho { tau } => tau.max(1.0 - tau),
        }
    }

    /// sup|ρ'|, the uniform bound on both first partials.
    pub fn partial_bound(&self) -> f64 {
        self.lip()
    }

    /// sup|ρ''| where ρ'' exists everywhere and is continuous.
    pub fn second_partial_bound(&self) -> Option<f64> {
        match self {
            PairwiseLoss::RLogisticRho => Some(0.5),
            _ => None,
        }
    }

    /// Lipschitz constant |ρ'|₁ of the derivative, for the differentiable
    /// variants (Huber's ρ' is Lipschitz even though ρ'' jumps).
    pub fn deriv_lip(&self) -> Option<f64> {
        match self {
            PairwiseLoss::RLogisticRho => Some(0.5),
            PairwiseLoss::HuberRho { .. } => Some(1.0),
            _ => None,
        }
    }

    /// d_L = |D₅L*|₁ + |D₆L*|₁ = 2|ρ'|₁.
    pub fn d_l(&self) -> Option<f64> {
        self.deriv_lip().map(|d| 2.0 * d)
    }

    pub fn rho(&self, xi: f64) -> f64 {
        self.as_classical_rep().rep_value(xi)
    }

    pub fn rho_deriv(&self, xi: f64) -> Result<f64> {
        match self {
            PairwiseLoss::RLogisticRho => Ok((xi / 2.0).tanh()),
            PairwiseLoss::HuberRho { alpha } => Ok(xi.clamp(-alpha, *alpha)),
            _ => Err(Error::Capability(format!(
                "{self:?} is not differentiable; solve it through the delta-schedule smoothing"
            ))),
        }
    }

    pub(crate) fn rho_second(&self, xi: f64) -> f64 {
        self.as_classical_rep().rep_second(xi)
    }

    fn xi(y: f64, y2: f64, t: f64, t2: f64) -> f64 {
        (y - t) - (y2 - t2)
    }

    /// L(x, y, x̃, ỹ, t, t̃) = ρ((y−t) − (ỹ−t̃)).
    pub fn value(&self, y: f64, y2: f64, t: f64, t2: f64) -> f64 {
        self.rho(Self::xi(y, y2, t, t2))
    }

    /// Shifted value: subtracts the loss at (t, t̃) = (0, 0).
    pub fn shifted_value(&self, y: f64, y2: f64, t: f64, t2: f64) -> f64 {
        self.rho(Self::xi(y, y2, t, t2)) - self.rho(y - y2)
    }

    /// Partial derivative in the fifth argument: −ρ'(ξ).
    pub fn d5(&self, y: f64, y2: f64, t: f64, t2: f64) -> Result<f64> {
        Ok(-self.rho_deriv(Self::xi(y, y2, t, t2))?)
    }

    /// Partial derivative in the sixth argument: +ρ'(ξ).
    pub fn d6(&self, y: f64, y2: f64, t: f64, t2: f64) -> Result<f64> {
        self.rho_deriv(Self::xi(y, y2, t, t2))
    }

    /// ρ as an exact piecewise-linear object, for the nondifferentiable
    /// variants.
    pub fn rep_piecewise(&self) -> Result<PiecewiseLinear> {
        match self {
            PairwiseLoss::AbsRho => PiecewiseLinear::new(vec![0.0], vec![-1.0, 1.0], 0.0, 0.0),
            PairwiseLoss::PinballRho { tau } => {
                PiecewiseLinear::new(vec![0.0], vec![tau - 1.0, *tau], 0.0, 0.0)
            }
            _ => Err(Error::Capability(format!(
                "{self:?} is differentiable; smoothing applies to the nondifferentiable variants"
            ))),
        }
    }
}

/// A loss for a regularized-risk problem: classical or pairwise.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemLoss {
    Classical(Loss),
    Pairwise(PairwiseLoss),
}

/// A convex piecewise-linear function on ℝ, with exact evaluation and
/// exact antiderivative. Breakpoints are strictly increasing; slopes are
/// nondecreasing (one more slope than breakpoints).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseLinear {
    breaks: Vec<f64>,
    slopes: Vec<f64>,
    anchor_x: f64,
    anchor_value: f64,
}

impl PiecewiseLinear {
    pub fn new(
        breaks: Vec<f64>,
        slopes: Vec<f64>,
        anchor_x: f64,
        anchor_value: f64,
    ) -> Result<Self> {
        if slopes.len() != breaks.len() + 1 {
            return Err(Error::Construction(format!(
                "{} slopes for {} breakpoints",
                slopes.len(),
                breaks.len()
            )));
        }
        if breaks.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Construction(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if slopes.windows(2).any(|w| w[0] > w[1] + 1e-15) {
            return Err(Error::Construction(
                "slopes must be nondecreasing (convexity)".into(),
            ));
        }
        Ok(PiecewiseLinear {
            breaks,
            slopes,
            anchor_x,
            anchor_value,
        })
    }

    /// A single affine piece with the given slope through (0, value0).
    pub fn affine(slope: f64, value0: f64) -> Self {
        PiecewiseLinear {
            breaks: vec![],
            slopes: vec![slope],
            anchor_x: 0.0,
            anchor_value: value0,
        }
    }

    /// Maximum absolute slope: the Lipschitz constant of the function.
    pub fn lip(&self) -> f64 {
        self.slopes.iter().map(|s| s.abs()).fold(0.0, f64::max)
    }

    /// Segment boundaries as (left, right, slope) triples covering
    /// (−∞, ∞); used by the integration walk.
    fn segments(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let n = self.slopes.len();
        (0..n).map(move |i| {
            let left = if i == 0 {
                f64::NEG_INFINITY
            } else {
                self.breaks[i - 1]
            };
            let right = if i == n - 1 {
                f64::INFINITY
            } else {
                self.breaks[i]
            };
            (left, right, self.slopes[i])
        })
    }

    pub fn value(&self, u: f64) -> f64 {
        // anchor_value + integral of the slope function from anchor_x to u.
        let (lo, hi, sign) = if u >= self.anchor_x {
            (self.anchor_x, u, 1.0)
        } else {
            (u, self.anchor_x, -1.0)
        };
        let mut acc = 0.0;
        for (a, b, s) in self.segments() {
            let l = a.max(lo);
            let r = b.min(hi);
            if r > l {
                acc += s * (r - l);
            }
        }
        self.anchor_value + sign * acc
    }

    /// Right-continuous slope at u.
    pub fn slope_at(&self, u: f64) -> f64 {
        let idx = self.breaks.iter().take_while(|&&b| b <= u).count();
        self.slopes[idx]
    }

    /// Exact antiderivative ∫ from anchor_x to u of the function.
    pub fn antiderivative(&self, u: f64) -> f64 {
        let (lo, hi, sign) = if u >= self.anchor_x {
            (self.anchor_x, u, 1.0)
        } else {
            (u, self.anchor_x, -1.0)
        };
        let mut acc = 0.0;
        for (a, b, s) in self.segments() {
            let l = a.max(lo);
            let r = b.min(hi);
            if r > l {
                let vl = self.value(l);
                acc += vl * (r - l) + 0.5 * s * (r - l) * (r - l);
            }
        }
        sign * acc
    }

    /// value(to) − value(from), accumulated over the segments between the
    /// two arguments; local arithmetic, so nearby points lose no
    /// precision to the anchor offset.
    pub fn value_rel(&self, from: f64, to: f64) -> f64 {
        let (lo, hi, sign) = if to >= from {
            (from, to, 1.0)
        } else {
            (to, from, -1.0)
        };
        let mut acc = 0.0;
        for (a, b, s) in self.segments() {
            let l = a.max(lo);
            let r = b.min(hi);
            if r > l {
                acc += s * (r - l);
            }
        }
        sign * acc
    }
}

/// ρ_δ: the convolution of a piecewise-linear ρ with the uniform
/// distribution on [−δ, 0], evaluated in closed form:
/// ρ_δ(ξ) = (1/δ)·∫_{ξ−δ}^{ξ} ρ(u) du, so for piecewise-linear ρ the
/// result is exactly piecewise-quadratic, its derivative is
/// (ρ(ξ) − ρ(ξ−δ))/δ, and sup|ρ_δ − ρ| ≤ |ρ|₁·δ/2.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Smoothed1d {
    base: PiecewiseLinear,
    delta: f64,
}

/// Convolution-smooths a convex piecewise-linear function; δ ∈ (0, 1].
pub fn smooth(rho: PiecewiseLinear, delta: f64) -> Result<Smoothed1d> {
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} must lie in (0, 1]"
        )));
    }
    Ok(Smoothed1d { base: rho, delta })
}

impl Smoothed1d {
    pub fn base(&self) -> &PiecewiseLinear {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn value(&self, xi: f64) -> f64 {
        self.base.value(xi) + self.deviation_signed(xi)
    }

    /// ρ_δ(ξ) − ρ(ξ) = (1/δ)·∫_{ξ−δ}^{ξ} (ρ(u) − ρ(ξ)) du, walked over
    /// the window with all arithmetic at the window's scale. On a window
    /// inside one affine piece this reduces to −s·δ/2 exactly, so
    /// |deviation| ≤ |ρ|₁·δ/2 holds in floating point as well.
    pub fn deviation_signed(&self, xi: f64) -> f64 {
        let lo = xi - self.delta;
        if self.base.slope_at(lo) == self.base.slope_at(xi)
            && !self.base.breaks.iter().any(|&b| lo < b && b <= xi)
        {
            return -self.base.slope_at(xi) * self.delta * 0.5;
        }
        let mut acc = 0.0;
        for (a, b, s) in self.base.segments() {
            let l = a.max(lo);
            let r = b.min(xi);
            if r > l {
                // ∫ over [l, r] of (ρ(u) − ρ(ξ)) with ρ affine of slope s.
                let gl = self.base.value_rel(xi, l);
                acc += gl * (r - l) + 0.5 * s * (r - l) * (r - l);
            }
        }
        acc / self.delta
    }

    /// |ρ_δ(ξ) − ρ(ξ)|.
    pub fn deviation(&self, xi: f64) -> f64 {
        self.deviation_signed(xi).abs()
    }

    pub fn deriv(&self, xi: f64) -> f64 {
        (self.base.value(xi) - self.base.value(xi - self.delta)) / self.delta
    }

    pub(crate) fn second(&self, xi: f64) -> f64 {
        (self.base.slope_at(xi) - self.base.slope_at(xi - self.delta)) / self.delta
    }

    /// Lipschitz constant of the smoothed function (never exceeds the
    /// base's).
    pub fn lip(&self) -> f64 {
        self.base.lip()
    }

    /// Lipschitz constant of the derivative: the largest slope jump over δ.
    pub fn deriv_lip(&self) -> f64 {
        let s = &self.base.slopes;
        (s[s.len() - 1] - s[0]) / self.delta
    }

    /// |ρ|₁·δ/2, the uniform approximation error bound.
    pub fn sup_error_bound(&self) -> f64 {
        self.base.lip() * self.delta / 2.0
    }
}

/// A classical or pairwise loss replaced by its convolution-smoothed
/// representing function at a fixed δ.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedLoss {
    base: ProblemLoss,
    smoothed: Smoothed1d,
}

impl SmoothedLoss {
    /// Smooths a nondifferentiable loss; errors on differentiable bases
    /// and on δ outside (0, 1].
    pub fn new(base: ProblemLoss, delta: f64) -> Result<Self> {
        let rep = match &base {
            ProblemLoss::Classical(l) => l.rep_piecewise()?,
            ProblemLoss::Pairwise(p) => p.rep_piecewise()?,
        };
        Ok(SmoothedLoss {
            base,
            smoothed: smooth(rep, delta)?,
        })
    }

    pub fn base(&self) -> &ProblemLoss {
        &self.base
    }

    pub fn delta(&self) -> f64 {
        self.smoothed.delta
    }

    pub fn smoothed(&self) -> &Smoothed1d {
        &self.smoothed
    }

    pub fn lip(&self) -> f64 {
        self.smoothed.lip()
    }
}
