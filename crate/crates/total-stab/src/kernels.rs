//! Kernel zoo, Gram matrices, kernel distances, and the bandwidth /
//! hierarchical-weight perturbation bounds.
//!
//! Every kernel here is symmetric and positive semidefinite on the finite
//! spaces it is evaluated on; the Gaussian-family variants satisfy
//! k(x,x) = 1, so their sup-norm is 1. Gram matrices are cached per
//! (kernel, space) pair behind interior synchronization.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;
use crate::space::GroundSpace;

/// Relative threshold under which a Gram matrix counts as numerically
/// singular for H₁-norm computations: min eigenvalue vs 1e-10·trace.
pub const STRICT_PD_REL_TOL: f64 = 1e-10;

/// Lipschitz constant |φ|₁ of the Gaussian generator φ(r) = exp(−r²):
/// the maximum of 2r·exp(−r²) over r ≥ 0, attained at r = 1/√2.
pub fn gaussian_generator_lip() -> f64 {
    (2.0 / std::f64::consts::E).sqrt()
}

/// Parameters of a hierarchical Gaussian kernel of depth m ≥ 1 over
/// branches with fixed coordinate index sets.
///
/// Depth 1 is the inhomogeneous Gaussian
/// `exp(−2γ₁⁻² Σᵢ wᵢ² ‖x_{Iᵢ} − x'_{Iᵢ}‖²)` with top weights w. For depth
/// m ≥ 2, branch i carries per-coordinate first-layer weights, one scalar
/// weight per intermediate layer, and the top layer mixes the branches:
/// `exp(−2γ_m⁻² Σᵢ wᵢ² (1 − kᵢ(x_{Iᵢ}, x'_{Iᵢ})))` with kᵢ of depth m−1.
///
/// Normalization is enforced at construction: the flattened ℓ²-norm of
/// every layer is at most 1 (so in particular every single weight is).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "HierRepr", into = "HierRepr")]
pub struct HierarchicalParams {
    dim: usize,
    index_sets: Vec<Vec<usize>>,
    first_layer: Vec<Vec<f64>>,
    mid_layers: Vec<Vec<f64>>,
    top_weights: Vec<f64>,
    gammas: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct HierRepr {
    depth: usize,
    dim: usize,
    index_sets: Vec<Vec<usize>>,
    weights: HierWeightsRepr,
    gammas: Vec<f64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct HierWeightsRepr {
    #[serde(default)]
    first_layer: Vec<Vec<f64>>,
    #[serde(default)]
    mid_layers: Vec<Vec<f64>>,
    top: Vec<f64>,
}

impl From<HierarchicalParams> for HierRepr {
    fn from(p: HierarchicalParams) -> Self {
        HierRepr {
            depth: p.gammas.len(),
            dim: p.dim,
            index_sets: p.index_sets,
            weights: HierWeightsRepr {
                first_layer: p.first_layer,
                mid_layers: p.mid_layers,
                top: p.top_weights,
            },
            gammas: p.gammas,
        }
    }
}

impl TryFrom<HierRepr> for HierarchicalParams {
    type Error = Error;
    fn try_from(r: HierRepr) -> Result<Self> {
        if r.depth != r.gammas.len() {
            return Err(Error::Construction(format!(
                "declared depth {} but {} bandwidths",
                r.depth,
                r.gammas.len()
            )));
        }
        HierarchicalParams::new(
            r.dim,
            r.index_sets,
            r.weights.first_layer,
            r.weights.mid_layers,
            r.weights.top,
            r.gammas,
        )
    }
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|w| w * w).sum::<f64>().sqrt()
}

fn l2_norm_nested(v: &[Vec<f64>]) -> f64 {
    v.iter()
        .map(|b| b.iter().map(|w| w * w).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}

impl HierarchicalParams {
    /// Depth is `gammas.len()`. For depth 1 pass empty `first_layer` and
    /// `mid_layers`; for depth 2 pass empty `mid_layers`; for depth m pass
    /// m−2 mid layers of one scalar weight per branch.
    pub fn new(
        dim: usize,
        index_sets: Vec<Vec<usize>>,
        first_layer: Vec<Vec<f64>>,
        mid_layers: Vec<Vec<f64>>,
        top_weights: Vec<f64>,
        gammas: Vec<f64>,
    ) -> Result<Self> {
        let depth = gammas.len();
        let branches = index_sets.len();
        if depth == 0 {
            return Err(Error::Construction("need at least one bandwidth".into()));
        }
        if gammas.iter().any(|g| !(*g > 0.0)) {
            return Err(Error::Construction(
                "all bandwidths must be positive".into(),
            ));
        }
        if branches == 0 {
            return Err(Error::Construction("need at least one index set".into()));
        }
        for (i, set) in index_sets.iter().enumerate() {
            if set.is_empty() {
                return Err(Error::Construction(format!("index set {i} is empty")));
            }
            if let Some(&c) = set.iter().find(|&&c| c >= dim) {
                return Err(Error::Construction(format!(
                    "index set {i} references coordinate {c} but dim = {dim}"
                )));
            }
        }
        if top_weights.len() != branches {
            return Err(Error::Construction(format!(
                "{} top weights for {branches} branches",
                top_weights.len()
            )));
        }
        let norm_tol = 1.0 + 1e-12;
        if l2_norm(&top_weights) > norm_tol {
            return Err(Error::Construction(
                "top weights must satisfy sum of squares <= 1".into(),
            ));
        }
        if depth == 1 {
            if !first_layer.is_empty() || !mid_layers.is_empty() {
                return Err(Error::Construction(
                    "depth-1 kernels take only top weights".into(),
                ));
            }
        } else {
            if first_layer.len() != branches {
                return Err(Error::Construction(format!(
                    "{} first-layer weight vectors for {branches} branches",
                    first_layer.len()
                )));
            }
            for (i, (w, set)) in first_layer.iter().zip(&index_sets).enumerate() {
                if w.len() != set.len() {
                    return Err(Error::Construction(format!(
                        "branch {i} has {} first-layer weights for {} coordinates",
                        w.len(),
                        set.len()
                    )));
                }
            }
            if l2_norm_nested(&first_layer) > norm_tol {
                return Err(Error::Construction(
                    "first-layer weights must satisfy sum of squares <= 1".into(),
                ));
            }
            if mid_layers.len() != depth - 2 {
                return Err(Error::Construction(format!(
                    "depth {depth} needs {} mid layers, got {}",
                    depth - 2,
                    mid_layers.len()
                )));
            }
            for (j, layer) in mid_layers.iter().enumerate() {
                if layer.len() != branches {
                    return Err(Error::Construction(format!(
                        "mid layer {j} has {} weights for {branches} branches",
                        layer.len()
                    )));
                }
                if l2_norm(layer) > norm_tol {
                    return Err(Error::Construction(format!(
                        "mid layer {j} must satisfy sum of squares <= 1"
                    )));
                }
            }
        }
        Ok(HierarchicalParams {
            dim,
            index_sets,
            first_layer,
            mid_layers,
            top_weights,
            gammas,
        })
    }

    /// Depth-1 (inhomogeneous Gaussian over singleton index sets).
    pub fn depth1(weights: Vec<f64>, gamma: f64) -> Result<Self> {
        let dim = weights.len();
        let index_sets = (0..dim).map(|i| vec![i]).collect();
        HierarchicalParams::new(dim, index_sets, vec![], vec![], weights, vec![gamma])
    }

    pub fn depth(&self) -> usize {
        self.gammas.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn index_sets(&self) -> &[Vec<usize>] {
        &self.index_sets
    }

    pub fn gammas(&self) -> &[f64] {
        &self.gammas
    }

    pub fn top_weights(&self) -> &[f64] {
        &self.top_weights
    }

    pub fn first_layer(&self) -> &[Vec<f64>] {
        &self.first_layer
    }

    pub fn mid_layers(&self) -> &[Vec<f64>] {
        &self.mid_layers
    }

    /// Same depth, index sets, and bandwidths; only weights may differ.
    pub fn same_structure(&self, other: &Self) -> bool {
        self.dim == other.dim && self.index_sets == other.index_sets && self.gammas == other.gammas
    }

    fn eval(&self, x: &[f64], x2: &[f64]) -> f64 {
        let m = self.depth();
        let g1 = self.gammas[0];
        if m == 1 {
            let s: f64 = self
                .index_sets
                .iter()
                .zip(&self.top_weights)
                .map(|(set, w)| w * w * set.iter().map(|&c| (x[c] - x2[c]).powi(2)).sum::<f64>())
                .sum();
            return (-2.0 / (g1 * g1) * s).exp();
        }
        let mut branch: Vec<f64> = self
            .index_sets
            .iter()
            .zip(&self.first_layer)
            .map(|(set, ws)| {
                let u: f64 = set
                    .iter()
                    .zip(ws)
                    .map(|(&c, w)| w * w * (x[c] - x2[c]).powi(2))
                    .sum();
                (-2.0 / (g1 * g1) * u).exp()
            })
            .collect();
        for (j, layer) in self.mid_layers.iter().enumerate() {
            let g = self.gammas[j + 1];
            for (b, w) in branch.iter_mut().zip(layer) {
                *b = (-2.0 / (g * g) * w * w * (1.0 - *b)).exp();
            }
        }
        let gm = self.gammas[m - 1];
        let s: f64 = self
            .top_weights
            .iter()
            .zip(&branch)
            .map(|(w, b)| w * w * (1.0 - b))
            .sum();
        (-2.0 / (gm * gm) * s).exp()
    }
}

/// The kernel variants covered by the stability results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum KernelSpec {
    /// k(x,x') = exp(−‖x−x'‖²/γ²), the Gaussian RBF with generator
    /// φ(r) = exp(−r²) evaluated at r = ‖x−x'‖/γ.
    Gaussian {
        gamma: f64,
    },
    /// Depth-1 hierarchical Gaussian with per-coordinate weights:
    /// k(x,x') = exp(−2γ⁻² Σᵢ wᵢ²(xᵢ−x'ᵢ)²).
    Inhomogeneous {
        weights: Vec<f64>,
        gamma: f64,
    },
    Hierarchical(HierarchicalParams),
    /// Compactly supported Wendland RBF φ(r) = (1−r)₊⁴(4r+1) at
    /// r = ‖x−x'‖/γ; positive definite for dim ≤ 3.
    Compact {
        gamma: f64,
    },
    /// k(x,x') = ⟨x,x'⟩.
    Linear,
    /// A kernel given directly by its Gram matrix on a fixed point list;
    /// evaluation looks points up by exact coordinate match.
    GramBacked {
        points: Vec<Vec<f64>>,
        matrix: Vec<Vec<f64>>,
    },
}

struct KernelInner {
    spec: KernelSpec,
    gram_cache: Mutex<HashMap<u64, Arc<DMatrix<f64>>>>,
}

/// An evaluable symmetric psd kernel with a per-space Gram cache.
///
/// Immutable and cheap to clone; equality compares the parameter spec.
#[derive(Clone)]
pub struct Kernel {
    inner: Arc<KernelInner>,
}

impl std::fmt::Debug for Kernel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_tuple("Kernel").field(&self.inner.spec).finish()
    }
}

impl PartialEq for Kernel {
    fn eq(&self, other: &Self) -> bool {
        self.inner.spec == other.inner.spec
    }
}

impl Serialize for Kernel {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        self.inner.spec.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Kernel {
    fn deserialize<D: serde::Deserializer<'de>>(
        deserializer: D,
    ) -> std::result::Result<Self, D::Error> {
        let spec = KernelSpec::deserialize(deserializer)?;
        Kernel::from_spec(spec).map_err(serde::de::Error::custom)
    }
}

impl Kernel {
    pub fn from_spec(spec: KernelSpec) -> Result<Self> {
        match &spec {
            KernelSpec::Gaussian { gamma } | KernelSpec::Compact { gamma } => {
                if !(*gamma > 0.0) {
                    return Err(Error::Construction("bandwidth must be positive".into()));
                }
            }
            KernelSpec::Inhomogeneous { weights, gamma } => {
                if !(*gamma > 0.0) {
                    return Err(Error::Construction("bandwidth must be positive".into()));
                }
                if weights.is_empty() {
                    return Err(Error::Construction("need at least one weight".into()));
                }
            }
            KernelSpec::Hierarchical(_) | KernelSpec::Linear => {}
            KernelSpec::GramBacked { points, matrix } => {
                let n = points.len();
                if n == 0 || matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Construction(
                        "gram-backed kernel needs a square matrix matching its points".into(),
                    ));
                }
                for i in 0..n {
                    for j in 0..n {
                        if (matrix[i][j] - matrix[j][i]).abs() > 1e-12 {
                            return Err(Error::Construction(
                                "gram-backed matrix must be symmetric".into(),
                            ));
                        }
                    }
                }
            }
        }
        Ok(Kernel {
            inner: Arc::new(KernelInner {
                spec,
                gram_cache: Mutex::new(HashMap::new()),
            }),
        })
    }

    pub fn gaussian_rbf(gamma: f64) -> Result<Self> {
        Kernel::from_spec(KernelSpec::Gaussian { gamma })
    }

    pub fn inhomogeneous_gaussian(weights: Vec<f64>, gamma: f64) -> Result<Self> {
        Kernel::from_spec(KernelSpec::Inhomogeneous { weights, gamma })
    }

    pub fn hierarchical(params: HierarchicalParams) -> Result<Self> {
        Kernel::from_spec(KernelSpec::Hierarchical(params))
    }

    pub fn compact_rbf(gamma: f64) -> Result<Self> {
        Kernel::from_spec(KernelSpec::Compact { gamma })
    }

    pub fn linear() -> Self {
        Kernel::from_spec(KernelSpec::Linear).expect("linear kernel has no parameters")
    }

    pub fn gram_backed(space: &GroundSpace, matrix: Vec<Vec<f64>>) -> Result<Self> {
        Kernel::from_spec(KernelSpec::GramBacked {
            points: space.points().to_vec(),
            matrix,
        })
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.inner.spec
    }

    /// Dimension the kernel requires, when its parameters fix one.
    pub fn required_dim(&self) -> Option<usize> {
        match &self.inner.spec {
            KernelSpec::Inhomogeneous { weights, .. } => Some(weights.len()),
            KernelSpec::Hierarchical(p) => Some(p.dim()),
            KernelSpec::GramBacked { points, .. } => points.first().map(|p| p.len()),
            _ => None,
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        match self.required_dim() {
            Some(d) if d != dim => Err(Error::DomainMismatch(format!(
                "kernel expects dimension {d}, got {dim}"
            ))),
            _ => Ok(()),
        }
    }

    /// Pointwise evaluation k(x, x').
    pub fn eval(&self, x: &[f64], x2: &[f64]) -> Result<f64> {
        if x.len() != x2.len() {
            return Err(Error::DomainMismatch(format!(
                "points of dimension {} and {}",
                x.len(),
                x2.len()
            )));
        }
        self.check_dim(x.len())?;
        Ok(match &self.inner.spec {
            KernelSpec::Gaussian { gamma } => {
                let r2: f64 = x.iter().zip(x2).map(|(a, b)| (a - b).powi(2)).sum();
                (-r2 / (gamma * gamma)).exp()
            }
            KernelSpec::Inhomogeneous { weights, gamma } => {
                let s: f64 = x
                    .iter()
                    .zip(x2)
                    .zip(weights)
                    .map(|((a, b), w)| w * w * (a - b).powi(2))
                    .sum();
                (-2.0 / (gamma * gamma) * s).exp()
            }
            KernelSpec::Hierarchical(p) => p.eval(x, x2),
            KernelSpec::Compact { gamma } => {
                let r: f64 = x
                    .iter()
                    .zip(x2)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt()
                    / gamma;
                wendland(r)
            }
            KernelSpec::Linear => x.iter().zip(x2).map(|(a, b)| a * b).sum(),
            KernelSpec::GramBacked { points, matrix } => {
                let i = find_point(points, x)?;
                let j = find_point(points, x2)?;
                matrix[i][j]
            }
        })
    }

    /// Symmetric psd Gram matrix on the space, cached per (kernel, space).
    pub fn gram(&self, space: &GroundSpace) -> Result<Arc<DMatrix<f64>>> {
        {
            let cache = self.inner.gram_cache.lock().unwrap();
            if let Some(m) = cache.get(&space.id()) {
                return Ok(m.clone());
            }
        }
        let n = space.len();
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.eval(space.point(i), space.point(j))?;
                m[(i, j)] = v;
                m[(j, i)] = v;
            }
        }
        let m = Arc::new(m);
        let mut cache = self.inner.gram_cache.lock().unwrap();
        Ok(cache.entry(space.id()).or_insert(m).clone())
    }

    /// ‖k‖_∞ = max over the space of √k(x,x).
    pub fn sup_norm(&self, space: &GroundSpace) -> Result<f64> {
        let gram = self.gram(space)?;
        Ok(gram
            .diagonal()
            .iter()
            .copied()
            .fold(0.0f64, f64::max)
            .max(0.0)
            .sqrt())
    }

    /// Smallest eigenvalue of the Gram matrix on `space`.
    pub fn gram_min_eigenvalue(&self, space: &GroundSpace) -> Result<f64> {
        Ok(linalg::sym_min_eigenvalue(self.gram(space)?.as_ref()))
    }
}

fn wendland(r: f64) -> f64 {
    (1.0 - r).max(0.0).powi(4) * (4.0 * r + 1.0)
}

fn find_point(points: &[Vec<f64>], x: &[f64]) -> Result<usize> {
    points
        .iter()
        .position(|p| p.as_slice() == x)
        .ok_or_else(|| Error::DomainMismatch("point is not in the gram-backed domain".into()))
}

/// Exact max over ordered space pairs of |k₂(x',x) − k₁(x',x)|, the
/// finite-space realization of sup_x ‖k₂(·,x) − k₁(·,x)‖_∞.
pub fn sup_distance(k1: &Kernel, k2: &Kernel, space: &GroundSpace) -> Result<f64> {
    let g1 = k1.gram(space)?;
    let g2 = k2.gram(space)?;
    let mut best = 0.0f64;
    for i in 0..space.len() {
        for j in 0..space.len() {
            best = best.max((g2[(i, j)] - g1[(i, j)]).abs());
        }
    }
    Ok(best)
}

/// Max over space points x of ‖k₁(·,x) − k₂(·,x)‖_{H₁}, computed as
/// √(dₓᵀ K₁⁻¹ dₓ) per column with a Cholesky solve.
///
/// Requires K₁ strictly positive definite (min eigenvalue above
/// [`STRICT_PD_REL_TOL`]·trace), which on a finite space makes H₁ the
/// space of all functions.
pub fn h1_distance(k1: &Kernel, k2: &Kernel, space: &GroundSpace) -> Result<f64> {
    let g1 = k1.gram(space)?;
    let g2 = k2.gram(space)?;
    let chol = strict_pd_cholesky(g1.as_ref())?;
    let mut best = 0.0f64;
    for x in 0..space.len() {
        let d = g1.column(x) - g2.column(x);
        let solved = chol.solve(&d);
        best = best.max(d.dot(&solved).max(0.0));
    }
    Ok(best.sqrt())
}

/// Cholesky factorization guarded by the strict-pd precondition.
pub(crate) fn strict_pd_cholesky(
    gram: &DMatrix<f64>,
) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let min_eig = linalg::sym_min_eigenvalue(gram);
    let trace = gram.trace();
    if !(min_eig > STRICT_PD_REL_TOL * trace) {
        return Err(Error::Precondition(format!(
            "Gram matrix is numerically singular: min eigenvalue {min_eig:.3e} \
             vs trace {trace:.3e}"
        )));
    }
    gram.clone().cholesky().ok_or_else(|| {
        Error::Precondition(format!(
            "Cholesky factorization failed despite min eigenvalue {min_eig:.3e}"
        ))
    })
}

/// True iff every column of K₂ lies in the column space of K₁ (residual
/// after least-squares projection at most 1e-9 of the column norm); this
/// realizes the RKHS inclusion H₂ ⊆ H₁ on the finite space.
pub fn rkhs_inclusion_check(k1: &Kernel, k2: &Kernel, space: &GroundSpace) -> Result<bool> {
    let g1 = k1.gram(space)?;
    let g2 = k2.gram(space)?;
    let eig = g1.as_ref().clone().symmetric_eigen();
    let max_abs = eig
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    let cutoff = max_abs * 1e-12;
    for col in 0..space.len() {
        let c = g2.column(col);
        let norm = c.norm();
        let mut residual = c.clone_owned();
        for (i, lam) in eig.eigenvalues.iter().enumerate() {
            if lam.abs() > cutoff {
                let v = eig.eigenvectors.column(i);
                let coeff = v.dot(&c);
                residual -= v * coeff;
            }
        }
        if residual.norm() > 1e-9 * norm.max(f64::MIN_POSITIVE) {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Bandwidth perturbation bound for generator-based RBF
/// kernels: |φ|₁·diam·|γ₂−γ₁| / a² with |φ|₁ = √(2/e) for the Gaussian
/// generator. Requires 0 < a ≤ min{γ₁, γ₂}.
pub fn gaussian_bandwidth_bound(gamma1: f64, gamma2: f64, a: f64, diam: f64) -> Result<f64> {
    if !(a > 0.0) || a > gamma1.min(gamma2) {
        return Err(Error::InvalidArgument(format!(
            "a = {a} must satisfy 0 < a <= min(gamma1, gamma2) = {}",
            gamma1.min(gamma2)
        )));
    }
    if !(diam >= 0.0) {
        return Err(Error::InvalidArgument(
            "diameter must be nonnegative".into(),
        ));
    }
    Ok(gaussian_generator_lip() * diam * (gamma2 - gamma1).abs() / (a * a))
}

/// Upper bound on the sup-distance between two hierarchical Gaussian
/// kernels that share structure (depth, index sets, bandwidths) and
/// differ only in weights, obtained by unrolling the layer recursion
/// Δⱼ ≤ 4γⱼ⁻²‖ΔW⁽ʲ⁾‖ + 2γⱼ⁻²Δⱼ₋₁ with base
/// Δ₁ = 2γ₁⁻²·diam²·‖ΔW⁽¹⁾‖. Depth 1 uses 4γ₁⁻²·diam²·‖Δw‖ directly.
pub fn hierarchical_perturbation_bound(
    p1: &HierarchicalParams,
    p2: &HierarchicalParams,
    diam: f64,
) -> Result<f64> {
    if !p1.same_structure(p2) {
        return Err(Error::InvalidArgument(
            "hierarchical bound needs matching depth, index sets, and bandwidths".into(),
        ));
    }
    if !(diam >= 0.0) {
        return Err(Error::InvalidArgument(
            "diameter must be nonnegative".into(),
        ));
    }
    let m = p1.depth();
    let top_diff: f64 = l2_diff(&p1.top_weights, &p2.top_weights);
    let g = |j: usize| p1.gammas[j - 1]; // 1-based layer index
    if m == 1 {
        return Ok(4.0 / (g(1) * g(1)) * diam * diam * top_diff);
    }
    let first_diff = l2_diff_nested(&p1.first_layer, &p2.first_layer);
    let mut delta = 2.0 / (g(1) * g(1)) * diam * diam * first_diff;
    for j in 2..=m {
        let layer_diff = if j == m {
            top_diff
        } else {
            l2_diff(&p1.mid_layers[j - 2], &p2.mid_layers[j - 2])
        };
        let gj2 = g(j) * g(j);
        delta = 4.0 / gj2 * layer_diff + 2.0 / gj2 * delta;
    }
    Ok(delta)
}

fn l2_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn l2_diff_nested(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(u, v)| u.iter().zip(v).map(|(x, y)| (x - y) * (x - y)).sum::<f64>())
        .sum::<f64>()
        .sqrt()
}
