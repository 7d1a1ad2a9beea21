//! Finite ground spaces and discrete probability measures on 𝒳×𝒴.
//!
//! A [`GroundSpace`] is a finite set of distinct points in ℝ^d with its
//! diameter cached. A [`DiscreteMeasure`] puts nonnegative weights summing
//! to one on atoms `(x_index, y)` over such a space. Total variation
//! distance, the ℓ-of-n contamination model, and the Bochner/TV inequality
//! check live here.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::kernels::Kernel;

/// Atoms whose y-values differ by less than this at the same x-index are
/// treated as the same atom.
pub const Y_MERGE_TOL: f64 = 1e-12;

/// Weights must sum to one within this tolerance.
pub const WEIGHT_SUM_TOL: f64 = 1e-12;

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug)]
struct SpaceInner {
    points: Vec<Vec<f64>>,
    dim: usize,
    diameter: f64,
    id: u64,
}

/// A finite point set in ℝ^d; the domain of every measure, kernel and
/// hypothesis in this crate.
///
/// Immutable after construction and cheap to clone. Each instance carries
/// an identity token so that measures built on different spaces are
/// rejected early instead of silently mixed.
#[derive(Debug, Clone)]
pub struct GroundSpace {
    inner: Arc<SpaceInner>,
}

impl GroundSpace {
    /// Builds a space from distinct d-dimensional points.
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Construction("ground space must be nonempty".into()));
        }
        let dim = points[0].len();
        if dim == 0 {
            return Err(Error::Construction(
                "points must have dimension >= 1".into(),
            ));
        }
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::Construction(format!(
                    "point {i} has dimension {} but expected {dim}",
                    p.len()
                )));
            }
            if !p.iter().all(|v| v.is_finite()) {
                return Err(Error::Construction(format!(
                    "point {i} has a non-finite coordinate"
                )));
            }
        }
        let mut diameter = 0.0f64;
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                let d = euclidean(&points[i], &points[j]);
                if d == 0.0 {
                    return Err(Error::Construction(format!("points {i} and {j} coincide")));
                }
                diameter = diameter.max(d);
            }
        }
        Ok(GroundSpace {
            inner: Arc::new(SpaceInner {
                points,
                dim,
                diameter,
                id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            }),
        })
    }

    /// Regular grid over an axis-aligned box, `resolution` points per axis.
    ///
    /// Guards against more than 10⁴ total points.
    pub fn grid(bounds: &[(f64, f64)], resolution: usize) -> Result<Self> {
        if bounds.is_empty() || resolution < 2 {
            return Err(Error::InvalidArgument(
                "grid needs at least one axis and resolution >= 2".into(),
            ));
        }
        let total = resolution
            .checked_pow(bounds.len() as u32)
            .unwrap_or(usize::MAX);
        if total > 10_000 {
            return Err(Error::InvalidArgument(format!(
                "grid would have {total} points; the guard is 10000"
            )));
        }
        let mut points = vec![vec![]];
        for &(lo, hi) in bounds {
            if !(lo < hi) {
                return Err(Error::InvalidArgument(format!(
                    "empty axis range [{lo}, {hi}]"
                )));
            }
            let step = (hi - lo) / (resolution - 1) as f64;
            let mut next = Vec::with_capacity(points.len() * resolution);
            for p in &points {
                for r in 0..resolution {
                    let mut q = p.clone();
                    q.push(lo + step * r as f64);
                    next.push(q);
                }
            }
            points = next;
        }
        GroundSpace::new(points)
    }

    pub fn len(&self) -> usize {
        self.inner.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    /// Max pairwise Euclidean distance; 0 for a single point.
    pub fn diameter(&self) -> f64 {
        self.inner.diameter
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.inner.points[i]
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.inner.points
    }

    /// Euclidean distance between points `i` and `j`.
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        euclidean(&self.inner.points[i], &self.inner.points[j])
    }

    /// Identity token; two handles to the same space share it.
    pub fn id(&self) -> u64 {
        self.inner.id
    }

    pub fn same_space(&self, other: &GroundSpace) -> bool {
        self.inner.id == other.inner.id
    }
}

/// Structural equality: same point list. Identity tokens are ignored so
/// that a deserialized space compares equal to its source.
impl PartialEq for GroundSpace {
    fn eq(&self, other: &Self) -> bool {
        self.inner.id == other.inner.id || self.inner.points == other.inner.points
    }
}

impl Serialize for GroundSpace {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            points: &'a [Vec<f64>],
        }
        Repr {
            points: &self.inner.points,
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GroundSpace {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            points: Vec<Vec<f64>>,
        }
        let repr = Repr::deserialize(deserializer)?;
        GroundSpace::new(repr.points).map_err(D::Error::custom)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// One atom of a discrete measure: a ground-space point index and a label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub x: usize,
    pub y: f64,
}

impl Atom {
    pub fn new(x: usize, y: f64) -> Self {
        Atom { x, y }
    }
}

/// A discrete probability measure on 𝒳×𝒴 with atoms over a [`GroundSpace`].
///
/// Atoms are distinct as `(x_index, y)` pairs; duplicates supplied at
/// construction (y within [`Y_MERGE_TOL`] at the same x) are merged by
/// summing their weights.
#[derive(Debug, Clone)]
pub struct DiscreteMeasure {
    space: GroundSpace,
    atoms: Vec<Atom>,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(space: GroundSpace, atoms: Vec<Atom>, weights: Vec<f64>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::Construction(
                "measure needs at least one atom".into(),
            ));
        }
        if atoms.len() != weights.len() {
            return Err(Error::Construction(format!(
                "{} atoms but {} weights",
                atoms.len(),
                weights.len()
            )));
        }
        for (i, a) in atoms.iter().enumerate() {
            if a.x >= space.len() {
                return Err(Error::Construction(format!(
                    "atom {i} references point {} but the space has {} points",
                    a.x,
                    space.len()
                )));
            }
            if !a.y.is_finite() {
                return Err(Error::Construction(format!("atom {i} has non-finite y")));
            }
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::Construction("weights must be nonnegative".into()));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::Construction(format!("weights sum to {sum}, not 1")));
        }
        let (atoms, weights) = merge_atoms(atoms, weights);
        Ok(DiscreteMeasure {
            space,
            atoms,
            weights,
        })
    }

    /// Uniform measure: weight 1/n on each atom.
    pub fn uniform(space: GroundSpace, atoms: Vec<Atom>) -> Result<Self> {
        let n = atoms.len();
        if n == 0 {
            return Err(Error::Construction(
                "measure needs at least one atom".into(),
            ));
        }
        DiscreteMeasure::new(space, atoms, vec![1.0 / n as f64; n])
    }

    pub fn space(&self) -> &GroundSpace {
        &self.space
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// True when every weight equals 1/n within [`WEIGHT_SUM_TOL`].
    pub fn is_uniform(&self) -> bool {
        let n = self.atoms.len() as f64;
        self.weights
            .iter()
            .all(|w| (w - 1.0 / n).abs() <= WEIGHT_SUM_TOL)
    }
}

/// Structural equality (same space points, atoms, weights).
impl PartialEq for DiscreteMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.space == other.space && self.atoms == other.atoms && self.weights == other.weights
    }
}

impl Serialize for DiscreteMeasure {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            points: &'a [Vec<f64>],
            atoms: Vec<(usize, f64)>,
            #[serde(skip_serializing_if = "Option::is_none")]
            weights: Option<&'a [f64]>,
        }
        let uniform = self.is_uniform();
        Repr {
            points: self.space.points(),
            atoms: self.atoms.iter().map(|a| (a.x, a.y)).collect(),
            weights: if uniform { None } else { Some(&self.weights) },
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DiscreteMeasure {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Repr {
            points: Vec<Vec<f64>>,
            atoms: Vec<(usize, f64)>,
            weights: Option<Vec<f64>>,
        }
        let repr = Repr::deserialize(deserializer)?;
        let space = GroundSpace::new(repr.points).map_err(D::Error::custom)?;
        let atoms: Vec<Atom> = repr.atoms.iter().map(|&(x, y)| Atom::new(x, y)).collect();
        match repr.weights {
            Some(w) => DiscreteMeasure::new(space, atoms, w),
            None => DiscreteMeasure::uniform(space, atoms),
        }
        .map_err(D::Error::custom)
    }
}

fn merge_atoms(atoms: Vec<Atom>, weights: Vec<f64>) -> (Vec<Atom>, Vec<f64>) {
    let mut out_atoms: Vec<Atom> = Vec::with_capacity(atoms.len());
    let mut out_weights: Vec<f64> = Vec::with_capacity(atoms.len());
    for (a, w) in atoms.into_iter().zip(weights) {
        match out_atoms
            .iter()
            .position(|b| b.x == a.x && (b.y - a.y).abs() <= Y_MERGE_TOL)
        {
            Some(i) => out_weights[i] += w,
            None => {
                out_atoms.push(a);
                out_weights.push(w);
            }
        }
    }
    (out_atoms, out_weights)
}

/// Result of a total-variation computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TvReport {
    /// ½·Σ |p−q| over the atom union; always in [0, 1].
    pub distance: f64,
    pub atom_union_size: usize,
}

/// Exact total variation distance between two discrete measures on the
/// same ground space: half the ℓ¹ distance of weights over the atom union.
pub fn tv_distance(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Result<TvReport> {
    if !p.space.same_space(&q.space) {
        return Err(Error::DomainMismatch(
            "tv_distance requires both measures on the same ground space".into(),
        ));
    }
    let union = atom_union(p, q);
    let l1: f64 = union.iter().map(|&(_, wp, wq)| (wp - wq).abs()).sum();
    Ok(TvReport {
        distance: 0.5 * l1,
        atom_union_size: union.len(),
    })
}

/// Union of the atoms of `p` and `q` with both weight columns.
fn atom_union(p: &DiscreteMeasure, q: &DiscreteMeasure) -> Vec<(Atom, f64, f64)> {
    let mut union: Vec<(Atom, f64, f64)> = p
        .atoms
        .iter()
        .zip(&p.weights)
        .map(|(a, w)| (*a, *w, 0.0))
        .collect();
    for (a, w) in q.atoms.iter().zip(&q.weights) {
        match union
            .iter()
            .position(|(b, _, _)| b.x == a.x && (b.y - a.y).abs() <= Y_MERGE_TOL)
        {
            Some(i) => union[i].2 += w,
            None => union.push((*a, 0.0, *w)),
        }
    }
    union
}

/// Replaces the first `ell` atoms of a uniform measure, modelling a data
/// set in which at most `ell` of `n` points were changed arbitrarily.
///
/// The result is again uniform on `n` atoms (duplicates merge), and
/// `tv_distance(p, result) <= ell / n`.
pub fn contaminate(
    p: &DiscreteMeasure,
    ell: usize,
    replacement_atoms: &[Atom],
) -> Result<DiscreteMeasure> {
    let n = p.len();
    if !p.is_uniform() {
        return Err(Error::InvalidArgument(
            "contaminate requires a uniform measure".into(),
        ));
    }
    if ell > n {
        return Err(Error::InvalidArgument(format!(
            "ell = {ell} exceeds the {n} atoms"
        )));
    }
    if replacement_atoms.len() != ell {
        return Err(Error::InvalidArgument(format!(
            "expected {ell} replacement atoms, got {}",
            replacement_atoms.len()
        )));
    }
    let mut atoms: Vec<Atom> = replacement_atoms.to_vec();
    atoms.extend_from_slice(&p.atoms[ell..]);
    DiscreteMeasure::uniform(p.space.clone(), atoms)
}

/// Checks the Bochner-integral inequality
/// `‖∫g dP² − ∫g dQ²‖_H ≤ 2·sup‖g‖_H·d_tv(P,Q)`
/// by exact finite sums and Gram arithmetic.
///
/// `g` maps a pair of atoms (from the union of `p` and `q`) to the
/// coefficient vector, over all ground-space points, of an element of the
/// RKHS of `h_norm_context`. Returns `(lhs, rhs)`.
pub fn bochner_tv_check<F>(
    mut g: F,
    p: &DiscreteMeasure,
    q: &DiscreteMeasure,
    h_norm_context: &Kernel,
) -> Result<(f64, f64)>
where
    F: FnMut(&Atom, &Atom) -> Option<Vec<f64>>,
{
    if !p.space.same_space(&q.space) {
        return Err(Error::DomainMismatch(
            "bochner_tv_check requires both measures on the same ground space".into(),
        ));
    }
    let space = &p.space;
    let m = space.len();
    let gram = h_norm_context.gram(space)?;
    let union = atom_union(p, q);

    let mut diff = vec![0.0f64; m];
    let mut sup_norm_sq = 0.0f64;
    for (a, wpa, wqa) in &union {
        for (b, wpb, wqb) in &union {
            let coeffs = g(a, b).ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "g is undefined on the atom pair (x={}, y={}) x (x={}, y={})",
                    a.x, a.y, b.x, b.y
                ))
            })?;
            if coeffs.len() != m {
                return Err(Error::InvalidArgument(format!(
                    "g value has {} coefficients but the space has {m} points",
                    coeffs.len()
                )));
            }
            let weight = wpa * wpb - wqa * wqb;
            for (d, c) in diff.iter_mut().zip(&coeffs) {
                *d += weight * c;
            }
            sup_norm_sq = sup_norm_sq.max(quad_form(&gram, &coeffs));
        }
    }
    let lhs = quad_form(&gram, &diff).max(0.0).sqrt();
    let tv = tv_distance(p, q)?.distance;
    let rhs = 2.0 * sup_norm_sq.max(0.0).sqrt() * tv;
    Ok((lhs, rhs))
}

fn quad_form(gram: &nalgebra::DMatrix<f64>, v: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..v.len() {
        if v[i] == 0.0 {
            continue;
        }
        let mut row = 0.0;
        for j in 0..v.len() {
            row += gram[(i, j)] * v[j];
        }
        acc += v[i] * row;
    }
    acc
}
