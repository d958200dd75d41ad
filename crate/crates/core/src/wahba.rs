//! Attitude reconstruction from weighted vector observations.
//!
//! Given inertial directions `rᵢ` and their body-frame measurements `yᵢ`,
//! the attitude is recovered from the SVD of `B = Σ sᵢ yᵢ rᵢᵀ = U S Vᵀ` as
//! `R_y = V₊ U₊ᵀ`, with `U₊ = U·diag(1, 1, det U)` and `V₊` likewise.

use nalgebra::SVD;
use thiserror::Error;

use crate::geometry::{Mat3, RotationMatrix, Vec3};

/// Minimum `‖r₁ × r₂‖` (on unit vectors) for two directions to count as
/// non-collinear.
pub const TOL_COLLINEAR: f64 = 1e-6;
/// Relative threshold on the second singular value of `B` below which the
/// geometry is treated as rank deficient.
pub const TOL_RANK: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WahbaError {
    #[error("observation set needs at least two pairs, got {0}")]
    TooFewPairs(usize),
    #[error("zero-length vector in observation pair {0}")]
    ZeroVector(usize),
    #[error("invalid weight {weight} on observation pair {index}")]
    BadWeight { index: usize, weight: f64 },
    #[error("weights sum to zero")]
    ZeroWeightSum,
    #[error("observations are collinear (|r1 x r2| = {0:e})")]
    Collinear(f64),
    #[error("degenerate observation geometry: rank(B) < 2")]
    Degenerate,
}

/// An inertial direction, its body-frame measurement and a confidence weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VectorPair {
    pub r: Vec3,
    pub y: Vec3,
    pub s: f64,
}

impl VectorPair {
    pub fn new(r: Vec3, y: Vec3, s: f64) -> Self {
        Self { r, y, s }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    pairs: Vec<VectorPair>,
}

impl ObservationSet {
    /// Checks shape and weights only; directions are validated by
    /// [`normalize_pairs`].
    pub fn new(pairs: Vec<VectorPair>) -> Result<Self, WahbaError> {
        if pairs.len() < 2 {
            return Err(WahbaError::TooFewPairs(pairs.len()));
        }
        for (index, p) in pairs.iter().enumerate() {
            if !(p.s.is_finite() && p.s >= 0.0) {
                return Err(WahbaError::BadWeight { index, weight: p.s });
            }
        }
        Ok(Self { pairs })
    }

    /// Pairs with equal weights `1/N`.
    pub fn uniform(pairs: impl IntoIterator<Item = (Vec3, Vec3)>) -> Result<Self, WahbaError> {
        let v: Vec<_> = pairs.into_iter().collect();
        let s = 1.0 / v.len().max(1) as f64;
        Self::new(
            v.into_iter()
                .map(|(r, y)| VectorPair::new(r, y, s))
                .collect(),
        )
    }

    pub fn pairs(&self) -> &[VectorPair] {
        &self.pairs
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }
}

/// Scales every `r` and `y` to unit length and the weights to sum one.
pub fn normalize_pairs(raw: &ObservationSet) -> Result<ObservationSet, WahbaError> {
    let total: f64 = raw.pairs.iter().map(|p| p.s).sum();
    if total <= 0.0 {
        return Err(WahbaError::ZeroWeightSum);
    }
    let mut pairs = Vec::with_capacity(raw.len());
    for (i, p) in raw.pairs.iter().enumerate() {
        let (nr, ny) = (p.r.norm(), p.y.norm());
        if !(nr > 0.0 && ny > 0.0 && nr.is_finite() && ny.is_finite()) {
            return Err(WahbaError::ZeroVector(i));
        }
        pairs.push(VectorPair::new(p.r / nr, p.y / ny, p.s / total));
    }
    Ok(ObservationSet { pairs })
}

/// Appends `r₃ = r₂ × r₁`, `y₃ = y₂ × y₁` to a two-pair set and renormalizes.
/// The new pair takes the mean weight of the original two.
pub fn augment_cross(obs: &ObservationSet) -> Result<ObservationSet, WahbaError> {
    if obs.len() != 2 {
        return Err(WahbaError::TooFewPairs(obs.len()));
    }
    let norm = normalize_pairs(obs)?;
    let (a, b) = (norm.pairs[0], norm.pairs[1]);
    let r3 = b.r.cross(&a.r);
    let y3 = b.y.cross(&a.y);
    if r3.norm() < TOL_COLLINEAR {
        return Err(WahbaError::Collinear(r3.norm()));
    }
    if y3.norm() < TOL_COLLINEAR {
        return Err(WahbaError::Degenerate);
    }
    let mut pairs = norm.pairs;
    pairs.push(VectorPair::new(r3, y3, 0.5 * (a.s + b.s)));
    normalize_pairs(&ObservationSet { pairs })
}

/// SVD attitude reconstruction. Two-pair sets are augmented with their cross
/// product first; larger sets are used as given.
pub fn reconstruct_svd(obs: &ObservationSet) -> Result<RotationMatrix, WahbaError> {
    let set = if obs.len() == 2 {
        augment_cross(obs)?
    } else {
        normalize_pairs(obs)?
    };
    let b: Mat3 = set.pairs.iter().map(|p| p.s * p.y * p.r.transpose()).sum();
    let svd = SVD::new(b, true, true);
    let mut sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    sv.sort_by(|x, y| y.total_cmp(x));
    if sv[0].is_nan() || sv[0] <= 0.0 || sv[1] <= TOL_RANK * sv[0] {
        return Err(WahbaError::Degenerate);
    }
    let u = svd.u.expect("svd computed with u");
    let v = svd.v_t.expect("svd computed with v_t").transpose();
    let u_plus = u * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, u.determinant().signum()));
    let v_plus = v * Mat3::from_diagonal(&Vec3::new(1.0, 1.0, v.determinant().signum()));
    Ok(RotationMatrix::new_unchecked(v_plus * u_plus.transpose()))
}

/// Estimation error `R̃ = R_yᵀ R̂`.
pub fn attitude_error(r_y: &RotationMatrix, r_hat: &RotationMatrix) -> RotationMatrix {
    r_y.transpose() * *r_hat
}
