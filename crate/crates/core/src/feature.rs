//! Activation pipeline: lifts the 3-vector innovation into `q` neurons.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::Vec3;

/// Element-wise hyperbolic tangent.
pub fn activation(v: &DVector<f64>) -> DVector<f64> {
    v.map(f64::tanh)
}

#[derive(Debug, Clone, PartialEq)]
pub enum FeatureMap {
    /// `φ = tanh(Υ)`, three neurons.
    Identity,
    /// `φ = tanh(P·Υ)` with a fixed `q×3` matrix `P` of unit-norm rows.
    FixedProjection { p: DMatrix<f64>, seed: u64 },
}

impl FeatureMap {
    /// Projection rows drawn as normalized standard-normal 3-vectors from
    /// `ChaCha8Rng::seed_from_u64(seed)`, row by row, x then y then z.
    pub fn projection(q: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut p = DMatrix::zeros(q, 3);
        for i in 0..q {
            let row = loop {
                let v = Vec3::from_fn(|_, _| StandardNormal.sample(&mut rng));
                let n = v.norm();
                if n > 1e-6 {
                    break v / n;
                }
            };
            for j in 0..3 {
                p[(i, j)] = row[j];
            }
        }
        Self::FixedProjection { p, seed }
    }

    pub fn neurons(&self) -> usize {
        match self {
            Self::Identity => 3,
            Self::FixedProjection { p, .. } => p.nrows(),
        }
    }

    /// The linear part of the lift as a `q×3` matrix.
    pub fn lift_matrix(&self) -> DMatrix<f64> {
        match self {
            Self::Identity => DMatrix::identity(3, 3),
            Self::FixedProjection { p, .. } => p.clone(),
        }
    }

    pub fn feature(&self, upsilon: &Vec3) -> DVector<f64> {
        let u = DVector::from_column_slice(upsilon.as_slice());
        match self {
            Self::Identity => activation(&u),
            Self::FixedProjection { p, .. } => activation(&(p * u)),
        }
    }
}
