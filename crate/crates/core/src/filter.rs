//! Neural-adaptive stochastic attitude filter.
//!
//! Per step, with `R_y` reconstructed from the vector measurements:
//!
//! ```text
//! R̃   = R_yᵀ R̂,   Υ = Υ(R̃),   φ = tanh(lift(Υ))
//! ψ₁  = ½(1 + ‖R̃‖_I) exp(‖R̃‖_I),   ψ₂ = ½(2 + ‖R̃‖_I) exp(‖R̃‖_I)
//! Ŵ  ← Ŵ + Δt Γ_σ (c ψ₂ φφᵀ − k_σ Ŵ)            (c = 1 discrete, ½ continuous)
//! C   = (Γ_cᵀ + ψ₂/(2ψ₁) (Γ_cᵀΓ_c)⁻¹ Γ_cᵀ Ŵ) φ
//! R̂  ← R̂ exp((Ω_m − C) Δt)
//! ```
//!
//! The quaternion path runs the same law with `Υ = 2q̃₀q̃`, `‖R̃‖_I = 1 − q̃₀²`
//! and integrates `Q̂̇ = ½ΦQ̂` with the exact quaternion exponential.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::feature::FeatureMap;
use crate::geometry::{euclidean_distance, exp_map, upsilon, RotationMatrix, Vec3};
use crate::quaternion::{quat_inverse, quat_product, quat_to_rotation, UnitQuaternion};
use crate::sim::{Reference, SensorFrame};
use crate::wahba::{attitude_error, reconstruct_svd, ObservationSet, VectorPair, WahbaError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error(transparent)]
    Wahba(#[from] WahbaError),
    #[error("normalized distance {0} outside [0, 1]")]
    DistanceOutOfRange(f64),
    #[error("invalid filter parameters: {0}")]
    Params(String),
    #[error("sensor frame has {got} vector measurements, expected {expected}")]
    FrameShape { got: usize, expected: usize },
    #[error("filter state became non-finite at t = {0}")]
    NonFinite(f64),
}

/// Coefficient on `ψ₂φφᵀ` in the weight law.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightLaw {
    /// `ψ₂`, as in the discrete algorithm listing.
    #[default]
    Discrete,
    /// `ψ₂/2`, as in the continuous-time filter.
    Continuous,
}

impl WeightLaw {
    fn coefficient(self) -> f64 {
        match self {
            Self::Discrete => 1.0,
            Self::Continuous => 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterParams {
    gamma_c: DMatrix<f64>,
    gamma_sigma: DVector<f64>,
    k_sigma: f64,
    feature_map: FeatureMap,
    weight_law: WeightLaw,
    /// `(Γ_cᵀΓ_c)⁻¹Γ_cᵀ`, 3×q.
    pinv: DMatrix<f64>,
    k_c: f64,
}

impl FilterParams {
    /// `gamma_sigma` holds the diagonal of `Γ_σ`.
    pub fn new(
        gamma_c: DMatrix<f64>,
        gamma_sigma: DVector<f64>,
        k_sigma: f64,
        feature_map: FeatureMap,
        weight_law: WeightLaw,
    ) -> Result<Self, FilterError> {
        let q = feature_map.neurons();
        if q < 3 {
            return Err(FilterError::Params(format!(
                "need at least 3 neurons, got {q}"
            )));
        }
        if matches!(feature_map, FeatureMap::Identity) != (q == 3) {
            return Err(FilterError::Params(
                "identity feature map requires q = 3".into(),
            ));
        }
        if gamma_c.shape() != (q, 3) {
            return Err(FilterError::Params(format!(
                "gamma_c must be {q}x3, got {}x{}",
                gamma_c.nrows(),
                gamma_c.ncols()
            )));
        }
        if gamma_sigma.len() != q || gamma_sigma.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
            return Err(FilterError::Params(format!(
                "gamma_sigma must have {q} positive entries"
            )));
        }
        if !(k_sigma > 0.0 && k_sigma.is_finite()) {
            return Err(FilterError::Params(format!(
                "k_sigma must be positive, got {k_sigma}"
            )));
        }
        let gram = gamma_c.transpose() * &gamma_c;
        let k_c = SymmetricEigen::new(gram.clone()).eigenvalues.min();
        if k_c.is_nan() || k_c <= 1e-12 {
            return Err(FilterError::Params(
                "gamma_c' gamma_c is not positive definite".into(),
            ));
        }
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| FilterError::Params("gamma_c' gamma_c is singular".into()))?;
        let pinv = gram_inv * gamma_c.transpose();
        Ok(Self {
            gamma_c,
            gamma_sigma,
            k_sigma,
            feature_map,
            weight_law,
            pinv,
            k_c,
        })
    }

    /// Defaults for `q` neurons: `Γ_c = 2I₃` and identity lift for `q = 3`,
    /// otherwise a seeded unit-row projection `P` with `Γ_c = 2P`;
    /// `Γ_σ = 2I_q`, `k_σ = 1`.
    pub fn with_neurons(q: usize, feature_seed: u64) -> Result<Self, FilterError> {
        Self::scaled(q, feature_seed, 2.0, 2.0, 1.0, WeightLaw::Discrete)
    }

    /// Scalar-gain form: `Γ_c = gamma_c·P`, `Γ_σ = gamma_sigma·I_q`.
    pub fn scaled(
        q: usize,
        feature_seed: u64,
        gamma_c: f64,
        gamma_sigma: f64,
        k_sigma: f64,
        weight_law: WeightLaw,
    ) -> Result<Self, FilterError> {
        let map = match q {
            3 => FeatureMap::Identity,
            q if q > 3 => FeatureMap::projection(q, feature_seed),
            _ => {
                return Err(FilterError::Params(format!(
                    "need at least 3 neurons, got {q}"
                )))
            }
        };
        let gc = map.lift_matrix() * gamma_c;
        Self::new(
            gc,
            DVector::from_element(q, gamma_sigma),
            k_sigma,
            map,
            weight_law,
        )
    }

    pub fn neurons(&self) -> usize {
        self.feature_map.neurons()
    }

    pub fn gamma_c(&self) -> &DMatrix<f64> {
        &self.gamma_c
    }

    pub fn gamma_sigma(&self) -> &DVector<f64> {
        &self.gamma_sigma
    }

    pub fn k_sigma(&self) -> f64 {
        self.k_sigma
    }

    /// `λ_min(Γ_cᵀΓ_c)`.
    pub fn k_c(&self) -> f64 {
        self.k_c
    }

    pub fn feature_map(&self) -> &FeatureMap {
        &self.feature_map
    }

    pub fn weight_law(&self) -> WeightLaw {
        self.weight_law
    }
}

impl Default for FilterParams {
    fn default() -> Self {
        Self::with_neurons(3, 0).expect("default parameters are valid")
    }
}

/// `ψ₁ = ½(1 + e)eᵉ`, `ψ₂ = ½(2 + e)eᵉ` for `e = ‖R̃‖_I ∈ [0, 1]`.
pub fn psi_coeffs(err_ri: f64) -> Result<(f64, f64), FilterError> {
    if !(0.0..=1.0).contains(&err_ri) {
        return Err(FilterError::DistanceOutOfRange(err_ri));
    }
    let ex = err_ri.exp();
    Ok((0.5 * (1.0 + err_ri) * ex, 0.5 * (2.0 + err_ri) * ex))
}

/// One Euler step of the adaptation law.
pub fn weight_update(
    w_prev: &DMatrix<f64>,
    phi: &DVector<f64>,
    psi2: f64,
    params: &FilterParams,
    dt: f64,
) -> DMatrix<f64> {
    let c = params.weight_law.coefficient();
    let drive = phi * phi.transpose() * (c * psi2) - w_prev * params.k_sigma;
    // Γ_σ diagonal: scale rows
    let mut inc = drive;
    for (i, g) in params.gamma_sigma.iter().enumerate() {
        inc.row_mut(i).scale_mut(g * dt);
    }
    w_prev + inc
}

/// Correction vector `C = (Γ_cᵀ + ψ₂/(2ψ₁)(Γ_cᵀΓ_c)⁻¹Γ_cᵀŴ)φ`.
pub fn correction(
    phi: &DVector<f64>,
    w_hat: &DMatrix<f64>,
    psi1: f64,
    psi2: f64,
    params: &FilterParams,
) -> Vec3 {
    let base = params.gamma_c.tr_mul(phi);
    let adaptive = &params.pinv * (w_hat * phi) * (psi2 / (2.0 * psi1));
    let c = base + adaptive;
    Vec3::new(c[0], c[1], c[2])
}

/// Monitoring surrogate `2e·exp(e) + ½Tr{ŴᵀΓ_σ⁻¹Ŵ}`; the ideal weights are
/// unknown so `Ŵ` stands in for the weight error.
pub fn lyapunov_diagnostic(err_ri: f64, w_hat: &DMatrix<f64>, params: &FilterParams) -> f64 {
    let attitude = 2.0 * err_ri * err_ri.exp();
    let weights: f64 = w_hat
        .row_iter()
        .zip(params.gamma_sigma.iter())
        .map(|(row, g)| row.norm_squared() / g)
        .sum();
    attitude + 0.5 * weights
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepDiagnostics {
    /// `‖R_yᵀR̂‖_I` before the step.
    pub err_ri: f64,
    pub upsilon: Vec3,
    pub psi1: f64,
    pub psi2: f64,
    pub correction: Vec3,
    /// `‖Ŵ_σ‖_F` after the weight update.
    pub w_frob: f64,
    pub lyapunov: f64,
    /// Reconstructed attitude used for this step.
    pub r_y: RotationMatrix,
}

/// Attitude estimate in either representation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimate {
    Matrix(RotationMatrix),
    Quaternion(UnitQuaternion),
}

impl Estimate {
    pub fn rotation(&self) -> RotationMatrix {
        match self {
            Self::Matrix(r) => *r,
            Self::Quaternion(q) => quat_to_rotation(q),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    pub estimate: Estimate,
    pub w_hat: DMatrix<f64>,
    pub t: f64,
}

impl FilterState {
    /// `Ŵ_σ(0) = 0`.
    pub fn new(estimate: Estimate, q: usize) -> Self {
        Self {
            estimate,
            w_hat: DMatrix::zeros(q, q),
            t: 0.0,
        }
    }

    pub fn so3(r_hat: RotationMatrix, q: usize) -> Self {
        Self::new(Estimate::Matrix(r_hat), q)
    }

    pub fn quaternion(q_hat: UnitQuaternion, q: usize) -> Self {
        Self::new(Estimate::Quaternion(q_hat), q)
    }

    pub fn rotation(&self) -> RotationMatrix {
        self.estimate.rotation()
    }
}

/// Pairs the frame's body-frame measurements with their inertial references.
pub fn observations(
    frame: &SensorFrame,
    refs: &[Reference],
) -> Result<ObservationSet, FilterError> {
    if frame.y.len() != refs.len() {
        return Err(FilterError::FrameShape {
            got: frame.y.len(),
            expected: refs.len(),
        });
    }
    let pairs = refs
        .iter()
        .zip(&frame.y)
        .map(|(re, y)| VectorPair::new(re.r, *y, re.s))
        .collect();
    Ok(ObservationSet::new(pairs)?)
}

struct Update {
    w_hat: DMatrix<f64>,
    diag: StepDiagnostics,
}

/// Weight update and correction shared by both representations.
fn adapt(
    err_raw: f64,
    ups: Vec3,
    w_prev: &DMatrix<f64>,
    r_y: RotationMatrix,
    params: &FilterParams,
    dt: f64,
) -> Result<Update, FilterError> {
    let err_ri = err_raw.clamp(0.0, 1.0);
    let (psi1, psi2) = psi_coeffs(err_ri)?;
    let phi = params.feature_map.feature(&ups);
    let w_hat = weight_update(w_prev, &phi, psi2, params, dt);
    let c = correction(&phi, &w_hat, psi1, psi2, params);
    let diag = StepDiagnostics {
        err_ri,
        upsilon: ups,
        psi1,
        psi2,
        correction: c,
        w_frob: w_hat.norm(),
        lyapunov: lyapunov_diagnostic(err_ri, &w_hat, params),
        r_y,
    };
    Ok(Update { w_hat, diag })
}

fn check_finite(state: &FilterState) -> Result<(), FilterError> {
    let r = state.rotation();
    if r.matrix()
        .iter()
        .chain(state.w_hat.iter())
        .all(|v| v.is_finite())
    {
        Ok(())
    } else {
        Err(FilterError::NonFinite(state.t))
    }
}

/// One step of the SO(3) filter.
pub fn filter_step_so3(
    state: &FilterState,
    frame: &SensorFrame,
    refs: &[Reference],
    params: &FilterParams,
    dt: f64,
) -> Result<(FilterState, StepDiagnostics), FilterError> {
    let r_hat = state.rotation();
    let r_y = reconstruct_svd(&observations(frame, refs)?)?;
    let r_err = attitude_error(&r_y, &r_hat);
    let up = adapt(
        euclidean_distance(&r_err),
        upsilon(r_err.matrix()),
        &state.w_hat,
        r_y,
        params,
        dt,
    )?;
    let r_next = r_hat * exp_map(&((frame.omega_m - up.diag.correction) * dt));
    let next = FilterState {
        estimate: Estimate::Matrix(r_next),
        w_hat: up.w_hat,
        t: state.t + dt,
    };
    check_finite(&next)?;
    Ok((next, up.diag))
}

/// One step of the unit-quaternion filter.
pub fn filter_step_quat(
    state: &FilterState,
    frame: &SensorFrame,
    refs: &[Reference],
    params: &FilterParams,
    dt: f64,
) -> Result<(FilterState, StepDiagnostics), FilterError> {
    let q_hat = match state.estimate {
        Estimate::Quaternion(q) => q,
        Estimate::Matrix(r) => UnitQuaternion::from_rotation(&r),
    };
    let r_y = reconstruct_svd(&observations(frame, refs)?)?;
    let q_y = UnitQuaternion::from_rotation(&r_y);
    let q_err = quat_product(&quat_inverse(&q_y), &q_hat);
    let up = adapt(
        q_err.euclidean_distance(),
        q_err.upsilon(),
        &state.w_hat,
        r_y,
        params,
        dt,
    )?;
    let u = frame.omega_m - up.diag.correction;
    // Q̂̇ = ½ΦQ̂ = ½ Q̂ ⊙ [0, u]; exact for u held over the step
    let q_next = quat_product(&q_hat, &UnitQuaternion::from_rotation_vector(&(u * dt)));
    let next = FilterState {
        estimate: Estimate::Quaternion(q_next),
        w_hat: up.w_hat,
        t: state.t + dt,
    };
    check_finite(&next)?;
    Ok((next, up.diag))
}

/// The `Φ` generator matrix of `Q̂̇ = ½ΦQ̂` for `Q = [q0, q]`.
pub fn quaternion_generator(u: &Vec3) -> nalgebra::Matrix4<f64> {
    let sk = crate::geometry::skew(u);
    let mut phi = nalgebra::Matrix4::zeros();
    for i in 0..3 {
        phi[(0, i + 1)] = -u[i];
        phi[(i + 1, 0)] = u[i];
        for j in 0..3 {
            phi[(i + 1, j + 1)] = -sk[(i, j)];
        }
    }
    phi
}
