//! Ground-truth rigid-body motion and noisy gyro / vector sensor streams.
//!
//! The truth attitude follows `Ṙ = R[Ω]ₓ`, integrated with the exact
//! exponential map on a uniform time grid. Gyro samples are `Ω + n`, vector
//! samples `Rᵀrᵢ + nᵢ`, with independent Gaussian noise streams split off a
//! single 64-bit seed.

use std::f64::consts::FRAC_PI_4;
use std::io::Write;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::geometry::{exp_map, RotationMatrix, Vec3};

/// How the configured gyro standard deviation is turned into per-sample noise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseModel {
    /// `n ~ N(0, σ²)` added to every sample.
    #[default]
    PerSample,
    /// `n = σ·Δβ/Δt` with Brownian increments `Δβ ~ N(0, Δt)`, i.e. the
    /// integrated rotation noise per step has standard deviation `σ√Δt`.
    Brownian,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub gyro_std: f64,
    pub vec_std: f64,
    pub seed: u64,
    pub model: NoiseModel,
}

impl NoiseSpec {
    pub fn noiseless() -> Self {
        Self {
            gyro_std: 0.0,
            vec_std: 0.0,
            seed: 0,
            model: NoiseModel::PerSample,
        }
    }

    /// Per-sample gyro noise standard deviation at step `dt`.
    pub fn gyro_sample_std(&self, dt: f64) -> f64 {
        match self.model {
            NoiseModel::PerSample => self.gyro_std,
            NoiseModel::Brownian => self.gyro_std / dt.sqrt(),
        }
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self {
            gyro_std: 0.11,
            vec_std: 0.1,
            seed: 0,
            model: NoiseModel::PerSample,
        }
    }
}

/// True angular velocity as a function of time.
#[derive(Debug, Clone, PartialEq)]
pub enum OmegaProfile {
    /// `0.6·[sin(0.4t), sin(0.7t + π/4), 0.4·cos(0.3t)]` rad/s.
    Nominal,
    Constant(Vec3),
    /// Per axis `amp·sin(freq·t + phase) + offset`.
    Sinusoid {
        amp: Vec3,
        freq: Vec3,
        phase: Vec3,
        offset: Vec3,
    },
}

pub fn true_angular_velocity(t: f64, profile: &OmegaProfile) -> Vec3 {
    match profile {
        OmegaProfile::Nominal => {
            0.6 * Vec3::new(
                (0.4 * t).sin(),
                (0.7 * t + FRAC_PI_4).sin(),
                0.4 * (0.3 * t).cos(),
            )
        }
        OmegaProfile::Constant(w) => *w,
        OmegaProfile::Sinusoid {
            amp,
            freq,
            phase,
            offset,
        } => Vec3::from_fn(|i, _| amp[i] * (freq[i] * t + phase[i]).sin() + offset[i]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruthState {
    pub t: f64,
    pub r: RotationMatrix,
    pub omega: Vec3,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorFrame {
    pub t: f64,
    pub omega_m: Vec3,
    pub y: Vec<Vec3>,
}

/// Inertial reference direction with its confidence weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reference {
    pub r: Vec3,
    pub s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub dt: f64,
    pub t_end: f64,
    pub noise: NoiseSpec,
    pub references: Vec<Reference>,
    pub r0: RotationMatrix,
    pub omega_profile: OmegaProfile,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            dt: 0.01,
            t_end: 30.0,
            noise: NoiseSpec::default(),
            references: vec![
                Reference {
                    r: Vec3::new(1.0, -1.0, 1.0),
                    s: 0.5,
                },
                Reference {
                    r: Vec3::new(0.0, 0.0, 1.0),
                    s: 0.5,
                },
            ],
            r0: RotationMatrix::identity(),
            omega_profile: OmegaProfile::Nominal,
        }
    }
}

impl SimConfig {
    /// Number of frames on the grid, `⌈t_end/dt⌉`.
    pub fn step_count(&self) -> usize {
        // guard against 30/0.01 = 3000.0000000000005
        let n = self.t_end / self.dt;
        (n - 1e-9 * n.max(1.0)).ceil() as usize
    }
}

/// Independent Gaussian stream, one per sensor channel.
#[derive(Debug, Clone)]
pub struct NoiseStream {
    rng: ChaCha8Rng,
}

impl NoiseStream {
    /// Sub-stream `channel` of `seed`. Channel 0 is the gyro, channel
    /// `i + 1` the i-th vector sensor.
    pub fn new(seed: u64, channel: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(channel);
        Self { rng }
    }

    pub fn gaussian3(&mut self, std: f64) -> Vec3 {
        let mut draw = || -> f64 { StandardNormal.sample(&mut self.rng) };
        let v = Vec3::new(draw(), draw(), draw());
        v * std
    }
}

/// `Ω_m = Ω + n`. A zero standard deviation returns `omega` unchanged and
/// does not advance the stream.
pub fn gyro_measure(omega: &Vec3, std: f64, rng: &mut NoiseStream) -> Vec3 {
    if std == 0.0 {
        return *omega;
    }
    omega + rng.gaussian3(std)
}

/// `yᵢ = Rᵀrᵢ + nᵢ`, one noise stream per reference.
pub fn vector_measure(
    r: &RotationMatrix,
    refs: &[Reference],
    std: f64,
    rngs: &mut [NoiseStream],
) -> Vec<Vec3> {
    let rt = r.transpose();
    refs.iter()
        .zip(rngs.iter_mut())
        .map(|(re, rng)| {
            let clean = rt.rotate(&re.r);
            if std == 0.0 {
                clean
            } else {
                clean + rng.gaussian3(std)
            }
        })
        .collect()
}

/// One exponential-map step `R ← R·exp(Ω dt)`.
pub fn propagate_truth(state: &TruthState, dt: f64, profile: &OmegaProfile) -> TruthState {
    let r = state.r * exp_map(&(state.omega * dt));
    let t = state.t + dt;
    TruthState {
        t,
        r,
        omega: true_angular_velocity(t, profile),
    }
}

/// Iterator over time-aligned `(truth, sensors)` frames.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: SimConfig,
    step: usize,
    steps: usize,
    r: RotationMatrix,
    gyro_rng: NoiseStream,
    vec_rngs: Vec<NoiseStream>,
}

impl Simulator {
    pub fn new(config: SimConfig) -> Self {
        let seed = config.noise.seed;
        let vec_rngs = (0..config.references.len())
            .map(|i| NoiseStream::new(seed, i as u64 + 1))
            .collect();
        Self {
            steps: config.step_count(),
            r: config.r0,
            step: 0,
            gyro_rng: NoiseStream::new(seed, 0),
            vec_rngs,
            config,
        }
    }

    pub fn config(&self) -> &SimConfig {
        &self.config
    }
}

impl Iterator for Simulator {
    type Item = (TruthState, SensorFrame);

    fn next(&mut self) -> Option<Self::Item> {
        if self.step >= self.steps {
            return None;
        }
        let cfg = &self.config;
        // grid time from the index, not accumulated, so rows stay exact
        let t = self.step as f64 * cfg.dt;
        let omega = true_angular_velocity(t, &cfg.omega_profile);
        let truth = TruthState {
            t,
            r: self.r,
            omega,
        };
        let omega_m = gyro_measure(
            &omega,
            cfg.noise.gyro_sample_std(cfg.dt),
            &mut self.gyro_rng,
        );
        let y = vector_measure(
            &self.r,
            &cfg.references,
            cfg.noise.vec_std,
            &mut self.vec_rngs,
        );
        self.r = self.r * exp_map(&(omega * cfg.dt));
        self.step += 1;
        Some((truth, SensorFrame { t, omega_m, y }))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = self.steps - self.step;
        (left, Some(left))
    }
}

pub fn generate_run(config: SimConfig) -> Simulator {
    Simulator::new(config)
}

/// Writes `t, wx, wy, wz, y1x, y1y, y1z, ...` with 17 significant digits.
pub fn write_sensor_csv<W: Write>(
    out: W,
    frames: impl IntoIterator<Item = SensorFrame>,
    n_refs: usize,
) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    let mut header = vec!["t".to_string(), "wx".into(), "wy".into(), "wz".into()];
    for i in 1..=n_refs {
        for c in ["x", "y", "z"] {
            header.push(format!("y{i}{c}"));
        }
    }
    w.write_record(&header)?;
    for f in frames {
        let mut row = vec![fmt17(f.t)];
        row.extend(f.omega_m.iter().map(|v| fmt17(*v)));
        for y in &f.y {
            row.extend(y.iter().map(|v| fmt17(*v)));
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// 17 significant digits in scientific notation; round-trips every f64.
pub fn fmt17(v: f64) -> String {
    format!("{v:.16e}")
}
