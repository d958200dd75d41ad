//! Single experiments, per-step records, steady-state statistics and
//! neuron-count sweeps.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;

use crate::config::{ExperimentConfig, FilterMode, StdKind};
use crate::error::{Error, Result};
use crate::filter::{filter_step_quat, filter_step_so3, FilterState};
use crate::geometry::{euclidean_distance, rotation_to_euler, Vec3};
use crate::quaternion::UnitQuaternion;
use crate::sim::{fmt17, Simulator};

pub const RUN_CSV_HEADER: [&str; 15] = [
    "t",
    "phi",
    "theta",
    "psi",
    "phi_hat",
    "theta_hat",
    "psi_hat",
    "err_RI",
    "w_frob",
    "cx",
    "cy",
    "cz",
    "wmx",
    "wmy",
    "wmz",
];

pub const SWEEP_CSV_HEADER: [&str; 7] = [
    "q",
    "trial",
    "seed",
    "mean_err",
    "std_err",
    "window_start",
    "window_end",
];

/// Slack on window edges so grid times such as `5.000000000000001` count.
const WINDOW_EPS: f64 = 1e-9;

/// One time step. Angles are ZYX roll, pitch, yaw in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRow {
    pub t: f64,
    pub euler: Vec3,
    pub euler_hat: Vec3,
    /// `‖R_yᵀR̂‖_I` against the reconstructed attitude used by the filter.
    pub err_ri: f64,
    /// `‖RᵀR̂‖_I` against the simulated truth. Not exported.
    pub err_true: Option<f64>,
    pub w_frob: f64,
    pub correction: Vec3,
    pub omega_m: Vec3,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunRecord {
    pub rows: Vec<RunRow>,
}

impl RunRecord {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.err_ri).collect()
    }
}

/// Extremes observed over a run, for checking geometric and gain bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSummary {
    pub max_orth_truth: f64,
    pub max_orth_estimate: f64,
    pub psi1_range: (f64, f64),
    pub psi2_range: (f64, f64),
    pub final_err_true: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowStats {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub window: (f64, f64),
    pub mean_err: f64,
    pub std_err: f64,
    pub q: usize,
    pub seeds: Vec<u64>,
    pub per_seed_means: Vec<f64>,
    pub std_kind: StdKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub record: RunRecord,
    pub report: MetricsReport,
    pub summary: RunSummary,
}

/// Simulates and filters one run. `seed` replaces `config.sim.noise.seed`.
pub fn run_experiment(config: &ExperimentConfig, seed: u64) -> Result<RunOutput> {
    config.validate()?;
    let params = config.params()?;
    let dt = config.sim.dt;
    let mut sim_cfg = config.sim.clone();
    sim_cfg.noise.seed = seed;
    let refs = sim_cfg.references.clone();

    let mut state = match config.mode {
        FilterMode::So3 => FilterState::so3(config.r_hat0, params.neurons()),
        FilterMode::Quaternion => FilterState::quaternion(
            UnitQuaternion::from_rotation(&config.r_hat0),
            params.neurons(),
        ),
    };

    let sim = Simulator::new(sim_cfg);
    let mut rows = Vec::with_capacity(sim.size_hint().0);
    let mut summary = RunSummary {
        max_orth_truth: 0.0,
        max_orth_estimate: 0.0,
        psi1_range: (f64::INFINITY, f64::NEG_INFINITY),
        psi2_range: (f64::INFINITY, f64::NEG_INFINITY),
        final_err_true: f64::NAN,
    };

    for (truth, frame) in sim {
        let r_hat = state.rotation();
        let (next, diag) = match config.mode {
            FilterMode::So3 => filter_step_so3(&state, &frame, &refs, &params, dt)?,
            FilterMode::Quaternion => filter_step_quat(&state, &frame, &refs, &params, dt)?,
        };
        let e = rotation_to_euler(&truth.r);
        let eh = rotation_to_euler(&r_hat);
        let err_true = euclidean_distance(&(truth.r.transpose() * r_hat));
        summary.max_orth_truth = summary.max_orth_truth.max(truth.r.orthogonality_defect());
        summary.max_orth_estimate = summary.max_orth_estimate.max(r_hat.orthogonality_defect());
        summary.psi1_range = (
            summary.psi1_range.0.min(diag.psi1),
            summary.psi1_range.1.max(diag.psi1),
        );
        summary.psi2_range = (
            summary.psi2_range.0.min(diag.psi2),
            summary.psi2_range.1.max(diag.psi2),
        );
        summary.final_err_true = err_true;
        rows.push(RunRow {
            t: frame.t,
            euler: Vec3::new(e.roll, e.pitch, e.yaw),
            euler_hat: Vec3::new(eh.roll, eh.pitch, eh.yaw),
            err_ri: diag.err_ri,
            err_true: Some(err_true),
            w_frob: diag.w_frob,
            correction: diag.correction,
            omega_m: frame.omega_m,
        });
        state = next;
    }

    let record = RunRecord { rows };
    let stats = compute_steady_state_stats(&record, config.window, config.std_kind)?;
    let report = MetricsReport {
        window: config.window,
        mean_err: stats.mean,
        std_err: stats.std,
        q: params.neurons(),
        seeds: vec![seed],
        per_seed_means: vec![stats.mean],
        std_kind: config.std_kind,
    };
    Ok(RunOutput {
        record,
        report,
        summary,
    })
}

/// Mean and standard deviation of `values[i]` over `times[i] ∈ [start, end]`.
pub fn window_stats(
    times: &[f64],
    values: &[f64],
    window: (f64, f64),
    kind: StdKind,
) -> Result<WindowStats> {
    let (start, end) = window;
    let picked: Vec<f64> = times
        .iter()
        .zip(values)
        .filter(|(t, _)| **t >= start - WINDOW_EPS && **t <= end + WINDOW_EPS)
        .map(|(_, v)| *v)
        .collect();
    let n = picked.len();
    if n == 0 {
        return Err(Error::EmptyWindow { start, end });
    }
    let mean = picked.iter().sum::<f64>() / n as f64;
    let ss: f64 = picked.iter().map(|v| (v - mean).powi(2)).sum();
    let denom = match kind {
        StdKind::Population => n as f64,
        StdKind::Sample if n > 1 => (n - 1) as f64,
        StdKind::Sample => return Ok(WindowStats { mean, std: 0.0, n }),
    };
    Ok(WindowStats {
        mean,
        std: (ss / denom).sqrt(),
        n,
    })
}

pub fn compute_steady_state_stats(
    record: &RunRecord,
    window: (f64, f64),
    kind: StdKind,
) -> Result<WindowStats> {
    window_stats(&record.times(), &record.errors(), window, kind)
}

pub fn emit_csv<W: Write>(record: &RunRecord, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(RUN_CSV_HEADER)?;
    for r in &record.rows {
        let mut fields = Vec::with_capacity(RUN_CSV_HEADER.len());
        fields.push(r.t);
        fields.extend(r.euler.iter());
        fields.extend(r.euler_hat.iter());
        fields.push(r.err_ri);
        fields.push(r.w_frob);
        fields.extend(r.correction.iter());
        fields.extend(r.omega_m.iter());
        w.write_record(fields.iter().map(|v| fmt17(*v)))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    emit_csv(record, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn parse_run_csv<R: Read>(input: R) -> Result<RunRecord> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(input);
    let header = rd.headers()?.clone();
    if header.iter().ne(RUN_CSV_HEADER.iter().copied()) {
        return Err(Error::Parse(format!(
            "unexpected header `{}`",
            header.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut rows = Vec::new();
    for (i, rec) in rd.records().enumerate() {
        let rec = rec?;
        let v: Vec<f64> = rec
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("line {}: {e}", i + 2)))?;
        let v3 = |k: usize| Vec3::new(v[k], v[k + 1], v[k + 2]);
        rows.push(RunRow {
            t: v[0],
            euler: v3(1),
            euler_hat: v3(4),
            err_ri: v[7],
            err_true: None,
            w_frob: v[8],
            correction: v3(9),
            omega_m: v3(12),
        });
    }
    Ok(RunRecord { rows })
}

pub fn read_csv(path: impl AsRef<Path>) -> Result<RunRecord> {
    parse_run_csv(File::open(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub neuron_counts: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub base: ExperimentConfig,
}

impl SweepSpec {
    /// Noise seed of trial `k`. Shared across neuron counts so every `q`
    /// sees the same sensor streams.
    pub fn trial_seed(&self, k: usize) -> u64 {
        self.base_seed.wrapping_add(k as u64)
    }

    /// Projection seed for counts above three when the base configuration
    /// leaves it unset.
    pub fn feature_seed(&self) -> u64 {
        self.base.filter.feature_seed.unwrap_or(self.base_seed)
    }

    fn validate(&self) -> Result<()> {
        if self.neuron_counts.is_empty() {
            return Err(Error::Invalid("no neuron counts given".into()));
        }
        if let Some(q) = self.neuron_counts.iter().find(|q| **q < 3) {
            return Err(Error::Invalid(format!("neuron count {q} is below 3")));
        }
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        Ok(())
    }

    fn config_for(&self, q: usize) -> ExperimentConfig {
        let mut cfg = self.base.clone();
        cfg.filter.q = q;
        if q > 3 {
            cfg.filter.feature_seed = Some(self.feature_seed());
        }
        cfg
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub q: usize,
    pub trial: usize,
    pub seed: u64,
    pub mean_err: f64,
    pub std_err: f64,
    pub window: (f64, f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// One row per `(q, trial)`, sorted by `q` then `trial`.
    pub rows: Vec<SweepRow>,
    /// One aggregate per distinct `q` in ascending order. `mean_err` is the
    /// mean of per-seed means and `std_err` their spread.
    pub per_q: Vec<MetricsReport>,
}

pub fn sweep_neurons(spec: &SweepSpec) -> Result<SweepResult> {
    sweep_neurons_with(spec, true)
}

pub fn sweep_neurons_with(spec: &SweepSpec, parallel: bool) -> Result<SweepResult> {
    spec.validate()?;
    let mut counts = spec.neuron_counts.clone();
    counts.sort_unstable();
    counts.dedup();
    let jobs: Vec<(usize, usize)> = counts
        .iter()
        .flat_map(|&q| (0..spec.trials).map(move |k| (q, k)))
        .collect();
    let run = |&(q, k): &(usize, usize)| -> Result<SweepRow> {
        let cfg = spec.config_for(q);
        let seed = spec.trial_seed(k);
        let out = run_experiment(&cfg, seed)?;
        Ok(SweepRow {
            q,
            trial: k,
            seed,
            mean_err: out.report.mean_err,
            std_err: out.report.std_err,
            window: out.report.window,
        })
    };
    let mut rows: Vec<SweepRow> = if parallel {
        jobs.par_iter().map(run).collect::<Result<_>>()?
    } else {
        jobs.iter().map(run).collect::<Result<_>>()?
    };
    rows.sort_by_key(|r| (r.q, r.trial));

    let per_q = counts
        .iter()
        .map(|&q| {
            let mine: Vec<&SweepRow> = rows.iter().filter(|r| r.q == q).collect();
            let means: Vec<f64> = mine.iter().map(|r| r.mean_err).collect();
            let n = means.len() as f64;
            let mean = means.iter().sum::<f64>() / n;
            let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>();
            let std = match spec.base.std_kind {
                StdKind::Population => (var / n).sqrt(),
                StdKind::Sample if means.len() > 1 => (var / (n - 1.0)).sqrt(),
                StdKind::Sample => 0.0,
            };
            MetricsReport {
                window: spec.base.window,
                mean_err: mean,
                std_err: std,
                q,
                seeds: mine.iter().map(|r| r.seed).collect(),
                per_seed_means: means,
                std_kind: spec.base.std_kind,
            }
        })
        .collect();
    Ok(SweepResult { rows, per_q })
}

pub fn emit_sweep_csv<W: Write>(result: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_CSV_HEADER)?;
    for r in &result.rows {
        w.write_record([
            r.q.to_string(),
            r.trial.to_string(),
            r.seed.to_string(),
            fmt17(r.mean_err),
            fmt17(r.std_err),
            fmt17(r.window.0),
            fmt17(r.window.1),
        ])?;
    }
    w.flush()?;
    Ok(())
}
