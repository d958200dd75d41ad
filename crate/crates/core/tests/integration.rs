use std::io::Write;

use attfilt_core::config::{parse_config, ExperimentConfig, StdKind};
use attfilt_core::geometry::{euclidean_distance, exp_map, RotationMatrix, Vec3};
use attfilt_core::harness::{read_csv, run_experiment, window_stats, write_csv};
use attfilt_core::sim::{NoiseSpec, SimConfig};
use attfilt_core::wahba::{reconstruct_svd, ObservationSet, VectorPair};
use attfilt_core::{emit_plot, Error, PlotKind};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn wahba_over_random_attitudes() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let refs = SimConfig::default().references;
    for _ in 0..1000 {
        let rho = Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0));
        let r = exp_map(&rho);
        let obs = ObservationSet::new(
            refs.iter()
                .map(|re| VectorPair::new(re.r, r.transpose().rotate(&re.r), re.s))
                .collect(),
        )
        .unwrap();
        let r_y = reconstruct_svd(&obs).unwrap();
        assert!(euclidean_distance(&(r.transpose() * r_y)) < 1e-14);
    }
}

#[test]
fn noisy_reconstruction_is_close_on_average() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let refs = SimConfig::default().references;
    let n = 2000;
    let mut total = 0.0;
    for _ in 0..n {
        let r = exp_map(&Vec3::from_fn(|_, _| rng.random_range(-3.0..3.0)));
        let obs = ObservationSet::new(
            refs.iter()
                .map(|re| {
                    let noise = Vec3::from_fn(|_, _| {
                        rng.sample::<f64, _>(rand_distr::StandardNormal) * 0.1
                    });
                    VectorPair::new(re.r, r.transpose().rotate(&re.r) + noise, re.s)
                })
                .collect(),
        )
        .unwrap();
        total += euclidean_distance(&(r.transpose() * reconstruct_svd(&obs).unwrap()));
    }
    let mean = total / n as f64;
    assert!(mean > 1e-4 && mean < 0.05, "{mean}");
}

#[test]
fn filter_converges_from_perfect_start_without_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.noise = NoiseSpec::noiseless();
    cfg.r_hat0 = RotationMatrix::identity();
    let out = run_experiment(&cfg, 0).unwrap();
    assert!(out.report.mean_err < 1e-9);
}

#[test]
fn filter_converges_from_large_error_without_noise() {
    let mut cfg = ExperimentConfig::default();
    cfg.sim.noise = NoiseSpec::noiseless();
    let out = run_experiment(&cfg, 0).unwrap();
    assert!(out.record.rows[0].err_ri > 0.99);
    assert!(
        out.summary.final_err_true < 1e-10,
        "{}",
        out.summary.final_err_true
    );
}

#[test]
fn window_stats_match_exported_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.csv");
    let cfg = ExperimentConfig::default();
    let out = run_experiment(&cfg, 17).unwrap();
    write_csv(&out.record, &path).unwrap();

    // independent recomputation straight from the text columns
    let text = std::fs::read_to_string(&path).unwrap();
    let vals: Vec<f64> = text
        .lines()
        .skip(1)
        .filter_map(|l| {
            let f: Vec<f64> = l.split(',').map(|x| x.parse().unwrap()).collect();
            (f[0] >= 5.0 - 1e-9 && f[0] <= 29.0 + 1e-9).then_some(f[7])
        })
        .collect();
    assert_eq!(vals.len(), 2401);
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    assert!((mean - out.report.mean_err).abs() < 1e-12);
    assert!((std - out.report.std_err).abs() < 1e-12);

    let back = read_csv(&path).unwrap();
    let s = window_stats(
        &back.times(),
        &back.errors(),
        (5.0, 29.0),
        StdKind::Population,
    )
    .unwrap();
    assert_eq!(s.mean, out.report.mean_err);
}

#[test]
fn config_file_drives_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    let mut f = std::fs::File::create(&path).unwrap();
    writeln!(f, "sim.t_end = 8\nmetrics.window_start = 5\nmetrics.window_end = 7.5\nfilter.q = 10\nfilter.feature_seed = 4").unwrap();
    let cfg = parse_config(&path).unwrap();
    let out = run_experiment(&cfg, 1).unwrap();
    assert_eq!(out.record.len(), 800);
    assert_eq!(out.report.q, 10);
    assert!(out.report.mean_err < 2e-2);
    assert!(parse_config(dir.path().join("missing.toml")).is_err());
}

#[test]
fn error_plot_of_converged_run_ends_low() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::default();
    let out = run_experiment(&cfg, 2).unwrap();
    let tail = &out.record.rows[out.record.len() - 100..];
    assert!(tail.iter().map(|r| r.err_ri).sum::<f64>() / 100.0 < 1e-2);
    let path = dir.path().join("err.svg");
    emit_plot(&out.record, PlotKind::Error, true, &path).unwrap();
    let svg = std::fs::read_to_string(&path).unwrap();
    assert!(svg.contains("<polyline") && svg.contains("err_RI"));
}

#[test]
fn error_codes() {
    let cfg_err = Error::from(attfilt_core::parse_config_str("sim.dt = -1").unwrap_err());
    assert_eq!(cfg_err.exit_code(), 2);
    let empty = window_stats(&[0.0], &[1.0], (2.0, 3.0), StdKind::Population).unwrap_err();
    assert_eq!(empty.exit_code(), 3);
}
