use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use attfilt_core::harness::emit_sweep_csv;
use attfilt_core::sim::write_sensor_csv;
use attfilt_core::{
    emit_plot, parse_config, read_csv, run_experiment, sweep_neurons, write_csv, Error,
    ExperimentConfig, FilterMode, NoiseModel, PlotKind, Result, Simulator, StdKind, SweepSpec,
};
use clap::{Parser, Subcommand, ValueEnum};

#[derive(Parser)]
#[command(
    name = "attfilt",
    version,
    about = "Neural-adaptive attitude filter experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one run and write its per-step CSV.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Noise seed; defaults to `noise.seed` from the configuration.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Run the unit-quaternion form of the filter.
        #[arg(long)]
        quaternion: bool,
        #[arg(long, value_enum)]
        noise_model: Option<NoiseArg>,
        /// Also write the raw sensor stream.
        #[arg(long)]
        sensors_out: Option<PathBuf>,
        /// Use the n-1 standard deviation in the printed metrics.
        #[arg(long)]
        sample_std: bool,
    },
    /// Run independent trials for several neuron counts.
    Sweep {
        #[arg(long, value_delimiter = ',', default_value = "3,10,50")]
        neurons: Vec<usize>,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        /// Trial k uses noise seed `seed + k`.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        sample_std: bool,
    },
    /// Render a run CSV as SVG.
    Plot {
        #[arg(long = "in")]
        input: PathBuf,
        /// gyro | euler | error | weights
        #[arg(long)]
        kind: String,
        #[arg(long)]
        out: PathBuf,
        /// Logarithmic error axis.
        #[arg(long)]
        log: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NoiseArg {
    Persample,
    Brownian,
}

fn load(path: Option<&Path>) -> Result<ExperimentConfig> {
    Ok(match path {
        Some(p) => parse_config(p)?,
        None => ExperimentConfig::default(),
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate {
            config,
            seed,
            out,
            quaternion,
            noise_model,
            sensors_out,
            sample_std,
        } => {
            let mut cfg = load(config.as_deref())?;
            if quaternion {
                cfg.mode = FilterMode::Quaternion;
            }
            if let Some(m) = noise_model {
                cfg.sim.noise.model = match m {
                    NoiseArg::Persample => NoiseModel::PerSample,
                    NoiseArg::Brownian => NoiseModel::Brownian,
                };
            }
            if sample_std {
                cfg.std_kind = StdKind::Sample;
            }
            let seed = seed.unwrap_or(cfg.sim.noise.seed);
            let output = run_experiment(&cfg, seed)?;
            write_csv(&output.record, &out)?;
            if let Some(path) = sensors_out {
                let mut sim_cfg = cfg.sim.clone();
                sim_cfg.noise.seed = seed;
                let n = sim_cfg.references.len();
                let frames = Simulator::new(sim_cfg).map(|(_, f)| f);
                write_sensor_csv(BufWriter::new(File::create(path)?), frames, n)?;
            }
            let r = &output.report;
            println!(
                "q={} seed={} window=[{}, {}] mean_err={:.6e} std_err={:.6e} ({:?} std)",
                r.q, seed, r.window.0, r.window.1, r.mean_err, r.std_err, r.std_kind
            );
        }
        Command::Sweep {
            neurons,
            trials,
            seed,
            out,
            config,
            sample_std,
        } => {
            let mut base = load(config.as_deref())?;
            if sample_std {
                base.std_kind = StdKind::Sample;
            }
            let spec = SweepSpec {
                neuron_counts: neurons,
                trials,
                base_seed: seed,
                base,
            };
            let result = sweep_neurons(&spec)?;
            emit_sweep_csv(&result, BufWriter::new(File::create(&out)?))?;
            for r in &result.per_q {
                println!(
                    "q={:<4} trials={} mean_err={:.6e} spread={:.6e}",
                    r.q,
                    r.seeds.len(),
                    r.mean_err,
                    r.std_err
                );
            }
        }
        Command::Plot {
            input,
            kind,
            out,
            log,
        } => {
            let kind: PlotKind = kind.parse()?;
            let record = read_csv(&input)?;
            emit_plot(&record, kind, log, &out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("attfilt: {e}");
            if let Error::Config(_) = e {
                eprintln!("see the README for the list of configuration keys");
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
