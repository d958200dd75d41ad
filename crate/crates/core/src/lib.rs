//! Neural-adaptive stochastic attitude filtering on SO(3).
//!
//! The crate contains the rotation and quaternion primitives, an SVD
//! solution of Wahba's problem, a stochastic rigid-body simulator, the
//! filter in matrix and unit-quaternion form, and an experiment harness
//! for single runs and neuron-count sweeps.

pub mod config;
pub mod error;
pub mod feature;
pub mod filter;
pub mod geometry;
pub mod harness;
pub mod plot;
pub mod quaternion;
pub mod sim;
pub mod wahba;

pub use config::{
    parse_config, parse_config_str, ConfigError, ExperimentConfig, FilterMode, FilterSpec, StdKind,
};
pub use error::{Error, Result};
pub use filter::{
    filter_step_quat, filter_step_so3, FilterParams, FilterState, StepDiagnostics, WeightLaw,
};
pub use geometry::{euclidean_distance, exp_map, skew, upsilon, vex, Mat3, RotationMatrix, Vec3};
pub use harness::{
    compute_steady_state_stats, emit_csv, read_csv, run_experiment, sweep_neurons, write_csv,
    MetricsReport, RunOutput, RunRecord, RunRow, SweepResult, SweepSpec,
};
pub use plot::{emit_plot, render_svg, PlotKind};
pub use quaternion::UnitQuaternion;
pub use sim::{NoiseModel, NoiseSpec, OmegaProfile, Reference, SimConfig, Simulator};
pub use wahba::{reconstruct_svd, ObservationSet, VectorPair};
