//! Arrival-time statistics of free 1-D wave packets under repeated
//! projective detection.
//!
//! Two engines compute the distribution of the time at which a particle is
//! registered in a detector region:
//!
//! * **memoryless**: the Bayes-conditioned probability of finding the
//!   particle in the region at time t, ignoring any earlier detections;
//! * **first-click**: the probability that the detector fires for the
//!   *first* time at a given attempt, where attempts are spaced by the
//!   detector's time resolution and every null outcome projects the state
//!   onto the complement of the region before the next free-evolution step.
//!
//! Free evolution is spectral (momentum-space phases between FFTs) with
//! zero-padding against periodic wrap-around, checked against the
//! closed-form Gaussian evolution and a dense-matrix oracle. Everything is
//! in natural units `hbar = m = 1`.

// `!(a < b)` rejects NaN parameters along with out-of-order ones; the
// suggested `a >= b` would wave NaN through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod config;
pub mod detection;
pub mod error;
pub mod grid;
pub mod output;
pub mod packet;
pub mod propagator;
pub mod scenario;
pub mod toa;

pub use config::{parse_config, scenario_to_config, OutputOptions, RunConfig};
pub use detection::{apply_k0, apply_k1, point_density, DetectorKind, DetectorSpec};
pub use error::{Error, Result};
pub use grid::{SpatialGrid, WaveFunction};
pub use output::{emit_csv, emit_svg, render_svg};
pub use packet::{
    analytic_free_evolution, analytic_superposition_evolution, make_gaussian, make_superposition,
    GaussianSpec, InitialState,
};
pub use propagator::{dense_oracle_step, SpectralPropagator};
pub use scenario::{
    builtin_scenario, run_scenario, run_scenario_with, scenario_fig1, scenario_fig2, scenario_fig3,
    CurveReport, EngineKind, GridSpec, Scenario, ScenarioReport,
};
pub use toa::{
    first_click_distribution, memoryless_distribution, resolution_sweep, stats, DistributionStats,
    FirstClickResult, PropagationConfig, SweepEntry, TimeWindow, ToaDistribution,
};
