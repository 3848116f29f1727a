//! Nonnegative least-mean-fourth (NNLMF) adaptive filtering.
//!
//! The crate bundles three layers:
//!
//! * the per-sample NNLMF and NNLMS weight updates ([`filter`]), driven by
//!   seeded input/noise processes ([`signal`]);
//! * closed-form recursions predicting the mean-weight and excess-MSE
//!   behavior under slow learning with Gaussian inputs ([`theory`]), backed
//!   by exact Gaussian moment kernels ([`moments`]);
//! * a reproducible Monte Carlo harness: trajectory-averaging ensembles
//!   ([`ensemble`]) and an empirical stability map over step size and
//!   initialization distance ([`stability`]).
//!
//! Everything random is keyed by explicit ChaCha streams ([`rng`]), so any
//! experiment replays bit-identically on any number of worker threads.

pub mod ensemble;
pub mod error;
pub mod filter;
mod mat;
pub mod moments;
pub mod presets;
pub mod rng;
pub mod signal;
pub mod stability;
pub mod theory;

pub use ensemble::{compare_model_vs_simulation, run_ensemble, DeviationReport, EnsembleConfig, EnsembleResult};
pub use error::{Error, Result};
pub use filter::{
    nnlmf_step, nnlms_step, run_filter, Algorithm, FilterRun, FilterState, StepRecord,
    DEFAULT_DIVERGENCE_THRESHOLD,
};
pub use moments::{
    cubic_moment_approx, even_power_moment, hadamard_quadratic_exact, isserlis_cubic_oracle,
};
pub use rng::{RealizationSeeds, RngStream};
pub use signal::{
    correlation_matrix, desired_response, generate_input_sequence, generate_noise_sequence,
    noise_moments, snr_db, InputKind, InputModel, NoiseModel, NoiseMoments, SystemModel,
};
pub use stability::{
    classify_cell, solve_scaling, sweep, CellClass, CellEntry, CellOutcome, StabilityConfig,
    StabilityGrid,
};
pub use theory::{
    covariance_step, emse, fixed_points, mean_step, mean_step_white, mean_step_with_covariance,
    phi1, phi2, predict_curves, TheoryConfig, TheoryCurves, TheoryState,
};
