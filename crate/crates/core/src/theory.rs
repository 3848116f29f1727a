//! Closed-form recursions predicting the NNLMF mean-weight and excess-MSE
//! behavior under slow learning with stationary Gaussian inputs.
//!
//! Two coupled quantities are advanced jointly per iteration:
//!
//! * the mean weight-error vector `m(n) = E{w̃(n)}`, via
//!   `m ← m − 3μ·(σ_z² + Tr{R m mᵀ})·D_{[w* + m]}·R·m`;
//! * the weight-error covariance `K(n) = E{w̃ w̃ᵀ}`, via
//!   `K ← K + μ·Φ₁ + μ²·Φ₂` (symmetrized), where
//!   `Φ₁ = −3(σ_z² + Tr{RK})·{K·R·A + A·R·K}` with `A = D_m + D_{w*}`, and
//!   `Φ₂ = (m₆ + 45σ_z²·Tr{RK}² + 15·Tr{RK}³)·(R∘G) + 15·m₄·(Υ∘G)` with
//!   `G = K + w*mᵀ + m w*ᵀ + w*w*ᵀ` and `Υ = 2RKR + Tr{RK}·R`.
//!
//! The mean recursion deliberately uses the rank-one approximation
//! `E{w̃w̃ᵀ} ≈ m mᵀ` inside its own trace term even though the covariance
//! recursion maintains a full `K`; [`mean_step_with_covariance`] exposes the
//! full-`K` alternative. The predicted excess MSE is `ξ(n) = Tr{R·K(n)}`.

use ndarray::{Array1, Array2};

use crate::error::{Error, Result};
use crate::mat::{outer, scale_cols, symmetrize, trace_product};
use crate::signal::{correlation_matrix, noise_moments, NoiseMoments, SystemModel};

/// Parameters of the behavior model.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryConfig {
    pub true_weights: Array1<f64>,
    pub correlation: Array2<f64>,
    pub step_size: f64,
    pub noise: NoiseMoments,
}

impl TheoryConfig {
    pub fn new(
        true_weights: Array1<f64>,
        correlation: Array2<f64>,
        step_size: f64,
        noise: NoiseMoments,
    ) -> Result<Self> {
        let m = true_weights.len();
        if correlation.nrows() != m || correlation.ncols() != m {
            return Err(Error::DimensionMismatch {
                context: "correlation matrix vs true weights",
                expected: m,
                actual: correlation.nrows().max(correlation.ncols()),
            });
        }
        let asym = correlation
            .indexed_iter()
            .map(|((i, j), &v)| (v - correlation[(j, i)]).abs())
            .fold(0.0f64, f64::max);
        if asym > 1e-9 {
            return Err(Error::invalid("correlation", format!("must be symmetric, max asymmetry {asym:e}")));
        }
        if !(step_size > 0.0) || !step_size.is_finite() {
            return Err(Error::invalid("step_size", format!("must be positive and finite, got {step_size}")));
        }
        Ok(Self { true_weights, correlation, step_size, noise })
    }

    /// Model parameters implied by a system model: exact correlation matrix
    /// and closed-form noise moments.
    pub fn for_system(system: &SystemModel, step_size: f64) -> Result<Self> {
        Self::new(
            system.true_weights.clone(),
            correlation_matrix(&system.input),
            step_size,
            noise_moments(&system.noise),
        )
    }

    pub fn taps(&self) -> usize {
        self.true_weights.len()
    }
}

/// Coupled model state at one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryState {
    /// `E{w̃(n)}`
    pub mean_error: Array1<f64>,
    /// `K(n) = E{w̃ w̃ᵀ}`, kept symmetric
    pub covariance: Array2<f64>,
    pub iteration: u64,
}

impl TheoryState {
    /// State for a deterministic common initialization `w(0) = ψ₀` across
    /// realizations: the initial covariance is the exact rank-one outer
    /// product of `ψ₀ − w*`.
    pub fn from_initial_weights(initial_weights: &Array1<f64>, true_weights: &Array1<f64>) -> Result<Self> {
        if initial_weights.len() != true_weights.len() {
            return Err(Error::DimensionMismatch {
                context: "initial weights vs true weights",
                expected: true_weights.len(),
                actual: initial_weights.len(),
            });
        }
        let mean_error = initial_weights - true_weights;
        let covariance = outer(mean_error.view(), mean_error.view());
        Ok(Self { mean_error, covariance, iteration: 0 })
    }
}

fn check_mean_dims(mean: &Array1<f64>, cfg: &TheoryConfig) -> Result<()> {
    if mean.len() != cfg.taps() {
        return Err(Error::DimensionMismatch {
            context: "mean weight-error vs model",
            expected: cfg.taps(),
            actual: mean.len(),
        });
    }
    Ok(())
}

fn check_cov_dims(cov: &Array2<f64>, cfg: &TheoryConfig) -> Result<()> {
    if cov.nrows() != cfg.taps() || cov.ncols() != cfg.taps() {
        return Err(Error::DimensionMismatch {
            context: "covariance vs model",
            expected: cfg.taps(),
            actual: cov.nrows().max(cov.ncols()),
        });
    }
    Ok(())
}

/// `m − 3μ(σ_z² + trace)·(w* + m) ∘ (R m)`, shared by the mean variants.
fn mean_step_kernel(mean: &Array1<f64>, cfg: &TheoryConfig, trace: f64) -> Array1<f64> {
    let rm = cfg.correlation.dot(mean);
    let coeff = 3.0 * cfg.step_size * (cfg.noise.variance + trace);
    let mut out = mean.clone();
    for i in 0..out.len() {
        out[i] -= coeff * (cfg.true_weights[i] + mean[i]) * rm[i];
    }
    out
}

/// Advance `E{w̃}` one step with the rank-one trace term `Tr{R m mᵀ}`.
pub fn mean_step(mean: &Array1<f64>, cfg: &TheoryConfig) -> Result<Array1<f64>> {
    check_mean_dims(mean, cfg)?;
    let rm = cfg.correlation.dot(mean);
    let trace = mean.dot(&rm);
    Ok(mean_step_kernel(mean, cfg, trace))
}

/// Advance `E{w̃}` one step but take the trace term from a full covariance
/// matrix, `Tr{R K}`, instead of the rank-one approximation.
pub fn mean_step_with_covariance(
    mean: &Array1<f64>,
    covariance: &Array2<f64>,
    cfg: &TheoryConfig,
) -> Result<Array1<f64>> {
    check_mean_dims(mean, cfg)?;
    check_cov_dims(covariance, cfg)?;
    let trace = trace_product(cfg.correlation.view(), covariance.view());
    Ok(mean_step_kernel(mean, cfg, trace))
}

/// White-input reduction of [`mean_step`] for `R = σ_u²·I`:
/// `m ← m − 3μσ_u²(σ_z² + σ_u²‖m‖²)·m ∘ (w* + m)`.
pub fn mean_step_white(
    mean: &Array1<f64>,
    input_variance: f64,
    noise_variance: f64,
    step_size: f64,
    true_weights: &Array1<f64>,
) -> Result<Array1<f64>> {
    if mean.len() != true_weights.len() {
        return Err(Error::DimensionMismatch {
            context: "mean weight-error vs true weights",
            expected: true_weights.len(),
            actual: mean.len(),
        });
    }
    let norm_sq = mean.dot(mean);
    let coeff = 3.0 * step_size * input_variance * (noise_variance + input_variance * norm_sq);
    let mut out = mean.clone();
    for i in 0..out.len() {
        out[i] -= coeff * mean[i] * (true_weights[i] + mean[i]);
    }
    Ok(out)
}

/// Stationary values of the mean recursion, per entry:
/// `E{w̃_i(∞)} ∈ {0, −w*_i}` (equivalently `w_i(∞) ∈ {w*_i, 0}`). For
/// `w*_i = 0` the two coincide.
pub fn fixed_points(true_weights: &Array1<f64>) -> Vec<(f64, f64)> {
    true_weights.iter().map(|&w| (0.0, -w)).collect()
}

/// First-order covariance forcing term
/// `Φ₁ = −3(σ_z² + Tr{RK})·{K·R·A + A·R·K}` with `A = D_m + D_{w*}`.
pub fn phi1(covariance: &Array2<f64>, mean: &Array1<f64>, cfg: &TheoryConfig) -> Result<Array2<f64>> {
    check_mean_dims(mean, cfg)?;
    check_cov_dims(covariance, cfg)?;
    Ok(phi1_kernel(
        covariance,
        mean,
        cfg,
        trace_product(cfg.correlation.view(), covariance.view()),
    ))
}

fn phi1_kernel(covariance: &Array2<f64>, mean: &Array1<f64>, cfg: &TheoryConfig, trace: f64) -> Array2<f64> {
    let scale = mean + &cfg.true_weights;
    let kra = scale_cols(&covariance.dot(&cfg.correlation), scale.view());
    let coeff = -3.0 * (cfg.noise.variance + trace);
    let mut out = &kra + &kra.t();
    out.mapv_inplace(|x| coeff * x);
    out
}

/// Second-order covariance forcing term
/// `Φ₂ = (m₆ + 45σ_z²τ² + 15τ³)·(R∘G) + 15·m₄·(Υ∘G)` with `τ = Tr{RK}`,
/// `G = K + w*mᵀ + m w*ᵀ + w*w*ᵀ` and `Υ = 2RKR + τR`. The Hadamard
/// sandwich identity `D_a·X·D_b = X ∘ (a bᵀ)` collapses the four diagonal
/// sandwiches of each bracket into the single `∘G` factor.
pub fn phi2(covariance: &Array2<f64>, mean: &Array1<f64>, cfg: &TheoryConfig) -> Result<Array2<f64>> {
    check_mean_dims(mean, cfg)?;
    check_cov_dims(covariance, cfg)?;
    Ok(phi2_kernel(
        covariance,
        mean,
        cfg,
        trace_product(cfg.correlation.view(), covariance.view()),
    ))
}

fn phi2_kernel(covariance: &Array2<f64>, mean: &Array1<f64>, cfg: &TheoryConfig, trace: f64) -> Array2<f64> {
    let r = &cfg.correlation;
    let w_star = &cfg.true_weights;

    // G = K + w*mᵀ + m w*ᵀ + w*w*ᵀ, built entrywise so the float result is
    // exactly symmetric
    let n = mean.len();
    let g = Array2::from_shape_fn((n, n), |(i, j)| {
        covariance[(i, j)] + (w_star[i] * mean[j] + mean[i] * w_star[j]) + w_star[i] * w_star[j]
    });

    let rk = r.dot(covariance);
    // R K R is symmetric in exact arithmetic; symmetrize to keep Φ₂ exactly
    // symmetric despite float rounding in the two matrix products
    let mut upsilon = symmetrize(&r.dot(&rk.t()));
    upsilon.mapv_inplace(|x| 2.0 * x);
    upsilon += &(r * trace);

    let c = cfg.noise.sixth + 45.0 * cfg.noise.variance * trace * trace + 15.0 * trace.powi(3);
    let mut out = r * &g;
    out.mapv_inplace(|x| c * x);
    out += &(&(&upsilon * &g) * (15.0 * cfg.noise.fourth));
    out
}

/// Advance the coupled state one iteration: `K ← K + μΦ₁ + μ²Φ₂`
/// (symmetrized) and `m ← mean_step(m)`, both evaluated at the incoming
/// state so the pair evolves jointly.
pub fn covariance_step(state: &TheoryState, cfg: &TheoryConfig) -> Result<TheoryState> {
    check_mean_dims(&state.mean_error, cfg)?;
    check_cov_dims(&state.covariance, cfg)?;
    Ok(covariance_step_kernel(state, cfg))
}

fn covariance_step_kernel(state: &TheoryState, cfg: &TheoryConfig) -> TheoryState {
    let trace = trace_product(cfg.correlation.view(), state.covariance.view());
    let p1 = phi1_kernel(&state.covariance, &state.mean_error, cfg, trace);
    let p2 = phi2_kernel(&state.covariance, &state.mean_error, cfg, trace);
    let mu = cfg.step_size;
    let mut next = state.covariance.clone();
    next.scaled_add(mu, &p1);
    next.scaled_add(mu * mu, &p2);
    let covariance = symmetrize(&next);

    let rm = cfg.correlation.dot(&state.mean_error);
    let rank_one_trace = state.mean_error.dot(&rm);
    let mean_error = mean_step_kernel(&state.mean_error, cfg, rank_one_trace);

    TheoryState { mean_error, covariance, iteration: state.iteration + 1 }
}

/// Excess mean-square error `ξ = Tr{R K}`.
pub fn emse(correlation: &Array2<f64>, covariance: &Array2<f64>) -> Result<f64> {
    if correlation.nrows() != covariance.nrows()
        || correlation.ncols() != covariance.ncols()
        || correlation.nrows() != correlation.ncols()
    {
        return Err(Error::DimensionMismatch {
            context: "correlation vs covariance",
            expected: correlation.nrows(),
            actual: covariance.nrows(),
        });
    }
    Ok(trace_product(correlation.view(), covariance.view()))
}

/// Predicted trajectories for a deterministic initialization `w(0) = ψ₀`:
/// per-iteration mean weights `E{w(n)} = m(n) + w*` and EMSE `ξ(n)`, both
/// of length `n_iters` starting at `n = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TheoryCurves {
    /// Row `n` holds `E{w(n)}`.
    pub mean_weights: Array2<f64>,
    pub emse: Vec<f64>,
}

pub fn predict_curves(
    cfg: &TheoryConfig,
    initial_weights: &Array1<f64>,
    n_iters: usize,
) -> Result<TheoryCurves> {
    if n_iters == 0 {
        return Err(Error::invalid("n_iters", "must be at least 1"));
    }
    let mut state = TheoryState::from_initial_weights(initial_weights, &cfg.true_weights)?;
    let m = cfg.taps();
    let mut mean_weights = Array2::<f64>::zeros((n_iters, m));
    let mut emse_curve = Vec::with_capacity(n_iters);
    for n in 0..n_iters {
        for i in 0..m {
            mean_weights[(n, i)] = state.mean_error[i] + cfg.true_weights[i];
        }
        emse_curve.push(trace_product(cfg.correlation.view(), state.covariance.view()));
        if n + 1 < n_iters {
            state = covariance_step_kernel(&state, cfg);
        }
    }
    Ok(TheoryCurves { mean_weights, emse: emse_curve })
}
