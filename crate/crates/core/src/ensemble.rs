//! Seeded Monte Carlo ensembles of adaptive-filter realizations.
//!
//! Realization `r` draws its input from ChaCha stream `2r` and its noise
//! from stream `2r + 1` of the master seed, and every realization starts
//! from the same initial weight vector. Results are therefore a pure
//! function of the configuration: realizations are reduced in a fixed
//! chunk order, so the output is bit-identical no matter how many workers
//! execute them.
//!
//! The empirical excess MSE at iteration `n` averages `(e(n) − z(n))²`
//! over realizations; the simulator knows `z(n)`, and `e − z = −w̃ᵀu`
//! exactly, which gives a lower-variance estimator than `e² − σ_z²` with
//! the same expectation. Divergent realizations are excluded from the
//! averages and reported separately.

use ndarray::{Array1, Array2};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{drive, Algorithm, DriveOutcome, StepVisitor};
use crate::rng::RealizationSeeds;
use crate::signal::SystemModel;
use crate::theory::TheoryCurves;

/// Fixed number of reduction chunks. The partition depends only on the
/// realization count, never on the worker count, which keeps the float
/// summation order deterministic.
const REDUCTION_CHUNKS: usize = 8;

/// Configuration of one ensemble run.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleConfig {
    pub system: SystemModel,
    pub algorithm: Algorithm,
    pub step_size: f64,
    /// Initial weights shared by every realization.
    pub initial_weights: Array1<f64>,
    pub n_iters: usize,
    pub n_realizations: usize,
    pub master_seed: u64,
    pub divergence_threshold: f64,
}

impl EnsembleConfig {
    pub fn validate(&self) -> Result<()> {
        if self.initial_weights.len() != self.system.taps() {
            return Err(Error::DimensionMismatch {
                context: "initial weights vs system length",
                expected: self.system.taps(),
                actual: self.initial_weights.len(),
            });
        }
        if self.initial_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { what: "initial weights" });
        }
        if self.n_iters == 0 {
            return Err(Error::invalid("n_iters", "must be at least 1"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be at least 1"));
        }
        if !(self.step_size >= 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid("step_size", format!("must be nonnegative and finite, got {}", self.step_size)));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::invalid("divergence_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Averaged trajectories of a finished ensemble. Trajectories have length
/// `n_iters`; row `n` of `mean_weights` is the ensemble mean of the
/// pre-update weights `w(n)`, so row 0 equals the shared initialization.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleResult {
    pub mean_weights: Array2<f64>,
    pub emse: Vec<f64>,
    /// Divergence flag per realization index.
    pub divergence_flags: Vec<bool>,
    pub n_divergent: usize,
    /// Realizations included in the averages.
    pub n_completed: usize,
}

/// Per-realization scratch: the trajectory is accumulated here first and
/// merged into the chunk sums only if the realization completed, so
/// divergent realizations never contaminate the averages.
struct TraceVisitor<'a> {
    taps: usize,
    weights: &'a mut [f64],
    squared_error: &'a mut [f64],
}

impl StepVisitor for TraceVisitor<'_> {
    #[inline]
    fn observe(&mut self, n: usize, pre: &[f64], _post: &[f64], error: f64, noise: f64) {
        let row = &mut self.weights[n * self.taps..(n + 1) * self.taps];
        row.copy_from_slice(pre);
        let excess = error - noise;
        self.squared_error[n] = excess * excess;
    }
}

struct ChunkSums {
    weight_sum: Vec<f64>,
    squared_error_sum: Vec<f64>,
    flags: Vec<bool>,
    n_completed: usize,
}

/// Run the ensemble and average the surviving realizations.
pub fn run_ensemble(cfg: &EnsembleConfig) -> Result<EnsembleResult> {
    cfg.validate()?;
    let m = cfg.system.taps();
    let n_iters = cfg.n_iters;
    let n_real = cfg.n_realizations;

    let chunk_size = n_real.div_ceil(REDUCTION_CHUNKS);
    let ranges: Vec<std::ops::Range<usize>> = (0..n_real)
        .step_by(chunk_size)
        .map(|start| start..(start + chunk_size).min(n_real))
        .collect();

    let chunk_results: Vec<Result<ChunkSums>> = ranges
        .into_par_iter()
        .map(|range| {
            let mut sums = ChunkSums {
                weight_sum: vec![0.0; n_iters * m],
                squared_error_sum: vec![0.0; n_iters],
                flags: Vec::with_capacity(range.len()),
                n_completed: 0,
            };
            let mut scratch_w = vec![0.0; n_iters * m];
            let mut scratch_e = vec![0.0; n_iters];
            for r in range {
                let mut visitor = TraceVisitor {
                    taps: m,
                    weights: &mut scratch_w,
                    squared_error: &mut scratch_e,
                };
                let outcome = drive(
                    &cfg.system,
                    cfg.algorithm,
                    cfg.step_size,
                    &cfg.initial_weights,
                    n_iters,
                    RealizationSeeds::derive(cfg.master_seed, r as u64),
                    cfg.divergence_threshold,
                    &mut visitor,
                )?;
                match outcome {
                    DriveOutcome::Completed => {
                        for (acc, &x) in sums.weight_sum.iter_mut().zip(scratch_w.iter()) {
                            *acc += x;
                        }
                        for (acc, &x) in sums.squared_error_sum.iter_mut().zip(scratch_e.iter()) {
                            *acc += x;
                        }
                        sums.n_completed += 1;
                        sums.flags.push(false);
                    }
                    DriveOutcome::Diverged { .. } => sums.flags.push(true),
                }
            }
            Ok(sums)
        })
        .collect();

    let mut weight_sum = vec![0.0; n_iters * m];
    let mut squared_error_sum = vec![0.0; n_iters];
    let mut flags = Vec::with_capacity(n_real);
    let mut n_completed = 0usize;
    for chunk in chunk_results {
        let chunk = chunk?;
        for (acc, x) in weight_sum.iter_mut().zip(chunk.weight_sum) {
            *acc += x;
        }
        for (acc, x) in squared_error_sum.iter_mut().zip(chunk.squared_error_sum) {
            *acc += x;
        }
        flags.extend(chunk.flags);
        n_completed += chunk.n_completed;
    }

    let n_divergent = n_real - n_completed;
    if n_completed == 0 {
        return Err(Error::AllRealizationsDiverged { n_realizations: n_real });
    }
    let scale = 1.0 / n_completed as f64;
    let mean_weights = Array2::from_shape_vec(
        (n_iters, m),
        weight_sum.into_iter().map(|x| x * scale).collect(),
    )
    .expect("shape matches accumulation layout");
    let emse = squared_error_sum.into_iter().map(|x| x * scale).collect();

    Ok(EnsembleResult {
        mean_weights,
        emse,
        divergence_flags: flags,
        n_divergent,
        n_completed,
    })
}

/// Per-iteration deviations between predicted and simulated trajectories,
/// plus maxima over the whole run and over a trailing window.
#[derive(Debug, Clone, PartialEq)]
pub struct DeviationReport {
    /// Max over taps of `|E{w(n)}_theory − E{w(n)}_sim|`, per iteration.
    pub weight_deviation: Vec<f64>,
    /// `|ξ_theory(n) − ξ_sim(n)|` in dB, per iteration. Iterations where
    /// exactly one side is non-positive report `+∞`; where both are, `0`.
    pub emse_deviation_db: Vec<f64>,
    pub max_weight_deviation: f64,
    pub max_emse_deviation_db: f64,
    pub tail: TailSummary,
}

/// Deviation maxima over the last `window` iterations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailSummary {
    pub window: usize,
    pub max_weight_deviation: f64,
    pub max_emse_deviation_db: f64,
}

fn emse_db_deviation(theory: f64, sim: f64) -> f64 {
    match (theory > 0.0, sim > 0.0) {
        (true, true) => (10.0 * (theory.log10() - sim.log10())).abs(),
        (false, false) => 0.0,
        _ => f64::INFINITY,
    }
}

/// Compare simulated curves against model predictions of equal length.
/// `tail_window` is clamped to the curve length.
pub fn compare_model_vs_simulation(
    simulation: &EnsembleResult,
    theory: &TheoryCurves,
    tail_window: usize,
) -> Result<DeviationReport> {
    let n = simulation.emse.len();
    if theory.emse.len() != n || theory.mean_weights.nrows() != n || simulation.mean_weights.nrows() != n {
        return Err(Error::DimensionMismatch {
            context: "theory vs simulation curve length",
            expected: n,
            actual: theory.emse.len(),
        });
    }
    if theory.mean_weights.ncols() != simulation.mean_weights.ncols() {
        return Err(Error::DimensionMismatch {
            context: "theory vs simulation tap count",
            expected: simulation.mean_weights.ncols(),
            actual: theory.mean_weights.ncols(),
        });
    }

    let m = simulation.mean_weights.ncols();
    let mut weight_deviation = Vec::with_capacity(n);
    let mut emse_deviation_db = Vec::with_capacity(n);
    for i in 0..n {
        let mut wd = 0.0f64;
        for j in 0..m {
            wd = wd.max((theory.mean_weights[(i, j)] - simulation.mean_weights[(i, j)]).abs());
        }
        weight_deviation.push(wd);
        emse_deviation_db.push(emse_db_deviation(theory.emse[i], simulation.emse[i]));
    }

    let max_weight_deviation = weight_deviation.iter().cloned().fold(0.0, f64::max);
    let max_emse_deviation_db = emse_deviation_db.iter().cloned().fold(0.0, f64::max);
    let window = tail_window.min(n).max(1);
    let tail_start = n - window;
    let tail = TailSummary {
        window,
        max_weight_deviation: weight_deviation[tail_start..].iter().cloned().fold(0.0, f64::max),
        max_emse_deviation_db: emse_deviation_db[tail_start..].iter().cloned().fold(0.0, f64::max),
    };

    Ok(DeviationReport {
        weight_deviation,
        emse_deviation_db,
        max_weight_deviation,
        max_emse_deviation_db,
        tail,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{run_filter, DEFAULT_DIVERGENCE_THRESHOLD};
    use crate::presets;
    use crate::signal::{InputModel, NoiseModel};
    use ndarray::array;

    fn small_cfg() -> EnsembleConfig {
        EnsembleConfig {
            system: SystemModel::new(
                presets::default_true_weights(),
                InputModel::white_unit(10).unwrap(),
                NoiseModel::uniform(5.0).unwrap(),
            )
            .unwrap(),
            algorithm: Algorithm::Nnlmf,
            step_size: 2e-5,
            initial_weights: presets::default_initial_weights(),
            n_iters: 500,
            n_realizations: 12,
            master_seed: 2024,
            divergence_threshold: DEFAULT_DIVERGENCE_THRESHOLD,
        }
    }

    #[test]
    fn exact_start_with_zero_noise_gives_zero_emse() {
        let mut cfg = small_cfg();
        cfg.system.noise = NoiseModel::noiseless();
        cfg.initial_weights = cfg.system.true_weights.clone();
        let result = run_ensemble(&cfg).unwrap();
        assert_eq!(result.n_divergent, 0);
        assert!(result.emse.iter().all(|&x| x == 0.0));
        // per-realization weights are exactly w*; the averaged value only
        // picks up summation rounding
        for n in 0..cfg.n_iters {
            for j in 0..10 {
                let diff = (result.mean_weights[(n, j)] - cfg.system.true_weights[j]).abs();
                assert!(diff < 1e-14, "iteration {n} tap {j}: off by {diff}");
            }
        }
    }

    #[test]
    fn reruns_are_bit_identical() {
        let cfg = small_cfg();
        let a = run_ensemble(&cfg).unwrap();
        let b = run_ensemble(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn result_is_independent_of_worker_count() {
        let cfg = small_cfg();
        let baseline = run_ensemble(&cfg).unwrap();
        for threads in [1usize, 3] {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            let result = pool.install(|| run_ensemble(&cfg)).unwrap();
            assert_eq!(result, baseline, "worker count {threads} changed the result");
        }
    }

    #[test]
    fn single_realization_matches_run_filter() {
        let mut cfg = small_cfg();
        cfg.n_realizations = 1;
        let ensemble = run_ensemble(&cfg).unwrap();
        let state = crate::filter::FilterState::new(
            cfg.algorithm,
            cfg.initial_weights.clone(),
            cfg.step_size,
        )
        .unwrap();
        let run = run_filter(
            &cfg.system,
            &state,
            cfg.n_iters,
            RealizationSeeds::derive(cfg.master_seed, 0),
            cfg.divergence_threshold,
        )
        .unwrap();
        // the pre-update weights of step n are the post-update weights of
        // step n−1, so the single-realization average must reproduce the
        // trajectory bit for bit
        for j in 0..10 {
            assert_eq!(ensemble.mean_weights[(0, j)], cfg.initial_weights[j]);
        }
        for n in 1..cfg.n_iters {
            let w_pre = &run.records[n - 1].weights;
            for j in 0..10 {
                assert_eq!(ensemble.mean_weights[(n, j)], w_pre[j]);
            }
        }
        // the recorded weight error refers to the same pre-update weights
        for (n, rec) in run.records.iter().enumerate() {
            let w_err = rec.weight_error.as_ref().unwrap();
            for j in 0..10 {
                let reconstructed = w_err[j] + cfg.system.true_weights[j];
                assert!((ensemble.mean_weights[(n, j)] - reconstructed).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn initial_emse_approaches_weighted_initial_error_energy() {
        // avg of (w̃(0)ᵀ u(0))² → Tr{R w̃(0) w̃(0)ᵀ} as realizations grow
        let mut cfg = small_cfg();
        cfg.n_iters = 1;
        cfg.n_realizations = 4000;
        let result = run_ensemble(&cfg).unwrap();
        let werr = &cfg.initial_weights - &cfg.system.true_weights;
        let expected: f64 = werr.iter().map(|x| x * x).sum(); // R = I
        // (w̃ᵀu)² has variance 2·expected² for Gaussian u
        let se = (2.0 * expected * expected / cfg.n_realizations as f64).sqrt();
        assert!(
            (result.emse[0] - expected).abs() < 3.0 * se,
            "emse {} expected {expected} se {se}",
            result.emse[0]
        );
    }

    #[test]
    fn all_divergent_is_an_error() {
        let mut cfg = small_cfg();
        // gigantic step size with a tiny threshold forces divergence
        cfg.step_size = 1.0;
        cfg.divergence_threshold = 1e-8;
        cfg.n_realizations = 3;
        match run_ensemble(&cfg) {
            Err(Error::AllRealizationsDiverged { n_realizations: 3 }) => {}
            other => panic!("expected AllRealizationsDiverged, got {other:?}"),
        }
    }

    #[test]
    fn comparison_of_identical_curves_is_zero() {
        let sim = EnsembleResult {
            mean_weights: array![[1.0, 2.0], [1.1, 2.1]],
            emse: vec![1.0, 0.5],
            divergence_flags: vec![false],
            n_divergent: 0,
            n_completed: 1,
        };
        let theory = TheoryCurves {
            mean_weights: sim.mean_weights.clone(),
            emse: sim.emse.clone(),
        };
        let report = compare_model_vs_simulation(&sim, &theory, 10).unwrap();
        assert_eq!(report.max_weight_deviation, 0.0);
        assert_eq!(report.max_emse_deviation_db, 0.0);
    }

    #[test]
    fn uniform_db_shift_reports_that_shift() {
        let base = vec![1.0, 0.5, 0.25, 0.125];
        let shifted: Vec<f64> = base.iter().map(|x| x * 10f64.powf(0.1)).collect();
        let sim = EnsembleResult {
            mean_weights: Array2::zeros((4, 1)),
            emse: base,
            divergence_flags: vec![false],
            n_divergent: 0,
            n_completed: 1,
        };
        let theory = TheoryCurves {
            mean_weights: Array2::zeros((4, 1)),
            emse: shifted,
        };
        let report = compare_model_vs_simulation(&sim, &theory, 2).unwrap();
        for dev in &report.emse_deviation_db {
            assert!((dev - 1.0).abs() < 1e-12, "deviation {dev}");
        }
        assert!((report.tail.max_emse_deviation_db - 1.0).abs() < 1e-12);
    }

    #[test]
    fn comparison_length_mismatch_is_rejected() {
        let sim = EnsembleResult {
            mean_weights: Array2::zeros((4, 1)),
            emse: vec![1.0; 4],
            divergence_flags: vec![false],
            n_divergent: 0,
            n_completed: 1,
        };
        let theory = TheoryCurves {
            mean_weights: Array2::zeros((3, 1)),
            emse: vec![1.0; 3],
        };
        assert!(compare_model_vs_simulation(&sim, &theory, 2).is_err());
    }
}
