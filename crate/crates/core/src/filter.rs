//! Per-sample NNLMF and NNLMS weight updates and the realization driver.
//!
//! The update of tap `i` is `w_i ← w_i + μ·u(n−i)·w_i·g(e)` with `g(e) = e³`
//! for NNLMF and `g(e) = e` for NNLMS. The error `e(n) = d(n) − wᵀ(n)u(n)`
//! is computed once from the pre-update weights and shared by every entry.
//! Because the update is multiplicative in `w_i`, a tap that is exactly
//! zero stays zero forever; there is no explicit projection onto the
//! nonnegative orthant.

use ndarray::Array1;

use crate::error::{Error, Result};
use crate::rng::RealizationSeeds;
use crate::signal::{generate_input_sequence, generate_noise_sequence, SystemModel};

/// Divergence guard used by the experiment runners: a realization is
/// declared divergent when any weight goes non-finite or `|e(n)|` exceeds
/// this threshold. The cubic error makes genuine divergence explosive, so
/// any large finite cutoff separates cleanly.
pub const DEFAULT_DIVERGENCE_THRESHOLD: f64 = 1e6;

/// Which stochastic-gradient update the filter applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Fourth-order error criterion: update proportional to `e³`.
    Nnlmf,
    /// Second-order error criterion: update proportional to `e`.
    Nnlms,
}

impl Algorithm {
    /// Error gain applied by the update.
    #[inline]
    pub(crate) fn error_gain(self, e: f64) -> f64 {
        match self {
            Algorithm::Nnlmf => e * e * e,
            Algorithm::Nnlms => e,
        }
    }
}

/// Mutable state of one adaptive filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterState {
    weights: Array1<f64>,
    step_size: f64,
    algorithm: Algorithm,
}

impl FilterState {
    /// `step_size` may be zero (a frozen filter), but not negative.
    pub fn new(algorithm: Algorithm, initial_weights: Array1<f64>, step_size: f64) -> Result<Self> {
        if initial_weights.is_empty() {
            return Err(Error::invalid("initial_weights", "must have at least one tap"));
        }
        if initial_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { what: "initial weights" });
        }
        if !(step_size >= 0.0) || !step_size.is_finite() {
            return Err(Error::invalid("step_size", format!("must be nonnegative and finite, got {step_size}")));
        }
        Ok(Self { weights: initial_weights, step_size, algorithm })
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn algorithm(&self) -> Algorithm {
        self.algorithm
    }

    pub fn taps(&self) -> usize {
        self.weights.len()
    }

    /// Apply one update. `u_vec[i]` holds `u(n−i)`.
    pub fn step(&mut self, u_vec: &[f64], d: f64) -> Result<StepRecord> {
        self.step_inner(u_vec, d, None)
    }

    /// Apply one update and also report the weight-error vector
    /// `w(n) − w*` of the pre-update weights.
    pub fn step_with_reference(&mut self, u_vec: &[f64], d: f64, true_weights: &Array1<f64>) -> Result<StepRecord> {
        if true_weights.len() != self.taps() {
            return Err(Error::DimensionMismatch {
                context: "true weights vs filter taps",
                expected: self.taps(),
                actual: true_weights.len(),
            });
        }
        self.step_inner(u_vec, d, Some(true_weights))
    }

    fn step_inner(&mut self, u_vec: &[f64], d: f64, true_weights: Option<&Array1<f64>>) -> Result<StepRecord> {
        let m = self.taps();
        if u_vec.len() != m {
            return Err(Error::DimensionMismatch {
                context: "regressor vs filter taps",
                expected: m,
                actual: u_vec.len(),
            });
        }
        if u_vec.iter().any(|u| !u.is_finite()) {
            return Err(Error::NonFinite { what: "regressor sample" });
        }
        if !d.is_finite() {
            return Err(Error::NonFinite { what: "desired response" });
        }

        let weights = self.weights.as_slice().expect("contiguous");
        let error = d - dot(weights, u_vec);
        let weight_error = true_weights.map(|ws| &self.weights - ws);

        // every entry uses the pre-update weights and the single error value
        let gain = self.algorithm.error_gain(error);
        let mu = self.step_size;
        for (w, &u) in self.weights.iter_mut().zip(u_vec) {
            *w += mu * u * *w * gain;
        }

        Ok(StepRecord {
            error,
            weights: self.weights.clone(),
            weight_error,
        })
    }
}

/// Outcome of one update: the a-priori error `e(n)`, the post-update
/// weights `w(n+1)`, and (when the true weights are known) the pre-update
/// weight error `w(n) − w*`.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub error: f64,
    pub weights: Array1<f64>,
    pub weight_error: Option<Array1<f64>>,
}

/// One NNLMF update. Fails unless the state was built for NNLMF.
pub fn nnlmf_step(state: &mut FilterState, u_vec: &[f64], d: f64) -> Result<StepRecord> {
    if state.algorithm() != Algorithm::Nnlmf {
        return Err(Error::invalid("algorithm", "state is not configured for NNLMF"));
    }
    state.step(u_vec, d)
}

/// One NNLMS update. Fails unless the state was built for NNLMS.
pub fn nnlms_step(state: &mut FilterState, u_vec: &[f64], d: f64) -> Result<StepRecord> {
    if state.algorithm() != Algorithm::Nnlms {
        return Err(Error::invalid("algorithm", "state is not configured for NNLMS"));
    }
    state.step(u_vec, d)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// How a driven realization ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum DriveOutcome {
    Completed,
    Diverged { at: usize },
}

/// Per-step observer used by the drivers. `pre` holds `w(n)`, `post` holds
/// `w(n+1)`; the step that trips the divergence guard is never observed.
pub(crate) trait StepVisitor {
    fn observe(&mut self, n: usize, pre: &[f64], post: &[f64], error: f64, noise: f64);
}

pub(crate) struct NullVisitor;

impl StepVisitor for NullVisitor {
    #[inline]
    fn observe(&mut self, _n: usize, _pre: &[f64], _post: &[f64], _error: f64, _noise: f64) {}
}

/// Run one realization: generate input and noise streams, build the sliding
/// regressor (its pre-history comes from `M − 1` warm-up samples of the
/// same input stream, so the input is stationary from step 0), and apply
/// `n_iters` updates.
pub(crate) fn drive<V: StepVisitor>(
    system: &SystemModel,
    algorithm: Algorithm,
    step_size: f64,
    initial_weights: &Array1<f64>,
    n_iters: usize,
    seeds: RealizationSeeds,
    divergence_threshold: f64,
    visitor: &mut V,
) -> Result<DriveOutcome> {
    if n_iters == 0 {
        return Err(Error::invalid("n_iters", "must be at least 1"));
    }
    let m = system.taps();
    if initial_weights.len() != m {
        return Err(Error::DimensionMismatch {
            context: "initial weights vs filter length",
            expected: m,
            actual: initial_weights.len(),
        });
    }
    let input = generate_input_sequence(&system.input, n_iters + m - 1, seeds.input)?;
    let noise = generate_noise_sequence(&system.noise, n_iters, seeds.noise)?;
    let w_star = system.true_weights.as_slice().expect("contiguous");

    // window[i] = u(n − i)
    let mut window = vec![0.0; m];
    for &sample in &input[..m - 1] {
        push_front(&mut window, sample);
    }

    let mut w_cur = initial_weights.to_vec();
    let mut w_next = vec![0.0; m];
    let mu = step_size;

    for n in 0..n_iters {
        push_front(&mut window, input[m - 1 + n]);
        let z = noise[n];
        let d = dot(w_star, &window) + z;
        let e = d - dot(&w_cur, &window);
        if !e.is_finite() || e.abs() > divergence_threshold {
            return Ok(DriveOutcome::Diverged { at: n });
        }
        let gain = algorithm.error_gain(e);
        let mut finite = true;
        for i in 0..m {
            let w = w_cur[i] + mu * window[i] * w_cur[i] * gain;
            finite &= w.is_finite();
            w_next[i] = w;
        }
        if !finite {
            return Ok(DriveOutcome::Diverged { at: n });
        }
        visitor.observe(n, &w_cur, &w_next, e, z);
        std::mem::swap(&mut w_cur, &mut w_next);
    }
    Ok(DriveOutcome::Completed)
}

#[inline]
fn push_front(window: &mut [f64], sample: f64) {
    for i in (1..window.len()).rev() {
        window[i] = window[i - 1];
    }
    window[0] = sample;
}

/// Full trajectory of one realization, one record per completed step. When
/// the run diverged, `diverged_at` holds the offending iteration and the
/// record list stops just before it.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterRun {
    pub records: Vec<StepRecord>,
    pub diverged_at: Option<usize>,
}

struct TrajectoryRecorder<'a> {
    w_star: &'a [f64],
    records: Vec<StepRecord>,
}

impl StepVisitor for TrajectoryRecorder<'_> {
    fn observe(&mut self, _n: usize, pre: &[f64], post: &[f64], error: f64, _noise: f64) {
        let weight_error = pre
            .iter()
            .zip(self.w_star)
            .map(|(w, ws)| w - ws)
            .collect::<Vec<_>>();
        self.records.push(StepRecord {
            error,
            weights: Array1::from(post.to_vec()),
            weight_error: Some(Array1::from(weight_error)),
        });
    }
}

/// Drive `state` against `system` for `n_iters` samples, recording every
/// step. The two sub-streams of `seeds` feed input and noise respectively.
pub fn run_filter(
    system: &SystemModel,
    state: &FilterState,
    n_iters: usize,
    seeds: RealizationSeeds,
    divergence_threshold: f64,
) -> Result<FilterRun> {
    if state.taps() != system.taps() {
        return Err(Error::DimensionMismatch {
            context: "filter taps vs system length",
            expected: system.taps(),
            actual: state.taps(),
        });
    }
    let mut recorder = TrajectoryRecorder {
        w_star: system.true_weights.as_slice().expect("contiguous"),
        records: Vec::with_capacity(n_iters),
    };
    let outcome = drive(
        system,
        state.algorithm(),
        state.step_size(),
        state.weights(),
        n_iters,
        seeds,
        divergence_threshold,
        &mut recorder,
    )?;
    Ok(FilterRun {
        records: recorder.records,
        diverged_at: match outcome {
            DriveOutcome::Completed => None,
            DriveOutcome::Diverged { at } => Some(at),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{InputModel, NoiseModel};
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn nnlmf_scalar_update_by_hand() {
        // M=1, w=0.5, u=2, d=2 so e=1; w' = 0.5 + 0.1·2·0.5·1 = 0.6
        let mut state = FilterState::new(Algorithm::Nnlmf, array![0.5], 0.1).unwrap();
        let rec = nnlmf_step(&mut state, &[2.0], 2.0).unwrap();
        assert_abs_diff_eq!(rec.error, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rec.weights[0], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn nnlms_scalar_update_by_hand() {
        let mut state = FilterState::new(Algorithm::Nnlms, array![0.5], 0.1).unwrap();
        let rec = nnlms_step(&mut state, &[2.0], 2.0).unwrap();
        assert_abs_diff_eq!(rec.weights[0], 0.6, epsilon = 1e-15);
    }

    #[test]
    fn zero_error_leaves_weights_unchanged() {
        let mut state = FilterState::new(Algorithm::Nnlmf, array![0.3, -0.2], 0.5).unwrap();
        let before = state.weights().clone();
        // d equals wᵀu, so e = 0
        let d = 0.3 * 1.0 + (-0.2) * 2.0;
        let rec = state.step(&[1.0, 2.0], d).unwrap();
        assert_eq!(rec.error, 0.0);
        assert_eq!(state.weights(), &before);
    }

    #[test]
    fn zero_tap_stays_zero() {
        let mut state = FilterState::new(Algorithm::Nnlmf, array![0.0, 0.4], 0.2).unwrap();
        for k in 0..100 {
            let u = [(k as f64).sin() + 0.3, (k as f64).cos()];
            state.step(&u, 1.0 + (k as f64 * 0.7).sin()).unwrap();
            assert_eq!(state.weights()[0], 0.0);
        }
    }

    #[test]
    fn algorithms_agree_when_error_is_unit_or_zero() {
        for target_e in [-1.0, 0.0, 1.0] {
            let w0 = array![0.25, 0.5, -0.75];
            let u = [1.5, -0.4, 0.9];
            let mut lmf = FilterState::new(Algorithm::Nnlmf, w0.clone(), 0.05).unwrap();
            let mut lms = FilterState::new(Algorithm::Nnlms, w0.clone(), 0.05).unwrap();
            let d = w0.iter().zip(&u).map(|(w, u)| w * u).sum::<f64>() + target_e;
            let a = lmf.step(&u, d).unwrap();
            let b = lms.step(&u, d).unwrap();
            assert_eq!(a.weights, b.weights, "e = {target_e}");
        }
    }

    #[test]
    fn step_is_simultaneous_under_permutation() {
        let w0 = array![0.8, -0.1, 0.33, 0.5];
        let u = [1.2, -0.7, 0.05, 2.1];
        let w_star = array![1.0, 0.2, -0.4, 0.9];
        let perm = [2usize, 0, 3, 1];

        let mut plain = FilterState::new(Algorithm::Nnlmf, w0.clone(), 0.03).unwrap();
        let d = crate::signal::desired_response(
            &crate::signal::SystemModel::new(
                w_star.clone(),
                InputModel::white_unit(4).unwrap(),
                NoiseModel::noiseless(),
            )
            .unwrap(),
            &u,
            0.25,
        )
        .unwrap();
        let rec = plain.step_with_reference(&u, d, &w_star).unwrap();

        let w0p = Array1::from(perm.iter().map(|&i| w0[i]).collect::<Vec<_>>());
        let up: Vec<f64> = perm.iter().map(|&i| u[i]).collect();
        let wsp = Array1::from(perm.iter().map(|&i| w_star[i]).collect::<Vec<_>>());
        let mut permuted = FilterState::new(Algorithm::Nnlmf, w0p, 0.03).unwrap();
        // d is invariant under a consistent permutation
        let rec_p = permuted.step_with_reference(&up, d, &wsp).unwrap();

        assert_eq!(rec.error, rec_p.error);
        for (slot, &src) in perm.iter().enumerate() {
            assert_eq!(rec.weights[src], rec_p.weights[slot]);
            assert_eq!(
                rec.weight_error.as_ref().unwrap()[src],
                rec_p.weight_error.as_ref().unwrap()[slot]
            );
        }
    }

    #[test]
    fn step_rejects_bad_inputs() {
        let mut state = FilterState::new(Algorithm::Nnlmf, array![0.5, 0.5], 0.1).unwrap();
        assert!(state.step(&[1.0], 1.0).is_err());
        assert!(state.step(&[1.0, f64::NAN], 1.0).is_err());
        assert!(state.step(&[1.0, 1.0], f64::INFINITY).is_err());
        assert!(nnlms_step(&mut state, &[1.0, 1.0], 1.0).is_err());
        assert!(FilterState::new(Algorithm::Nnlmf, array![0.5], -0.1).is_err());
        assert!(FilterState::new(Algorithm::Nnlmf, array![f64::NAN], 0.1).is_err());
    }

    fn paper_like_system(noise: NoiseModel) -> SystemModel {
        SystemModel::new(
            Array1::from(crate::presets::DEFAULT_TRUE_WEIGHTS.to_vec()),
            InputModel::white_unit(10).unwrap(),
            noise,
        )
        .unwrap()
    }

    #[test]
    fn exact_solution_is_a_fixed_point() {
        let system = paper_like_system(NoiseModel::noiseless());
        let state = FilterState::new(
            Algorithm::Nnlmf,
            system.true_weights.clone(),
            2e-5,
        )
        .unwrap();
        let run = run_filter(&system, &state, 500, RealizationSeeds::derive(3, 0), DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
        assert!(run.diverged_at.is_none());
        for rec in &run.records {
            assert_eq!(rec.error, 0.0);
            assert_eq!(rec.weights, system.true_weights);
        }
    }

    #[test]
    fn trajectories_are_reproducible() {
        let system = paper_like_system(NoiseModel::uniform(5.0).unwrap());
        let state = FilterState::new(
            Algorithm::Nnlmf,
            Array1::from(crate::presets::DEFAULT_INITIAL_WEIGHTS.to_vec()),
            2e-5,
        )
        .unwrap();
        let seeds = RealizationSeeds::derive(17, 4);
        let a = run_filter(&system, &state, 2000, seeds, DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
        let b = run_filter(&system, &state, 2000, seeds, DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn slow_learning_run_stays_convergent() {
        // single long run consistent with the convergence region at the
        // default initialization distance
        let system = paper_like_system(NoiseModel::uniform(5.0).unwrap());
        let state = FilterState::new(
            Algorithm::Nnlmf,
            Array1::from(crate::presets::DEFAULT_INITIAL_WEIGHTS.to_vec()),
            2e-5,
        )
        .unwrap();
        let run = run_filter(&system, &state, 500_000, RealizationSeeds::derive(5, 0), DEFAULT_DIVERGENCE_THRESHOLD).unwrap();
        assert!(run.diverged_at.is_none());
        assert_eq!(run.records.len(), 500_000);
    }
}
