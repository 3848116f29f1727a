//! Input and noise processes, the identification system model, and their
//! exact second-order descriptions.
//!
//! The input is either zero-mean white Gaussian or a first-order
//! autoregressive process started from its stationary distribution, so the
//! regressor statistics are stationary from the very first adaptation step.
//! Noise laws expose closed-form even moments up to order six; those feed
//! the behavior models in [`crate::theory`].

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Law of the scalar input process `u(n)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InputKind {
    /// Zero-mean white Gaussian samples with the given variance.
    WhiteGaussian { variance: f64 },
    /// `u(n) = pole · u(n−1) + v(n)` with zero-mean Gaussian innovations
    /// `v(n)` of variance `innovation_variance`, initialized by drawing
    /// `u(−1)` from the stationary distribution.
    FirstOrderAr { pole: f64, innovation_variance: f64 },
}

/// Input process specification plus the regressor length `M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputModel {
    kind: InputKind,
    taps: usize,
}

impl InputModel {
    pub fn white(variance: f64, taps: usize) -> Result<Self> {
        if !(variance > 0.0) || !variance.is_finite() {
            return Err(Error::invalid("variance", format!("must be positive and finite, got {variance}")));
        }
        Self::checked(InputKind::WhiteGaussian { variance }, taps)
    }

    /// White Gaussian input of unit power.
    pub fn white_unit(taps: usize) -> Result<Self> {
        Self::white(1.0, taps)
    }

    pub fn first_order_ar(pole: f64, innovation_variance: f64, taps: usize) -> Result<Self> {
        if !(pole.abs() < 1.0) {
            return Err(Error::invalid("pole", format!("must lie in (-1, 1), got {pole}")));
        }
        if !(innovation_variance > 0.0) || !innovation_variance.is_finite() {
            return Err(Error::invalid(
                "innovation_variance",
                format!("must be positive and finite, got {innovation_variance}"),
            ));
        }
        Self::checked(InputKind::FirstOrderAr { pole, innovation_variance }, taps)
    }

    /// AR(1) input whose innovation variance `1 − pole²` makes the process
    /// variance exactly one.
    pub fn unit_variance_ar(pole: f64, taps: usize) -> Result<Self> {
        if !(pole.abs() < 1.0) {
            return Err(Error::invalid("pole", format!("must lie in (-1, 1), got {pole}")));
        }
        Self::first_order_ar(pole, 1.0 - pole * pole, taps)
    }

    fn checked(kind: InputKind, taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::invalid("taps", "filter length must be at least 1"));
        }
        Ok(Self { kind, taps })
    }

    pub fn kind(&self) -> InputKind {
        self.kind
    }

    pub fn taps(&self) -> usize {
        self.taps
    }

    /// Stationary variance of the process.
    pub fn process_variance(&self) -> f64 {
        match self.kind {
            InputKind::WhiteGaussian { variance } => variance,
            InputKind::FirstOrderAr { pole, innovation_variance } => {
                innovation_variance / (1.0 - pole * pole)
            }
        }
    }
}

/// Law of the measurement noise `z(n)`. All three laws have even densities,
/// so every odd moment vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Uniform on `[-half_width, half_width]`.
    UniformSymmetric { half_width: f64 },
    /// `+level` or `-level` with equal probability.
    BinarySymmetric { level: f64 },
    /// Zero-mean Gaussian with standard deviation `sigma`. `sigma = 0` is
    /// the noiseless degenerate case used by fixed-point sanity checks.
    Gaussian { sigma: f64 },
}

impl NoiseModel {
    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::invalid("half_width", format!("must be positive and finite, got {half_width}")));
        }
        Ok(NoiseModel::UniformSymmetric { half_width })
    }

    pub fn binary(level: f64) -> Result<Self> {
        if !(level > 0.0) || !level.is_finite() {
            return Err(Error::invalid("level", format!("must be positive and finite, got {level}")));
        }
        Ok(NoiseModel::BinarySymmetric { level })
    }

    pub fn gaussian(sigma: f64) -> Result<Self> {
        if !(sigma >= 0.0) || !sigma.is_finite() {
            return Err(Error::invalid("sigma", format!("must be nonnegative and finite, got {sigma}")));
        }
        Ok(NoiseModel::Gaussian { sigma })
    }

    /// Exactly zero noise.
    pub fn noiseless() -> Self {
        NoiseModel::Gaussian { sigma: 0.0 }
    }
}

/// Even moments of a noise law: `E{z²}`, `E{z⁴}`, `E{z⁶}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseMoments {
    pub variance: f64,
    pub fourth: f64,
    pub sixth: f64,
}

/// Closed-form even moments of the noise law.
///
/// Gaussian(σ): (σ², 3σ⁴, 15σ⁶); Uniform(a): (a²/3, a⁴/5, a⁶/7);
/// Binary(c): (c², c⁴, c⁶).
pub fn noise_moments(model: &NoiseModel) -> NoiseMoments {
    match *model {
        NoiseModel::UniformSymmetric { half_width: a } => NoiseMoments {
            variance: a.powi(2) / 3.0,
            fourth: a.powi(4) / 5.0,
            sixth: a.powi(6) / 7.0,
        },
        NoiseModel::BinarySymmetric { level: c } => NoiseMoments {
            variance: c.powi(2),
            fourth: c.powi(4),
            sixth: c.powi(6),
        },
        NoiseModel::Gaussian { sigma } => {
            let v = sigma * sigma;
            NoiseMoments {
                variance: v,
                fourth: 3.0 * v * v,
                sixth: 15.0 * v * v * v,
            }
        }
    }
}

/// Signal-to-noise ratio in dB under the unit-signal-power convention,
/// `10·log₁₀(1/σ_z²)`. Returns `+∞` for noiseless models.
pub fn snr_db(model: &NoiseModel) -> f64 {
    let variance = noise_moments(model).variance;
    if variance == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * variance.log10()
    }
}

/// The unknown system: true weights, input process, and measurement noise.
/// The desired response is `d(n) = w*ᵀu(n) + z(n)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel {
    pub true_weights: Array1<f64>,
    pub input: InputModel,
    pub noise: NoiseModel,
}

impl SystemModel {
    pub fn new(true_weights: Array1<f64>, input: InputModel, noise: NoiseModel) -> Result<Self> {
        if true_weights.len() != input.taps() {
            return Err(Error::DimensionMismatch {
                context: "true weights vs filter length",
                expected: input.taps(),
                actual: true_weights.len(),
            });
        }
        if true_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite { what: "true weights" });
        }
        Ok(Self { true_weights, input, noise })
    }

    pub fn taps(&self) -> usize {
        self.input.taps()
    }
}

/// Draw `n_samples` input samples. AR inputs consume one extra draw for the
/// stationary pre-history sample `u(−1)`, so the returned sequence is
/// stationary from its first element.
pub fn generate_input_sequence(model: &InputModel, n_samples: usize, seed: RngStream) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut rng = seed.rng();
    match model.kind {
        InputKind::WhiteGaussian { variance } => {
            let dist = Normal::new(0.0, variance.sqrt()).expect("validated at construction");
            Ok((0..n_samples).map(|_| dist.sample(&mut rng)).collect())
        }
        InputKind::FirstOrderAr { pole, innovation_variance } => {
            let innovation = Normal::new(0.0, innovation_variance.sqrt()).expect("validated at construction");
            let stationary = Normal::new(0.0, model.process_variance().sqrt()).expect("validated at construction");
            let mut prev = stationary.sample(&mut rng);
            let mut out = Vec::with_capacity(n_samples);
            for _ in 0..n_samples {
                prev = pole * prev + innovation.sample(&mut rng);
                out.push(prev);
            }
            Ok(out)
        }
    }
}

/// Draw `n_samples` i.i.d. noise samples.
pub fn generate_noise_sequence(model: &NoiseModel, n_samples: usize, seed: RngStream) -> Result<Vec<f64>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let mut rng = seed.rng();
    match *model {
        NoiseModel::UniformSymmetric { half_width } => {
            let dist = Uniform::new_inclusive(-half_width, half_width)
                .map_err(|e| Error::invalid("half_width", e.to_string()))?;
            Ok((0..n_samples).map(|_| dist.sample(&mut rng)).collect())
        }
        NoiseModel::BinarySymmetric { level } => Ok((0..n_samples)
            .map(|_| if rng.random::<bool>() { level } else { -level })
            .collect()),
        NoiseModel::Gaussian { sigma } => {
            let dist = Normal::new(0.0, sigma).expect("validated at construction");
            Ok((0..n_samples).map(|_| dist.sample(&mut rng)).collect())
        }
    }
}

/// Exact regressor correlation matrix `R = E{u(n)uᵀ(n)}` for the model's
/// filter length: `σ_u²·I` for white input, Toeplitz
/// `R[i][j] = σ_u²·pole^|i−j|` for the AR(1) input.
pub fn correlation_matrix(model: &InputModel) -> Array2<f64> {
    let m = model.taps();
    let variance = model.process_variance();
    match model.kind {
        InputKind::WhiteGaussian { .. } => Array2::eye(m) * variance,
        InputKind::FirstOrderAr { pole, .. } => {
            Array2::from_shape_fn((m, m), |(i, j)| variance * pole.powi((i as i32 - j as i32).abs()))
        }
    }
}

/// Desired response `d = w*ᵀ u_vec + z`.
pub fn desired_response(system: &SystemModel, u_vec: &[f64], z: f64) -> Result<f64> {
    if u_vec.len() != system.taps() {
        return Err(Error::DimensionMismatch {
            context: "regressor vs filter length",
            expected: system.taps(),
            actual: u_vec.len(),
        });
    }
    let dot: f64 = system
        .true_weights
        .iter()
        .zip(u_vec)
        .map(|(w, u)| w * u)
        .sum();
    Ok(dot + z)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn mean_and_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        (mean, var)
    }

    #[test]
    fn white_input_has_unit_power() {
        let model = InputModel::white_unit(4).unwrap();
        let xs = generate_input_sequence(&model, 100_000, RngStream::new(1)).unwrap();
        let (mean, var) = mean_and_var(&xs);
        // standard errors: mean ~ sqrt(1/n), variance ~ sqrt(2/n)
        let n = xs.len() as f64;
        assert!(mean.abs() < 3.0 * (1.0 / n).sqrt(), "mean {mean}");
        assert!((var - 1.0).abs() < 3.0 * (2.0 / n).sqrt(), "variance {var}");
    }

    #[test]
    fn ar_input_is_stationary_with_unit_variance() {
        // pole 0.5 with innovation variance 3/4 gives process variance 1
        let model = InputModel::first_order_ar(0.5, 0.75, 4).unwrap();
        assert_abs_diff_eq!(model.process_variance(), 1.0, epsilon = 1e-15);
        let xs = generate_input_sequence(&model, 100_000, RngStream::new(2)).unwrap();
        let (_, var) = mean_and_var(&xs);
        // var(sample variance) for Gaussian AR(1) is about 2σ⁴(1+a²)/(1−a²)/n
        let n = xs.len() as f64;
        let se = (2.0 * (1.0 + 0.25) / (1.0 - 0.25) / n).sqrt();
        assert!((var - 1.0).abs() < 3.0 * se, "variance {var}");
    }

    #[test]
    fn single_sample_is_deterministic() {
        let model = InputModel::white_unit(1).unwrap();
        let a = generate_input_sequence(&model, 1, RngStream::new(7)).unwrap();
        let b = generate_input_sequence(&model, 1, RngStream::new(7)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 1);
    }

    #[test]
    fn sequences_are_bit_reproducible() {
        let model = InputModel::unit_variance_ar(0.5, 8).unwrap();
        let a = generate_input_sequence(&model, 1000, RngStream::with_stream(3, 9)).unwrap();
        let b = generate_input_sequence(&model, 1000, RngStream::with_stream(3, 9)).unwrap();
        assert_eq!(a, b);

        let noise = NoiseModel::uniform(5.0).unwrap();
        let x = generate_noise_sequence(&noise, 1000, RngStream::with_stream(3, 10)).unwrap();
        let y = generate_noise_sequence(&noise, 1000, RngStream::with_stream(3, 10)).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn binary_noise_takes_only_two_values() {
        let noise = NoiseModel::binary(2.0).unwrap();
        let xs = generate_noise_sequence(&noise, 10_000, RngStream::new(4)).unwrap();
        assert!(xs.iter().all(|&x| x == 2.0 || x == -2.0));
    }

    #[test]
    fn uniform_noise_moments_match_samples() {
        let noise = NoiseModel::uniform(5.0).unwrap();
        let xs = generate_noise_sequence(&noise, 100_000, RngStream::new(5)).unwrap();
        let (mean, var) = mean_and_var(&xs);
        let n = xs.len() as f64;
        // var of the sample variance of U(−a,a) is (m4 − σ⁴)/n
        let m = noise_moments(&noise);
        let se_mean = (m.variance / n).sqrt();
        let se_var = ((m.fourth - m.variance * m.variance) / n).sqrt();
        assert!(mean.abs() < 3.0 * se_mean, "mean {mean}");
        assert!((var - 25.0 / 3.0).abs() < 3.0 * se_var, "variance {var}");
    }

    #[test]
    fn closed_form_moments() {
        let g = noise_moments(&NoiseModel::gaussian(1.0).unwrap());
        assert_eq!((g.variance, g.fourth, g.sixth), (1.0, 3.0, 15.0));

        let b = noise_moments(&NoiseModel::binary(2.0).unwrap());
        assert_eq!((b.variance, b.fourth, b.sixth), (4.0, 16.0, 64.0));

        let u = noise_moments(&NoiseModel::uniform(5.0).unwrap());
        assert_abs_diff_eq!(u.variance, 25.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.fourth, 125.0, epsilon = 1e-12);
        assert_abs_diff_eq!(u.sixth, 15625.0 / 7.0, epsilon = 1e-12);
    }

    #[test]
    fn moment_inequalities_hold() {
        for noise in [
            NoiseModel::uniform(5.0).unwrap(),
            NoiseModel::binary(2.0).unwrap(),
            NoiseModel::gaussian(1.7).unwrap(),
        ] {
            let m = noise_moments(&noise);
            assert!(m.fourth >= m.variance * m.variance);
            assert!(m.sixth >= m.variance * m.fourth);
        }
    }

    #[test]
    fn snr_matches_quoted_values() {
        let uniform = snr_db(&NoiseModel::uniform(5.0).unwrap());
        let binary = snr_db(&NoiseModel::binary(2.0).unwrap());
        assert!((uniform - (-9.21)).abs() < 0.05, "uniform SNR {uniform}");
        assert!((binary - (-6.02)).abs() < 0.05, "binary SNR {binary}");
    }

    #[test]
    fn correlation_matrix_white_is_identity() {
        let model = InputModel::white_unit(3).unwrap();
        let r = correlation_matrix(&model);
        assert_eq!(r, Array2::eye(3));
    }

    #[test]
    fn correlation_matrix_ar_is_toeplitz() {
        let model = InputModel::first_order_ar(0.5, 0.75, 3).unwrap();
        let r = correlation_matrix(&model);
        let expected = array![[1.0, 0.5, 0.25], [0.5, 1.0, 0.5], [0.25, 0.5, 1.0]];
        for (a, b) in r.iter().zip(expected.iter()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-15);
        }
    }

    #[test]
    fn correlation_matrix_single_tap_is_process_variance() {
        let model = InputModel::white(2.5, 1).unwrap();
        let r = correlation_matrix(&model);
        assert_eq!(r[(0, 0)], 2.5);
        let ar = InputModel::first_order_ar(0.3, 0.91, 1).unwrap();
        assert_abs_diff_eq!(correlation_matrix(&ar)[(0, 0)], 0.91 / (1.0 - 0.09), epsilon = 1e-12);
    }

    #[test]
    fn ar_empirical_autocorrelation_matches_model() {
        let m = 4;
        let model = InputModel::unit_variance_ar(0.5, m).unwrap();
        let n = 1_000_000;
        let xs = generate_input_sequence(&model, n, RngStream::new(11)).unwrap();
        let r = correlation_matrix(&model);
        for lag in 0..m {
            let est: f64 =
                xs.windows(lag + 1).map(|w| w[0] * w[lag]).sum::<f64>() / (n - lag) as f64;
            // Bartlett variance of the lag-k autocovariance estimate for a
            // Gaussian AR(1): (1/n) Σ_j [r(j)² + r(j+k)·r(j−k)]
            let rho = |j: i64| 0.5f64.powi(j.unsigned_abs() as i32);
            let mut var = 0.0;
            for j in -60i64..=60 {
                var += rho(j) * rho(j) + rho(j + lag as i64) * rho(j - lag as i64);
            }
            let se = (var / n as f64).sqrt();
            let truth = r[(0, lag)];
            assert!(
                (est - truth).abs() < 3.0 * se,
                "lag {lag}: estimate {est}, expected {truth}, se {se}"
            );
        }
    }

    #[test]
    fn desired_response_is_dot_plus_noise() {
        let system = SystemModel::new(
            array![1.0, -1.0],
            InputModel::white_unit(2).unwrap(),
            NoiseModel::noiseless(),
        )
        .unwrap();
        assert_eq!(desired_response(&system, &[2.0, 3.0], 0.0).unwrap(), -1.0);
        assert_eq!(desired_response(&system, &[0.0, 0.0], 0.7).unwrap(), 0.7);
        assert!(desired_response(&system, &[1.0], 0.0).is_err());
    }

    #[test]
    fn desired_response_long_run_variance_is_weight_energy() {
        // white unit input, no noise: var(d) = w*ᵀw* = 2.01
        let w_star = Array1::from(crate::presets::DEFAULT_TRUE_WEIGHTS.to_vec());
        let m = w_star.len();
        let system = SystemModel::new(
            w_star.clone(),
            InputModel::white_unit(m).unwrap(),
            NoiseModel::noiseless(),
        )
        .unwrap();
        let n = 100_000;
        let xs = generate_input_sequence(&system.input, n + m - 1, RngStream::new(31)).unwrap();
        let mut window = vec![0.0; m];
        let mut responses = Vec::with_capacity(n);
        for (t, &x) in xs.iter().enumerate() {
            for i in (1..m).rev() {
                window[i] = window[i - 1];
            }
            window[0] = x;
            if t >= m - 1 {
                responses.push(desired_response(&system, &window, 0.0).unwrap());
            }
        }
        let (_, var) = mean_and_var(&responses);
        // d(n) is an MA(M) of the input, so the sample-variance error sums
        // the squared autocovariances c(k) = Σ_i w*_i·w*_{i+k}
        let mut var_of_var = 0.0;
        for k in -(m as i64 - 1)..=(m as i64 - 1) {
            let c: f64 = (0..m)
                .filter_map(|i| {
                    let j = i as i64 + k;
                    (j >= 0 && (j as usize) < m).then(|| w_star[i] * w_star[j as usize])
                })
                .sum();
            var_of_var += 2.0 * c * c;
        }
        let se = (var_of_var / n as f64).sqrt();
        assert!((var - 2.01).abs() < 3.0 * se, "variance {var}, se {se}");
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        assert!(InputModel::white(0.0, 4).is_err());
        assert!(InputModel::white(1.0, 0).is_err());
        assert!(InputModel::first_order_ar(1.0, 0.75, 4).is_err());
        assert!(InputModel::first_order_ar(0.5, -1.0, 4).is_err());
        assert!(NoiseModel::uniform(0.0).is_err());
        assert!(NoiseModel::binary(-2.0).is_err());
        assert!(NoiseModel::gaussian(-0.1).is_err());
        assert!(NoiseModel::gaussian(0.0).is_ok(), "noiseless degenerate is allowed");
        let model = InputModel::white_unit(2).unwrap();
        assert!(generate_input_sequence(&model, 0, RngStream::new(0)).is_err());
    }
}
