//! Gaussian higher-order moment kernels used by the behavior model, each
//! paired with an exact small-scale oracle.
//!
//! The covariance recursion leans on the moment factorization of zero-mean
//! Gaussian vectors. The kernels here are exact in the deterministic
//! weight-error regime (Isserlis' theorem); the looser ensemble-level uses
//! are validated end-to-end by the acceptance suite rather than term by
//! term.

use ndarray::{Array1, Array2};
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::mat::{cholesky_lower, lower_triangular_apply, outer, trace_product};
use crate::rng::RngStream;

fn check_square_against(len: usize, m: &Array2<f64>, context: &'static str) -> Result<()> {
    if m.nrows() != len || m.ncols() != len {
        return Err(Error::DimensionMismatch {
            context,
            expected: len,
            actual: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// Model approximation of `E{u·(w̃ᵀu)³}` for a random weight error with
/// mean `m` and second moment `K`: `3·Tr{RK}·R·m`. Exact when `K = m mᵀ`
/// (deterministic weight error).
pub fn cubic_moment_approx(
    correlation: &Array2<f64>,
    covariance: &Array2<f64>,
    mean: &Array1<f64>,
) -> Result<Array1<f64>> {
    check_square_against(mean.len(), correlation, "correlation vs mean")?;
    check_square_against(mean.len(), covariance, "covariance vs mean")?;
    let trace = trace_product(correlation.view(), covariance.view());
    Ok(correlation.dot(mean) * (3.0 * trace))
}

/// Exact `E{u·(vᵀu)³} = 3·(vᵀRv)·R·v` for a fixed vector `v` and zero-mean
/// Gaussian `u` with correlation `R`, by the fourth-order Isserlis
/// factorization.
pub fn isserlis_cubic_oracle(correlation: &Array2<f64>, weight_error: &Array1<f64>) -> Result<Array1<f64>> {
    check_square_against(weight_error.len(), correlation, "correlation vs weight error")?;
    let rv = correlation.dot(weight_error);
    let quad = weight_error.dot(&rv);
    Ok(rv * (3.0 * quad))
}

/// Sampling estimate of `E{u·(vᵀu)³}` over `n_samples` Gaussian draws,
/// together with the per-component standard error of the mean. Requires a
/// positive-definite `R` for the factorization.
pub fn isserlis_cubic_monte_carlo(
    correlation: &Array2<f64>,
    weight_error: &Array1<f64>,
    n_samples: usize,
    seed: RngStream,
) -> Result<(Array1<f64>, Array1<f64>)> {
    check_square_against(weight_error.len(), correlation, "correlation vs weight error")?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let m = weight_error.len();
    let chol = cholesky_lower(correlation.view()).ok_or(Error::NotPositiveDefinite)?;
    let normal = Normal::new(0.0, 1.0).expect("constant parameters");
    let mut rng = seed.rng();

    let mut g = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut sum = vec![0.0; m];
    let mut sum_sq = vec![0.0; m];
    for _ in 0..n_samples {
        for gi in g.iter_mut() {
            *gi = normal.sample(&mut rng);
        }
        lower_triangular_apply(&chol, &g, &mut u);
        let proj: f64 = weight_error.iter().zip(&u).map(|(v, ui)| v * ui).sum();
        let cube = proj * proj * proj;
        for i in 0..m {
            let x = u[i] * cube;
            sum[i] += x;
            sum_sq[i] += x * x;
        }
    }
    let n = n_samples as f64;
    let mean = Array1::from_iter(sum.iter().map(|s| s / n));
    let se = Array1::from_iter(
        sum.iter()
            .zip(&sum_sq)
            .map(|(s, ss)| (((ss / n) - (s / n).powi(2)).max(0.0) / n).sqrt()),
    );
    Ok((mean, se))
}

/// Exact `E{D_u·v vᵀ·D_u} = R ∘ (v vᵀ)` for a fixed vector `v`; the model's
/// `R∘K` term is this identity averaged over the weight error.
pub fn hadamard_quadratic_exact(correlation: &Array2<f64>, weight_error: &Array1<f64>) -> Result<Array2<f64>> {
    check_square_against(weight_error.len(), correlation, "correlation vs weight error")?;
    Ok(correlation * &outer(weight_error.view(), weight_error.view()))
}

/// Sampling estimate of `E{D_u·v vᵀ·D_u}` with per-entry standard errors.
pub fn hadamard_quadratic_monte_carlo(
    correlation: &Array2<f64>,
    weight_error: &Array1<f64>,
    n_samples: usize,
    seed: RngStream,
) -> Result<(Array2<f64>, Array2<f64>)> {
    check_square_against(weight_error.len(), correlation, "correlation vs weight error")?;
    if n_samples == 0 {
        return Err(Error::invalid("n_samples", "must be at least 1"));
    }
    let m = weight_error.len();
    let chol = cholesky_lower(correlation.view()).ok_or(Error::NotPositiveDefinite)?;
    let normal = Normal::new(0.0, 1.0).expect("constant parameters");
    let mut rng = seed.rng();

    let mut g = vec![0.0; m];
    let mut u = vec![0.0; m];
    let mut sum = Array2::<f64>::zeros((m, m));
    let mut sum_sq = Array2::<f64>::zeros((m, m));
    for _ in 0..n_samples {
        for gi in g.iter_mut() {
            *gi = normal.sample(&mut rng);
        }
        lower_triangular_apply(&chol, &g, &mut u);
        for i in 0..m {
            for j in 0..m {
                let x = u[i] * weight_error[i] * weight_error[j] * u[j];
                sum[(i, j)] += x;
                sum_sq[(i, j)] += x * x;
            }
        }
    }
    let n = n_samples as f64;
    let mean = sum.mapv(|s| s / n);
    let se = Array2::from_shape_fn((m, m), |(i, j)| {
        (((sum_sq[(i, j)] / n) - (sum[(i, j)] / n).powi(2)).max(0.0) / n).sqrt()
    });
    Ok((mean, se))
}

/// Even moments of a zero-mean Gaussian with the given variance `v`:
/// order 2 → `v`, order 4 → `3v²`, order 6 → `15v³`.
pub fn even_power_moment(variance: f64, order: u32) -> Result<f64> {
    if !(variance >= 0.0) || !variance.is_finite() {
        return Err(Error::invalid("variance", format!("must be nonnegative and finite, got {variance}")));
    }
    match order {
        2 => Ok(variance),
        4 => Ok(3.0 * variance * variance),
        6 => Ok(15.0 * variance * variance * variance),
        other => Err(Error::invalid("order", format!("supported orders are 2, 4, 6; got {other}"))),
    }
}
