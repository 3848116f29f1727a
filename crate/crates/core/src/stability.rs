//! Empirical convergence/divergence classification of NNLMF over a grid of
//! step sizes and initial distances.
//!
//! Each cell `(μ, d)` scales a base initial vector so that
//! `‖k·ψ − w*‖² = d`, runs a batch of seeded realizations, and counts how
//! many trip the divergence guard. Every cell reuses the same per-index
//! realization streams (common random numbers), so a cell's classification
//! depends only on `(μ, d)` and the configuration.

use ndarray::Array1;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::filter::{drive, Algorithm, DriveOutcome, NullVisitor};
use crate::rng::RealizationSeeds;
use crate::signal::SystemModel;

/// Outcome class of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CellClass {
    AllConverged,
    SometimesDivergent,
    AlwaysDivergent,
}

/// Classification of one `(μ, d)` cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellOutcome {
    pub class: CellClass,
    pub divergence_fraction: f64,
    pub n_divergent: usize,
    pub n_realizations: usize,
    /// Scaling factor realizing the requested distance.
    pub scaling: f64,
}

/// Template and grid for a stability sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityConfig {
    pub system: SystemModel,
    pub algorithm: Algorithm,
    /// Base initial vector `ψ`; cells start from `k·ψ`.
    pub base_initial: Array1<f64>,
    pub mu_values: Vec<f64>,
    pub d_values: Vec<f64>,
    pub n_realizations: usize,
    pub n_iters: usize,
    pub master_seed: u64,
    pub divergence_threshold: f64,
}

impl StabilityConfig {
    pub fn validate(&self) -> Result<()> {
        if self.base_initial.len() != self.system.taps() {
            return Err(Error::DimensionMismatch {
                context: "base initial vector vs system length",
                expected: self.system.taps(),
                actual: self.base_initial.len(),
            });
        }
        if self.mu_values.is_empty() || self.d_values.is_empty() {
            return Err(Error::invalid("grid", "mu_values and d_values must be nonempty"));
        }
        if self.n_realizations == 0 {
            return Err(Error::invalid("n_realizations", "must be at least 1"));
        }
        if self.n_iters == 0 {
            return Err(Error::invalid("n_iters", "must be at least 1"));
        }
        if self.mu_values.iter().any(|mu| !(*mu >= 0.0) || !mu.is_finite()) {
            return Err(Error::invalid("mu_values", "step sizes must be nonnegative and finite"));
        }
        if self.d_values.iter().any(|d| !d.is_finite()) {
            return Err(Error::invalid("d_values", "distances must be finite"));
        }
        if !(self.divergence_threshold > 0.0) {
            return Err(Error::invalid("divergence_threshold", "must be positive"));
        }
        Ok(())
    }
}

/// Solve `‖k·base − w*‖² = distance` for the larger root
/// `k = (b + √(b² − a·c)) / a` with `a = ‖base‖²`, `b = baseᵀw*`,
/// `c = ‖w*‖² − distance`, so `k` grows monotonically with the distance.
/// Distances below the minimum achievable (negative discriminant) are an
/// error, never a silent clamp.
pub fn solve_scaling(base: &Array1<f64>, true_weights: &Array1<f64>, distance: f64) -> Result<f64> {
    if base.len() != true_weights.len() {
        return Err(Error::DimensionMismatch {
            context: "base initial vector vs true weights",
            expected: true_weights.len(),
            actual: base.len(),
        });
    }
    let a: f64 = base.dot(base);
    if a == 0.0 {
        return Err(Error::invalid("base", "base initial vector must be nonzero"));
    }
    let b: f64 = base.dot(true_weights);
    let c: f64 = true_weights.dot(true_weights) - distance;
    let discriminant = b * b - a * c;
    if discriminant < 0.0 {
        let minimum = true_weights.dot(true_weights) - b * b / a;
        return Err(Error::UnreachableDistance { distance, minimum });
    }
    Ok((b + discriminant.sqrt()) / a)
}

/// Classify one `(μ, d)` cell of the template.
pub fn classify_cell(cfg: &StabilityConfig, step_size: f64, distance: f64) -> Result<CellOutcome> {
    cfg.validate()?;
    if !(step_size >= 0.0) || !step_size.is_finite() {
        return Err(Error::invalid("step_size", format!("must be nonnegative and finite, got {step_size}")));
    }
    let scaling = solve_scaling(&cfg.base_initial, &cfg.system.true_weights, distance)?;
    let initial = &cfg.base_initial * scaling;

    let flags: Vec<Result<bool>> = (0..cfg.n_realizations)
        .into_par_iter()
        .map(|r| {
            let outcome = drive(
                &cfg.system,
                cfg.algorithm,
                step_size,
                &initial,
                cfg.n_iters,
                RealizationSeeds::derive(cfg.master_seed, r as u64),
                cfg.divergence_threshold,
                &mut NullVisitor,
            )?;
            Ok(matches!(outcome, DriveOutcome::Diverged { .. }))
        })
        .collect();

    let mut n_divergent = 0usize;
    for flag in flags {
        if flag? {
            n_divergent += 1;
        }
    }
    let n = cfg.n_realizations;
    let class = if n_divergent == 0 {
        CellClass::AllConverged
    } else if n_divergent == n {
        CellClass::AlwaysDivergent
    } else {
        CellClass::SometimesDivergent
    };
    Ok(CellOutcome {
        class,
        divergence_fraction: n_divergent as f64 / n as f64,
        n_divergent,
        n_realizations: n,
        scaling,
    })
}

/// One grid entry: either a classified cell or the reason it could not run
/// (for instance an unreachable distance).
#[derive(Debug, Clone, PartialEq)]
pub enum CellEntry {
    Done(CellOutcome),
    Failed(String),
}

/// Classified stability grid, indexed `cells[mu_index][d_index]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityGrid {
    pub mu_values: Vec<f64>,
    pub d_values: Vec<f64>,
    pub cells: Vec<Vec<CellEntry>>,
}

impl StabilityGrid {
    pub fn n_failed(&self) -> usize {
        self.cells
            .iter()
            .flatten()
            .filter(|c| matches!(c, CellEntry::Failed(_)))
            .count()
    }

    pub fn cell(&self, mu_index: usize, d_index: usize) -> &CellEntry {
        &self.cells[mu_index][d_index]
    }
}

/// Classify every `(μ, d)` cell. Cells run as independent parallel tasks;
/// a failed cell is marked, not fatal.
pub fn sweep(cfg: &StabilityConfig) -> Result<StabilityGrid> {
    cfg.validate()?;
    let pairs: Vec<(usize, usize)> = (0..cfg.mu_values.len())
        .flat_map(|i| (0..cfg.d_values.len()).map(move |j| (i, j)))
        .collect();
    let entries: Vec<((usize, usize), CellEntry)> = pairs
        .into_par_iter()
        .map(|(i, j)| {
            let entry = match classify_cell(cfg, cfg.mu_values[i], cfg.d_values[j]) {
                Ok(outcome) => CellEntry::Done(outcome),
                Err(err) => CellEntry::Failed(err.to_string()),
            };
            ((i, j), entry)
        })
        .collect();

    let mut cells =
        vec![vec![CellEntry::Failed(String::new()); cfg.d_values.len()]; cfg.mu_values.len()];
    for ((i, j), entry) in entries {
        cells[i][j] = entry;
    }
    Ok(StabilityGrid {
        mu_values: cfg.mu_values.clone(),
        d_values: cfg.d_values.clone(),
        cells,
    })
}

/// The reference sweep grid: step sizes `0.1×10⁻⁵ … 2.1×10⁻⁵` in steps of
/// `0.2×10⁻⁵` and distances `2 … 102` in steps of `10`.
pub fn reference_grid() -> (Vec<f64>, Vec<f64>) {
    let mu_values = vec![
        0.1e-5, 0.3e-5, 0.5e-5, 0.7e-5, 0.9e-5, 1.1e-5, 1.3e-5, 1.5e-5, 1.7e-5, 1.9e-5, 2.1e-5,
    ];
    let d_values = (0..11).map(|i| 2.0 + 10.0 * i as f64).collect();
    (mu_values, d_values)
}
