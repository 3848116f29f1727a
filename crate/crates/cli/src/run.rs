//! Experiment orchestration: wire the configuration into the library,
//! write the requested table, and emit a reproduction manifest.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use nnlmf::{
    compare_model_vs_simulation, noise_moments, predict_curves, run_ensemble, snr_db, sweep,
    CellClass, CellEntry, DeviationReport, EnsembleConfig, EnsembleResult, StabilityConfig,
    TheoryConfig, TheoryCurves,
};

use crate::config::{ExperimentConfig, ExperimentKind};
use crate::error::CliError;
use crate::table::{CurveTable, OutputFormat, QuantityTable, StabilityRow, StabilityTable};

/// What the subcommand asks for: simulation curves, model curves, both plus
/// deviations, the stability grid, or the noise moment report.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Model,
    Compare,
    Stability,
    Moments,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Simulate => "simulate",
            Mode::Model => "model",
            Mode::Compare => "compare",
            Mode::Stability => "stability",
            Mode::Moments => "moments",
        }
    }

    fn accepts(self, kind: ExperimentKind) -> bool {
        match self {
            Mode::Simulate | Mode::Model | Mode::Compare => {
                matches!(kind, ExperimentKind::MeanWeights | ExperimentKind::Emse)
            }
            Mode::Stability => kind == ExperimentKind::StabilityMap,
            Mode::Moments => kind == ExperimentKind::Moments,
        }
    }
}

/// Reproduction manifest written alongside every output file. Feeding it
/// back through `--config` replays the run bit-identically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub mode: String,
    pub master_seed: u64,
    pub config: ExperimentConfig,
}

/// Outcome of a run, including everything the exit code depends on.
#[derive(Debug)]
pub struct RunSummary {
    pub output_path: PathBuf,
    pub manifest_path: PathBuf,
    pub failed_cells: usize,
    pub divergent_realizations: usize,
    pub deviation: Option<DeviationSummary>,
}

/// Trailing-window deviation maxima reported by `compare` runs.
#[derive(Debug, Clone, Copy)]
pub struct DeviationSummary {
    pub tail_window: usize,
    pub max_weight_deviation: f64,
    pub max_emse_deviation_db: f64,
}

/// Path of the manifest that belongs to `out`: the extension is replaced
/// by `manifest.json`.
pub fn manifest_path_for(out: &Path) -> PathBuf {
    out.with_extension("manifest.json")
}

fn ensemble_config(cfg: &ExperimentConfig) -> Result<EnsembleConfig, CliError> {
    Ok(EnsembleConfig {
        system: cfg.system_model()?,
        algorithm: cfg.algorithm.into(),
        step_size: cfg.step_size,
        initial_weights: cfg.initial_weight_vector()?,
        n_iters: cfg.n_iters,
        n_realizations: cfg.n_realizations,
        master_seed: cfg.master_seed,
        divergence_threshold: cfg.divergence_threshold,
    })
}

fn theory_curves(cfg: &ExperimentConfig) -> Result<TheoryCurves, CliError> {
    let system = cfg.system_model()?;
    let theory = TheoryConfig::for_system(&system, cfg.step_size)?;
    Ok(predict_curves(&theory, &cfg.initial_weight_vector()?, cfg.n_iters)?)
}

fn push_weight_series(table: &mut CurveTable, prefix: &str, curves: &ndarray::Array2<f64>, stride: usize) {
    for tap in 0..curves.ncols() {
        let column: Vec<f64> = curves.column(tap).to_vec();
        table.push_series(&format!("{prefix}_w{tap}"), column.iter(), stride, false);
    }
}

fn curve_table(
    cfg: &ExperimentConfig,
    mode: Mode,
    simulation: Option<&EnsembleResult>,
    theory: Option<&TheoryCurves>,
    report: Option<&DeviationReport>,
) -> CurveTable {
    let stride = cfg.output_stride;
    match cfg.kind {
        ExperimentKind::MeanWeights => {
            let mut table = CurveTable::new(false);
            if let Some(sim) = simulation {
                push_weight_series(&mut table, "sim", &sim.mean_weights, stride);
            }
            if let Some(th) = theory {
                push_weight_series(&mut table, "theory", &th.mean_weights, stride);
            }
            if mode == Mode::Compare {
                if let Some(rep) = report {
                    table.push_series("dev_w_max", rep.weight_deviation.iter(), stride, false);
                }
            }
            table
        }
        ExperimentKind::Emse => {
            let mut table = CurveTable::new(true);
            if let Some(sim) = simulation {
                table.push_series("sim_emse", sim.emse.iter(), stride, true);
            }
            if let Some(th) = theory {
                table.push_series("theory_emse", th.emse.iter(), stride, true);
            }
            if mode == Mode::Compare {
                if let Some(rep) = report {
                    // the value of this series is already a dB quantity
                    table.push_series("dev_emse_db", rep.emse_deviation_db.iter(), stride, false);
                }
            }
            table
        }
        ExperimentKind::StabilityMap | ExperimentKind::Moments => unreachable!("curve table for curve kinds only"),
    }
}

fn stability_table(cfg: &ExperimentConfig) -> Result<(StabilityTable, usize), CliError> {
    let stability = StabilityConfig {
        system: cfg.system_model()?,
        algorithm: cfg.algorithm.into(),
        base_initial: cfg.initial_weight_vector()?,
        mu_values: cfg.stability.mu_values.clone(),
        d_values: cfg.stability.d_values.clone(),
        n_realizations: cfg.stability.n_realizations,
        n_iters: cfg.stability.n_iters,
        master_seed: cfg.master_seed,
        divergence_threshold: cfg.divergence_threshold,
    };
    let grid = sweep(&stability)?;
    let mut table = StabilityTable::default();
    for (i, &mu) in grid.mu_values.iter().enumerate() {
        for (j, &d) in grid.d_values.iter().enumerate() {
            let row = match grid.cell(i, j) {
                CellEntry::Done(outcome) => StabilityRow {
                    mu,
                    d,
                    scaling: Some(outcome.scaling),
                    class: match outcome.class {
                        CellClass::AllConverged => "all_converged",
                        CellClass::SometimesDivergent => "sometimes_divergent",
                        CellClass::AlwaysDivergent => "always_divergent",
                    },
                    divergence_fraction: Some(outcome.divergence_fraction),
                },
                CellEntry::Failed(_) => StabilityRow {
                    mu,
                    d,
                    scaling: None,
                    class: "failed",
                    divergence_fraction: None,
                },
            };
            table.rows.push(row);
        }
    }
    Ok((table, grid.n_failed()))
}

fn moments_table(cfg: &ExperimentConfig) -> Result<QuantityTable, CliError> {
    let system = cfg.system_model()?;
    let moments = noise_moments(&system.noise);
    Ok(QuantityTable {
        rows: vec![
            ("variance", moments.variance),
            ("fourth_moment", moments.fourth),
            ("sixth_moment", moments.sixth),
            ("snr_db", snr_db(&system.noise)),
        ],
    })
}

fn write_output<F>(path: &Path, write: F) -> Result<(), CliError>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> std::io::Result<()>,
{
    let file = fs::File::create(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let mut writer = BufWriter::new(file);
    write(&mut writer).and_then(|()| writer.flush()).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Run one experiment and write the table plus its manifest.
pub fn run_experiment(cfg: &ExperimentConfig, mode: Mode, out: &Path) -> Result<RunSummary, CliError> {
    if !mode.accepts(cfg.kind) {
        return Err(CliError::ModeMismatch { mode: mode.name(), kind: cfg.kind.name().to_string() });
    }

    let mut failed_cells = 0;
    let mut divergent = 0;
    let mut deviation = None;

    enum Payload {
        Curves(CurveTable),
        Stability(StabilityTable),
        Quantities(QuantityTable),
    }

    let payload = match mode {
        Mode::Moments => Payload::Quantities(moments_table(cfg)?),
        Mode::Stability => {
            let (table, failed) = stability_table(cfg)?;
            failed_cells = failed;
            Payload::Stability(table)
        }
        Mode::Simulate => {
            let sim = run_ensemble(&ensemble_config(cfg)?)?;
            divergent = sim.n_divergent;
            Payload::Curves(curve_table(cfg, mode, Some(&sim), None, None))
        }
        Mode::Model => {
            let theory = theory_curves(cfg)?;
            Payload::Curves(curve_table(cfg, mode, None, Some(&theory), None))
        }
        Mode::Compare => {
            let sim = run_ensemble(&ensemble_config(cfg)?)?;
            divergent = sim.n_divergent;
            let theory = theory_curves(cfg)?;
            let report = compare_model_vs_simulation(&sim, &theory, cfg.tail_window)?;
            deviation = Some(DeviationSummary {
                tail_window: report.tail.window,
                max_weight_deviation: report.tail.max_weight_deviation,
                max_emse_deviation_db: report.tail.max_emse_deviation_db,
            });
            Payload::Curves(curve_table(cfg, mode, Some(&sim), Some(&theory), Some(&report)))
        }
    };

    write_output(out, |w| match (&payload, cfg.format) {
        (Payload::Curves(t), OutputFormat::Csv) => t.write_csv(w),
        (Payload::Curves(t), OutputFormat::Json) => t.write_json(w),
        (Payload::Stability(t), OutputFormat::Csv) => t.write_csv(w),
        (Payload::Stability(t), OutputFormat::Json) => t.write_json(w),
        (Payload::Quantities(t), OutputFormat::Csv) => t.write_csv(w),
        (Payload::Quantities(t), OutputFormat::Json) => t.write_json(w),
    })?;

    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        mode: mode.name().to_string(),
        master_seed: cfg.master_seed,
        config: cfg.clone(),
    };
    let manifest_path = manifest_path_for(out);
    write_output(&manifest_path, |w| {
        serde_json::to_writer_pretty(&mut *w, &manifest)?;
        writeln!(w)
    })?;

    Ok(RunSummary {
        output_path: out.to_path_buf(),
        manifest_path,
        failed_cells,
        divergent_realizations: divergent,
        deviation,
    })
}
