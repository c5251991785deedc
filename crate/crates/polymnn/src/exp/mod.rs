//! The experiment harness: parse a config, run it, and write reports.
//!
//! ```no_run
//! use polymnn::exp::{self, ExperimentConfig};
//!
//! let config = ExperimentConfig::parse("experiment = poly\nmodels = pdc\n")?;
//! let report = exp::run(&config)?;
//! exp::emit_report(&report, std::path::Path::new("runs/poly"))?;
//! # Ok::<(), polymnn::Error>(())
//! ```

pub mod config;
pub mod report;
pub mod runner;

pub use config::{list_targets, ConfigSnapshot, ExperimentConfig, ExperimentKind, ModelKind, Scale};
pub use report::{
    cells_csv, compare_steps_vs_lag, emit_plots, emit_report, poly_box_csv, sir_cells_csv,
    steps_vs_lag_csv, synth_cells_csv, CellReport, ReportBody, RunReport, StepsVsLagRow,
    TimingEntry,
};
pub use runner::run;
