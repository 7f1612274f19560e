//! Experiment harness for `pairgossip`: configuration files, dataset loading and
//! synthesis, seeded multi-trial runs and CSV reporting. The `pg` binary exposes
//! it on the command line.

// NaN-rejecting `!(x > 0)` guards and index loops over coupled arrays are deliberate.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod config;
pub mod data;
pub mod error;
pub mod experiment;
pub mod report;

pub use config::{ConfigFile, ExperimentConfig};
pub use data::{load_csv, synth_mixture, CsvOptions, DataSource, LabelMap, SyntheticMixtureSpec};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, run_sweep, ObjectiveKind, OptimizerMode, Problem, SpectralReport};
