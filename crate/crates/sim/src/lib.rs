//! Desk-scale experiment driver for user-centric network precoding.
//!
//! * [`spec`]: flat `key = value` experiment files.
//! * [`experiment`]: Monte-Carlo sweeps over transmit power, cluster size and
//!   method, written as CSV.
//! * [`report`]: trend summaries of a results CSV.
//! * [`channel_io`]: textual channel dump/load.

pub mod channel_io;
pub mod error;
pub mod experiment;
pub mod report;
pub mod spec;

pub use error::{SimError, SimResult};
pub use experiment::{
    run_cell, run_cells, run_experiment, run_seeded_cell, trial_seed, CellOutcome, CellResult, Method, ResultRow,
    StdClock,
};
pub use report::{report_trends, TrendReport};
pub use spec::ExperimentSpec;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}
