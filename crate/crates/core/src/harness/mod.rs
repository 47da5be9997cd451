//! Experiment orchestration: `(|Z|, c)` sweeps over repeated trials, error
//! summaries with a bias-variance split, and CSV outputs.

mod config;
mod summary;
mod sweep;
mod trial;

pub use config::{AbstractionSettings, SweepConfig};
pub use summary::{
    heatmaps, read_csv, read_csv_file, select_star, summarize, write_csv, write_csv_file, Heatmap, Selection, SummaryRow, FAILURE_COLUMNS,
    SELECTION_COLUMNS, SUMMARY_COLUMNS, TRIAL_COLUMNS,
};
pub use sweep::{run_sweep, write_atomic, write_reports, SweepOutcome};
pub use trial::{compute_truth, Cell, Experiment, Failure, JobOutput, TrialResult, Truth};
