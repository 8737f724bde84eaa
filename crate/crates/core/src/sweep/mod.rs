//! Power sweeps over `(d, q)` grids.

mod config;
mod output;
mod runner;

pub use config::SweepConfig;
pub use output::{
    csv_string, read_csv, sidecar_path, write_csv, write_outputs, Sidecar, SweepResult, SweepRow, Timings, CSV_HEADER,
};
pub use runner::{run_sweep, run_sweep_with};
