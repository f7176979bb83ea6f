//! Desk-scale experiment setup and the sweeps behind the bench tables.
//!
//! Every CSV row is computed by calling the `sgd`, `proof` and `verify`
//! operations directly; nothing here adds formulas of its own.

mod desk;
mod suites;
mod table;

pub use desk::{Desk, DeskConfig};
pub use suites::{
    cost_curve, default_k_grid, first_failing_steps, k_sweep, ks_steps, lr_sweep,
    mean_normalized, storage_curve, CostRow, KsStepRow, ReproRow, StorageRow,
};
pub use table::{to_csv_string, write_csv, CsvRow};
