//! Manufactured-solution studies: case catalog, sweep configuration,
//! execution, CSV/JSON output and plot scripts.

pub mod cases;
pub mod config;
pub mod plots;
pub mod run;

pub use cases::{build_case, list_cases, CaseInfo};
pub use config::StudyConfig;
pub use run::{csv_header, run_single, run_study, RunRecord, StudyOutput, CSV_HEADER};
