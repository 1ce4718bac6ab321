//! Experiment orchestration for `squeezesim-core`: spec parsing, parallel
//! ensembles, CSV export.

pub mod ensemble;
pub mod error;
pub mod output;
pub mod run;
pub mod spec;

pub use error::LabError;
pub use output::{render_csv, write_atomic, ResultRecord};
pub use run::run;
pub use spec::{parse_spec, Experiment, ExperimentSpec};
