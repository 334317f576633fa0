//! Command-line harness for `cnd-core`: config and file formats, method
//! dispatch and the seeded Monte Carlo experiments.

pub mod config;
pub mod error;
pub mod io;
pub mod methods;
pub mod seed;
pub mod simulate;

pub use config::{ConfigOverrides, Experiment, SimConfig};
pub use error::{Result, SimError};
pub use methods::{MethodSpec, Runner};
pub use simulate::{run, run_power, run_pvalue_ecdf, run_type1, Manifest, Table};
