//! Config-driven experiment runner: JSON in, CSV out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;

pub use config::{ExperimentConfig, InitialState, InteractionSpec, Method, NamedObservable, ObservableSpec};
pub use error::CliError;
pub use experiment::{kernel_norms, run, Table};
pub use presets::{reproduce, Figure};
