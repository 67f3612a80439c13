//! Exact open-system dynamics of a system colliding sequentially with the
//! particles of a correlated environment given as a matrix product state.
//!
//! The building blocks are layered:
//!
//! * [`linalg`] and [`superop`]: dense complex matrices, partial traces and
//!   superoperator matrices.
//! * [`mps`]: right-canonical environments, bond-state free evolution and
//!   reduced densities.
//! * [`embedding`]: the system-bond recurrence with per-collision Kraus maps.
//! * [`master`]: exact discrete memory kernels, their second-order
//!   approximation and the stroboscopic generator.
//! * [`models`]: case-study environments, interactions and closed forms.
//! * [`oracle`]: a brute-force state-vector reference for small chains.

// `!(x > 0.0)` is used deliberately so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop, clippy::len_without_is_empty)]

pub mod embedding;
pub mod error;
pub mod json;
pub mod linalg;
pub mod master;
pub mod models;
pub mod mps;
pub mod oracle;
pub mod superop;

pub use embedding::{CollisionModel, Interaction, SystemBondState};
pub use error::{Error, Result};
pub use linalg::{c64, CMatrix, CVector, MultiIndexOperator, Tolerances, C64};
pub use master::{KernelTable, StroboscopicGenerator, StroboscopicOptions};
pub use models::{CaseInteraction, ModelName, ModelParameters, ModelSpec};
pub use mps::{BondState, MpsEnvironment, RawMps, SiteTensor, TransferSpectrum};
pub use oracle::OracleRun;
pub use superop::Superoperator;
