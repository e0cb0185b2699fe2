//! Dose-limited optical phase estimation.
//!
//! Computes the quantum Fisher information per unit dose (`xi`) of several
//! interferometric measurement schemes, simulates the multi-stage chain
//! interferometer exactly and to leading order in its beamsplitter
//! amplitudes, and optimizes the chain's beamsplitter schedule.
//!
//! - [`model`]: two-mode probe state, stage operators, loss budget.
//! - [`qfi`]: pure-state and loss-conditioned QFI, finite differences.
//! - [`chain`]: exact and perturbative chain interferometer.
//! - [`schemes`]: closed forms for every measurement family.
//! - [`optimizer`]: derivative-free search over beamsplitter schedules.
//! - [`figures`], [`sweep`], [`validate`]: data products behind the CLI.
//! - [`table`]: CSV and JSON output.

pub mod chain;
pub mod error;
pub mod figures;
pub mod model;
pub mod optimizer;
pub mod qfi;
pub mod schemes;
pub mod sweep;
pub mod table;
pub mod validate;

pub use error::{Error, Result};
pub use model::{LossBudget, PhaseConfig, ProbeState, TauSchedule};
pub use schemes::{EfficiencyReport, Family, SchemeSpec};
pub use table::{OutputFormat, Table};
