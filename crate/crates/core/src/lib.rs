//! Degenerate fourth-order operators with Wentzell boundary conditions on
//! `[0, 1]`: coefficients, a C1 Hermite discretization, assembled energy forms,
//! time stepping, and reference checks.

pub mod banded;
pub mod cli;
pub mod coefficient;
pub mod config;
pub mod discretization;
pub mod error;
pub mod evolution;
pub mod forms;
pub mod oracle;

pub use error::{Error, Result};
