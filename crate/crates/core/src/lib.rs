//! Classical reference tooling for a quantum collision-coalescence algorithm:
//! exact master-equation evolution, probability-division simulation,
//! bit-exact fixed-point emulation, piecewise arcsine fitting and
//! fault-tolerant resource estimation.

pub mod arcsine;
pub mod cli;
pub mod config;
pub mod ddouble;
pub mod division;
pub mod error;
pub mod export;
pub mod fixedpoint;
pub mod golden;
pub mod master;
pub mod presets;
pub mod resource;
pub mod state_space;

pub use error::{Error, Result};
