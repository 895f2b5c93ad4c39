//! Parallel drivers, file formats, acceptance suites and the `trendlab`
//! command line for the random-trend diffusion model.
//!
//! The model itself (parameters, theory, simulation kernel, exact law and
//! statistics) lives in `trendlab_core`; this crate adds what needs `std`.

pub mod cli;
pub mod config;
pub mod engine;
pub mod error;
pub mod output;
pub mod report;
pub mod verify;

pub use trendlab_core as core;
