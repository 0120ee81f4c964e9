//! Command-line driver, file formats and multi-threaded execution on top of
//! [`soak_core`].

pub mod cli;
pub mod config;
pub mod engine;
pub mod output;

pub use soak_core;
