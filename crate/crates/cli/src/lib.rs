//! Command-line front end: sampling, running, rendering and checking
//! allocations.

pub mod allocfile;
pub mod args;
pub mod commands;
pub mod error;
pub mod render;
