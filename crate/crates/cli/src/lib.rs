//! Batch driver for the `traj-uncert` command.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod pipeline;
