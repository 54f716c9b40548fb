//! File formats, configuration, experiment runners and command plumbing for
//! the `levelgen` binary.

pub mod config;
pub mod experiments;
pub mod export;
pub mod level_file;
pub mod presets;
pub mod tree_file;
