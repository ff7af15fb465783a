//! Library surface of the experiment harness; the `exp-cli` binary is a thin
//! wrapper over these modules.

pub mod config;
pub mod report;
pub mod run;
pub mod sweep;
