//! File formats, reports and the command-line driver for `qce-core`.
//!
//! * [`json`]: canonical JSON rendering (sorted keys, fixed float format);
//! * [`formats`]: circuit, bubble, decomposition and scenario-spec files;
//! * [`reports`]: JSON views of analysis results;
//! * [`cli`]: the `qce` command.
#![forbid(unsafe_code)]

pub mod cli;
pub mod formats;
pub mod json;
pub mod reports;
