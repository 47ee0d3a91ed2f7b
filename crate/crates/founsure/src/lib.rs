//! founsure: a fountain-code erasure coding toolkit.
//!
//! Files are sliced into stripes of `b*t` bytes, expanded by an inner array
//! LDPC precode to `k` data symbols, and encoded into `n` coding symbols by
//! XORing pseudo-randomly selected data symbols. Coding symbols are striped
//! across `s` failure domains (one output file per domain). Decoding runs a
//! peeling (belief propagation) pass over the surviving symbols, followed by
//! a second pass over the precode parity groups.
//!
//! The whole code graph is determined by a 64-bit seed recorded in the
//! metadata file, so any part of it can be regenerated without the original
//! data. On top of the graph, local recovery groups (check sets) are derived
//! and stored in a compact integer format; the repair engine consumes them to
//! rebuild lost chunks while reading far less than a full decode would.

pub mod checks;
pub mod cli;
pub mod codec;
pub mod error;
pub mod graph;
pub mod metadata;
pub mod params;
pub mod precode;
pub mod reliability;
pub mod repair;
pub mod rngdist;

pub use error::{Error, Result};
pub use params::{CodeInstance, CodeParams, PrecodeKind};
pub use rngdist::DistKind;
