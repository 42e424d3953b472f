//! Classical Google PageRank and its Szegedy-quantized counterpart on small
//! directed graphs.
//!
//! The pipeline is: [`graph::Digraph`] → hyperlink / patched / Google matrix
//! ([`classical`]) → edge-space quantum walk ([`szegedy`]) → time series of
//! quantum page importances and their statistics ([`qrank`]).

pub mod classical;
pub mod error;
pub mod export;
pub mod graph;
pub mod qrank;
pub mod szegedy;
pub mod unitary;

pub use error::{Error, Result};
