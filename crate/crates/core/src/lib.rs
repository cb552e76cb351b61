//! Ferromagnetic Potts and random-cluster dynamics on random regular multigraphs.
//!
//! Colours are 0-based in memory (`0..q`); files and CLI output use `1..=q`.
//! Colour 0 is the dominant colour of the ordered phase.

pub mod cli;
pub mod diag;
pub mod dsu;
pub mod error;
pub mod gibbs;
pub mod graph;
pub mod oracle;
pub mod phase;
pub mod planted;
pub mod rcdyn;
pub mod rng;
pub mod xfloat;

pub use error::{Error, Result};
pub use graph::{Ball, Multigraph};
pub use phase::PhaseProfile;
pub use rcdyn::{ChainState, EdgeConfig, RcParams};

/// Build version embedded in every output header.
pub const VERSION: &str = concat!("pottslab ", env!("CARGO_PKG_VERSION"));
