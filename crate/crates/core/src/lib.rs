//! Exact and numerical tools for 2-spin systems on bipartite multigraphs:
//! partition functions, tree phase diagrams, moment exponents, gadgets and
//! the reductions built from them.

pub mod error;
pub mod exact;
pub mod gadgets;
pub mod graph;
pub mod logvalue;
pub mod moments;
pub mod network;
pub mod params;
pub mod phase;
pub mod reductions;

pub use error::{Result, SpinError};
pub use logvalue::LogValue;
pub use params::SpinParams;
