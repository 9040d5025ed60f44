//! Stability bound, MAP EXIT functions and iterative-decoding thresholds of
//! doubly-generalized LDPC code ensembles over the binary erasure channel.

pub mod cache;
pub mod codebook;
pub mod engine;
pub mod ensemble;
pub mod error;
pub mod evolve;
pub mod exitfn;
pub mod gf2;
pub mod montecarlo;
pub mod par;
pub mod reproduce;
pub mod subsets;

pub use codebook::{CodeKind, ComponentCode, InfoFunctions, Polynomial, SplitInfoFunctions, Weight2Spectrum};
pub use engine::{Settings, ThresholdReport};
pub use ensemble::{CodeRegistry, Ensemble, NodeType, StabilityBound};
pub use error::{Error, Result};
pub use exitfn::{CnExit, VnExit};
pub use gf2::{ColumnSubset, Gf2Matrix};
pub use montecarlo::{mc_exit, McEstimate, Role};
pub use par::Exec;
