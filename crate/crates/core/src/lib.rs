//! Non-autonomous parabolic bifurcation: compositions of `z/(1-z) + eps_k^2`,
//! the Chebyshev-type recurrences behind them, and the planar toy map.

pub mod error;
pub mod experiments;
pub mod moebius;
pub mod planar;
pub mod real;
pub mod recurrences;
pub mod sequences;
pub mod summation;

pub use error::{Error, Result};
pub use moebius::{GridSpec, MoebiusMap};
pub use real::{Ext, Precision, Real};
pub use sequences::{EpsilonSequence, Family};
