//! Capacitated k-median: LP relaxations, rounding algorithms and the
//! supporting numerical engines.

pub mod basiclp;
pub mod cluster;
pub mod configlp;
pub mod error;
pub mod grouping;
pub mod instance;
pub mod lpsolve;
pub mod oracle;
pub mod round;
pub mod tol;

pub use error::{Error, FormatError, Result};
