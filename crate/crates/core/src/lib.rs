//! Zero range process condensation: exact canonical laws, dynamics and
//! asymptotic diagnostics.

pub mod analysis;
pub mod canonical;
pub mod dynamics;
pub mod ensemble;
pub mod error;
pub mod exec;
pub mod logconv;
pub mod rng;
pub mod series;
pub mod stats;

pub use error::{Result, ZrpError};
pub use exec::Exec;
