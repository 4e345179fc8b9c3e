//! Numerical toolkit for conditioned correlation measures of finite-dimensional
//! quantum states: entropic functionals, extension-ansatz upper bounds on the
//! conditional entanglement of mutual information and squashed entanglement,
//! partial-state-merging flow accounting, and seeded verification suites.

pub mod cli;
pub mod conditioning;
pub mod entropy;
pub mod error;
pub mod io;
pub mod kraus;
pub mod layout;
pub mod linalg;
pub mod merging;
pub mod optimize;
pub mod random;
pub mod state;
pub mod verify;

pub use error::{Error, Result};
