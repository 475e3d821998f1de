//! N-qudit Bell-type inequalities that separate full N-particle entanglement
//! from partially entangled states.
//!
//! The crate is organised around five pieces:
//!
//! - [`scenario`]: the two-setting, `d`-outcome scenario, the coefficient
//!   functions and evaluation of the Bell functional on probability tables.
//! - [`quantum`]: dense density matrices, multiport-beamsplitter measurements
//!   and joint probabilities (dense path plus a GHZ closed form).
//! - [`bounds`]: exhaustive certification of the hybrid local-nonlocal bound
//!   `2^{N-1}` and of the fully local bound, plus the quadruple grouping used
//!   to reduce the N-party functional to two-party CGLMP instances.
//! - [`optimize`]: closed-form maxima, violation ratio, critical visibility
//!   and a derivative-free phase search.
//! - [`cli`]: the `qudit-bell` command-line front end.

pub mod bounds;
pub mod cli;
mod error;
pub mod optimize;
pub mod quantum;
pub mod scenario;

pub use error::{Error, Result};
pub use scenario::{BellScenario, JointProbabilityTable, OutcomeTuple, SettingString};
