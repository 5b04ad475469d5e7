//! Discrete logarithms modulo a prime and the distribution of their values.
//!
//! The crate is organised bottom-up:
//!
//! - [`numtheory`]: primality, factorisation, modular powers, primitive roots.
//! - [`dlog`]: discrete-log table, baby-step giant-step and Pollard rho.
//! - [`torus`]: arithmetic progressions, their log images on `[0, 1)` and
//!   exact interval / extreme discrepancy.
//! - [`expsum`]: Lagrangian resolvents (Gauss sums), progression phase sums,
//!   log-character sums and the identities tying them together.
//! - [`bounds`]: Erdős–Turán evaluation and empirical envelopes for the
//!   discrepancy and window-count estimates.
//! - [`experiments`]: union additivity, polynomial and multi-base twists,
//!   ordering statistics of logs.
//! - [`cli`]: the batch command-line frontend.

pub mod bounds;
pub mod cli;
pub mod dlog;
pub mod experiments;
pub mod expsum;
pub mod numtheory;
pub mod torus;

pub use dlog::DlogTable;
pub use numtheory::FieldCtx;
pub use torus::{Frac, Interval, Progression, TorusPoints};
