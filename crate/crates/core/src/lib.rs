//! Finite-alphabet rate–distortion–perception toolkit.
//!
//! * [`probcore`]: distributions, channels, information measures and the
//!   constraint functionals that define a rate function.
//! * [`irf`]: the rate function `R(θ)` as a convex program, with a grid
//!   oracle for small alphabets.
//! * [`pfr`]: one-shot channel simulation with the Poisson functional
//!   representation.
//! * [`bitcode`]: Elias-delta index coding and the `RDPC` container.
//! * [`blockcode`]: the same code applied to i.i.d. blocks.
//! * [`harness`]: experiment configs, verification reports and the CLI
//!   commands.

pub mod bitcode;
pub mod blockcode;
pub mod error;
pub mod harness;
pub mod irf;
pub mod pfr;
pub mod probcore;

pub use error::{Error, Result};
