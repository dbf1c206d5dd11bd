//! Simulation and analysis of electromagnetic (traveling-wave) and
//! electromechanical (swing-equation) transients on small grid models.
//!
//! - [`model`]: network, per-unit bases, builders and disturbances
//! - [`swing`]: classical swing-equation engine
//! - [`emt`]: nodal EMT engine with Bergeron lines
//! - [`hybrid`]: co-simulation driving EMT sources from the swing equations
//! - [`analysis`]: arrival detection, speed fits, theory and sweeps
//! - [`locate`]: least-squares event location from arrival times

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analysis;
pub mod emt;
pub mod error;
pub mod hybrid;
pub mod locate;
pub mod model;
pub mod ode;
pub mod series;
pub mod swing;

pub use error::{Engine, Error, Result};
