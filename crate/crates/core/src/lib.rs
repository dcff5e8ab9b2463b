//! Lattice-code multiple access (LCMA) uplink simulation.
//!
//! Users encode with a common ring code over Z_q and map to q-PAM. The
//! receiver computes integer linear combinations of the users' messages,
//! decodes each combination with a single-user q-ary decoder and inverts the
//! coefficient matrix over Z_q, optionally over several cancellation stages.

pub mod channel;
pub mod code;
pub mod coeff;
pub mod error;
pub mod lf;
pub mod lpnc;
pub mod rates;
pub mod receiver;
pub mod seed;
pub mod sim;
pub mod zq;

pub use error::{LcmaError, Result};
