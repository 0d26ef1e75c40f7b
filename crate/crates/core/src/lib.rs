//! Bit-metric decoding rate link adaptation and PHY abstraction for MU-MIMO uplinks.

// NaN-rejecting comparisons are written as negated checks throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod abstraction;
pub mod bmdr;
pub mod channel;
pub mod coding;
pub mod detect;
pub mod error;
pub mod harness;
pub mod linkadapt;
pub mod modem;
pub mod rng;

pub use error::{Error, Result};
