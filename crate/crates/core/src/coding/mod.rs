//! Channel coding: LDPC codes, CRC framing and segmentation.

pub mod crc;
mod gf2;
pub mod interleave;
pub mod ldpc;
pub mod segment;

pub use crc::{attach_crc, check_crc, crc24, CRC24_BITS};
pub use interleave::Interleaver;
pub use ldpc::{CodeSpec, DecodeOutput, DEFAULT_MAX_ITERS, DEFAULT_MIN_SUM_SCALE};
pub use segment::{segment, SegmentLayout, TransportBlock};
