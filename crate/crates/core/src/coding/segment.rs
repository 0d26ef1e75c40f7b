//! Transport-block segmentation into CRC-protected code blocks.

use super::crc::{attach_crc, check_crc};
use crate::error::{Error, Result};

/// Segmentation of one transport block.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentLayout {
    pub payload_bits: usize,
    pub num_blocks: usize,
    /// Bits per code block, CRC included.
    pub block_bits: usize,
    pub crc_bits: usize,
    /// Zero bits appended to the payload before splitting.
    pub padding_bits: usize,
}

impl SegmentLayout {
    pub fn block_payload_bits(&self) -> usize {
        self.block_bits - self.crc_bits
    }
}

/// Split `payload_bits` into near-equal code blocks of at most `max_cb_bits`.
pub fn segment(payload_bits: usize, max_cb_bits: usize, crc_bits: usize) -> Result<SegmentLayout> {
    if payload_bits == 0 {
        return Err(Error::invalid("transport block payload must be positive"));
    }
    if max_cb_bits <= crc_bits {
        return Err(Error::invalid(format!("code block size {max_cb_bits} must exceed CRC length {crc_bits}")));
    }
    let num_blocks = payload_bits.div_ceil(max_cb_bits - crc_bits);
    let per_block = payload_bits.div_ceil(num_blocks);
    Ok(SegmentLayout {
        payload_bits,
        num_blocks,
        block_bits: per_block + crc_bits,
        crc_bits,
        padding_bits: per_block * num_blocks - payload_bits,
    })
}

/// A transport block split into CRC-protected code blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TransportBlock {
    pub tb_index: usize,
    pub layout: SegmentLayout,
    pub code_blocks: Vec<Vec<u8>>,
}

impl TransportBlock {
    /// Segment `payload`, zero-pad the tail and attach a CRC to each block.
    ///
    /// Only the 24-bit CRC is supported for framing.
    pub fn build(tb_index: usize, payload: &[u8], max_cb_bits: usize) -> Result<Self> {
        let layout = segment(payload.len(), max_cb_bits, super::crc::CRC24_BITS)?;
        let per = layout.block_payload_bits();
        let mut padded = payload.to_vec();
        padded.resize(per * layout.num_blocks, 0);
        let code_blocks = padded.chunks(per).map(attach_crc).collect();
        Ok(Self { tb_index, layout, code_blocks })
    }

    /// Recover the payload; fails if any block's CRC does not check.
    pub fn reassemble(layout: &SegmentLayout, blocks: &[Vec<u8>]) -> Result<Vec<u8>> {
        if blocks.len() != layout.num_blocks {
            return Err(Error::invalid(format!("expected {} code blocks, got {}", layout.num_blocks, blocks.len())));
        }
        let mut out = Vec::with_capacity(layout.payload_bits + layout.padding_bits);
        for (l, b) in blocks.iter().enumerate() {
            if b.len() != layout.block_bits || !check_crc(b) {
                return Err(Error::invalid(format!("code block {l} failed its CRC")));
            }
            out.extend_from_slice(&b[..layout.block_payload_bits()]);
        }
        out.truncate(layout.payload_bits);
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_examples() {
        let s = segment(1000, 1024, 24).unwrap();
        assert_eq!((s.num_blocks, s.block_bits, s.padding_bits), (1, 1024, 0));
        let s = segment(2010, 1024, 24).unwrap();
        assert_eq!(s.num_blocks, 3);
        assert_eq!(s.block_bits, 670 + 24);
        assert_eq!(s.padding_bits, 0);
        let s = segment(2011, 1024, 24).unwrap();
        assert_eq!((s.num_blocks, s.padding_bits), (3, 2));
        assert!(segment(0, 1024, 24).is_err());
        assert!(segment(10, 24, 24).is_err());
    }

    #[test]
    fn reassembly_is_inverse() {
        let payload: Vec<u8> = (0..2011).map(|i| ((i * 7 + i / 3) % 2) as u8).collect();
        let tb = TransportBlock::build(0, &payload, 1024).unwrap();
        assert_eq!(tb.code_blocks.len(), 3);
        assert_eq!(TransportBlock::reassemble(&tb.layout, &tb.code_blocks).unwrap(), payload);
        let mut bad = tb.code_blocks.clone();
        bad[1][3] ^= 1;
        assert!(TransportBlock::reassemble(&tb.layout, &bad).is_err());
    }
}
