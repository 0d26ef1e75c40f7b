//! 24-bit CRC over bit strings (generator 0x864CFB, zero initial value).

pub const CRC24_POLY: u32 = 0x86_4CFB;
pub const CRC24_BITS: usize = 24;

/// CRC-24 remainder of a bit string, MSB first.
pub fn crc24(bits: &[u8]) -> u32 {
    let mut reg: u32 = 0;
    for &b in bits {
        let top = ((reg >> 23) & 1) ^ (b as u32 & 1);
        reg = (reg << 1) & 0xFF_FFFF;
        if top == 1 {
            reg ^= CRC24_POLY;
        }
    }
    reg
}

/// Append the 24 CRC bits.
pub fn attach_crc(bits: &[u8]) -> Vec<u8> {
    let c = crc24(bits);
    let mut out = Vec::with_capacity(bits.len() + CRC24_BITS);
    out.extend_from_slice(bits);
    out.extend((0..CRC24_BITS).rev().map(|i| ((c >> i) & 1) as u8));
    out
}

/// True if the trailing 24 bits match the CRC of the leading ones.
pub fn check_crc(bits: &[u8]) -> bool {
    bits.len() >= CRC24_BITS && crc24(bits) == 0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bytes_to_bits(data: &[u8]) -> Vec<u8> {
        data.iter().flat_map(|&byte| (0..8).rev().map(move |i| (byte >> i) & 1)).collect()
    }

    #[test]
    fn known_remainder() {
        // bitwise long division against a byte-wise table-free reference
        let data = b"123456789";
        let mut reg: u32 = 0;
        for &byte in data {
            reg ^= (byte as u32) << 16;
            for _ in 0..8 {
                reg <<= 1;
                if reg & 0x100_0000 != 0 {
                    reg ^= 0x186_4CFB;
                }
            }
        }
        assert_eq!(crc24(&bytes_to_bits(data)), reg & 0xFF_FFFF);
    }

    #[test]
    fn attach_then_check() {
        let bits = bytes_to_bits(b"payload bits");
        let mut framed = attach_crc(&bits);
        assert!(check_crc(&framed));
        framed[5] ^= 1;
        assert!(!check_crc(&framed));
        assert!(!check_crc(&[1, 0, 1]));
    }
}
