//! Dense GF(2) rows packed into `u64` words.

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct BitRow {
    words: Vec<u64>,
}

impl BitRow {
    pub fn zeros(bits: usize) -> Self {
        Self { words: vec![0; bits.div_ceil(64)] }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut r = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                r.set(i);
            }
        }
        r
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitRow) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    /// Parity of `self AND other`.
    #[inline]
    pub fn dot(&self, other: &BitRow) -> u8 {
        let mut acc = 0u64;
        for (a, b) in self.words.iter().zip(&other.words) {
            acc ^= a & b;
        }
        (acc.count_ones() & 1) as u8
    }
}

/// Reduced row echelon form over GF(2).
///
/// Pivots are searched from the last column backwards so that, for parity
/// checks whose right-hand block is invertible, the free columns are the
/// leading ones.
pub(crate) struct Rref {
    pub rows: Vec<BitRow>,
    pub pivot_cols: Vec<usize>,
}

pub(crate) fn rref(mut rows: Vec<BitRow>, ncols: usize) -> Rref {
    let mut rank = 0;
    let mut pivot_cols = Vec::new();
    for col in (0..ncols).rev() {
        if rank == rows.len() {
            break;
        }
        let Some(p) = (rank..rows.len()).find(|&r| rows[r].get(col)) else {
            continue;
        };
        rows.swap(rank, p);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row.get(col) {
                row.xor_assign(&pivot);
            }
        }
        pivot_cols.push(col);
        rank += 1;
    }
    rows.truncate(rank);
    Rref { rows, pivot_cols }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_small_matrix() {
        let rows =
            vec![BitRow::from_bits(&[1, 1, 0, 1]), BitRow::from_bits(&[0, 1, 1, 0]), BitRow::from_bits(&[1, 0, 1, 1])];
        let r = rref(rows, 4);
        // third row is the sum of the first two
        assert_eq!(r.pivot_cols.len(), 2);
        assert_eq!(r.pivot_cols[0], 3);
    }
}
