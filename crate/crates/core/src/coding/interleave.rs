//! Pseudo-random bit interleaver between the encoder and the mapper.

use rand::seq::SliceRandom;

use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interleaver {
    perm: Vec<u32>,
}

impl Interleaver {
    /// Fixed permutation of length `n`; the same `n` always yields the same order.
    pub fn new(n: usize) -> Self {
        let mut perm: Vec<u32> = (0..n as u32).collect();
        let mut r = rng::stream(0x1_7E41_EA5E, &[n as u64]);
        perm.shuffle(&mut r);
        Self { perm }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// `out[i] = input[perm[i]]`.
    pub fn interleave<T: Copy>(&self, input: &[T]) -> Vec<T> {
        self.perm.iter().map(|&p| input[p as usize]).collect()
    }

    pub fn deinterleave<T: Copy + Default>(&self, input: &[T]) -> Vec<T> {
        let mut out = vec![T::default(); input.len()];
        for (i, &p) in self.perm.iter().enumerate() {
            out[p as usize] = input[i];
        }
        out
    }
}
