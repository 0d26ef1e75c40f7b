//! Gray-labelled square QAM and scalar max-log demapping.
//!
//! LLRs follow the convention `log(P[b=1] / P[b=0])` everywhere in the crate.
//! Labels are read MSB first: the upper `m/2` bits select the in-phase level
//! and the lower `m/2` bits the quadrature level, each through a reflected
//! Gray code.

use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Default LLR magnitude limit.
pub const DEFAULT_LLR_CLIP: f64 = 30.0;

/// A clipped bit log-likelihood ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitLlr {
    value: f64,
    clip_limit: f64,
}

impl BitLlr {
    pub fn new(value: f64, clip_limit: f64) -> Self {
        Self { value: clip(value, clip_limit), clip_limit }
    }

    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn clip_limit(&self) -> f64 {
        self.clip_limit
    }
}

#[inline]
pub fn clip(value: f64, limit: f64) -> f64 {
    if value.is_nan() {
        0.0
    } else {
        value.clamp(-limit, limit)
    }
}

/// Posterior probability of `observed_bit` given its LLR.
pub fn llr_to_posterior(l: BitLlr, observed_bit: u8) -> f64 {
    let x = if observed_bit == 1 { l.value } else { -l.value };
    logistic(x)
}

#[inline]
fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `log2 P[b = bit]` from an LLR, stable for large magnitudes.
#[inline]
pub fn log2_posterior(llr: f64, bit: u8) -> f64 {
    let x = if bit == 1 { llr } else { -llr };
    // log q = -softplus(-x)
    let sp = if x < 0.0 { -x + x.exp().ln_1p() } else { (-x).exp().ln_1p() };
    -sp * std::f64::consts::LOG2_E
}

/// Unit-energy square QAM with per-axis Gray labelling.
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    m: u32,
    /// Points indexed by label.
    points: Vec<Complex64>,
    /// PAM amplitudes in ascending order.
    levels: Vec<f64>,
    /// Gray label of each PAM level.
    level_labels: Vec<u32>,
}

/// Build the Gray-labelled unit-energy `2^m`-QAM constellation.
pub fn build_constellation(m: u32) -> Result<Constellation> {
    Constellation::new(m)
}

/// Shared instance of the `2^m`-QAM constellation.
pub fn constellation(m: u32) -> Result<&'static Constellation> {
    static CACHE: OnceLock<[Constellation; 4]> = OnceLock::new();
    let all = CACHE.get_or_init(|| [2, 4, 6, 8].map(|m| Constellation::new(m).expect("supported order")));
    match m {
        2 | 4 | 6 | 8 => Ok(&all[(m / 2 - 1) as usize]),
        _ => Constellation::new(m).map(|_| unreachable!()),
    }
}

impl Constellation {
    pub fn new(m: u32) -> Result<Self> {
        if !matches!(m, 2 | 4 | 6 | 8) {
            return Err(Error::invalid(format!("modulation order must be one of 2, 4, 6, 8 (got {m})")));
        }
        let half = m / 2;
        let l = 1usize << half;
        let norm = (2.0 * ((l * l - 1) as f64) / 3.0).sqrt();
        let levels: Vec<f64> = (0..l).map(|i| (2.0 * i as f64 - (l as f64 - 1.0)) / norm).collect();
        let level_labels: Vec<u32> = (0..l as u32).map(|i| i ^ (i >> 1)).collect();
        let mut level_of_label = vec![0usize; l];
        for (lev, &lab) in level_labels.iter().enumerate() {
            level_of_label[lab as usize] = lev;
        }
        let mask = (1u32 << half) - 1;
        let points = (0..1u32 << m)
            .map(|label| {
                let i = level_of_label[(label >> half) as usize];
                let q = level_of_label[(label & mask) as usize];
                Complex64::new(levels[i], levels[q])
            })
            .collect();
        Ok(Self { m, points, levels, level_labels })
    }

    /// Bits per symbol.
    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Constellation points indexed by their label.
    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn point(&self, label: usize) -> Complex64 {
        self.points[label]
    }

    /// Bit `j` (MSB first) of a label.
    #[inline]
    pub fn label_bit(&self, label: usize, j: usize) -> u8 {
        ((label >> (self.m as usize - 1 - j)) & 1) as u8
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn level_labels(&self) -> &[u32] {
        &self.level_labels
    }

    /// Label of the point nearest to `y`.
    pub fn nearest(&self, y: Complex64) -> usize {
        let half = self.m / 2;
        let axis = |v: f64| -> u32 {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (i, &a) in self.levels.iter().enumerate() {
                let d = (v - a) * (v - a);
                if d < best_d {
                    best_d = d;
                    best = i;
                }
            }
            self.level_labels[best]
        };
        ((axis(y.re) << half) | axis(y.im)) as usize
    }

    /// Max-log LLRs of one symbol observed as `y = x + w`, `w ~ CN(0, 1/precision)`.
    ///
    /// Writes `m` clipped values into `out`.
    pub fn maxlog_llrs(&self, y: Complex64, precision: f64, clip_limit: f64, out: &mut [f64]) {
        let half = (self.m / 2) as usize;
        self.axis_llrs(y.re, precision, clip_limit, &mut out[..half]);
        self.axis_llrs(y.im, precision, clip_limit, &mut out[half..self.m as usize]);
    }

    fn axis_llrs(&self, v: f64, precision: f64, clip_limit: f64, out: &mut [f64]) {
        let half = out.len();
        let mut min0 = [f64::INFINITY; 4];
        let mut min1 = [f64::INFINITY; 4];
        for (&a, &lab) in self.levels.iter().zip(&self.level_labels) {
            let d = (v - a) * (v - a);
            for j in 0..half {
                if (lab >> (half - 1 - j)) & 1 == 1 {
                    if d < min1[j] {
                        min1[j] = d;
                    }
                } else if d < min0[j] {
                    min0[j] = d;
                }
            }
        }
        for j in 0..half {
            out[j] = clip(precision * (min0[j] - min1[j]), clip_limit);
        }
    }
}

/// Map a bit string onto symbols, `m` bits per symbol.
pub fn map_bits(bits: &[u8], c: &Constellation) -> Result<Vec<Complex64>> {
    let m = c.order() as usize;
    if !bits.len().is_multiple_of(m) {
        return Err(Error::invalid(format!("bit string length {} is not a multiple of m={m}", bits.len())));
    }
    Ok(bits
        .chunks_exact(m)
        .map(|chunk| {
            let label = chunk.iter().fold(0usize, |acc, &b| (acc << 1) | (b & 1) as usize);
            c.point(label)
        })
        .collect())
}

/// Exact (nearest-point) demapping back to bits.
pub fn demap_hard(symbols: &[Complex64], c: &Constellation) -> Vec<u8> {
    let m = c.order() as usize;
    let mut out = Vec::with_capacity(symbols.len() * m);
    for &s in symbols {
        let label = c.nearest(s);
        out.extend((0..m).map(|j| c.label_bit(label, j)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn qpsk_points() {
        let c = build_constellation(2).unwrap();
        let r = 1.0 / 2f64.sqrt();
        for p in c.points() {
            assert!((p.re.abs() - r).abs() < 1e-15);
            assert!((p.im.abs() - r).abs() < 1e-15);
        }
        // 00 is a well-defined point
        let s = map_bits(&[0, 0], &c).unwrap();
        assert_eq!(s[0], c.point(0));
    }

    #[test]
    fn qam16_coordinates() {
        let c = build_constellation(4).unwrap();
        let scale = 10f64.sqrt();
        for p in c.points() {
            for v in [p.re * scale, p.im * scale] {
                let r = v.round();
                assert!((v - r).abs() < 1e-12);
                assert!([-3.0, -1.0, 1.0, 3.0].contains(&r));
            }
        }
    }

    #[test]
    fn invalid_orders() {
        for m in [0, 1, 3, 5, 10] {
            assert!(matches!(build_constellation(m), Err(Error::InvalidArgument(_))));
        }
        let c = build_constellation(4).unwrap();
        assert!(map_bits(&[0; 6], &c).is_err());
    }

    #[test]
    fn unit_energy_and_gray() {
        for m in [2, 4, 6, 8] {
            let c = build_constellation(m).unwrap();
            let e: f64 = c.points().iter().map(|p| p.norm_sqr()).sum::<f64>() / c.size() as f64;
            assert!((e - 1.0).abs() < 1e-12, "m={m} energy {e}");
            let step = c.levels()[1] - c.levels()[0];
            let mut labels: Vec<usize> = (0..c.size()).collect();
            labels.sort_by(|&a, &b| {
                let (pa, pb) = (c.point(a), c.point(b));
                (pa.re, pa.im).partial_cmp(&(pb.re, pb.im)).unwrap()
            });
            for a in 0..c.size() {
                for b in 0..c.size() {
                    let d = c.point(a) - c.point(b);
                    let adjacent = (d.re.abs() - step).abs() < 1e-9 && d.im.abs() < 1e-9
                        || (d.im.abs() - step).abs() < 1e-9 && d.re.abs() < 1e-9;
                    if adjacent {
                        assert_eq!((a ^ b).count_ones(), 1, "m={m} labels {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn posterior_examples() {
        let l = BitLlr::new(0.0, DEFAULT_LLR_CLIP);
        assert_eq!(llr_to_posterior(l, 1), 0.5);
        let l = BitLlr::new(f64::INFINITY, 30.0);
        assert_eq!(l.value(), 30.0);
        assert!(llr_to_posterior(l, 1) >= 1.0 - 1e-13);
        let l = BitLlr::new(2.0, 30.0);
        let expected = 1.0 / (1.0 + 2f64.exp());
        assert!((llr_to_posterior(l, 0) - expected).abs() < 1e-15);
        assert!((expected - 0.11920).abs() < 1e-5);
    }

    #[test]
    fn log2_posterior_matches_direct() {
        for &v in &[-30.0, -3.0, -0.1, 0.0, 0.7, 5.0, 30.0] {
            for bit in [0u8, 1] {
                let direct = llr_to_posterior(BitLlr::new(v, 30.0), bit).log2();
                assert!((log2_posterior(v, bit) - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn maxlog_matches_enumeration() {
        let c = build_constellation(6).unwrap();
        let y = Complex64::new(0.31, -0.77);
        let prec = 3.7;
        let mut fast = [0.0; 6];
        c.maxlog_llrs(y, prec, 1e9, &mut fast);
        for (j, &f) in fast.iter().enumerate() {
            let mut d = [f64::INFINITY; 2];
            for lab in 0..c.size() {
                let b = c.label_bit(lab, j) as usize;
                d[b] = d[b].min((y - c.point(lab)).norm_sqr());
            }
            assert!((f - prec * (d[0] - d[1])).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn posteriors_sum_to_one(v in -30.0f64..30.0) {
            let l = BitLlr::new(v, 30.0);
            let s = llr_to_posterior(l, 0) + llr_to_posterior(l, 1);
            prop_assert!((s - 1.0).abs() <= 2.0 * f64::EPSILON);
        }

        #[test]
        fn map_demap_round_trip(m in prop::sample::select(vec![2u32, 4, 6, 8]), seed in any::<u64>()) {
            let c = build_constellation(m).unwrap();
            let n = m as usize * 16;
            let bits: Vec<u8> = (0..n).map(|i| ((seed >> (i % 64)) ^ (i as u64 / 64)) as u8 & 1).collect();
            let syms = map_bits(&bits, &c).unwrap();
            prop_assert_eq!(demap_hard(&syms, &c), bits);
        }
    }
}
