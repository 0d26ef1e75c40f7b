//! Monte-Carlo BMDR estimation.

use rand::Rng;

use crate::channel::{complex_gaussian, CVector, ChannelRealization};
use crate::detect::{DetectorSpec, PreparedDetector};
use crate::error::{Error, Result};
use crate::modem::{self, log2_posterior, DEFAULT_LLR_CLIP};

/// A BMDR value with its Monte-Carlo uncertainty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BmdrEstimate {
    /// In `[0, 1]`.
    pub value: f64,
    pub sample_count: usize,
    pub std_err: f64,
}

impl BmdrEstimate {
    pub fn exact(value: f64) -> Self {
        Self { value: value.clamp(0.0, 1.0), sample_count: 0, std_err: 0.0 }
    }
}

/// Running mean and variance.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn estimate(&self) -> BmdrEstimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        BmdrEstimate {
            value: self.mean.clamp(0.0, 1.0),
            sample_count: self.n,
            std_err: (var / self.n.max(1) as f64).sqrt(),
        }
    }
}

/// Per-sample BMDR term `1 + mean_j log2 q(b_j)` for the bits actually sent.
#[inline]
pub fn bmdr_sample(llrs: &[f64], bits: &[u8]) -> f64 {
    let s: f64 = llrs.iter().zip(bits).map(|(&l, &b)| log2_posterior(l, b)).sum();
    1.0 + s / llrs.len() as f64
}

/// Per-UE BMDR of a detector on one channel realization.
pub fn estimate_bmdr_mc<R: Rng + ?Sized>(
    detector: &DetectorSpec,
    h: &ChannelRealization,
    mods: &[u32],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<BmdrEstimate>> {
    let prepared = detector.prepare(h, mods)?;
    estimate_prepared(&prepared, h, mods, n_samples, rng)
}

/// As [`estimate_bmdr_mc`] with an already prepared detector.
pub fn estimate_prepared<R: Rng + ?Sized>(
    det: &PreparedDetector,
    h: &ChannelRealization,
    mods: &[u32],
    n_samples: usize,
    rng: &mut R,
) -> Result<Vec<BmdrEstimate>> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let n = h.n_streams();
    let n_r = h.n_r();
    let consts = h
        .per_ue
        .iter()
        .zip(mods)
        .flat_map(|(ue, &m)| std::iter::repeat_n(m, ue.n_t))
        .map(modem::constellation)
        .collect::<Result<Vec<_>>>()?;
    let mut bits = vec![0u8; det.total_bits()];
    let mut llrs = vec![0.0; det.total_bits()];
    let mut s = CVector::zeros(n);
    let mut moments = vec![Moments::default(); h.n_ues()];
    for _ in 0..n_samples {
        let mut off = 0;
        for (j, c) in consts.iter().enumerate() {
            let lab = rng.random_range(0..c.size());
            s[j] = c.point(lab);
            let m = c.order() as usize;
            for b in 0..m {
                bits[off + b] = c.label_bit(lab, b);
            }
            off += m;
        }
        let mut y = &h.h * &s;
        for i in 0..n_r {
            y[i] += complex_gaussian(1.0, rng);
        }
        det.detect_into(&y, &mut llrs);
        for (ue, mom) in moments.iter_mut().enumerate() {
            let r = det.ue_bits(ue);
            mom.push(bmdr_sample(&llrs[r.clone()], &bits[r]));
        }
    }
    Ok(moments.iter().map(Moments::estimate).collect())
}

/// BMDR of exact max-log demapping over SISO AWGN at linear SNR `snr`.
pub fn siso_bmdr_mc<R: Rng + ?Sized>(m: u32, snr: f64, n_samples: usize, rng: &mut R) -> Result<BmdrEstimate> {
    if n_samples == 0 {
        return Err(Error::invalid("n_samples must be at least 1"));
    }
    let c = modem::constellation(m)?;
    let var = if snr > 0.0 { 1.0 / snr } else { f64::INFINITY };
    let mut llrs = vec![0.0; m as usize];
    let mut bits = vec![0u8; m as usize];
    let mut mom = Moments::default();
    for _ in 0..n_samples {
        let lab = rng.random_range(0..c.size());
        for (j, b) in bits.iter_mut().enumerate() {
            *b = c.label_bit(lab, j);
        }
        if var.is_finite() {
            let y = c.point(lab) + complex_gaussian(var, rng);
            c.maxlog_llrs(y, snr, DEFAULT_LLR_CLIP, &mut llrs);
        } else {
            llrs.fill(0.0);
        }
        mom.push(bmdr_sample(&llrs, &bits));
    }
    Ok(mom.estimate())
}

/// Mean BMDR over a set of channel realizations.
pub fn bmdr_of_set(estimates: &[BmdrEstimate]) -> Result<BmdrEstimate> {
    if estimates.is_empty() {
        return Err(Error::invalid("cannot average an empty set"));
    }
    let n = estimates.len() as f64;
    let value = estimates.iter().map(|e| e.value).sum::<f64>() / n;
    let var = estimates.iter().map(|e| e.std_err * e.std_err).sum::<f64>() / (n * n);
    Ok(BmdrEstimate {
        value: value.clamp(0.0, 1.0),
        sample_count: estimates.iter().map(|e| e.sample_count).sum(),
        std_err: var.sqrt(),
    })
}

/// Mean of plain values.
pub fn mean_of(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("cannot average an empty set"));
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn uninformative_llrs_give_zero() {
        assert_eq!(bmdr_sample(&[0.0; 8], &[0, 1, 1, 0, 1, 0, 0, 1]), 0.0);
        let mut r = rng::stream(1, &[]);
        let e = siso_bmdr_mc(2, 0.0, 100, &mut r).unwrap();
        assert_eq!(e.value, 0.0);
    }

    #[test]
    fn set_mean() {
        let e = |v| BmdrEstimate::exact(v);
        assert_eq!(bmdr_of_set(&[e(0.3), e(0.3), e(0.3)]).unwrap().value, 0.3);
        assert!((bmdr_of_set(&[e(0.2), e(0.6)]).unwrap().value - 0.4).abs() < 1e-15);
        assert!(bmdr_of_set(&[]).is_err());
    }

    #[test]
    fn high_snr_saturates() {
        let mut r = rng::stream(2, &[]);
        let e = siso_bmdr_mc(2, 1e4, 2000, &mut r).unwrap();
        assert!(e.value >= 0.999);
    }
}
