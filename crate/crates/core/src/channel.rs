//! Synthetic MU-MIMO uplink channels, noise whitening and power control.
//!
//! Powers are expressed relative to the thermal noise per receive antenna, so
//! after whitening with `K_n = I` a UE with power `rho` sees a per-antenna SNR
//! of `rho` on a unit-gain channel.

use std::ops::Range;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Eigenvalues below this fraction of the largest are treated as zero.
pub const EIGEN_FLOOR: f64 = 1e-12;

/// Column block of one UE inside the composite channel.
#[derive(Debug, Clone, PartialEq)]
pub struct UeLayout {
    pub n_t: usize,
    /// Linear transmit power (relative to noise).
    pub power: f64,
    pub cols: Range<usize>,
}

/// Composite channel `H = [sqrt(rho_1/n_t1) G_1, ..., sqrt(rho_U/n_tU) G_U]` of one RE.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: CMatrix,
    pub per_ue: Vec<UeLayout>,
    /// (subcarrier, symbol) or (block, slot) coordinates.
    pub re_index: (usize, usize),
}

impl ChannelRealization {
    /// Scale and concatenate unscaled per-UE channels.
    pub fn assemble(blocks: &[CMatrix], powers: &[f64]) -> Result<Self> {
        if blocks.is_empty() || blocks.len() != powers.len() {
            return Err(Error::invalid("need one power per UE block"));
        }
        let n_r = blocks[0].nrows();
        let mut per_ue = Vec::with_capacity(blocks.len());
        let mut col = 0;
        for (g, &p) in blocks.iter().zip(powers) {
            if g.nrows() != n_r || g.ncols() == 0 {
                return Err(Error::invalid("inconsistent per-UE channel dimensions"));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::invalid(format!("power must be finite and non-negative (got {p})")));
            }
            per_ue.push(UeLayout { n_t: g.ncols(), power: p, cols: col..col + g.ncols() });
            col += g.ncols();
        }
        let mut h = CMatrix::zeros(n_r, col);
        for (g, ue) in blocks.iter().zip(&per_ue) {
            let s = (ue.power / ue.n_t as f64).sqrt();
            h.columns_mut(ue.cols.start, ue.n_t).copy_from(&(g * Complex64::new(s, 0.0)));
        }
        Ok(Self { h, per_ue, re_index: (0, 0) })
    }

    /// Rebuild from already-scaled column blocks.
    pub fn from_scaled_blocks(blocks: &[CMatrix], powers: &[f64]) -> Result<Self> {
        let unit: Vec<f64> = blocks.iter().map(|b| b.ncols() as f64).collect();
        let mut r = Self::assemble(blocks, &unit)?;
        for (ue, &p) in r.per_ue.iter_mut().zip(powers) {
            ue.power = p;
        }
        Ok(r)
    }

    /// Scaled columns of UE `i`.
    pub fn ue_block(&self, i: usize) -> CMatrix {
        let ue = &self.per_ue[i];
        self.h.columns(ue.cols.start, ue.n_t).into_owned()
    }

    pub fn n_r(&self) -> usize {
        self.h.nrows()
    }

    /// Total number of streams `N`.
    pub fn n_streams(&self) -> usize {
        self.h.ncols()
    }

    pub fn n_ues(&self) -> usize {
        self.per_ue.len()
    }

    /// Condition number `10 log10(sigma_max / sigma_min)` of `H`.
    pub fn condition_db(&self) -> f64 {
        condition_db(&self.h)
    }

    /// Same realization with a different composite matrix.
    pub fn with_matrix(&self, h: CMatrix) -> Self {
        Self { h, per_ue: self.per_ue.clone(), re_index: self.re_index }
    }
}

/// `10 log10(sigma_max / sigma_min)`; infinite for rank-deficient matrices.
pub fn condition_db(h: &CMatrix) -> f64 {
    let sv = h.singular_values();
    let max = sv.max();
    let min = sv.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        10.0 * (max / min).log10()
    }
}

/// Interference-plus-noise and estimation-error covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub k_n: CMatrix,
    pub k_e: CMatrix,
}

impl NoiseModel {
    pub fn identity(n_r: usize) -> Self {
        Self::scalar(n_r, 1.0, 0.0)
    }

    pub fn scalar(n_r: usize, k_n: f64, k_e: f64) -> Self {
        Self {
            k_n: CMatrix::identity(n_r, n_r) * Complex64::new(k_n, 0.0),
            k_e: CMatrix::identity(n_r, n_r) * Complex64::new(k_e, 0.0),
        }
    }

    pub fn total(&self) -> CMatrix {
        &self.k_n + &self.k_e
    }
}

/// Precomputed `(K_n + K_e)^{-1/2}`.
#[derive(Debug, Clone)]
pub struct Whitener {
    inv_sqrt: CMatrix,
}

impl Whitener {
    pub fn new(nm: &NoiseModel) -> Result<Self> {
        let k = nm.total();
        if k.nrows() != k.ncols() || nm.k_n.shape() != nm.k_e.shape() {
            return Err(Error::invalid("noise covariances must be square and equal-sized"));
        }
        Ok(Self { inv_sqrt: hermitian_power(&k, -0.5)? })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.inv_sqrt
    }

    pub fn apply_matrix(&self, h: &CMatrix) -> CMatrix {
        &self.inv_sqrt * h
    }

    pub fn apply_vector(&self, y: &CVector) -> CVector {
        &self.inv_sqrt * y
    }
}

/// Whiten an estimated channel and a received vector.
pub fn whiten(h: &ChannelRealization, y: &CVector, nm: &NoiseModel) -> Result<(ChannelRealization, CVector)> {
    if y.len() != h.n_r() || nm.k_n.nrows() != h.n_r() {
        return Err(Error::invalid("dimension mismatch between channel, signal and covariance"));
    }
    let w = Whitener::new(nm)?;
    Ok((h.with_matrix(w.apply_matrix(&h.h)), w.apply_vector(y)))
}

/// `K^p` for Hermitian positive-definite `K`.
pub fn hermitian_power(k: &CMatrix, p: f64) -> Result<CMatrix> {
    let n = k.nrows();
    if k.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericFailure { msg: "non-finite covariance entry".into(), condition: f64::NAN });
    }
    let herm = (k + k.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max <= 0.0 || min <= EIGEN_FLOOR * max {
        return Err(Error::NumericFailure {
            msg: "covariance is not positive definite".into(),
            condition: if min > 0.0 { max / min } else { f64::INFINITY },
        });
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for j in 0..n {
        let s = eig.eigenvalues[j].powf(p);
        scaled.column_mut(j).scale_mut(s);
    }
    Ok(scaled * v.adjoint())
}

/// Principal square root of a Hermitian positive semi-definite matrix.
pub fn psd_sqrt(k: &CMatrix) -> Result<CMatrix> {
    let herm = (k + k.adjoint()) * Complex64::new(0.5, 0.0);
    let eig = herm.symmetric_eigen();
    let max = eig.eigenvalues.max().max(0.0);
    if eig.eigenvalues.iter().any(|&l| l < -1e-9 * max.max(1.0)) {
        return Err(Error::invalid("correlation matrix is not positive semi-definite"));
    }
    let v = &eig.eigenvectors;
    let mut scaled = v.clone();
    for j in 0..k.nrows() {
        scaled.column_mut(j).scale_mut(eig.eigenvalues[j].max(0.0).sqrt());
    }
    Ok(scaled * v.adjoint())
}

/// Exponential correlation `R_ij = rho^|i-j|`.
pub fn exponential_correlation(n: usize, rho: f64) -> Result<CMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::invalid(format!("correlation coefficient must lie in [0,1) (got {rho})")));
    }
    Ok(CMatrix::from_fn(n, n, |i, j| Complex64::new(rho.powi((i as i32 - j as i32).abs()), 0.0)))
}

/// Unit-diagonal correlation with the given eigen-spectrum in a DFT basis.
///
/// The spectrum is rescaled to mean one, which is what makes the diagonal
/// exactly one.
pub fn spectrum_correlation(eigenvalues: &[f64]) -> Result<CMatrix> {
    let n = eigenvalues.len();
    if n == 0 || eigenvalues.iter().any(|&l| !(l >= 0.0)) {
        return Err(Error::invalid("eigen-spectrum must be non-empty and non-negative"));
    }
    let mean = eigenvalues.iter().sum::<f64>() / n as f64;
    if mean <= 0.0 {
        return Err(Error::invalid("eigen-spectrum must not be all zero"));
    }
    let f = CMatrix::from_fn(n, n, |i, k| {
        Complex64::from_polar(1.0 / (n as f64).sqrt(), -2.0 * std::f64::consts::PI * (i * k) as f64 / n as f64)
    });
    let d =
        CMatrix::from_diagonal(&CVector::from_iterator(n, eigenvalues.iter().map(|&l| Complex64::new(l / mean, 0.0))));
    let mut r = &f * d * f.adjoint();
    for i in 0..n {
        r[(i, i)] = Complex64::new(1.0, 0.0);
    }
    Ok(r)
}

#[derive(Debug, Clone, PartialEq)]
pub enum ChannelKind {
    IidRayleigh,
    /// `Rr^{1/2} W Rt^{1/2}`; `rt` applies to every UE's transmit antennas.
    Kronecker {
        rr: CMatrix,
        rt: Option<CMatrix>,
    },
}

/// Statistical channel model with AR(1) slot-to-slot evolution.
#[derive(Debug, Clone)]
pub struct ChannelModel {
    pub kind: ChannelKind,
    /// Correlation between consecutive slots, in `[0, 1]`.
    pub ar1: f64,
    rr_sqrt: Option<CMatrix>,
    rt_sqrt: Option<CMatrix>,
}

impl ChannelModel {
    pub fn new(kind: ChannelKind, ar1: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&ar1) {
            return Err(Error::invalid(format!("AR(1) coefficient must lie in [0,1] (got {ar1})")));
        }
        let (rr_sqrt, rt_sqrt) = match &kind {
            ChannelKind::IidRayleigh => (None, None),
            ChannelKind::Kronecker { rr, rt } => {
                check_correlation(rr)?;
                if let Some(rt) = rt {
                    check_correlation(rt)?;
                }
                (Some(psd_sqrt(rr)?), rt.as_ref().map(psd_sqrt).transpose()?)
            }
        };
        Ok(Self { kind, ar1, rr_sqrt, rt_sqrt })
    }

    pub fn iid(ar1: f64) -> Self {
        Self::new(ChannelKind::IidRayleigh, ar1).expect("valid AR(1) coefficient")
    }

    /// Unscaled per-UE channels with unit-variance entries.
    pub fn sample_blocks<R: Rng + ?Sized>(&self, n_r: usize, n_t: &[usize], rng: &mut R) -> Result<Vec<CMatrix>> {
        if n_r == 0 || n_t.is_empty() || n_t.contains(&0) {
            return Err(Error::invalid("channel dimensions must be positive"));
        }
        if let Some(rr) = &self.rr_sqrt {
            if rr.nrows() != n_r {
                return Err(Error::invalid(format!(
                    "receive correlation is {}x{} but n_r={n_r}",
                    rr.nrows(),
                    rr.nrows()
                )));
            }
        }
        n_t.iter()
            .map(|&t| {
                let w = complex_gaussian_matrix(n_r, t, 1.0, rng);
                self.shape(w)
            })
            .collect()
    }

    fn shape(&self, w: CMatrix) -> Result<CMatrix> {
        let mut g = match &self.rr_sqrt {
            Some(rr) => rr * w,
            None => w,
        };
        if let Some(rt) = &self.rt_sqrt {
            if rt.nrows() != g.ncols() {
                return Err(Error::invalid("transmit correlation size does not match n_t"));
            }
            g *= rt;
        }
        Ok(g)
    }

    /// One AR(1) step: `a G + sqrt(1 - a^2) W` with `W` shaped like `G`.
    pub fn evolve<R: Rng + ?Sized>(&self, prev: &[CMatrix], rng: &mut R) -> Result<Vec<CMatrix>> {
        let a = self.ar1;
        let b = (1.0 - a * a).max(0.0).sqrt();
        prev.iter()
            .map(|g| {
                if b == 0.0 {
                    return Ok(g.clone());
                }
                let w = self.shape(complex_gaussian_matrix(g.nrows(), g.ncols(), 1.0, rng))?;
                Ok(g * Complex64::new(a, 0.0) + w * Complex64::new(b, 0.0))
            })
            .collect()
    }
}

fn check_correlation(r: &CMatrix) -> Result<()> {
    if r.nrows() != r.ncols() || r.nrows() == 0 {
        return Err(Error::invalid("correlation matrix must be square"));
    }
    for i in 0..r.nrows() {
        if (r[(i, i)].re - 1.0).abs() > 1e-9 || r[(i, i)].im.abs() > 1e-9 {
            return Err(Error::invalid("correlation matrix must have unit diagonal"));
        }
        for j in 0..r.ncols() {
            if (r[(i, j)] - r[(j, i)].conj()).norm() > 1e-9 {
                return Err(Error::invalid("correlation matrix must be Hermitian"));
            }
        }
    }
    Ok(())
}

/// Sample one composite channel realization.
pub fn sample_channel<R: Rng + ?Sized>(
    model: &ChannelModel,
    n_r: usize,
    n_t: &[usize],
    powers: &[f64],
    rng: &mut R,
) -> Result<ChannelRealization> {
    if n_t.len() != powers.len() {
        return Err(Error::invalid("need one power per UE"));
    }
    let blocks = model.sample_blocks(n_r, n_t, rng)?;
    ChannelRealization::assemble(&blocks, powers)
}

/// Circularly-symmetric complex Gaussian with variance `var`.
#[inline]
pub fn complex_gaussian<R: Rng + ?Sized>(var: f64, rng: &mut R) -> Complex64 {
    let s = (var / 2.0).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

pub fn complex_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, var: f64, rng: &mut R) -> CMatrix {
    // column-major fill keeps the draw order independent of nalgebra internals
    let mut m = CMatrix::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = complex_gaussian(var, rng);
        }
    }
    m
}

/// Noise vector with covariance `cov_sqrt * cov_sqrt^H`.
pub fn colored_noise<R: Rng + ?Sized>(cov_sqrt: Option<&CMatrix>, n: usize, rng: &mut R) -> CVector {
    let w = CVector::from_fn(n, |_, _| complex_gaussian(1.0, rng));
    match cov_sqrt {
        Some(s) => s * w,
        None => w,
    }
}

/// Channel-estimation error `Delta H` whose columns have covariance `K_e / N`.
///
/// `ke_sqrt` is the square root of `K_e`.
pub fn estimation_error<R: Rng + ?Sized>(ke_sqrt: &CMatrix, n_streams: usize, rng: &mut R) -> CMatrix {
    let w = complex_gaussian_matrix(ke_sqrt.nrows(), n_streams, 1.0 / n_streams as f64, rng);
    ke_sqrt * w
}

/// Open-loop power control: `min(Pmax, P0 + 10 log10(N_PRB) + alpha PL)` in dBm.
pub fn olpc_power(p0_dbm: f64, alpha: f64, pl_db: f64, n_prb: u32, pmax_dbm: f64) -> f64 {
    (p0_dbm + 10.0 * (n_prb.max(1) as f64).log10() + alpha * pl_db).min(pmax_dbm)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn olpc_examples() {
        let p = olpc_power(-98.0, 1.0, 100.0, 24, 23.0);
        assert!((p - (-98.0 + 10.0 * 24f64.log10() + 100.0)).abs() < 1e-12);
        assert!((p - 15.802).abs() < 1e-3);
        assert_eq!(olpc_power(-98.0, 1.0, 200.0, 24, 23.0), 23.0);
        let a = olpc_power(-98.0, 0.0, 80.0, 24, 23.0);
        let b = olpc_power(-98.0, 0.0, 130.0, 24, 23.0);
        assert_eq!(a, b);
    }

    #[test]
    fn identity_and_scalar_whitening() {
        let mut r = rng::stream(1, &[0]);
        let h = sample_channel(&ChannelModel::iid(0.0), 4, &[1, 2], &[1.0, 2.0], &mut r).unwrap();
        let y = colored_noise(None, 4, &mut r);
        let (hw, yw) = whiten(&h, &y, &NoiseModel::identity(4)).unwrap();
        assert!((&hw.h - &h.h).norm() < 1e-12);
        assert!((&yw - &y).norm() < 1e-12);
        let (hw, yw) = whiten(&h, &y, &NoiseModel::scalar(4, 4.0, 0.0)).unwrap();
        assert!((&hw.h * Complex64::new(2.0, 0.0) - &h.h).norm() < 1e-12);
        assert!((&yw * Complex64::new(2.0, 0.0) - &y).norm() < 1e-12);
    }

    #[test]
    fn singular_covariance_fails() {
        let nm = NoiseModel::scalar(3, 0.0, 0.0);
        assert!(matches!(Whitener::new(&nm), Err(Error::NumericFailure { .. })));
    }

    #[test]
    fn reassembly_is_exact() {
        let mut r = rng::stream(2, &[0]);
        let h = sample_channel(&ChannelModel::iid(0.5), 6, &[2, 1, 3], &[0.5, 3.0, 10.0], &mut r).unwrap();
        let blocks: Vec<CMatrix> = (0..3).map(|i| h.ue_block(i)).collect();
        let back = ChannelRealization::from_scaled_blocks(&blocks, &[0.5, 3.0, 10.0]).unwrap();
        assert_eq!(back.h, h.h);
        assert_eq!(back.per_ue, h.per_ue);
    }

    #[test]
    fn ar1_of_one_is_static() {
        let model = ChannelModel::iid(1.0);
        let mut r = rng::stream(3, &[0]);
        let g = model.sample_blocks(4, &[1, 1], &mut r).unwrap();
        assert_eq!(model.evolve(&g, &mut r).unwrap(), g);
    }

    #[test]
    fn spectrum_correlation_has_unit_diagonal() {
        let r = spectrum_correlation(&[4.0, 2.0, 1.0, 0.5]).unwrap();
        assert!(ChannelModel::new(ChannelKind::Kronecker { rr: r.clone(), rt: None }, 0.9).is_ok());
        let eig = r.symmetric_eigen().eigenvalues;
        assert!(eig.min() > 0.0);
        assert!(exponential_correlation(3, 1.5).is_err());
    }

    #[test]
    fn bad_correlation_rejected() {
        let mut rr = CMatrix::identity(2, 2);
        rr[(0, 1)] = Complex64::new(2.0, 0.0);
        rr[(1, 0)] = Complex64::new(2.0, 0.0);
        assert!(ChannelModel::new(ChannelKind::Kronecker { rr, rt: None }, 0.5).is_err());
    }

    #[test]
    fn condition_number_of_diagonal() {
        let mut h = CMatrix::identity(3, 3);
        h[(2, 2)] = Complex64::new(0.1, 0.0);
        assert!((condition_db(&h) - 10.0).abs() < 1e-9);
    }
}
