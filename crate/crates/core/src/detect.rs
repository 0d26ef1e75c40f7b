//! Soft-output MU-MIMO detectors.
//!
//! All detectors assume a whitened model `y = H s + n` with `n ~ CN(0, I)` and
//! produce max-log LLRs. Bits of UE `i` are laid out stream by stream, `m_i`
//! bits per stream, MSB first.

use std::fmt;

use num_complex::Complex64;

use crate::channel::{CMatrix, CVector, ChannelRealization};
use crate::error::{Error, Result};
use crate::modem::{self, Constellation, DEFAULT_LLR_CLIP};

/// Largest exhaustive search accepted by default.
pub const DEFAULT_MLD_CAP: usize = 1 << 20;

/// Most streams a tree search handles.
pub const MAX_STREAMS: usize = 16;

type Labels = [u8; MAX_STREAMS];

/// Diagonal entries of `R` below this are regularized.
const R_DIAG_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DetectorKind {
    Lmmse,
    KBest(usize),
    Mld,
}

impl DetectorKind {
    pub fn is_linear(&self) -> bool {
        matches!(self, DetectorKind::Lmmse)
    }

    /// Parse `lmmse`, `mld`, `kbest32` or `kbest-32`.
    pub fn parse(name: &str) -> Result<Self> {
        let s = name.trim().to_ascii_lowercase();
        match s.as_str() {
            "lmmse" => Ok(DetectorKind::Lmmse),
            "mld" | "ml" => Ok(DetectorKind::Mld),
            _ => {
                let k = s
                    .strip_prefix("kbest")
                    .map(|r| r.trim_start_matches(['-', '_']))
                    .and_then(|r| r.parse::<usize>().ok())
                    .filter(|&k| k >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown detector {name:?}")))?;
                Ok(DetectorKind::KBest(k))
            }
        }
    }
}

impl fmt::Display for DetectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DetectorKind::Lmmse => write!(f, "lmmse"),
            DetectorKind::KBest(k) => write!(f, "kbest{k}"),
            DetectorKind::Mld => write!(f, "mld"),
        }
    }
}

/// A detector together with its complexity weight.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub complexity: f64,
    pub llr_clip: f64,
}

impl DetectorSpec {
    /// Default complexity: 1 for LMMSE, `K` for K-best, `|Q|^N` for MLD.
    pub fn new(kind: DetectorKind, n_streams: usize, max_order: u32) -> Self {
        let complexity = match kind {
            DetectorKind::Lmmse => 1.0,
            DetectorKind::KBest(k) => k as f64,
            DetectorKind::Mld => 2f64.powi((max_order as usize * n_streams) as i32),
        };
        Self { kind, complexity, llr_clip: DEFAULT_LLR_CLIP }
    }

    pub fn with_complexity(mut self, c: f64) -> Self {
        self.complexity = c;
        self
    }

    pub fn name(&self) -> String {
        self.kind.to_string()
    }

    /// Build a detector for one channel matrix.
    pub fn prepare(&self, h: &ChannelRealization, mods: &[u32]) -> Result<PreparedDetector> {
        PreparedDetector::new(self.kind, h, mods, self.llr_clip)
    }
}

/// Check that a detector list is ordered by non-decreasing complexity.
pub fn check_ordering(specs: &[DetectorSpec]) -> Result<()> {
    if specs.is_empty() {
        return Err(Error::invalid("detector list is empty"));
    }
    if specs.windows(2).any(|w| w[0].complexity > w[1].complexity) {
        return Err(Error::invalid("detectors must be ordered by non-decreasing complexity"));
    }
    Ok(())
}

/// LLRs of one RE for every UE.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorOutput {
    /// Per UE, `m_i * n_t_i` clipped LLRs.
    pub llrs: Vec<Vec<f64>>,
    /// Per-stream post-equalization SINR (linear detectors only).
    pub post_eq_sinr: Option<Vec<f64>>,
    pub detector: DetectorKind,
    pub clip_limit: f64,
    /// Detection order after sorted QR, when used.
    pub order: Option<Vec<usize>>,
}

impl DetectorOutput {
    pub fn bit_llr(&self, ue: usize, bit: usize) -> modem::BitLlr {
        modem::BitLlr::new(self.llrs[ue][bit], self.clip_limit)
    }
}

/// Per-stream constellations derived from per-UE modulation orders.
fn stream_constellations(h: &ChannelRealization, mods: &[u32]) -> Result<Vec<&'static Constellation>> {
    if mods.len() != h.n_ues() {
        return Err(Error::invalid(format!("got {} modulation orders for {} UEs", mods.len(), h.n_ues())));
    }
    let mut out = Vec::with_capacity(h.n_streams());
    for (ue, &m) in h.per_ue.iter().zip(mods) {
        let c = modem::constellation(m)?;
        out.extend(std::iter::repeat_n(c, ue.n_t));
    }
    Ok(out)
}

fn check_finite_matrix(h: &CMatrix) -> Result<()> {
    if h.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericFailure { msg: "non-finite channel entry".into(), condition: f64::NAN });
    }
    Ok(())
}

fn check_finite_vector(y: &CVector) -> Result<()> {
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NumericFailure { msg: "non-finite received sample".into(), condition: f64::NAN });
    }
    Ok(())
}

/// A detector specialised to one channel matrix, reusable across REs.
#[derive(Debug, Clone)]
pub struct PreparedDetector {
    kind: DetectorKind,
    consts: Vec<&'static Constellation>,
    /// Offset of each stream's first bit in the flat LLR vector.
    bit_offset: Vec<usize>,
    total_bits: usize,
    ue_streams: Vec<std::ops::Range<usize>>,
    clip: f64,
    inner: Inner,
}

#[derive(Debug, Clone)]
enum Inner {
    Lmmse {
        w: CMatrix,
        mu: Vec<f64>,
        sinr: Vec<f64>,
    },
    KBest {
        k: usize,
        qh: CMatrix,
        r: CMatrix,
        /// `order[level]` is the original stream index at that position.
        order: Vec<usize>,
    },
    Mld {
        h: CMatrix,
    },
}

impl PreparedDetector {
    pub fn new(kind: DetectorKind, h: &ChannelRealization, mods: &[u32], clip: f64) -> Result<Self> {
        check_finite_matrix(&h.h)?;
        let consts = stream_constellations(h, mods)?;
        let mut bit_offset = Vec::with_capacity(consts.len());
        let mut total_bits = 0;
        for c in &consts {
            bit_offset.push(total_bits);
            total_bits += c.order() as usize;
        }
        let ue_streams = h.per_ue.iter().map(|u| u.cols.clone()).collect();
        let inner = match kind {
            DetectorKind::Lmmse => lmmse_filter(&h.h)?,
            DetectorKind::KBest(k) => {
                if k == 0 {
                    return Err(Error::invalid("K must be at least 1"));
                }
                let (qh, r, order) = sorted_qr(&h.h)?;
                Inner::KBest { k, qh, r, order }
            }
            DetectorKind::Mld => {
                let mut size: usize = 1;
                for c in &consts {
                    size = size.saturating_mul(c.size());
                }
                if size > DEFAULT_MLD_CAP {
                    return Err(Error::UnsupportedSize(format!(
                        "exhaustive search over {size} hypotheses exceeds the cap of {DEFAULT_MLD_CAP}"
                    )));
                }
                Inner::Mld { h: h.h.clone() }
            }
        };
        Ok(Self { kind, consts, bit_offset, total_bits, ue_streams, clip, inner })
    }

    pub fn kind(&self) -> DetectorKind {
        self.kind
    }

    /// Total LLRs per RE over all streams.
    pub fn total_bits(&self) -> usize {
        self.total_bits
    }

    pub fn n_streams(&self) -> usize {
        self.consts.len()
    }

    /// Flat bit range of UE `i` inside the output of [`Self::detect_into`].
    pub fn ue_bits(&self, i: usize) -> std::ops::Range<usize> {
        let s = &self.ue_streams[i];
        let start = self.bit_offset[s.start];
        let end = if s.end == self.consts.len() { self.total_bits } else { self.bit_offset[s.end] };
        start..end
    }

    pub fn post_eq_sinr(&self) -> Option<&[f64]> {
        match &self.inner {
            Inner::Lmmse { sinr, .. } => Some(sinr),
            _ => None,
        }
    }

    pub fn order(&self) -> Option<&[usize]> {
        match &self.inner {
            Inner::KBest { order, .. } => Some(order),
            _ => None,
        }
    }

    /// Write all streams' LLRs for one received vector into `out`.
    pub fn detect_into(&self, y: &CVector, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.total_bits);
        match &self.inner {
            Inner::Lmmse { w, mu, sinr } => {
                let z = w * y;
                for (s, c) in self.consts.iter().enumerate() {
                    let o = &mut out[self.bit_offset[s]..self.bit_offset[s] + c.order() as usize];
                    if sinr[s] > 0.0 && mu[s] > 0.0 {
                        c.maxlog_llrs(z[s] / mu[s], sinr[s], self.clip, o);
                    } else {
                        o.fill(0.0);
                    }
                }
            }
            Inner::KBest { k, qh, r, order } => self.kbest(*k, qh, r, order, y, out),
            Inner::Mld { h } => self.mld(h, y, out),
        }
    }

    /// Full output for one received vector.
    pub fn detect(&self, y: &CVector) -> Result<DetectorOutput> {
        check_finite_vector(y)?;
        let mut flat = vec![0.0; self.total_bits];
        self.detect_into(y, &mut flat);
        let llrs = (0..self.ue_streams.len()).map(|i| flat[self.ue_bits(i)].to_vec()).collect();
        Ok(DetectorOutput {
            llrs,
            post_eq_sinr: self.post_eq_sinr().map(<[f64]>::to_vec),
            detector: self.kind,
            clip_limit: self.clip,
            order: self.order().map(<[usize]>::to_vec),
        })
    }

    fn kbest(&self, k: usize, qh: &CMatrix, r: &CMatrix, order: &[usize], y: &CVector, out: &mut [f64]) {
        let n = order.len();
        let z = qh * y;
        let interference = |level: usize, labels: &Labels| {
            let mut b = z[level];
            for lv in level + 1..n {
                b -= r[(level, lv)] * self.consts[order[lv]].point(labels[lv] as usize);
            }
            b
        };
        // survivors hold labels indexed by tree level
        let mut survivors: Vec<(f64, Labels)> = vec![(0.0, [0; MAX_STREAMS])];
        let mut next: Vec<(f64, Labels)> = Vec::new();
        let mut children: Vec<(f64, u32, u16)> = Vec::new();
        for level in (1..n).rev() {
            let c = self.consts[order[level]];
            let rll = r[(level, level)];
            children.clear();
            for (pi, (metric, labels)) in survivors.iter().enumerate() {
                let b = interference(level, labels);
                for (lab, &p) in c.points().iter().enumerate() {
                    let d = (b - rll * p).norm_sqr();
                    children.push((metric + d, pi as u32, lab as u16));
                }
            }
            if children.len() > k {
                children.select_nth_unstable_by(k - 1, cmp_child);
                children.truncate(k);
            }
            children.sort_unstable_by(cmp_child);
            next.clear();
            next.extend(children.iter().map(|&(m, pi, lab)| {
                let mut l = survivors[pi as usize].1;
                l[level] = lab as u8;
                (m, l)
            }));
            std::mem::swap(&mut survivors, &mut next);
        }
        // the last level keeps every child so each bit sees both hypotheses:
        // fold the children straight into per-bit minimum metrics
        let mut best = vec![[f64::INFINITY; 2]; self.total_bits];
        let c0 = self.consts[order[0]];
        let rll = r[(0, 0)];
        let mut col_min = vec![f64::INFINITY; c0.size()];
        for (metric, labels) in &survivors {
            let b = interference(0, labels);
            let mut parent_min = f64::INFINITY;
            for (&p, cm) in c0.points().iter().zip(col_min.iter_mut()) {
                let d = metric + (b - rll * p).norm_sqr();
                *cm = cm.min(d);
                parent_min = parent_min.min(d);
            }
            for level in 1..n {
                let s = order[level];
                let c = self.consts[s];
                for j in 0..c.order() as usize {
                    let e = &mut best[self.bit_offset[s] + j][c.label_bit(labels[level] as usize, j) as usize];
                    *e = e.min(parent_min);
                }
            }
        }
        let s0 = order[0];
        for (lab, &d) in col_min.iter().enumerate() {
            for j in 0..c0.order() as usize {
                let e = &mut best[self.bit_offset[s0] + j][c0.label_bit(lab, j) as usize];
                *e = e.min(d);
            }
        }
        for (o, d) in out.iter_mut().zip(&best) {
            let v = match (d[0].is_finite(), d[1].is_finite()) {
                (true, true) => d[0] - d[1],
                (true, false) => -self.clip,
                (false, true) => self.clip,
                (false, false) => 0.0,
            };
            *o = modem::clip(v, self.clip);
        }
    }

    fn mld(&self, h: &CMatrix, y: &CVector, out: &mut [f64]) {
        let n = self.consts.len();
        let n_r = h.nrows();
        // columns times every point
        let contrib: Vec<Vec<Vec<Complex64>>> = (0..n)
            .map(|s| self.consts[s].points().iter().map(|&p| (0..n_r).map(|i| h[(i, s)] * p).collect()).collect())
            .collect();
        let mut best: Vec<[f64; 2]> = vec![[f64::INFINITY; 2]; self.total_bits];
        let mut labels = vec![0usize; n];
        let mut resid: Vec<Vec<Complex64>> = vec![y.iter().copied().collect(); n + 1];
        self.mld_rec(0, &contrib, &mut resid, &mut labels, &mut best);
        for (o, d) in out.iter_mut().zip(&best) {
            *o = modem::clip(d[0] - d[1], self.clip);
        }
    }

    fn mld_rec(
        &self,
        s: usize,
        contrib: &[Vec<Vec<Complex64>>],
        resid: &mut [Vec<Complex64>],
        labels: &mut [usize],
        best: &mut [[f64; 2]],
    ) {
        let n = self.consts.len();
        if s == n {
            let d: f64 = resid[n].iter().map(|z| z.norm_sqr()).sum();
            for (t, c) in self.consts.iter().enumerate() {
                for j in 0..c.order() as usize {
                    let b = c.label_bit(labels[t], j) as usize;
                    let e = &mut best[self.bit_offset[t] + j][b];
                    if d < *e {
                        *e = d;
                    }
                }
            }
            return;
        }
        for lab in 0..self.consts[s].size() {
            labels[s] = lab;
            let (head, tail) = resid.split_at_mut(s + 1);
            for ((dst, src), c) in tail[0].iter_mut().zip(&head[s]).zip(&contrib[s][lab]) {
                *dst = src - c;
            }
            self.mld_rec(s + 1, contrib, resid, labels, best);
        }
    }
}

fn cmp_child(a: &(f64, u32, u16), b: &(f64, u32, u16)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))
}

/// Post-equalization SINR of each stream under LMMSE filtering.
pub fn lmmse_sinr(h: &CMatrix) -> Result<Vec<f64>> {
    match lmmse_filter(h)? {
        Inner::Lmmse { sinr, .. } => Ok(sinr),
        _ => unreachable!(),
    }
}

fn lmmse_filter(h: &CMatrix) -> Result<Inner> {
    let n = h.ncols();
    let gram = h.adjoint() * h + CMatrix::identity(n, n);
    let a = gram.clone().try_inverse().ok_or_else(|| Error::NumericFailure {
        msg: "LMMSE Gram matrix is singular".into(),
        condition: f64::INFINITY,
    })?;
    let w = &a * h.adjoint();
    let mut mu = Vec::with_capacity(n);
    let mut sinr = Vec::with_capacity(n);
    for k in 0..n {
        let akk = a[(k, k)].re.clamp(f64::MIN_POSITIVE, 1.0);
        mu.push(1.0 - akk);
        sinr.push((1.0 / akk - 1.0).max(0.0));
    }
    Ok(Inner::Lmmse { w, mu, sinr })
}

/// Sorted QR decomposition: at each step the remaining column of smallest
/// norm is orthogonalized first. Returns `(Q^H, R, order)`.
fn sorted_qr(h: &CMatrix) -> Result<(CMatrix, CMatrix, Vec<usize>)> {
    let (n_r, n) = h.shape();
    if n > MAX_STREAMS {
        return Err(Error::UnsupportedSize(format!("tree search supports at most {MAX_STREAMS} streams")));
    }
    if n_r < n {
        return Err(Error::UnsupportedSize(format!(
            "tree search needs at least as many receive antennas as streams ({n_r} < {n})"
        )));
    }
    let mut q = h.clone();
    let mut r = CMatrix::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    let mut norms: Vec<f64> = (0..n).map(|j| q.column(j).norm_squared()).collect();
    for i in 0..n {
        let kmin = (i..n).min_by(|&a, &b| norms[a].total_cmp(&norms[b]).then(a.cmp(&b))).unwrap_or(i);
        if kmin != i {
            q.swap_columns(i, kmin);
            r.swap_columns(i, kmin);
            norms.swap(i, kmin);
            order.swap(i, kmin);
        }
        let mut rii = norms[i].max(0.0).sqrt();
        if rii < R_DIAG_FLOOR {
            // rank-deficient direction: keep a tiny positive pivot
            rii = R_DIAG_FLOOR;
        }
        r[(i, i)] = Complex64::new(rii, 0.0);
        let qi = q.column(i) / Complex64::new(rii, 0.0);
        q.set_column(i, &qi);
        for j in i + 1..n {
            let rij = qi.dotc(&q.column(j));
            r[(i, j)] = rij;
            let updated = q.column(j) - &qi * rij;
            q.set_column(j, &updated);
            norms[j] = q.column(j).norm_squared();
        }
    }
    Ok((q.adjoint(), r, order))
}

pub fn detect_lmmse(y: &CVector, h: &ChannelRealization, mods: &[u32]) -> Result<DetectorOutput> {
    PreparedDetector::new(DetectorKind::Lmmse, h, mods, DEFAULT_LLR_CLIP)?.detect(y)
}

pub fn detect_kbest(y: &CVector, h: &ChannelRealization, k: usize, mods: &[u32]) -> Result<DetectorOutput> {
    PreparedDetector::new(DetectorKind::KBest(k), h, mods, DEFAULT_LLR_CLIP)?.detect(y)
}

pub fn detect_mld(y: &CVector, h: &ChannelRealization, mods: &[u32]) -> Result<DetectorOutput> {
    PreparedDetector::new(DetectorKind::Mld, h, mods, DEFAULT_LLR_CLIP)?.detect(y)
}
