//! PHY abstraction: effective-SINR mapping, BMDR-based codeword error
//! estimates, and transport-block/throughput composition.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::bmdr::{predict_set, BmdrCerTable, BmdrPredictor, MiCurves, TableSet};
use crate::channel::ChannelRealization;
use crate::error::{Error, Result};
use crate::rng::SimRng;

const TIE: f64 = 1e-12;

/// Compression function of an effective-SINR mapping.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EsmFamily {
    /// `I(x) = ln(1 + x)`
    Cesm,
    /// `I(x) = exp(-x)`
    Eesm,
    /// `I(x) = log10(x)`
    Lesm,
    /// `I(x)` = AWGN QAM mutual information
    Miesm,
}

impl FromStr for EsmFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "cesm" => Ok(Self::Cesm),
            "eesm" => Ok(Self::Eesm),
            "lesm" => Ok(Self::Lesm),
            "miesm" => Ok(Self::Miesm),
            other => Err(Error::Config(format!("unknown ESM family {other:?}"))),
        }
    }
}

/// ESM family with its adaptation parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct EsmConfig {
    pub family: EsmFamily,
    pub beta1: f64,
    pub beta2: f64,
    /// Single-beta values per MCS index; override `beta1 = beta2` when present.
    pub per_mcs_beta: BTreeMap<usize, f64>,
}

impl EsmConfig {
    pub fn new(family: EsmFamily) -> Self {
        Self { family, beta1: 1.0, beta2: 1.0, per_mcs_beta: BTreeMap::new() }
    }

    pub fn with_betas(mut self, beta1: f64, beta2: f64) -> Result<Self> {
        if !(beta1 > 0.0 && beta2 > 0.0) || !beta1.is_finite() || !beta2.is_finite() {
            return Err(Error::invalid("ESM beta values must be positive"));
        }
        self.beta1 = beta1;
        self.beta2 = beta2;
        Ok(self)
    }

    /// Configuration used for MCS `index`.
    pub fn for_mcs(&self, index: usize) -> Self {
        let mut c = self.clone();
        if let Some(&b) = self.per_mcs_beta.get(&index) {
            c.beta1 = b;
            c.beta2 = b;
        }
        c
    }

    /// Read a `mcs_index,beta` table into `per_mcs_beta`.
    pub fn read_beta_csv<R: Read>(mut self, r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        for row in rd.deserialize::<BetaRow>() {
            let row = row.map_err(|e| Error::Parse(format!("beta table: {e}")))?;
            if !(row.beta > 0.0) {
                return Err(Error::Config(format!("beta for MCS {} must be positive", row.mcs_index)));
            }
            self.per_mcs_beta.insert(row.mcs_index, row.beta);
        }
        Ok(self)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct BetaRow {
    mcs_index: usize,
    beta: f64,
}

/// Write a `mcs_index,beta` table.
pub fn write_beta_csv<W: Write>(betas: &BTreeMap<usize, f64>, w: W) -> Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    for (&mcs_index, &beta) in betas {
        wr.serialize(BetaRow { mcs_index, beta })?;
    }
    wr.flush()?;
    Ok(())
}

/// Effective SINR with a flag set when the inverse mapping was clamped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveSinr {
    pub value: f64,
    pub clamped: bool,
}

/// `beta1 * I^-1(mean I(rho / beta2))` over per-RE linear SINRs.
pub fn esm_effective_sinr(sinrs: &[f64], cfg: &EsmConfig, m: u32, curves: &MiCurves) -> Result<EffectiveSinr> {
    if sinrs.is_empty() {
        return Err(Error::invalid("effective SINR of an empty list"));
    }
    if sinrs.iter().any(|&s| !(s >= 0.0) || !s.is_finite()) {
        return Err(Error::invalid("SINRs must be finite and non-negative"));
    }
    if !(cfg.beta1 > 0.0 && cfg.beta2 > 0.0) {
        return Err(Error::invalid("ESM beta values must be positive"));
    }
    let (b1, b2) = (cfg.beta1, cfg.beta2);
    let n = sinrs.len() as f64;
    let (value, clamped) = match cfg.family {
        EsmFamily::Cesm => {
            let mean = sinrs.iter().map(|&s| (s / b2).ln_1p()).sum::<f64>() / n;
            (mean.exp_m1(), false)
        }
        EsmFamily::Eesm => {
            // factor out the largest term so small means do not underflow
            let x_min = sinrs.iter().map(|&s| s / b2).fold(f64::INFINITY, f64::min);
            let mean = sinrs.iter().map(|&s| (-(s / b2 - x_min)).exp()).sum::<f64>() / n;
            (x_min - mean.ln(), false)
        }
        EsmFamily::Lesm => {
            if sinrs.iter().any(|&s| s <= 0.0) {
                return Err(Error::invalid("LESM needs strictly positive SINRs"));
            }
            let mean = sinrs.iter().map(|&s| (s / b2).log10()).sum::<f64>() / n;
            (10f64.powf(mean), false)
        }
        EsmFamily::Miesm => {
            let curve = curves.curve(m)?;
            let mean = sinrs.iter().map(|&s| curve.eval(s / b2)).sum::<f64>() / n;
            curve.inverse(mean)
        }
    };
    Ok(EffectiveSinr { value: b1 * value, clamped })
}

/// AWGN BMDR at linear SNR `snr` for modulation `m`.
pub fn awgn_bmdr(curves: &MiCurves, m: u32, snr: f64) -> Result<f64> {
    Ok((curves.curve(m)?.eval(snr) / m as f64).clamp(0.0, 1.0))
}

/// Per-UE mean predicted BMDR over the channel realizations of one codeword.
pub fn abstract_bmdr(
    pred: &dyn BmdrPredictor,
    mods: &[u32],
    channels: &[ChannelRealization],
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if channels.is_empty() {
        return Err(Error::invalid("codeword has no resource elements"));
    }
    predict_set(pred, mods, channels, rng)
}

/// CER of the row whose BMDR is closest to `bmdr`; ties go to the lower BMDR.
///
/// Rows are taken after isotonic cleaning of the CER column.
pub fn map_cer(table: &BmdrCerTable, bmdr: f64) -> Result<f64> {
    let pairs = table.monotone_pairs();
    if pairs.is_empty() {
        return Err(Error::invalid("BMDR-CER table has no rows"));
    }
    Ok(nearest_row(&pairs, bmdr))
}

fn nearest_row(pairs: &[(f64, f64)], x: f64) -> f64 {
    let mut best = pairs[0];
    let mut best_d = (pairs[0].0 - x).abs();
    for &(b, c) in &pairs[1..] {
        let d = (b - x).abs();
        if d < best_d - TIE || (d <= best_d + TIE && b < best.0) {
            best = (b, c);
            best_d = d;
        }
    }
    best.1
}

/// CER by linear interpolation of `log10(CER)` in BMDR, clamped at the table ends.
pub fn map_cer_log_interp(table: &BmdrCerTable, bmdr: f64) -> Result<f64> {
    const FLOOR: f64 = 1e-9;
    let pairs = table.monotone_pairs();
    let (first, last) = match (pairs.first(), pairs.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::invalid("BMDR-CER table has no rows")),
    };
    if bmdr <= first.0 {
        return Ok(first.1);
    }
    if bmdr >= last.0 {
        return Ok(last.1);
    }
    let i = pairs.partition_point(|p| p.0 <= bmdr);
    let (a, b) = (pairs[i - 1], pairs[i]);
    if b.0 - a.0 <= TIE {
        return Ok(a.1);
    }
    let t = (bmdr - a.0) / (b.0 - a.0);
    let la = a.1.max(FLOOR).log10();
    let lb = b.1.max(FLOOR).log10();
    let v = 10f64.powf(la + t * (lb - la));
    Ok(if v <= FLOOR { b.1.min(v) } else { v })
}

/// Table used to map a codeword of `(m, r, n)` and whether it was an exact match.
///
/// Falls back to another modulation at the same `(r, n)`, then to the
/// nearest length of the same rate, preferring the same modulation.
pub fn table_for(tables: &TableSet, m: u32, r: f64, n: usize) -> Result<(&BmdrCerTable, bool)> {
    if let Some(t) = tables.find_rate_length(m, r, n) {
        return Ok((t, t.m == m));
    }
    tables
        .tables()
        .iter()
        .filter(|t| (t.rate() - r).abs() < 1e-6)
        .min_by_key(|t| (t.n.abs_diff(n), t.m != m, t.m))
        .map(|t| (t, false))
        .ok_or_else(|| Error::Config(format!("no BMDR-CER table for m={m}, r={r:.4}")))
}

fn check_prob(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::invalid(format!("probability {p} outside [0,1]")))
    }
}

/// Transport-block error probability `1 - prod(1 - p)` of its codewords.
pub fn compose_tb(p: &[f64]) -> Result<f64> {
    if p.is_empty() {
        return Err(Error::invalid("transport block without codewords"));
    }
    let mut ok = 1.0;
    for &x in p {
        check_prob(x)?;
        ok *= 1.0 - x;
    }
    Ok(1.0 - ok)
}

/// Mean of transport-block error probabilities.
pub fn bler(tb: &[f64]) -> Result<f64> {
    if tb.is_empty() {
        return Err(Error::invalid("BLER of zero transport blocks"));
    }
    for &x in tb {
        check_prob(x)?;
    }
    Ok(tb.iter().sum::<f64>() / tb.len() as f64)
}

/// Expected goodput in Mbps: `sum((1 - p) k) / (T t_slot) / 1e6`.
pub fn estimate_throughput(k: &[usize], p: &[f64], slots: usize, t_slot: f64) -> Result<f64> {
    if k.len() != p.len() {
        return Err(Error::invalid("need one error probability per codeword"));
    }
    if slots == 0 || !(t_slot > 0.0) {
        return Err(Error::invalid("slot count and duration must be positive"));
    }
    let mut bits = 0.0;
    for (&k, &p) in k.iter().zip(p) {
        check_prob(p)?;
        bits += (1.0 - p) * k as f64;
    }
    Ok(bits / (slots as f64 * t_slot) / 1e6)
}

/// One observed codeword for beta calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct EesmObservation {
    pub sinrs: Vec<f64>,
    pub failed: bool,
}

/// Single-beta EESM codeword error estimate through the AWGN BMDR curve.
pub fn eesm_cer(sinrs: &[f64], beta: f64, m: u32, table: &BmdrCerTable, curves: &MiCurves) -> Result<f64> {
    let cfg = EsmConfig::new(EsmFamily::Eesm).with_betas(beta, beta)?;
    let eff = esm_effective_sinr(sinrs, &cfg, m, curves)?;
    map_cer(table, awgn_bmdr(curves, m, eff.value)?)
}

/// Beta minimizing the Brier score of EESM error estimates against observed outcomes.
///
/// Searches a log-spaced grid over `[0.05, 100]` and refines around the best
/// point; the first minimum wins so the result is deterministic.
pub fn calibrate_beta(obs: &[EesmObservation], m: u32, table: &BmdrCerTable, curves: &MiCurves) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::invalid("no observations to calibrate against"));
    }
    let brier = |beta: f64| -> Result<f64> {
        let mut s = 0.0;
        for o in obs {
            let p = eesm_cer(&o.sinrs, beta, m, table, curves)?;
            let y = if o.failed { 1.0 } else { 0.0 };
            s += (p - y) * (p - y);
        }
        Ok(s / obs.len() as f64)
    };
    let (lo, hi) = (0.05f64.ln(), 100f64.ln());
    let mut best = (f64::INFINITY, 1.0);
    let coarse = 61;
    for i in 0..coarse {
        let b = (lo + (hi - lo) * i as f64 / (coarse - 1) as f64).exp();
        let s = brier(b)?;
        if s < best.0 {
            best = (s, b);
        }
    }
    let step = (hi - lo) / (coarse - 1) as f64;
    let centre = best.1.ln();
    for i in 0..=40 {
        let b = (centre - step + 2.0 * step * i as f64 / 40.0).exp();
        let s = brier(b)?;
        if s < best.0 {
            best = (s, b);
        }
    }
    Ok(best.1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmdr::{BmdrEstimate, TableRow};
    use std::sync::Arc;

    fn curves() -> Arc<MiCurves> {
        MiCurves::shared()
    }

    fn table(pairs: &[(f64, f64)]) -> BmdrCerTable {
        BmdrCerTable {
            m: 2,
            k: 324,
            n: 648,
            rows: pairs
                .iter()
                .enumerate()
                .map(|(i, &(bmdr, cer))| TableRow { snr_db: i as f64, bmdr, cer, n_cw: 1000, n_mi: 1000 })
                .collect(),
        }
    }

    #[test]
    fn constant_sinr_identity() {
        let c = curves();
        for fam in [EsmFamily::Cesm, EsmFamily::Eesm, EsmFamily::Lesm, EsmFamily::Miesm] {
            for rho in [0.3, 2.0, 17.0] {
                let cfg = EsmConfig::new(fam).with_betas(1.7, 1.7).unwrap();
                let e = esm_effective_sinr(&[rho; 5], &cfg, 4, &c).unwrap();
                assert!((e.value - rho).abs() / rho < 1e-9, "{fam:?} {rho} {}", e.value);
                assert!(!e.clamped);
            }
        }
    }

    #[test]
    fn eesm_closed_form() {
        let e = std::f64::consts::E;
        let cfg = EsmConfig::new(EsmFamily::Eesm);
        let v = esm_effective_sinr(&[1.0, e], &cfg, 2, &curves()).unwrap().value;
        let want = -(((-1.0f64).exp() + (-e).exp()) / 2.0).ln();
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn miesm_clamps_at_saturation() {
        let cfg = EsmConfig::new(EsmFamily::Miesm);
        let e = esm_effective_sinr(&[1e9, 1e8], &cfg, 2, &curves()).unwrap();
        assert!(e.clamped || e.value >= 10f64.powf(3.9));
    }

    #[test]
    fn esm_rejects_bad_input() {
        let c = curves();
        let cfg = EsmConfig::new(EsmFamily::Cesm);
        assert!(esm_effective_sinr(&[], &cfg, 2, &c).is_err());
        assert!(esm_effective_sinr(&[-1.0], &cfg, 2, &c).is_err());
        assert!(esm_effective_sinr(&[0.0], &EsmConfig::new(EsmFamily::Lesm), 2, &c).is_err());
        assert!(EsmConfig::new(EsmFamily::Eesm).with_betas(0.0, 1.0).is_err());
    }

    #[test]
    fn map_cer_nearest_row() {
        let t = table(&[(0.3, 0.5), (0.4, 0.1), (0.5, 0.01)]);
        assert_eq!(map_cer(&t, 0.4).unwrap(), 0.1);
        assert_eq!(map_cer(&t, 0.9).unwrap(), 0.01);
        assert_eq!(map_cer(&t, 0.0).unwrap(), 0.5);
        assert_eq!(map_cer(&t, 0.45).unwrap(), 0.1);
        assert_eq!(map_cer(&t, 0.46).unwrap(), 0.01);
    }

    #[test]
    fn log_interp_midpoint() {
        let t = table(&[(0.4, 0.1), (0.5, 0.001)]);
        assert!((map_cer_log_interp(&t, 0.45).unwrap() - 0.01).abs() < 1e-12);
        assert_eq!(map_cer_log_interp(&t, 0.2).unwrap(), 0.1);
    }

    #[test]
    fn composition() {
        assert!((compose_tb(&[0.3]).unwrap() - 0.3).abs() < 1e-15);
        assert!((compose_tb(&[0.1, 0.1]).unwrap() - 0.19).abs() < 1e-15);
        assert!((bler(&[0.19, 0.01]).unwrap() - 0.10).abs() < 1e-15);
        assert!(compose_tb(&[1.2]).is_err());
        assert!(bler(&[]).is_err());
    }

    #[test]
    fn throughput_examples() {
        let k = vec![192; 500];
        assert!((estimate_throughput(&k, &[0.0; 500], 500, 5e-4).unwrap() - 0.384).abs() < 1e-12);
        assert_eq!(estimate_throughput(&k, &[1.0; 500], 500, 5e-4).unwrap(), 0.0);
        let half = estimate_throughput(&k, &[0.5; 500], 500, 5e-4).unwrap();
        assert!((half - 0.192).abs() < 1e-12);
        assert!(estimate_throughput(&k, &[0.0; 500], 0, 5e-4).is_err());
    }

    struct Fixed(f64);

    impl BmdrPredictor for Fixed {
        fn predict(&self, h: &ChannelRealization, _m: &[u32], _r: &mut SimRng) -> Result<Vec<BmdrEstimate>> {
            Ok(vec![BmdrEstimate::exact(self.0 * h.h[(0, 0)].re); h.n_ues()])
        }
        fn name(&self) -> String {
            "fixed".into()
        }
    }

    #[test]
    fn abstract_bmdr_is_mean_over_res() {
        let mk = |g: f64| {
            ChannelRealization::assemble(&[crate::channel::CMatrix::from_element(1, 1, g.into())], &[1.0]).unwrap()
        };
        let mut rng = crate::rng::stream(1, &[]);
        let one = abstract_bmdr(&Fixed(0.3), &[2], &[mk(1.0)], &mut rng).unwrap();
        assert!((one[0] - 0.3).abs() < 1e-15);
        let two = abstract_bmdr(&Fixed(0.1), &[2], &[mk(3.0), mk(5.0)], &mut rng).unwrap();
        assert!((two[0] - 0.4).abs() < 1e-12);
    }

    #[test]
    fn beta_csv_round_trip() {
        let mut b = BTreeMap::new();
        b.insert(1, 1.5);
        b.insert(7, 4.25);
        let mut buf = Vec::new();
        write_beta_csv(&b, &mut buf).unwrap();
        let cfg = EsmConfig::new(EsmFamily::Eesm).read_beta_csv(&buf[..]).unwrap();
        assert_eq!(cfg.per_mcs_beta, b);
        assert_eq!(cfg.for_mcs(7).beta2, 4.25);
        assert_eq!(cfg.for_mcs(2).beta1, 1.0);
    }
}
