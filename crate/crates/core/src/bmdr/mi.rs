//! AWGN bit-metric rate curves of Gray QAM with max-log demapping.
//!
//! `I_m(snr)` is `m` times the per-bit decoding rate of a scalar channel
//! `y = x + n`, `n ~ CN(0, 1/snr)`, demapped with max-log LLRs. It is computed
//! by deterministic per-axis quadrature, so the curves are reproducible
//! bit-for-bit and can be regenerated instead of shipped.

use std::io::{Read, Write};
use std::sync::{Arc, OnceLock};

use crate::error::{Error, Result};
use crate::modem::{self, log2_posterior, DEFAULT_LLR_CLIP};

pub const CURVE_DB_MIN: f64 = -30.0;
pub const CURVE_DB_MAX: f64 = 40.0;
pub const CURVE_DB_STEP: f64 = 0.1;
pub const CURVE_ORDERS: [u32; 4] = [2, 4, 6, 8];

const QUAD_POINTS: usize = 2001;
const QUAD_SPAN: f64 = 8.0;

/// One tabulated curve on a uniform dB grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MiCurve {
    m: u32,
    db0: f64,
    step: f64,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl MiCurve {
    fn from_values(m: u32, db0: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 || !(step > 0.0) {
            return Err(Error::invalid("a curve needs at least two knots"));
        }
        if values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::invalid(format!("curve for m={m} is not non-decreasing")));
        }
        let slopes = monotone_slopes(&values, step);
        Ok(Self { m, db0, step, values, slopes })
    }

    pub fn order(&self) -> u32 {
        self.m
    }

    pub fn knots_db(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| knot_db(self.db0, self.step, i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_value(&self) -> f64 {
        *self.values.last().expect("non-empty curve")
    }

    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    /// Bits per symbol at linear SNR `snr`; clamped outside the grid.
    pub fn eval(&self, snr: f64) -> f64 {
        if !(snr > 0.0) {
            return 0.0;
        }
        self.eval_db(10.0 * snr.log10())
    }

    pub fn eval_db(&self, db: f64) -> f64 {
        let last = self.values.len() - 1;
        let pos = (db - self.db0) / self.step;
        if !(pos > 0.0) {
            return self.values[0];
        }
        if pos >= last as f64 {
            return self.values[last];
        }
        let i = pos.floor() as usize;
        let t = pos - i as f64;
        if t < 1e-9 {
            return self.values[i];
        }
        if t > 1.0 - 1e-9 {
            return self.values[i + 1];
        }
        // cubic Hermite on [i, i+1]
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.slopes[i] * self.step, self.slopes[i + 1] * self.step);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1
    }

    /// Linear SNR whose curve value is `mi`; the flag is set when `mi` lies
    /// outside the tabulated range and the result was clamped.
    pub fn inverse(&self, mi: f64) -> (f64, bool) {
        let last = self.values.len() - 1;
        if mi >= self.values[last] {
            return (db_lin(knot_db(self.db0, self.step, last)), mi > self.values[last]);
        }
        if mi <= self.values[0] {
            return (db_lin(self.db0), mi < self.values[0]);
        }
        let (mut lo, mut hi) = (self.db0, knot_db(self.db0, self.step, last));
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if self.eval_db(mid) < mi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (db_lin(0.5 * (lo + hi)), false)
    }
}

fn knot_db(db0: f64, step: f64, i: usize) -> f64 {
    db0 + i as f64 * step
}

fn db_lin(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Fritsch-Carlson slopes for a monotone piecewise cubic.
fn monotone_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut d = vec![0.0; n];
    d[0] = delta[0];
    d[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        d[i] = if delta[i - 1] * delta[i] <= 0.0 { 0.0 } else { 0.5 * (delta[i - 1] + delta[i]) };
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            d[i] = 0.0;
            d[i + 1] = 0.0;
            continue;
        }
        let a = d[i] / delta[i];
        let b = d[i + 1] / delta[i];
        let s = a * a + b * b;
        if s > 9.0 {
            let tau = 3.0 / s.sqrt();
            d[i] = tau * a * delta[i];
            d[i + 1] = tau * b * delta[i];
        }
    }
    d
}

/// Curves for every supported modulation order.
#[derive(Debug, Clone, PartialEq)]
pub struct MiCurves {
    curves: Vec<MiCurve>,
}

impl MiCurves {
    /// Compute all curves on the default grid.
    pub fn generate() -> Self {
        let n = ((CURVE_DB_MAX - CURVE_DB_MIN) / CURVE_DB_STEP).round() as usize + 1;
        let curves = CURVE_ORDERS
            .iter()
            .map(|&m| {
                let mut values: Vec<f64> = (0..n)
                    .map(|i| awgn_bit_rate(m, db_lin(knot_db(CURVE_DB_MIN, CURVE_DB_STEP, i))) * m as f64)
                    .collect();
                // quadrature noise can leave ulp-level dips
                for i in 1..n {
                    if values[i] < values[i - 1] {
                        values[i] = values[i - 1];
                    }
                }
                MiCurve::from_values(m, CURVE_DB_MIN, CURVE_DB_STEP, values).expect("monotone")
            })
            .collect();
        Self { curves }
    }

    /// Process-wide shared instance.
    pub fn shared() -> Arc<MiCurves> {
        static CURVES: OnceLock<Arc<MiCurves>> = OnceLock::new();
        CURVES.get_or_init(|| Arc::new(MiCurves::generate())).clone()
    }

    pub fn curve(&self, m: u32) -> Result<&MiCurve> {
        self.curves
            .iter()
            .find(|c| c.m == m)
            .ok_or_else(|| Error::invalid(format!("no curve for modulation order {m}")))
    }

    /// Write `snr_db,m2,m4,...` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["snr_db".to_string()];
        header.extend(self.curves.iter().map(|c| format!("m{}", c.m)));
        wr.write_record(&header)?;
        let n = self.curves[0].values.len();
        for i in 0..n {
            let mut row = vec![format!("{:.1}", knot_db(self.curves[0].db0, self.curves[0].step, i))];
            row.extend(self.curves.iter().map(|c| format!("{:.17e}", c.values[i])));
            wr.write_record(&row)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let headers = rd.headers()?.clone();
        if headers.get(0) != Some("snr_db") || headers.len() < 2 {
            return Err(Error::Parse("MI curve CSV must start with an snr_db column".into()));
        }
        let orders: Vec<u32> = headers
            .iter()
            .skip(1)
            .map(|h| {
                h.strip_prefix('m')
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad curve column {h:?}")))
            })
            .collect::<Result<_>>()?;
        let mut dbs = Vec::new();
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); orders.len()];
        for rec in rd.records() {
            let rec = rec?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {s:?}")));
            dbs.push(parse(&rec[0])?);
            for (j, col) in cols.iter_mut().enumerate() {
                col.push(parse(&rec[j + 1])?);
            }
        }
        if dbs.len() < 2 {
            return Err(Error::Parse("MI curve CSV has fewer than two rows".into()));
        }
        let step = dbs[1] - dbs[0];
        if dbs.iter().enumerate().any(|(i, &d)| (d - knot_db(dbs[0], step, i)).abs() > 1e-6) {
            return Err(Error::Parse("MI curve grid must be uniform".into()));
        }
        let curves = orders
            .into_iter()
            .zip(cols)
            .map(|(m, v)| MiCurve::from_values(m, dbs[0], step, v))
            .collect::<Result<_>>()
            .map_err(|e| Error::Parse(e.to_string()))?;
        Ok(Self { curves })
    }
}

/// Per-bit max-log decoding rate of Gray `2^m`-QAM at linear SNR `snr`.
///
/// Both axes are identical, so the rate is the mean over one axis' bits.
pub fn awgn_bit_rate(m: u32, snr: f64) -> f64 {
    let c = modem::constellation(m).expect("supported order");
    if !(snr > 0.0) {
        return 0.0;
    }
    let half = (m / 2) as usize;
    let levels = c.levels();
    let labels = c.level_labels();
    let sigma = (0.5 / snr).sqrt();
    let h = 2.0 * QUAD_SPAN / (QUAD_POINTS - 1) as f64;
    let norm = 1.0 / (2.0 * std::f64::consts::PI).sqrt();
    let mut total = 0.0;
    let mut wsum = 0.0;
    let mut llrs = [0.0f64; 4];
    for (&a, &lab) in levels.iter().zip(labels) {
        for q in 0..QUAD_POINTS {
            let t = -QUAD_SPAN + q as f64 * h;
            let trap = if q == 0 || q == QUAD_POINTS - 1 { 0.5 } else { 1.0 };
            let w = trap * h * norm * (-0.5 * t * t).exp();
            let v = a + sigma * t;
            axis_llrs(levels, labels, half, v, snr, &mut llrs);
            let mut s = 0.0;
            for (j, &l) in llrs.iter().enumerate().take(half) {
                let bit = ((lab >> (half - 1 - j)) & 1) as u8;
                s += log2_posterior(l, bit);
            }
            total += w * s;
            wsum += w;
        }
    }
    // normalize the truncated Gaussian weight per level
    let per_bit = total / wsum / half as f64;
    (1.0 + per_bit).max(0.0)
}

fn axis_llrs(levels: &[f64], labels: &[u32], half: usize, v: f64, snr: f64, out: &mut [f64; 4]) {
    let mut min0 = [f64::INFINITY; 4];
    let mut min1 = [f64::INFINITY; 4];
    for (&a, &lab) in levels.iter().zip(labels) {
        let d = (v - a) * (v - a);
        for j in 0..half {
            if (lab >> (half - 1 - j)) & 1 == 1 {
                min1[j] = min1[j].min(d);
            } else {
                min0[j] = min0[j].min(d);
            }
        }
    }
    for j in 0..half {
        out[j] = modem::clip(snr * (min0[j] - min1[j]), DEFAULT_LLR_CLIP);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn qpsk_matches_closed_form_points() {
        // QPSK max-log LLRs are exact, so the rate is the BPSK capacity at
        // snr per axis: 1 - E[log2(1 + exp(-L))] with L ~ N(2s, 4s), s = snr.
        let snr: f64 = 1.0;
        let s = snr;
        let mut acc = 0.0;
        let n = 200_000;
        for i in 0..n {
            let u = (i as f64 + 0.5) / n as f64;
            let z = inv_norm_cdf(u);
            let l = 2.0 * s + 2.0 * s.sqrt() * z;
            acc += (1.0 + (-l).exp()).log2();
        }
        let expected = 1.0 - acc / n as f64;
        assert!((awgn_bit_rate(2, snr) - expected).abs() < 1e-4);
    }

    // Acklam's rational approximation, adequate for a midpoint rule.
    fn inv_norm_cdf(p: f64) -> f64 {
        let a = [
            -3.969683028665376e1,
            2.209460984245205e2,
            -2.759285104469687e2,
            1.383_577_518_672_69e2,
            -3.066479806614716e1,
            2.506628277459239,
        ];
        let b = [
            -5.447609879822406e1,
            1.615858368580409e2,
            -1.556989798598866e2,
            6.680131188771972e1,
            -1.328068155288572e1,
        ];
        let c = [
            -7.784894002430293e-3,
            -3.223964580411365e-1,
            -2.400758277161838,
            -2.549732539343734,
            4.374664141464968,
            2.938163982698783,
        ];
        let d = [7.784695709041462e-3, 3.224671290700398e-1, 2.445134137142996, 3.754408661907416];
        let plow = 0.02425;
        if p < plow {
            let q = (-2.0 * p.ln()).sqrt();
            (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5])
                / ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
        } else if p <= 1.0 - plow {
            let q = p - 0.5;
            let r = q * q;
            (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q
                / (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)
        } else {
            -inv_norm_cdf(1.0 - p)
        }
    }

    #[test]
    fn curves_saturate_and_vanish() {
        let curves = MiCurves::shared();
        for m in CURVE_ORDERS {
            let c = curves.curve(m).unwrap();
            assert!(c.max_value() > m as f64 - 1e-6, "m={m}");
            assert!(c.min_value() < 0.01 * m as f64);
        }
        assert!(curves.curve(3).is_err());
    }

    #[test]
    fn knot_lookup_is_exact_and_inverse_round_trips() {
        let curves = MiCurves::shared();
        let c = curves.curve(4).unwrap();
        let i = 300;
        let db = -30.0 + 0.1 * i as f64;
        assert_eq!(c.eval(db_lin(db)), c.values()[i]);
        for &x in &[0.3, 1.0, 2.5, 3.9] {
            let (snr, clamped) = c.inverse(x);
            assert!(!clamped);
            assert!((c.eval(snr) - x).abs() < 1e-8);
        }
        let (_, clamped) = c.inverse(4.5);
        assert!(clamped);
    }

    #[test]
    fn csv_round_trip() {
        let curves = MiCurves::shared();
        let mut buf = Vec::new();
        curves.write_csv(&mut buf).unwrap();
        let back = MiCurves::read_csv(buf.as_slice()).unwrap();
        for m in CURVE_ORDERS {
            let (a, b) = (curves.curve(m).unwrap(), back.curve(m).unwrap());
            for (x, y) in a.values().iter().zip(b.values()) {
                assert_eq!(x, y);
            }
        }
    }
}
