//! AWGN BMDR-to-CER tables and target-BMDR queries.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::Rng;
use rayon::prelude::*;

use super::mc::siso_bmdr_mc;
use super::mi::MiCurves;
use crate::channel::complex_gaussian;
use crate::coding::{CodeSpec, Interleaver};
use crate::error::{Error, Result};
use crate::modem::{self, DEFAULT_LLR_CLIP};
use crate::rng::{self, Purpose};

const TABLE_VERSION: u32 = 1;

/// Codewords simulated between early-stopping checks.
const CW_BATCH: usize = 64;

/// One SNR point of a table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableRow {
    pub snr_db: f64,
    pub bmdr: f64,
    pub cer: f64,
    pub n_cw: usize,
    pub n_mi: usize,
}

/// Empirical map from AWGN BMDR (MLD) to codeword error rate for one code
/// and modulation.
#[derive(Debug, Clone, PartialEq)]
pub struct BmdrCerTable {
    pub m: u32,
    pub k: usize,
    pub n: usize,
    /// Rows in SNR order.
    pub rows: Vec<TableRow>,
}

/// Budgets for one table build.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TableBudget {
    pub max_codewords: usize,
    /// Stop a point once this many codeword errors were seen.
    pub max_errors: usize,
    pub mi_samples: usize,
    pub max_iters: usize,
    /// End the sweep after this many consecutive error-free points (0 runs the full grid).
    pub stop_after_clean: usize,
}

impl Default for TableBudget {
    fn default() -> Self {
        Self {
            max_codewords: 20_000,
            max_errors: 100,
            mi_samples: 10_000,
            max_iters: crate::coding::DEFAULT_MAX_ITERS,
            stop_after_clean: 0,
        }
    }
}

impl BmdrCerTable {
    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Canonical file name.
    pub fn file_name(&self) -> String {
        table_file_name(self.m, self.k, self.n)
    }

    /// `(bmdr, cer)` pairs sorted by BMDR with CER made non-increasing by
    /// weighted isotonic regression.
    pub fn monotone_pairs(&self) -> Vec<(f64, f64)> {
        let mut rows: Vec<&TableRow> = self.rows.iter().collect();
        rows.sort_by(|a, b| a.bmdr.total_cmp(&b.bmdr).then(a.snr_db.total_cmp(&b.snr_db)));
        let cer: Vec<f64> = rows.iter().map(|r| r.cer).collect();
        let w: Vec<f64> = rows.iter().map(|r| r.n_cw.max(1) as f64).collect();
        let fitted = isotonic_non_increasing(&cer, &w);
        rows.iter().zip(fitted).map(|(r, c)| (r.bmdr, c)).collect()
    }

    /// Smallest BMDR whose (cleaned) CER is at most `epsilon`.
    pub fn target(&self, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("target CER must lie in (0,1) (got {epsilon})")));
        }
        self.monotone_pairs()
            .into_iter()
            .filter(|&(_, c)| c <= epsilon)
            .map(|(b, _)| b)
            .reduce(f64::min)
            .ok_or(Error::TargetUnreachable { m: self.m, k: self.k, n: self.n, epsilon })
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# bmdr-cer-table v{TABLE_VERSION} m={} k={} n={}", self.m, self.k, self.n)?;
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["snr_db", "bmdr", "cer", "n_cw", "n_mi"])?;
        for r in &self.rows {
            wr.write_record([
                format!("{:.4}", r.snr_db),
                format!("{:.10}", r.bmdr),
                format!("{:.10e}", r.cer),
                r.n_cw.to_string(),
                r.n_mi.to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut br = BufReader::new(r);
        let mut first = String::new();
        br.read_line(&mut first)?;
        let header = first
            .trim()
            .strip_prefix("# bmdr-cer-table v")
            .ok_or_else(|| Error::Parse("missing table header line".into()))?;
        let mut fields = header.split_whitespace();
        let version: u32 =
            fields.next().and_then(|v| v.parse().ok()).ok_or_else(|| Error::Parse("bad table version".into()))?;
        if version != TABLE_VERSION {
            return Err(Error::Parse(format!("unsupported table version {version}")));
        }
        let (mut m, mut k, mut n) = (None, None, None);
        for f in fields {
            let (key, val) = f.split_once('=').ok_or_else(|| Error::Parse(format!("bad header field {f:?}")))?;
            let val: usize = val.parse().map_err(|_| Error::Parse(format!("bad header value {f:?}")))?;
            match key {
                "m" => m = Some(val as u32),
                "k" => k = Some(val),
                "n" => n = Some(val),
                _ => {}
            }
        }
        let (m, k, n) = match (m, k, n) {
            (Some(m), Some(k), Some(n)) if k < n => (m, k, n),
            _ => return Err(Error::Parse("table header needs m, k < n".into())),
        };
        let mut rd = csv::Reader::from_reader(br);
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            if rec.len() != 5 {
                return Err(Error::Parse("table rows need 5 columns".into()));
            }
            let f =
                |i: usize| rec[i].trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number {:?}", &rec[i])));
            let u =
                |i: usize| rec[i].trim().parse::<usize>().map_err(|_| Error::Parse(format!("bad count {:?}", &rec[i])));
            let row = TableRow { snr_db: f(0)?, bmdr: f(1)?, cer: f(2)?, n_cw: u(3)?, n_mi: u(4)? };
            if !(0.0..=1.0).contains(&row.cer) || !(0.0..=1.0).contains(&row.bmdr) {
                return Err(Error::Parse("table values must lie in [0,1]".into()));
            }
            rows.push(row);
        }
        if rows.is_empty() {
            return Err(Error::Parse("table has no rows".into()));
        }
        Ok(Self { m, k, n, rows })
    }

    pub fn save(&self, dir: &Path) -> Result<std::path::PathBuf> {
        std::fs::create_dir_all(dir)?;
        let path = dir.join(self.file_name());
        let f = std::fs::File::create(&path)?;
        self.write_csv(std::io::BufWriter::new(f))?;
        Ok(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path)
            .map_err(|_| Error::MissingFile { path: path.to_path_buf(), hint: "table file not found".into() })?;
        Self::read_csv(f)
    }
}

pub fn table_file_name(m: u32, k: usize, n: usize) -> String {
    format!("bmdr_m{m}_k{k}_n{n}.csv")
}

/// Pool-adjacent-violators fit of a non-increasing sequence.
pub fn isotonic_non_increasing(y: &[f64], w: &[f64]) -> Vec<f64> {
    // blocks of (mean, weight, count)
    let mut blocks: Vec<(f64, f64, usize)> = Vec::with_capacity(y.len());
    for (&v, &wt) in y.iter().zip(w) {
        blocks.push((v, wt, 1));
        while blocks.len() > 1 {
            let (m2, w2, c2) = blocks[blocks.len() - 1];
            let (m1, w1, c1) = blocks[blocks.len() - 2];
            if m1 >= m2 {
                break;
            }
            blocks.pop();
            let wt = w1 + w2;
            *blocks.last_mut().expect("non-empty") = ((m1 * w1 + m2 * w2) / wt, wt, c1 + c2);
        }
    }
    blocks.into_iter().flat_map(|(m, _, c)| std::iter::repeat_n(m, c)).collect()
}

/// SNR grid `start, start + step, ...` up to and including `stop`.
pub fn snr_grid(start_db: f64, stop_db: f64, step_db: f64) -> Result<Vec<f64>> {
    if !(step_db > 0.0) || stop_db < start_db {
        return Err(Error::invalid("SNR grid needs step > 0 and stop >= start"));
    }
    let n = ((stop_db - start_db) / step_db + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start_db + i as f64 * step_db).collect())
}

/// Grid covering AWGN BMDR from `r - below` up to `min(r + above, 0.995)`.
///
/// Endpoints come from the AWGN curve of modulation `m` and are snapped to
/// multiples of `step_db`.
pub fn auto_grid(curves: &MiCurves, m: u32, r: f64, below: f64, above: f64, step_db: f64) -> Result<Vec<f64>> {
    if !(r > 0.0 && r < 1.0) || below < 0.0 || above < 0.0 {
        return Err(Error::invalid("auto grid needs 0 < r < 1 and non-negative margins"));
    }
    let curve = curves.curve(m)?;
    let mf = m as f64;
    let to_db = |b: f64| 10.0 * curve.inverse(b.clamp(1e-6, 0.995) * mf).0.log10();
    let lo = (to_db(r - below) / step_db).floor() * step_db;
    let hi = (to_db((r + above).min(0.995)) / step_db).ceil() * step_db;
    snr_grid(lo, hi.max(lo), step_db)
}

/// Build the table of one code and modulation on an SNR grid.
///
/// Every codeword and symbol draw comes from a stream keyed by
/// `(seed, m, n, k, point, index)`, and points stop early on a fixed batch
/// boundary, so the result does not depend on the worker count.
pub fn build_awgn_table(
    code: &CodeSpec,
    m: u32,
    snr_grid_db: &[f64],
    budget: TableBudget,
    seed: u64,
) -> Result<BmdrCerTable> {
    if snr_grid_db.is_empty() {
        return Err(Error::invalid("SNR grid is empty"));
    }
    if budget.max_codewords == 0 || budget.mi_samples == 0 || budget.max_errors == 0 {
        return Err(Error::invalid("table budgets must be at least 1"));
    }
    if !code.n().is_multiple_of(m as usize) {
        return Err(Error::invalid(format!("codeword length {} is not a multiple of m={m}", code.n())));
    }
    modem::constellation(m)?;
    let il = Interleaver::new(code.n());
    let base = [Purpose::Table as u64, m as u64, code.n() as u64, code.k() as u64];
    let mut rows = Vec::with_capacity(snr_grid_db.len());
    let mut clean = 0;
    for (pi, &snr_db) in snr_grid_db.iter().enumerate() {
        let snr = 10f64.powf(snr_db / 10.0);
        let tags = [base[0], base[1], base[2], base[3], pi as u64];
        let mut mi_rng = rng::stream(seed, &[tags[0], tags[1], tags[2], tags[3], tags[4], u64::MAX]);
        let bmdr = siso_bmdr_mc(m, snr, budget.mi_samples, &mut mi_rng)?.value;
        let mut errors = 0;
        let mut done = 0;
        while done < budget.max_codewords && errors < budget.max_errors {
            let batch = CW_BATCH.min(budget.max_codewords - done);
            let errs: usize = (done..done + batch)
                .into_par_iter()
                .map(|cw| -> Result<usize> {
                    let mut r = rng::stream(seed, &[tags[0], tags[1], tags[2], tags[3], tags[4], cw as u64]);
                    Ok(usize::from(!siso_codeword_ok(code, &il, m, snr, budget.max_iters, &mut r)?))
                })
                .collect::<Result<Vec<_>>>()?
                .into_iter()
                .sum();
            errors += errs;
            done += batch;
        }
        rows.push(TableRow { snr_db, bmdr, cer: errors as f64 / done as f64, n_cw: done, n_mi: budget.mi_samples });
        clean = if errors == 0 { clean + 1 } else { 0 };
        if budget.stop_after_clean > 0 && clean >= budget.stop_after_clean {
            break;
        }
    }
    Ok(BmdrCerTable { m, k: code.k(), n: code.n(), rows })
}

/// One coded transmission over SISO AWGN; true if the message is recovered.
pub fn siso_codeword_ok<R: Rng + ?Sized>(
    code: &CodeSpec,
    il: &Interleaver,
    m: u32,
    snr: f64,
    max_iters: usize,
    rng: &mut R,
) -> Result<bool> {
    let c = modem::constellation(m)?;
    let msg: Vec<u8> = (0..code.k()).map(|_| rng.random_range(0..2u8)).collect();
    let word = code.encode(&msg)?;
    let tx = il.interleave(&word);
    let syms = modem::map_bits(&tx, c)?;
    let var = 1.0 / snr;
    let mut llrs = vec![0.0; code.n()];
    for (s, chunk) in syms.iter().zip(llrs.chunks_exact_mut(m as usize)) {
        let y = s + complex_gaussian(var, rng);
        c.maxlog_llrs(y, snr, DEFAULT_LLR_CLIP, chunk);
    }
    let out = code.decode(&il.deinterleave(&llrs), max_iters)?;
    Ok(out.success && out.message == msg)
}

/// Collection of tables with target-BMDR queries.
#[derive(Debug, Clone, Default)]
pub struct TableSet {
    tables: Vec<BmdrCerTable>,
}

/// How a target was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TargetSource {
    Exact,
    OtherModulation,
    Interpolated,
}

impl TableSet {
    pub fn new(tables: Vec<BmdrCerTable>) -> Self {
        Self { tables }
    }

    pub fn push(&mut self, t: BmdrCerTable) {
        self.tables.push(t);
    }

    pub fn tables(&self) -> &[BmdrCerTable] {
        &self.tables
    }

    pub fn is_empty(&self) -> bool {
        self.tables.is_empty()
    }

    /// Load every `bmdr_m*_k*_n*.csv` file in a directory, in name order.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let entries = std::fs::read_dir(dir)
            .map_err(|_| Error::MissingFile { path: dir.to_path_buf(), hint: "table directory not found".into() })?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| {
                p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.starts_with("bmdr_m") && n.ends_with(".csv"))
            })
            .collect();
        paths.sort();
        let tables = paths.iter().map(|p| BmdrCerTable::load(p)).collect::<Result<_>>()?;
        Ok(Self { tables })
    }

    /// Table for exactly `(m, k, n)`, if built.
    pub fn find(&self, m: u32, k: usize, n: usize) -> Option<&BmdrCerTable> {
        self.tables.iter().find(|t| t.m == m && t.k == k && t.n == n)
    }

    /// Table of the same rate and length with any modulation, preferring `m`.
    pub fn find_rate_length(&self, m: u32, r: f64, n: usize) -> Option<&BmdrCerTable> {
        let mut cands: Vec<&BmdrCerTable> =
            self.tables.iter().filter(|t| t.n == n && (t.rate() - r).abs() < 1e-6).collect();
        cands.sort_by_key(|t| (t.m != m, t.m.abs_diff(m), t.m));
        cands.first().copied()
    }

    /// Target BMDR for `(m, r, n)` at CER `epsilon` with its provenance.
    pub fn target_with_source(&self, m: u32, r: f64, n: usize, epsilon: f64) -> Result<(f64, TargetSource)> {
        let unreachable = Error::TargetUnreachable { m, k: (r * n as f64).round() as usize, n, epsilon };
        if let Some(t) = self.find_rate_length(m, r, n) {
            let src = if t.m == m { TargetSource::Exact } else { TargetSource::OtherModulation };
            return t.target(epsilon).map(|v| (v, src));
        }
        // bracketing lengths of the same rate, same modulation preferred
        let same_rate: Vec<&BmdrCerTable> = self.tables.iter().filter(|t| (t.rate() - r).abs() < 1e-6).collect();
        let pick = |pool: &[&BmdrCerTable]| -> Option<(usize, usize)> {
            let below = pool.iter().map(|t| t.n).filter(|&x| x < n).max()?;
            let above = pool.iter().map(|t| t.n).filter(|&x| x > n).min()?;
            Some((below, above))
        };
        let same_m: Vec<&BmdrCerTable> = same_rate.iter().copied().filter(|t| t.m == m).collect();
        let (n1, n2) = pick(&same_m).or_else(|| pick(&same_rate)).ok_or(unreachable)?;
        let (t1, _) = self.target_with_source(m, r, n1, epsilon)?;
        let (t2, _) = self.target_with_source(m, r, n2, epsilon)?;
        let (x1, x2, x) = (1.0 / n1 as f64, 1.0 / n2 as f64, 1.0 / n as f64);
        let v = t1 + (t2 - t1) * (x - x1) / (x2 - x1);
        Ok((v, TargetSource::Interpolated))
    }

    pub fn target(&self, m: u32, r: f64, n: usize, epsilon: f64) -> Result<f64> {
        self.target_with_source(m, r, n, epsilon).map(|(v, _)| v)
    }
}

/// Target BMDR required to meet CER `epsilon` with code `(r, n)` and modulation `m`.
pub fn target_bmdr(tables: &TableSet, m: u32, r: f64, n: usize, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::invalid(format!("target CER must lie in (0,1) (got {epsilon})")));
    }
    tables.target(m, r, n, epsilon)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(m: u32, k: usize, n: usize, pairs: &[(f64, f64)]) -> BmdrCerTable {
        BmdrCerTable {
            m,
            k,
            n,
            rows: pairs
                .iter()
                .enumerate()
                .map(|(i, &(b, c))| TableRow { snr_db: i as f64, bmdr: b, cer: c, n_cw: 1000, n_mi: 1000 })
                .collect(),
        }
    }

    #[test]
    fn direct_query() {
        let t = table(2, 216, 648, &[(0.40, 0.2), (0.45, 1e-3), (0.50, 1e-4)]);
        assert_eq!(t.target(1e-3).unwrap(), 0.45);
        assert!(matches!(t.target(1e-6), Err(Error::TargetUnreachable { .. })));
    }

    #[test]
    fn isotonic_cleanup() {
        let fitted = isotonic_non_increasing(&[0.5, 0.1, 0.2, 0.0], &[1.0, 1.0, 1.0, 1.0]);
        let expected = [0.5, 0.15, 0.15, 0.0];
        assert!(fitted.iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-15));
        let t = table(2, 216, 648, &[(0.40, 0.3), (0.42, 0.0), (0.44, 0.02), (0.46, 0.0)]);
        // the zero at 0.42 is pooled with the 0.02 that follows it
        assert_eq!(t.target(0.005).unwrap(), 0.46);
    }

    #[test]
    fn length_interpolation_and_fallbacks() {
        let set = TableSet::new(vec![
            table(2, 216, 648, &[(0.40, 0.5), (0.50, 0.0)]),
            table(2, 600, 1800, &[(0.38, 0.5), (0.44, 0.0)]),
            table(4, 432, 1296, &[(0.41, 0.5), (0.47, 0.0)]),
        ]);
        let r = 1.0 / 3.0;
        assert_eq!(set.target_with_source(2, r, 648, 1e-3).unwrap(), (0.50, TargetSource::Exact));
        let (v, src) = set.target_with_source(2, r, 1296, 1e-3).unwrap();
        assert_eq!(src, TargetSource::OtherModulation);
        assert_eq!(v, 0.47);
        let (v, src) = set.target_with_source(2, r, 1000, 1e-3).unwrap();
        assert_eq!(src, TargetSource::Interpolated);
        // same-modulation tables at 648 and 1800 bracket 1000
        let (x1, x2, x) = (1.0 / 648.0, 1.0 / 1800.0, 1.0 / 1000.0);
        let expected = 0.50 + (0.44 - 0.50) * (x - x1) / (x2 - x1);
        assert!((v - expected).abs() < 1e-12);
        assert!(set.target(2, 0.5, 648, 1e-3).is_err());
        assert!(set.target(2, r, 3000, 1e-3).is_err());
        assert!(target_bmdr(&set, 2, r, 648, 0.0).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let t = table(4, 432, 1296, &[(0.41, 0.5), (0.47, 1e-3)]);
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let back = BmdrCerTable::read_csv(buf.as_slice()).unwrap();
        assert_eq!((back.m, back.k, back.n), (4, 432, 1296));
        assert_eq!(back.rows.len(), 2);
        assert!((back.rows[1].cer - 1e-3).abs() < 1e-15);
        assert!(BmdrCerTable::read_csv("snr_db,bmdr\n".as_bytes()).is_err());
    }

    #[test]
    fn grid() {
        assert_eq!(snr_grid(0.0, 1.0, 0.25).unwrap().len(), 5);
        assert!(snr_grid(1.0, 0.0, 0.25).is_err());
    }

    #[test]
    fn small_build_has_one_row_per_point() {
        let code = CodeSpec::qc_ira(240, 12).unwrap();
        let budget =
            TableBudget { max_codewords: 64, max_errors: 10, mi_samples: 200, max_iters: 20, stop_after_clean: 0 };
        let t = build_awgn_table(&code, 2, &[-2.0, 12.0], budget, 1).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert!(t.rows[0].cer > t.rows[1].cer);
        assert_eq!(t.rows[1].cer, 0.0);
        assert!(t.rows[1].bmdr > 0.99);
        let early = TableBudget { stop_after_clean: 1, ..budget };
        let t = build_awgn_table(&code, 2, &[12.0, 13.0, 14.0], early, 1).unwrap();
        assert_eq!(t.rows.len(), 1);
    }

    #[test]
    fn auto_grid_brackets_the_rate() {
        let c = MiCurves::shared();
        let g = auto_grid(&c, 2, 0.5, 0.1, 0.3, 0.2).unwrap();
        let lo = c.curve(2).unwrap().eval_db(g[0]) / 2.0;
        let hi = c.curve(2).unwrap().eval_db(*g.last().unwrap()) / 2.0;
        assert!(lo <= 0.4 + 1e-9 && hi >= 0.8 - 1e-9, "{lo} {hi}");
    }
}
