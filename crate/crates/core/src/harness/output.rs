//! CSV result files and the run manifest.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::Scenario;
use super::metrics::{CompareRow, CompareSummary, MetricsReport};
use super::sim::SimRun;
use crate::abstraction::compose_tb;
use crate::error::Result;

/// Contents of `manifest.toml`.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub config_sha256: String,
    pub version: String,
    pub config: Option<PathBuf>,
}

impl Manifest {
    pub fn new(command: &str, sc: &Scenario) -> Self {
        Self {
            command: command.to_string(),
            seed: sc.cfg.seed,
            config_sha256: sc.config_hash.clone(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: sc.source.clone(),
        }
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| crate::Error::Parse(e.to_string()))?;
        fs::write(dir.join("manifest.toml"), text)?;
        Ok(())
    }
}

fn writer(dir: &Path, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
    fs::create_dir_all(dir)?;
    Ok(csv::Writer::from_writer(BufWriter::new(File::create(dir.join(name))?)))
}

/// `summary.csv`, `ue_metrics.csv`, percentile curves and the confusion matrix.
pub fn write_report(dir: &Path, run: &SimRun, sc: &Scenario, report: &MetricsReport) -> Result<()> {
    let eps = sc.cfg.epsilon;
    let mut w = writer(dir, "summary.csv")?;
    w.write_record([
        "scheme",
        "am_mbps",
        "gm_mbps",
        "mean_se",
        "mean_iterations",
        "mean_evaluations",
        "frac_cer_le_3eps",
    ])?;
    for s in &report.schemes {
        w.write_record([
            s.name.clone(),
            s.am.to_string(),
            s.gm.to_string(),
            s.mean_se.to_string(),
            s.mean_iterations.to_string(),
            s.mean_evaluations.to_string(),
            s.cer_cdf(3.0 * eps).to_string(),
        ])?;
    }
    w.flush()?;

    let mut w = writer(dir, "ue_metrics.csv")?;
    w.write_record([
        "scheme",
        "drop",
        "ue",
        "pathloss_db",
        "snr_db",
        "tp_mbps",
        "cer",
        "bler",
        "codewords",
        "mean_mcs",
        "mean_bmdr_hat",
    ])?;
    for s in &report.schemes {
        for u in &s.ues {
            let d = u.drop as usize;
            w.write_record([
                s.name.clone(),
                u.drop.to_string(),
                u.ue.to_string(),
                run.pathloss_db[d][u.ue].to_string(),
                run.snr_db[d][u.ue].to_string(),
                u.tp_mbps.to_string(),
                u.cer.to_string(),
                u.bler.to_string(),
                u.codewords.to_string(),
                u.mean_mcs.to_string(),
                u.mean_bmdr_hat.to_string(),
            ])?;
        }
    }
    w.flush()?;

    for (file, col, pick) in [("cer_percentiles.csv", "cer", 0), ("mcs_percentiles.csv", "mcs_index", 1)] {
        let mut w = writer(dir, file)?;
        w.write_record(["scheme", "percentile", col])?;
        for s in &report.schemes {
            let curve = if pick == 0 { &s.cer_percentiles } else { &s.mcs_percentiles };
            for (p, v) in curve {
                w.write_record([s.name.clone(), p.to_string(), v.to_string()])?;
            }
        }
        w.flush()?;
    }

    if let Some(c) = &report.confusion {
        let mut w = writer(dir, "confusion.csv")?;
        w.write_record(["selected", "best", "fraction"])?;
        for (i, a) in c.labels.iter().enumerate() {
            for (j, b) in c.labels.iter().enumerate() {
                w.write_record([a.clone(), b.clone(), c.fractions[i][j].to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

/// Per slot, path and UE decision trace.
pub fn write_la_trace<W: Write>(run: &SimRun, sc: &Scenario, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "drop",
        "slot",
        "scheme",
        "selected",
        "ue",
        "mcs",
        "m",
        "r",
        "k",
        "n",
        "bmdr_hat",
        "delta",
        "meets_target",
        "iterations",
        "evaluations",
        "codewords",
        "decoded",
        "p_hat",
        "metric",
        "max_cond_db",
    ])?;
    for s in &run.slots {
        let cond = s.cond_db.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (pi, p) in s.paths.iter().enumerate() {
            for (i, u) in p.ues.iter().enumerate() {
                let p_hat = u.p_hat.first().map_or(String::new(), |x| x.to_string());
                let metric = if u.metric.is_nan() { String::new() } else { u.metric.to_string() };
                w.write_record([
                    s.drop.to_string(),
                    s.slot.to_string(),
                    sc.paths[pi].name.clone(),
                    u8::from(s.selected == Some(pi)).to_string(),
                    i.to_string(),
                    u.mcs.to_string(),
                    u.m.to_string(),
                    u.r.to_string(),
                    u.k.to_string(),
                    u.n.to_string(),
                    u.bmdr_hat.to_string(),
                    u.delta.to_string(),
                    u8::from(u.meets_target).to_string(),
                    p.iterations.to_string(),
                    p.evaluations.to_string(),
                    u.ok.len().max(u.p_hat.len()).to_string(),
                    u.ok.iter().filter(|&&b| b).count().to_string(),
                    p_hat,
                    metric,
                    cond.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `la_trace.csv` in `dir`.
pub fn write_la_trace_file(dir: &Path, run: &SimRun, sc: &Scenario) -> Result<()> {
    fs::create_dir_all(dir)?;
    write_la_trace(run, sc, BufWriter::new(File::create(dir.join("la_trace.csv"))?))
}

/// Per codeword abstraction estimates: `abstraction.csv`.
pub fn write_abstraction(dir: &Path, run: &SimRun, sc: &Scenario) -> Result<()> {
    let mut w = writer(dir, "abstraction.csv")?;
    w.write_record(["drop", "slot", "scheme", "ue", "tb", "cb", "metric", "p_hat", "tb_p_hat"])?;
    for s in &run.slots {
        let tb = s.drop as usize * sc.cfg.slots + s.slot;
        for (pi, p) in s.paths.iter().enumerate() {
            for (i, u) in p.ues.iter().enumerate() {
                if u.p_hat.is_empty() {
                    continue;
                }
                let tb_p = compose_tb(&u.p_hat)?;
                for (l, ph) in u.p_hat.iter().enumerate() {
                    w.write_record([
                        s.drop.to_string(),
                        s.slot.to_string(),
                        sc.paths[pi].name.clone(),
                        i.to_string(),
                        tb.to_string(),
                        l.to_string(),
                        u.metric.to_string(),
                        ph.to_string(),
                        tb_p.to_string(),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// `compare.csv` and `compare_summary.csv`.
pub fn write_compare(dir: &Path, rows: &[CompareRow], sums: &[CompareSummary]) -> Result<()> {
    let mut w = writer(dir, "compare.csv")?;
    w.write_record([
        "scheme",
        "drop",
        "ue",
        "full_tp_mbps",
        "full_cer",
        "full_bler",
        "shadow_tp_mbps",
        "shadow_cer",
        "shadow_bler",
        "abs_tp_mbps",
        "abs_cer",
        "abs_bler",
    ])?;
    for r in rows {
        w.write_record([
            r.scheme.clone(),
            r.drop.to_string(),
            r.ue.to_string(),
            r.full_tp.to_string(),
            r.full_cer.to_string(),
            r.full_bler.to_string(),
            r.shadow_tp.to_string(),
            r.shadow_cer.to_string(),
            r.shadow_bler.to_string(),
            r.abs_tp.to_string(),
            r.abs_cer.to_string(),
            r.abs_bler.to_string(),
        ])?;
    }
    w.flush()?;
    let mut w = writer(dir, "compare_summary.csv")?;
    w.write_record([
        "scheme",
        "full_am_mbps",
        "shadow_am_mbps",
        "abs_am_mbps",
        "am_rel_err",
        "bler_checked",
        "bler_within_2x",
        "tp_err_p95",
    ])?;
    for s in sums {
        w.write_record([
            s.scheme.clone(),
            s.full_am.to_string(),
            s.shadow_am.to_string(),
            s.abs_am.to_string(),
            s.am_rel_err.to_string(),
            s.bler_checked.to_string(),
            s.bler_within_2x.to_string(),
            s.tp_err_p95.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
