//! Throughput, error-rate and detector-selection statistics of a run.

use super::config::Scenario;
use super::sim::{Mode, PathSlot, SimRun, SlotResult};
use crate::error::{Error, Result};

/// Throughput floor applied before taking logarithms (Mbps).
pub const GM_FLOOR_MBPS: f64 = 1e-6;

/// Percentile levels reported for the CER and MCS curves.
pub const PERCENTILES: [f64; 21] = [
    0.0, 5.0, 10.0, 15.0, 20.0, 25.0, 30.0, 35.0, 40.0, 45.0, 50.0, 55.0, 60.0, 65.0, 70.0, 75.0, 80.0, 85.0, 90.0,
    95.0, 100.0,
];

/// Name of the per-slot detector-selection scheme.
pub const HYBRID: &str = "hybrid";

/// Statistics of one UE in one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct UeMetrics {
    pub drop: u32,
    pub ue: usize,
    pub tp_mbps: f64,
    pub cer: f64,
    pub bler: f64,
    pub codewords: usize,
    pub mean_mcs: f64,
    pub mean_bmdr_hat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeMetrics {
    pub name: String,
    pub ues: Vec<UeMetrics>,
    pub am: f64,
    pub gm: f64,
    /// (percentile, CER) over UE-drop pairs.
    pub cer_percentiles: Vec<(f64, f64)>,
    /// (percentile, MCS index) over UE-slots.
    pub mcs_percentiles: Vec<(f64, f64)>,
    pub mean_se: f64,
    pub mean_iterations: f64,
    pub mean_evaluations: f64,
}

impl SchemeMetrics {
    /// Fraction of UE-drop pairs with CER at most `x`.
    pub fn cer_cdf(&self, x: f64) -> f64 {
        let n = self.ues.len().max(1) as f64;
        self.ues.iter().filter(|u| u.cer <= x).count() as f64 / n
    }
}

/// Selected detector against the post-hoc best, as fractions of slots.
#[derive(Debug, Clone, PartialEq)]
pub struct Confusion {
    pub labels: Vec<String>,
    /// `fractions[selected][best]`.
    pub fractions: Vec<Vec<f64>>,
    pub accuracy: f64,
    pub slots: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub schemes: Vec<SchemeMetrics>,
    pub confusion: Option<Confusion>,
}

impl MetricsReport {
    pub fn scheme(&self, name: &str) -> Option<&SchemeMetrics> {
        self.schemes.iter().find(|s| s.name == name)
    }
}

/// Which numbers a report is built from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Basis {
    /// Decoding outcomes.
    Realized,
    /// Estimated codeword error rates.
    Estimated,
}

impl Basis {
    /// Natural basis of a run.
    pub fn of(run: &SimRun) -> Self {
        match run.mode {
            Mode::Full => Basis::Realized,
            Mode::Abstracted => Basis::Estimated,
        }
    }
}

/// Scheme names in report order: every path, then the hybrid selector.
pub fn scheme_names(sc: &Scenario) -> Vec<String> {
    let mut v: Vec<String> = sc.paths.iter().map(|p| p.name.clone()).collect();
    if sc.hybrid.is_some() {
        v.push(HYBRID.to_string());
    }
    v
}

fn view(slot: &SlotResult, scheme: usize) -> Result<&PathSlot> {
    if scheme < slot.paths.len() {
        return Ok(&slot.paths[scheme]);
    }
    slot.selected.map(|i| &slot.paths[i]).ok_or_else(|| Error::invalid("hybrid scheme without a selection"))
}

fn slot_bits(p: &PathSlot, basis: Basis) -> f64 {
    match basis {
        Basis::Realized => p.delivered_bits() as f64,
        Basis::Estimated => p.expected_bits(),
    }
}

/// Linearly interpolated percentile of sorted data.
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = (p / 100.0).clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn percentile_curve(mut v: Vec<f64>) -> Vec<(f64, f64)> {
    v.sort_by(f64::total_cmp);
    PERCENTILES.iter().map(|&p| (p, percentile(&v, p))).collect()
}

/// Arithmetic and floored geometric mean; the geometric mean is capped at the arithmetic one.
pub fn am_gm(tp: &[f64]) -> Result<(f64, f64)> {
    if tp.is_empty() {
        return Err(Error::invalid("no throughputs"));
    }
    let n = tp.len() as f64;
    let am = tp.iter().sum::<f64>() / n;
    let gm = (tp.iter().map(|&t| t.max(GM_FLOOR_MBPS).ln()).sum::<f64>() / n).exp();
    Ok((am, gm.min(am)))
}

/// Metrics of every scheme of a run.
pub fn compute_metrics(run: &SimRun, sc: &Scenario, basis: Basis) -> Result<MetricsReport> {
    if run.slots.is_empty() {
        return Err(Error::invalid("no slot results"));
    }
    if basis == Basis::Estimated && run.mode == Mode::Full && !run.shadow {
        return Err(Error::invalid("full run without abstraction estimates"));
    }
    let names = scheme_names(sc);
    let drops: Vec<u32> = {
        let mut d: Vec<u32> = run.slots.iter().map(|s| s.drop).collect();
        d.dedup();
        d
    };
    let t_slot = sc.cfg.t_slot;
    let mut schemes = Vec::with_capacity(names.len());
    for (si, name) in names.iter().enumerate() {
        let mut ues = Vec::new();
        let mut am_sum = 0.0;
        let mut gm_sum = 0.0;
        let mut mcs_all = Vec::new();
        let (mut se, mut it, mut ev, mut count) = (0.0, 0.0, 0.0, 0usize);
        for &d in &drops {
            let slots: Vec<&SlotResult> = run.slots.iter().filter(|s| s.drop == d).collect();
            let n_u = slots[0].paths[0].ues.len();
            let mut drop_tp = Vec::with_capacity(n_u);
            for i in 0..n_u {
                let (mut bits, mut cw, mut err, mut tb_err, mut mcs, mut bm) = (0.0, 0usize, 0.0, 0.0, 0.0, 0.0);
                for s in &slots {
                    let u = &view(s, si)?.ues[i];
                    cw += u.ok.len().max(u.p_hat.len());
                    match basis {
                        Basis::Realized => {
                            let fails = u.ok.iter().filter(|&&b| !b).count();
                            bits += ((u.ok.len() - fails) * u.k) as f64;
                            err += fails as f64;
                            tb_err += f64::from(u8::from(fails > 0));
                        }
                        Basis::Estimated => {
                            bits += u.p_hat.iter().map(|p| (1.0 - p) * u.k as f64).sum::<f64>();
                            err += u.p_hat.iter().sum::<f64>();
                            tb_err += 1.0 - u.p_hat.iter().map(|p| 1.0 - p).product::<f64>();
                        }
                    }
                    mcs += u.mcs as f64;
                    bm += u.bmdr_hat;
                    mcs_all.push(u.mcs as f64);
                }
                let t = slots.len() as f64;
                let tp = bits / (t * t_slot) / 1e6;
                drop_tp.push(tp);
                ues.push(UeMetrics {
                    drop: d,
                    ue: i,
                    tp_mbps: tp,
                    cer: if cw > 0 { err / cw as f64 } else { 0.0 },
                    bler: tb_err / t,
                    codewords: cw,
                    mean_mcs: mcs / t,
                    mean_bmdr_hat: bm / t,
                });
            }
            let (a, g) = am_gm(&drop_tp)?;
            am_sum += a;
            gm_sum += g;
            for s in &slots {
                let p = view(s, si)?;
                se += p.se_sum();
                it += p.iterations as f64;
                ev += p.evaluations as f64;
                count += 1;
            }
        }
        let nd = drops.len() as f64;
        let cers = ues.iter().map(|u| u.cer).collect();
        schemes.push(SchemeMetrics {
            name: name.clone(),
            am: am_sum / nd,
            gm: (gm_sum / nd).min(am_sum / nd),
            cer_percentiles: percentile_curve(cers),
            mcs_percentiles: percentile_curve(mcs_all),
            mean_se: se / count as f64,
            mean_iterations: it / count as f64,
            mean_evaluations: ev / count as f64,
            ues,
        });
    }
    let confusion = match &sc.hybrid {
        Some(members) => Some(confusion(run, sc, members, basis)?),
        None => None,
    };
    Ok(MetricsReport { schemes, confusion })
}

/// Per-slot post-hoc best member; ties resolve toward `selected`.
pub fn post_hoc_best(slot: &SlotResult, members: &[usize], basis: Basis) -> Option<usize> {
    let sel = slot.selected?;
    let best = members.iter().map(|&i| slot_bits(&slot.paths[i], basis)).fold(f64::NEG_INFINITY, f64::max);
    if slot_bits(&slot.paths[sel], basis) >= best {
        return Some(sel);
    }
    members.iter().copied().find(|&i| slot_bits(&slot.paths[i], basis) >= best)
}

fn confusion(run: &SimRun, sc: &Scenario, members: &[usize], basis: Basis) -> Result<Confusion> {
    let k = members.len();
    let mut counts = vec![vec![0usize; k]; k];
    let pos = |p: usize| members.iter().position(|&m| m == p);
    let mut total = 0;
    for s in &run.slots {
        let (Some(sel), Some(best)) = (s.selected, post_hoc_best(s, members, basis)) else {
            continue;
        };
        let (Some(a), Some(b)) = (pos(sel), pos(best)) else {
            return Err(Error::invalid("selected path is not a hybrid member"));
        };
        counts[a][b] += 1;
        total += 1;
    }
    let n = total.max(1) as f64;
    let fractions: Vec<Vec<f64>> = counts.iter().map(|row| row.iter().map(|&c| c as f64 / n).collect()).collect();
    let accuracy = (0..k).map(|i| fractions[i][i]).sum();
    Ok(Confusion {
        labels: members.iter().map(|&i| sc.paths[i].name.clone()).collect(),
        fractions,
        accuracy,
        slots: total,
    })
}

/// One UE-drop of a paired full/abstracted comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub scheme: String,
    pub drop: u32,
    pub ue: usize,
    pub full_tp: f64,
    pub full_cer: f64,
    pub full_bler: f64,
    /// Estimates on the full run's own MCS trajectory.
    pub shadow_tp: f64,
    pub shadow_cer: f64,
    pub shadow_bler: f64,
    /// Closed-loop abstracted run.
    pub abs_tp: f64,
    pub abs_cer: f64,
    pub abs_bler: f64,
}

/// Aggregate agreement of one scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareSummary {
    pub scheme: String,
    pub full_am: f64,
    pub shadow_am: f64,
    pub abs_am: f64,
    /// |abs_am - full_am| / full_am.
    pub am_rel_err: f64,
    /// UEs with full BLER in [1e-2, 0.5].
    pub bler_checked: usize,
    /// Of those, shadow BLER within a factor of two.
    pub bler_within_2x: usize,
    /// 95th percentile of per-UE |abs_tp - full_tp| / full_tp.
    pub tp_err_p95: f64,
}

/// Join a full run (with shadow estimates) and an abstracted run of the same scenario.
pub fn compare_runs(full: &SimRun, abs: &SimRun, sc: &Scenario) -> Result<(Vec<CompareRow>, Vec<CompareSummary>)> {
    let f = compute_metrics(full, sc, Basis::Realized)?;
    let sh = compute_metrics(full, sc, Basis::Estimated)?;
    let ab = compute_metrics(abs, sc, Basis::Estimated)?;
    let mut rows = Vec::new();
    let mut sums = Vec::new();
    for ((fs, ss), as_) in f.schemes.iter().zip(&sh.schemes).zip(&ab.schemes) {
        let mut checked = 0;
        let mut within = 0;
        let mut errs = Vec::new();
        for ((a, b), c) in fs.ues.iter().zip(&ss.ues).zip(&as_.ues) {
            if (1e-2..=0.5).contains(&a.bler) {
                checked += 1;
                if b.bler <= 2.0 * a.bler && b.bler >= 0.5 * a.bler {
                    within += 1;
                }
            }
            if a.tp_mbps > 0.0 {
                errs.push((c.tp_mbps - a.tp_mbps).abs() / a.tp_mbps);
            }
            rows.push(CompareRow {
                scheme: fs.name.clone(),
                drop: a.drop,
                ue: a.ue,
                full_tp: a.tp_mbps,
                full_cer: a.cer,
                full_bler: a.bler,
                shadow_tp: b.tp_mbps,
                shadow_cer: b.cer,
                shadow_bler: b.bler,
                abs_tp: c.tp_mbps,
                abs_cer: c.cer,
                abs_bler: c.bler,
            });
        }
        errs.sort_by(f64::total_cmp);
        sums.push(CompareSummary {
            scheme: fs.name.clone(),
            full_am: fs.am,
            shadow_am: ss.am,
            abs_am: as_.am,
            am_rel_err: if fs.am > 0.0 {
                (as_.am - fs.am).abs() / fs.am
            } else if as_.am == 0.0 {
                0.0
            } else {
                f64::INFINITY
            },
            bler_checked: checked,
            bler_within_2x: within,
            tp_err_p95: if errs.is_empty() { 0.0 } else { percentile(&errs, 95.0) },
        });
    }
    Ok((rows, sums))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn am_gm_examples() {
        let (a, g) = am_gm(&[1.0, 4.0]).unwrap();
        assert!((a - 2.5).abs() < 1e-12);
        assert!((g - 2.0).abs() < 1e-12);
        let (a, g) = am_gm(&[0.0, 0.0]).unwrap();
        assert_eq!(a, 0.0);
        assert_eq!(g, 0.0);
        assert!(am_gm(&[]).is_err());
    }

    #[test]
    fn percentiles_interpolate() {
        let v = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 50.0), 3.0);
        assert_eq!(percentile(&v, 100.0), 5.0);
        assert!((percentile(&v, 12.5) - 1.5).abs() < 1e-12);
        let c = percentile_curve(vec![0.3; 4]);
        assert!(c.iter().all(|&(_, x)| x == 0.3));
    }
}
