//! Closed-loop slot simulation, full chain or abstracted.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use super::config::{CerMap, LaMode, PathSpec, Scenario};
use crate::abstraction::{abstract_bmdr, awgn_bmdr, esm_effective_sinr, map_cer, map_cer_log_interp, table_for};
use crate::bmdr::{build_predictor, BmdrPredictor, MiCurves, TableSet};
use crate::channel::{
    colored_noise, condition_db, db_to_linear, estimation_error, olpc_power, CMatrix, CVector, ChannelRealization,
};
use crate::coding::{CodeSpec, Interleaver};
use crate::detect::{lmmse_sinr, PreparedDetector};
use crate::error::{Error, Result};
use crate::linkadapt::{
    codeword_length, message_length, select_detector, select_detector_weighted, select_mcs, select_mcs_single,
    LaContext, LaState, UeMcs,
};
use crate::modem;
use crate::rng::{self, stream_id, Purpose};

/// Data path of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Encode, transmit, detect and decode every codeword.
    Full,
    /// Replace the data path by BMDR/ESM error estimates.
    Abstracted,
}

/// One UE's slot on one scheme path.
#[derive(Debug, Clone, PartialEq)]
pub struct UeSlot {
    pub mcs: usize,
    pub m: u32,
    pub r: f64,
    pub k: usize,
    pub n: usize,
    /// Predicted BMDR (or ESM-equivalent) used for the MCS decision.
    pub bmdr_hat: f64,
    /// Correction offset at decision time.
    pub delta: f64,
    pub meets_target: bool,
    /// Per codeword: decoded correctly (full) or the Bernoulli feedback draw (abstracted).
    pub ok: Vec<bool>,
    /// Per codeword estimated CER; empty in full runs without shadow abstraction.
    pub p_hat: Vec<f64>,
    /// Abstraction metric of the current slot (BMDR or ESM-equivalent), NaN when not computed.
    pub metric: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PathSlot {
    pub ues: Vec<UeSlot>,
    pub iterations: usize,
    pub evaluations: usize,
}

impl PathSlot {
    /// Realized bits delivered in this slot.
    pub fn delivered_bits(&self) -> usize {
        self.ues.iter().map(|u| u.ok.iter().filter(|&&b| b).count() * u.k).sum()
    }

    /// Expected bits under the estimated CERs.
    pub fn expected_bits(&self) -> f64 {
        self.ues.iter().map(|u| u.p_hat.iter().map(|p| (1.0 - p) * u.k as f64).sum::<f64>()).sum()
    }

    pub fn se_sum(&self) -> f64 {
        self.ues.iter().map(|u| u.r * u.m as f64).sum()
    }
}

/// Everything recorded for one slot of one drop.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotResult {
    pub drop: u32,
    pub slot: usize,
    /// One entry per scheme path, in scenario order.
    pub paths: Vec<PathSlot>,
    /// Path chosen by the hybrid selector.
    pub selected: Option<usize>,
    /// Condition number of each coherence block's composite channel.
    pub cond_db: Vec<f64>,
    /// Per UE, LMMSE post-equalization SINRs of every stream and block as seen by the receiver.
    pub sinr: Vec<Vec<f64>>,
}

/// Output of a simulation run.
#[derive(Debug, Clone)]
pub struct SimRun {
    pub mode: Mode,
    pub shadow: bool,
    pub slots: Vec<SlotResult>,
    /// Per drop, per UE pathloss (dB) and per-RE SNR (dB).
    pub pathloss_db: Vec<Vec<f64>>,
    pub snr_db: Vec<Vec<f64>>,
}

struct Code {
    spec: CodeSpec,
    il: Interleaver,
}

/// Simulation engine bound to one scenario and table set.
pub struct Engine {
    pub sc: Scenario,
    tables: TableSet,
    curves: Arc<MiCurves>,
    predictors: Vec<Arc<dyn BmdrPredictor>>,
    codes: HashMap<(usize, usize), Code>,
}

impl Engine {
    /// Load the scenario's tables from its table directory.
    pub fn new(sc: Scenario) -> Result<Self> {
        let dir = sc.tables_dir();
        let tables = if dir.is_dir() { TableSet::load_dir(&dir)? } else { TableSet::default() };
        Self::with_tables(sc, tables)
    }

    pub fn with_tables(sc: Scenario, tables: TableSet) -> Result<Self> {
        let missing: Vec<String> = sc
            .required_tables()
            .iter()
            .filter(|t| tables.find_rate_length(t.m, t.r, t.n).is_none())
            .map(|t| format!("(m={}, r={:.4}, n={})", t.m, t.r, t.n))
            .collect();
        if !missing.is_empty() {
            return Err(Error::Config(format!(
                "missing BMDR-CER tables in {} for {}; run `{}`",
                sc.tables_dir().display(),
                missing.join(", "),
                sc.build_hint()
            )));
        }
        let curves = MiCurves::shared();
        let predictors = sc
            .detectors
            .iter()
            .zip(&sc.predictors)
            .map(|(d, &k)| build_predictor(k, d, curves.clone()))
            .collect::<Result<Vec<_>>>()?;
        let mut codes = HashMap::new();
        let mut nts = sc.n_t.clone();
        nts.sort_unstable();
        nts.dedup();
        for e in sc.mcs.entries() {
            for &t in &nts {
                let n = codeword_length(sc.cfg.n_re, e.m, t);
                let k = message_length(e.r, n);
                if codes.contains_key(&(n, k)) {
                    continue;
                }
                let spec = CodeSpec::qc_for_rate(n, e.r)
                    .map_err(|err| Error::Config(format!("MCS {}: no code for n={n}, r={}: {err}", e.index, e.r)))?;
                if spec.k() != k {
                    return Err(Error::Config(format!(
                        "MCS {}: rate {} gives k={} for n={n}, the code family gives k={}",
                        e.index,
                        e.r,
                        k,
                        spec.k()
                    )));
                }
                codes.insert((n, k), Code { il: Interleaver::new(n), spec });
            }
        }
        Ok(Self { sc, tables, curves, predictors, codes })
    }

    pub fn tables(&self) -> &TableSet {
        &self.tables
    }

    pub fn curves(&self) -> &Arc<MiCurves> {
        &self.curves
    }

    /// Run every drop. `shadow` adds abstraction estimates to full runs.
    pub fn run(&self, mode: Mode, shadow: bool) -> Result<SimRun> {
        let drops: Vec<_> = (0..self.sc.cfg.drops)
            .into_par_iter()
            .map(|d| self.run_drop(d, mode, shadow))
            .collect::<Result<Vec<_>>>()?;
        let mut run = SimRun { mode, shadow, slots: Vec::new(), pathloss_db: Vec::new(), snr_db: Vec::new() };
        for (slots, pl, snr) in drops {
            run.slots.extend(slots);
            run.pathloss_db.push(pl);
            run.snr_db.push(snr);
        }
        Ok(run)
    }

    fn seed(&self) -> u64 {
        self.sc.cfg.seed
    }

    fn ue_snr(&self, drop: u32) -> (Vec<f64>, Vec<f64>) {
        let p = &self.sc.cfg.power;
        let mut pl = Vec::new();
        let mut snr_db = Vec::new();
        for (i, fixed) in self.sc.pl_fixed.iter().enumerate() {
            let l = match fixed {
                Some(v) => *v,
                None => {
                    let mut r = rng::stream(self.seed(), &[Purpose::Pathloss as u64, drop as u64, i as u64]);
                    if p.pl_max_db > p.pl_min_db {
                        r.random_range(p.pl_min_db..p.pl_max_db)
                    } else {
                        p.pl_min_db
                    }
                }
            };
            let s = match p.snr_db {
                Some(s) => s,
                None => {
                    let tx = olpc_power(p.p0_dbm, p.alpha, l, p.n_prb, p.p_max_dbm);
                    tx - 10.0 * (12.0 * p.n_prb.max(1) as f64).log10() - l - p.noise_dbm
                }
            };
            pl.push(l);
            snr_db.push(s);
        }
        (pl, snr_db)
    }

    #[allow(clippy::type_complexity)]
    fn run_drop(&self, drop: u32, mode: Mode, shadow: bool) -> Result<(Vec<SlotResult>, Vec<f64>, Vec<f64>)> {
        let sc = &self.sc;
        let cfg = &sc.cfg;
        let (pl, snr_db) = self.ue_snr(drop);
        let powers: Vec<f64> = snr_db.iter().map(|&s| db_to_linear(s)).collect();
        let n_blocks = cfg.coherence_blocks;
        let mut ch_rng: Vec<_> = (0..n_blocks)
            .map(|b| rng::stream(self.seed(), &[Purpose::Channel as u64, drop as u64, b as u64]))
            .collect();
        let mut la: Vec<LaState> = sc
            .paths
            .iter()
            .map(|_| {
                let st = LaState::new(sc.n_ues(), sc.mcs.k_max(), cfg.epsilon)?;
                match (cfg.la.step_ok, cfg.la.step_fail) {
                    (None, None) => Ok(st),
                    (ok, fail) => {
                        let (o, f) = (ok.unwrap_or(st.step_ok), fail.unwrap_or(st.step_fail));
                        st.with_steps(o, f)
                    }
                }
            })
            .collect::<Result<_>>()?;
        let whiten = 1.0 / (1.0 + cfg.channel.k_e).sqrt();
        let mut blocks: Vec<Vec<CMatrix>> = Vec::new();
        let mut prev_rx: Option<Vec<ChannelRealization>> = None;
        let mut out = Vec::with_capacity(cfg.slots);
        for slot in 0..cfg.slots {
            blocks = if slot == 0 {
                ch_rng.iter_mut().map(|r| sc.channel.sample_blocks(cfg.n_r, &sc.n_t, r)).collect::<Result<_>>()?
            } else {
                blocks.iter().zip(ch_rng.iter_mut()).map(|(g, r)| sc.channel.evolve(g, r)).collect::<Result<_>>()?
            };
            let truth: Vec<ChannelRealization> =
                blocks.iter().map(|g| ChannelRealization::assemble(g, &powers)).collect::<Result<_>>()?;
            let rx: Vec<ChannelRealization> = truth
                .iter()
                .enumerate()
                .map(|(b, h)| {
                    if cfg.channel.k_e <= 0.0 {
                        return h.clone();
                    }
                    let mut r = rng::stream(
                        self.seed(),
                        &[Purpose::EstimationError as u64, drop as u64, slot as u64, b as u64],
                    );
                    let ke =
                        CMatrix::identity(cfg.n_r, cfg.n_r) * num_complex::Complex64::new(cfg.channel.k_e.sqrt(), 0.0);
                    let est = &h.h + estimation_error(&ke, h.n_streams(), &mut r);
                    h.with_matrix(est * num_complex::Complex64::new(whiten, 0.0))
                })
                .collect();
            let estimate = prev_rx.as_ref().unwrap_or(&rx);
            let decisions: Vec<(Vec<UeMcs>, usize, usize)> = sc
                .paths
                .iter()
                .zip(&la)
                .map(|(p, st)| self.decide(drop, slot, p, estimate, st))
                .collect::<Result<_>>()?;
            let selected = match &sc.hybrid {
                Some(members) => {
                    let results: Vec<Vec<(u32, f64)>> =
                        members.iter().map(|&i| decisions[i].0.iter().map(|u| (u.m, u.r)).collect()).collect();
                    let specs: Vec<_> = members.iter().map(|&i| sc.detectors[sc.paths[i].detector].clone()).collect();
                    let idx = match cfg.gamma {
                        Some(g) => select_detector_weighted(&results, &specs, g, sc.mcs.max_se())?,
                        None => select_detector(&results, &specs)?,
                    };
                    Some(members[idx])
                }
                None => None,
            };
            let mut paths = Vec::with_capacity(sc.paths.len());
            for (pi, (p, (dec, iterations, evaluations))) in sc.paths.iter().zip(decisions).enumerate() {
                let metric = if mode == Mode::Abstracted || shadow {
                    Some(self.slot_metric(drop, slot, p, &dec, &rx)?)
                } else {
                    None
                };
                let ok = match mode {
                    Mode::Full => self.transmit(drop, slot, p, &dec, &truth, &rx, whiten)?,
                    Mode::Abstracted => vec![Vec::new(); dec.len()],
                };
                let mut ues = Vec::with_capacity(dec.len());
                for (i, u) in dec.into_iter().enumerate() {
                    let (metric_i, p_hat) = match &metric {
                        Some(m) => {
                            let ph = self.codeword_cer(u.m, u.r, u.n, m[i])?;
                            (m[i], vec![ph; cfg.codewords_per_slot])
                        }
                        None => (f64::NAN, Vec::new()),
                    };
                    let ok_i = match mode {
                        Mode::Full => ok[i].clone(),
                        Mode::Abstracted => (0..cfg.codewords_per_slot)
                            .map(|l| {
                                let mut r = rng::stream(
                                    self.seed(),
                                    &[Purpose::Feedback as u64, drop as u64, slot as u64, i as u64, l as u64],
                                );
                                r.random::<f64>() >= p_hat[l]
                            })
                            .collect(),
                    };
                    let delta = la[pi].delta(i);
                    for &b in &ok_i {
                        la[pi].record(i, b);
                    }
                    ues.push(UeSlot {
                        mcs: u.mcs_index,
                        m: u.m,
                        r: u.r,
                        k: u.k,
                        n: u.n,
                        bmdr_hat: u.bmdr,
                        delta,
                        meets_target: u.meets_target,
                        ok: ok_i,
                        p_hat,
                        metric: metric_i,
                    });
                }
                paths.push(PathSlot { ues, iterations, evaluations });
            }
            out.push(SlotResult {
                drop,
                slot,
                paths,
                selected,
                cond_db: truth.iter().map(|h| condition_db(&h.h)).collect(),
                sinr: ue_sinrs(&rx)?,
            });
            prev_rx = Some(rx);
        }
        Ok((out, pl, snr_db))
    }

    fn path_tag(p: &PathSpec) -> u64 {
        let words: Vec<u64> = p.name.bytes().map(u64::from).collect();
        stream_id(&words)
    }

    /// MCS decision of one path from the channel estimates.
    fn decide(
        &self,
        drop: u32,
        slot: usize,
        p: &PathSpec,
        est: &[ChannelRealization],
        st: &LaState,
    ) -> Result<(Vec<UeMcs>, usize, usize)> {
        let sc = &self.sc;
        let ctx = LaContext { table: &sc.mcs, targets: &self.tables, epsilon: sc.cfg.epsilon, n_re: sc.cfg.n_re };
        match &p.la {
            LaMode::Bmdr => {
                let mut r = rng::stream(
                    self.seed(),
                    &[Purpose::Predictor as u64, drop as u64, slot as u64, Self::path_tag(p), 0],
                );
                let d = select_mcs(self.predictors[p.detector].as_ref(), est, ctx, st, &mut r)?;
                Ok((d.per_ue, d.iterations, d.evaluations))
            }
            LaMode::Esm(_) => {
                let sinrs = ue_sinrs(est)?;
                let mut evaluations = 0;
                let per_ue = (0..sc.n_ues())
                    .map(|i| {
                        select_mcs_single(ctx, sc.n_t[i], st.delta(i), |e| {
                            evaluations += 1;
                            self.esm_bmdr(p, e.index, e.m, &sinrs[i])
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((per_ue, 1, evaluations))
            }
        }
    }

    /// ESM effective SINR of `sinrs` mapped to the AWGN BMDR of modulation `m`.
    fn esm_bmdr(&self, p: &PathSpec, mcs: usize, m: u32, sinrs: &[f64]) -> Result<f64> {
        let LaMode::Esm(family) = p.la else {
            return Err(Error::invalid("not an effective-SINR scheme"));
        };
        let mut cfg = self.sc.esm.for_mcs(mcs);
        cfg.family = family;
        if family != crate::abstraction::EsmFamily::Eesm {
            cfg.beta1 = 1.0;
            cfg.beta2 = 1.0;
        }
        let eff = esm_effective_sinr(sinrs, &cfg, m, &self.curves)?;
        awgn_bmdr(&self.curves, m, eff.value)
    }

    /// Abstraction metric per UE for the current slot's channels.
    fn slot_metric(
        &self,
        drop: u32,
        slot: usize,
        p: &PathSpec,
        dec: &[UeMcs],
        rx: &[ChannelRealization],
    ) -> Result<Vec<f64>> {
        match &p.la {
            LaMode::Bmdr => {
                let mods: Vec<u32> = dec.iter().map(|u| u.m).collect();
                let mut r = rng::stream(
                    self.seed(),
                    &[Purpose::Predictor as u64, drop as u64, slot as u64, Self::path_tag(p), 1],
                );
                abstract_bmdr(self.predictors[p.detector].as_ref(), &mods, rx, &mut r)
            }
            LaMode::Esm(_) => {
                let sinrs = ue_sinrs(rx)?;
                dec.iter().zip(&sinrs).map(|(u, s)| self.esm_bmdr(p, u.mcs_index, u.m, s)).collect()
            }
        }
    }

    /// Estimated CER of a codeword with metric `bmdr`.
    pub fn codeword_cer(&self, m: u32, r: f64, n: usize, bmdr: f64) -> Result<f64> {
        let (t, _) = table_for(&self.tables, m, r, n)?;
        match self.sc.cfg.cer_map {
            CerMap::Nearest => map_cer(t, bmdr),
            CerMap::LogInterp => map_cer_log_interp(t, bmdr),
        }
    }

    /// Send every UE's codewords through the channel and decode them.
    #[allow(clippy::too_many_arguments)]
    fn transmit(
        &self,
        drop: u32,
        slot: usize,
        p: &PathSpec,
        dec: &[UeMcs],
        truth: &[ChannelRealization],
        rx: &[ChannelRealization],
        whiten: f64,
    ) -> Result<Vec<Vec<bool>>> {
        let sc = &self.sc;
        let cfg = &sc.cfg;
        let mods: Vec<u32> = dec.iter().map(|u| u.m).collect();
        let spec = &sc.detectors[p.detector];
        let dets: Vec<PreparedDetector> = rx.iter().map(|h| spec.prepare(h, &mods)).collect::<Result<_>>()?;
        let per_block = cfg.n_re / cfg.coherence_blocks;
        let n_streams = truth[0].n_streams();
        let outcomes: Vec<Vec<bool>> = (0..cfg.codewords_per_slot)
            .into_par_iter()
            .map(|l| -> Result<Vec<bool>> {
                let mut msgs = Vec::with_capacity(dec.len());
                let mut syms = Vec::with_capacity(dec.len());
                for (i, u) in dec.iter().enumerate() {
                    let code = &self.codes[&(u.n, u.k)];
                    let mut r = rng::stream(
                        self.seed(),
                        &[Purpose::Payload as u64, drop as u64, slot as u64, i as u64, l as u64],
                    );
                    let msg: Vec<u8> = (0..u.k).map(|_| r.random_range(0..2u8)).collect();
                    let word = code.spec.encode(&msg)?;
                    let c = modem::constellation(u.m)?;
                    syms.push(modem::map_bits(&code.il.interleave(&word), c)?);
                    msgs.push(msg);
                }
                let mut noise_rng =
                    rng::stream(self.seed(), &[Purpose::Noise as u64, drop as u64, slot as u64, l as u64]);
                let mut llrs: Vec<Vec<f64>> = dec.iter().map(|u| vec![0.0; u.n]).collect();
                let mut buf = vec![0.0; dets[0].total_bits()];
                let mut x = CVector::zeros(n_streams);
                for e in 0..cfg.n_re {
                    let b = e / per_block;
                    for (i, ue) in truth[b].per_ue.iter().enumerate() {
                        for s in 0..ue.n_t {
                            x[ue.cols.start + s] = syms[i][e * ue.n_t + s];
                        }
                    }
                    let noise = colored_noise(None, cfg.n_r, &mut noise_rng);
                    let mut y = &truth[b].h * &x;
                    if !cfg.channel.noiseless {
                        y += noise;
                    }
                    if whiten != 1.0 {
                        y *= num_complex::Complex64::new(whiten, 0.0);
                    }
                    dets[b].detect_into(&y, &mut buf);
                    for (i, u) in dec.iter().enumerate() {
                        let src = &buf[dets[b].ue_bits(i)];
                        let w = src.len();
                        debug_assert_eq!(w * cfg.n_re, u.n);
                        llrs[i][e * w..(e + 1) * w].copy_from_slice(src);
                    }
                }
                dec.iter()
                    .enumerate()
                    .map(|(i, u)| {
                        let code = &self.codes[&(u.n, u.k)];
                        let out = code.spec.decode(&code.il.deinterleave(&llrs[i]), cfg.decoder_iters)?;
                        Ok(out.success && out.message == msgs[i])
                    })
                    .collect()
            })
            .collect::<Result<_>>()?;
        Ok((0..dec.len()).map(|i| outcomes.iter().map(|o| o[i]).collect()).collect())
    }
}

/// LMMSE post-equalization SINRs of every UE's streams over all blocks.
fn ue_sinrs(channels: &[ChannelRealization]) -> Result<Vec<Vec<f64>>> {
    let n_u = channels[0].n_ues();
    let mut out = vec![Vec::new(); n_u];
    for h in channels {
        let s = lmmse_sinr(&h.h)?;
        for (i, ue) in h.per_ue.iter().enumerate() {
            out[i].extend_from_slice(&s[ue.cols.clone()]);
        }
    }
    Ok(out)
}
