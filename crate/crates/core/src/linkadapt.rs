//! BMDR-based MCS selection, correction offsets and detector selection.

use std::collections::VecDeque;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bmdr::{predict_set, BmdrPredictor, TableSet};
use crate::channel::ChannelRealization;
use crate::detect::DetectorSpec;
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Bound on the BMDR correction offset.
pub const DELTA_BOUND: f64 = 0.5;
/// Default offset decrement after a decoding failure.
pub const DEFAULT_STEP_FAIL: f64 = 0.01;
/// REs carrying one codeword of a single-stream UE in the default table.
pub const DEFAULT_N_RE: usize = 324;
const SE_TIE: f64 = 1e-12;

/// One row of an MCS table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McsEntry {
    pub index: usize,
    pub m: u32,
    pub r: f64,
    pub k: usize,
    pub n: usize,
}

impl McsEntry {
    pub fn se(&self) -> f64 {
        self.m as f64 * self.r
    }
}

/// Ordered MCS table with modulation set `{2, 4, ..., 2 k_max}`.
#[derive(Debug, Clone, PartialEq)]
pub struct McsTable {
    entries: Vec<McsEntry>,
    k_max: usize,
}

impl McsTable {
    pub fn new(mut entries: Vec<McsEntry>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("MCS table is empty".into()));
        }
        entries.sort_by_key(|e| e.index);
        for w in entries.windows(2) {
            if w[0].index == w[1].index {
                return Err(Error::Config(format!("duplicate MCS index {}", w[0].index)));
            }
            if w[1].se() <= w[0].se() {
                return Err(Error::Config(format!(
                    "spectral efficiency must increase with the MCS index (index {} -> {})",
                    w[0].index, w[1].index
                )));
            }
        }
        for e in &entries {
            if !(e.r > 0.0 && e.r < 1.0) {
                return Err(Error::Config(format!("MCS {}: rate {} outside (0,1)", e.index, e.r)));
            }
            if e.m == 0 || e.m % 2 != 0 {
                return Err(Error::Config(format!("MCS {}: modulation order {} is not even", e.index, e.m)));
            }
            if e.n == 0 || e.k == 0 || e.k >= e.n {
                return Err(Error::Config(format!("MCS {}: need 0 < k < n", e.index)));
            }
        }
        let k_max = entries.iter().map(|e| e.m as usize / 2).max().unwrap_or(0);
        for c in 1..=k_max {
            if !entries.iter().any(|e| e.m as usize == 2 * c) {
                return Err(Error::Config(format!("MCS table has no rate for m={}", 2 * c)));
            }
        }
        Ok(Self { entries, k_max })
    }

    /// Twelve-entry table over QPSK, 16-QAM and 64-QAM with `n = n_re * m`.
    pub fn default_table(n_re: usize) -> Result<Self> {
        const RATES: [(u32, [usize; 4]); 3] = [(2, [6, 8, 12, 16]), (4, [10, 12, 14, 16]), (6, [12, 14, 16, 18])];
        let mut entries = Vec::new();
        for (m, kbs) in RATES {
            for kb in kbs {
                let n = n_re * m as usize;
                entries.push(McsEntry { index: entries.len() + 1, m, r: kb as f64 / 24.0, k: n * kb / 24, n });
            }
        }
        Self::new(entries)
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of modulation levels.
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn modulations(&self) -> Vec<u32> {
        (1..=self.k_max).map(|c| 2 * c as u32).collect()
    }

    /// Rates available at modulation `m`, ascending.
    pub fn rates(&self, m: u32) -> Vec<f64> {
        let mut r: Vec<f64> = self.entries.iter().filter(|e| e.m == m).map(|e| e.r).collect();
        r.sort_by(f64::total_cmp);
        r
    }

    pub fn entry(&self, index: usize) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.index == index)
    }

    pub fn lookup(&self, m: u32, r: f64) -> Option<&McsEntry> {
        self.entries.iter().find(|e| e.m == m && (e.r - r).abs() < 1e-9)
    }

    /// Largest `r * m` in the table.
    pub fn max_se(&self) -> f64 {
        self.entries.iter().map(McsEntry::se).fold(0.0, f64::max)
    }

    pub fn lowest(&self) -> &McsEntry {
        &self.entries[0]
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        for e in &self.entries {
            wr.serialize(e)?;
        }
        wr.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
        let entries = rd
            .deserialize()
            .collect::<std::result::Result<Vec<McsEntry>, _>>()
            .map_err(|e| Error::Parse(format!("MCS table: {e}")))?;
        Self::new(entries)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let f = std::fs::File::open(path).map_err(|_| Error::MissingFile {
            path: path.to_path_buf(),
            hint: "write one with `index,m,r,k,n` columns".into(),
        })?;
        Self::read_csv(f)
    }
}

/// Codeword length of a UE with `n_t` streams at modulation `m`.
pub fn codeword_length(n_re: usize, m: u32, n_t: usize) -> usize {
    n_re * m as usize * n_t
}

/// Message length carried at rate `r` by an `n`-bit codeword.
pub fn message_length(r: f64, n: usize) -> usize {
    (r * n as f64).round() as usize
}

/// Source of target BMDR values.
pub trait TargetBmdr: Sync {
    fn target(&self, m: u32, r: f64, n: usize, epsilon: f64) -> Result<f64>;
}

impl TargetBmdr for TableSet {
    fn target(&self, m: u32, r: f64, n: usize, epsilon: f64) -> Result<f64> {
        TableSet::target(self, m, r, n, epsilon)
    }
}

/// Threshold `target - delta`, or `+inf` when the target is unreachable.
fn threshold(t: &dyn TargetBmdr, m: u32, r: f64, n: usize, eps: f64, delta: f64) -> Result<f64> {
    match t.target(m, r, n, eps) {
        Ok(v) => Ok(v - delta),
        Err(Error::TargetUnreachable { .. }) => Ok(f64::INFINITY),
        Err(e) => Err(e),
    }
}

/// Per-UE outer-loop state.
#[derive(Debug, Clone, PartialEq)]
pub struct LaState {
    delta: Vec<f64>,
    level: Vec<usize>,
    acks: Vec<VecDeque<bool>>,
    window: usize,
    pub step_ok: f64,
    pub step_fail: f64,
}

impl LaState {
    /// Fresh state for `n_ues` UEs at target CER `epsilon`.
    pub fn new(n_ues: usize, k_max: usize, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(Error::invalid(format!("target CER must lie in (0,1) (got {epsilon})")));
        }
        Ok(Self {
            delta: vec![0.0; n_ues],
            level: vec![k_max.max(1); n_ues],
            acks: vec![VecDeque::new(); n_ues],
            window: 100,
            step_ok: DEFAULT_STEP_FAIL * epsilon / (1.0 - epsilon),
            step_fail: DEFAULT_STEP_FAIL,
        })
    }

    pub fn with_steps(mut self, step_ok: f64, step_fail: f64) -> Result<Self> {
        if !(step_ok > 0.0 && step_fail > 0.0) {
            return Err(Error::invalid("offset steps must be positive"));
        }
        self.step_ok = step_ok;
        self.step_fail = step_fail;
        Ok(self)
    }

    pub fn n_ues(&self) -> usize {
        self.delta.len()
    }

    pub fn delta(&self, ue: usize) -> f64 {
        self.delta[ue]
    }

    pub fn deltas(&self) -> &[f64] {
        &self.delta
    }

    pub fn set_delta(&mut self, ue: usize, d: f64) {
        self.delta[ue] = d.clamp(-DELTA_BOUND, DELTA_BOUND);
    }

    /// Modulation index `c_i` chosen last.
    pub fn level(&self, ue: usize) -> usize {
        self.level[ue]
    }

    pub fn set_level(&mut self, ue: usize, c: usize) {
        self.level[ue] = c;
    }

    /// Recent decoding outcomes of `ue`, oldest first.
    pub fn acks(&self, ue: usize) -> impl Iterator<Item = bool> + '_ {
        self.acks[ue].iter().copied()
    }

    /// Apply one decoding outcome with the configured steps.
    pub fn record(&mut self, ue: usize, decoded_ok: bool) {
        let (ok, fail) = (self.step_ok, self.step_fail);
        self.apply(ue, decoded_ok, ok, fail);
    }

    fn apply(&mut self, ue: usize, decoded_ok: bool, step_ok: f64, step_fail: f64) {
        let d = if decoded_ok { self.delta[ue] + step_ok } else { self.delta[ue] - step_fail };
        self.set_delta(ue, d);
        let h = &mut self.acks[ue];
        if h.len() == self.window {
            h.pop_front();
        }
        h.push_back(decoded_ok);
    }
}

/// Move `ue`'s offset up by `step_ok` on success, down by `step_fail` otherwise.
pub fn update_delta(mut state: LaState, ue: usize, decoded_ok: bool, step_ok: f64, step_fail: f64) -> Result<LaState> {
    if !(step_ok > 0.0 && step_fail > 0.0) {
        return Err(Error::invalid("offset steps must be positive"));
    }
    if ue >= state.n_ues() {
        return Err(Error::invalid(format!("UE {ue} out of range")));
    }
    state.apply(ue, decoded_ok, step_ok, step_fail);
    Ok(state)
}

/// Chosen MCS of one UE.
#[derive(Debug, Clone, PartialEq)]
pub struct UeMcs {
    pub m: u32,
    pub r: f64,
    pub mcs_index: usize,
    pub k: usize,
    pub n: usize,
    /// Predicted BMDR at the final modulation set.
    pub bmdr: f64,
    /// False when no rate met its target and the lowest rate was taken.
    pub meets_target: bool,
}

/// Outcome of one MCS selection.
#[derive(Debug, Clone, PartialEq)]
pub struct LaDecision {
    pub per_ue: Vec<UeMcs>,
    pub iterations: usize,
    pub evaluations: usize,
    pub sweeps: usize,
    /// Set when the predictor is not separable across UEs.
    pub possibly_suboptimal: bool,
}

impl LaDecision {
    /// Sum over UEs of `r * m`.
    pub fn se_sum(&self) -> f64 {
        self.per_ue.iter().map(|u| u.r * u.m as f64).sum()
    }

    pub fn modulations(&self) -> Vec<u32> {
        self.per_ue.iter().map(|u| u.m).collect()
    }
}

/// Inputs shared by every MCS selection of a run.
#[derive(Clone, Copy)]
pub struct LaContext<'a> {
    pub table: &'a McsTable,
    pub targets: &'a dyn TargetBmdr,
    pub epsilon: f64,
    pub n_re: usize,
}

/// Iterative per-UE modulation descent followed by the highest passing rate.
///
/// Every UE starts at the top modulation. Each pass predicts BMDR for the
/// current modulation set and steps down every UE for which no rate of its
/// modulation meets `target - delta`. The loop ends when a pass changes
/// nothing; a UE with no passing rate at its final modulation gets the
/// lowest rate of that modulation.
pub fn select_mcs(
    pred: &dyn BmdrPredictor,
    channels: &[ChannelRealization],
    ctx: LaContext<'_>,
    state: &LaState,
    rng: &mut SimRng,
) -> Result<LaDecision> {
    let h0 = channels.first().ok_or_else(|| Error::invalid("MCS selection needs at least one channel"))?;
    let n_u = h0.n_ues();
    if state.n_ues() != n_u {
        return Err(Error::invalid(format!("LA state has {} UEs, channel has {n_u}", state.n_ues())));
    }
    let n_t: Vec<usize> = h0.per_ue.iter().map(|u| u.n_t).collect();
    let k_max = ctx.table.k_max();
    let mut level = vec![k_max; n_u];
    let mut passes: Vec<Option<Vec<bool>>> = vec![None; n_u];
    let mut iterations = 0;
    let mut evaluations = 0;
    let mut bmdr;
    loop {
        iterations += 1;
        let mods: Vec<u32> = level.iter().map(|&c| 2 * c as u32).collect();
        bmdr = predict_set(pred, &mods, channels, rng)?;
        let mut changed = false;
        for i in 0..n_u {
            // At the lowest level the outcome cannot change the level; defer to the final pick.
            if level[i] == 1 {
                passes[i] = None;
                continue;
            }
            let p = rate_passes(ctx, mods[i], n_t[i], bmdr[i], state.delta(i))?;
            evaluations += p.len();
            if !p.iter().any(|&b| b) {
                level[i] -= 1;
                changed = true;
                passes[i] = None;
            } else {
                passes[i] = Some(p);
            }
        }
        if !changed {
            break;
        }
    }
    let mut per_ue = Vec::with_capacity(n_u);
    for i in 0..n_u {
        let m = 2 * level[i] as u32;
        let p = match passes[i].take() {
            Some(p) => p,
            None => {
                let p = rate_passes(ctx, m, n_t[i], bmdr[i], state.delta(i))?;
                evaluations += p.len();
                p
            }
        };
        let rates = ctx.table.rates(m);
        let best = p.iter().rposition(|&b| b);
        let r = rates[best.unwrap_or(0)];
        let entry = ctx.table.lookup(m, r).ok_or_else(|| Error::invalid(format!("no MCS entry for m={m}, r={r}")))?;
        let n = codeword_length(ctx.n_re, m, n_t[i]);
        per_ue.push(UeMcs {
            m,
            r,
            mcs_index: entry.index,
            k: message_length(r, n),
            n,
            bmdr: bmdr[i],
            meets_target: best.is_some(),
        });
    }
    Ok(LaDecision { per_ue, iterations, evaluations, sweeps: iterations, possibly_suboptimal: !pred.is_separable() })
}

/// Criterion outcome for every rate of modulation `m`, ascending rate order.
fn rate_passes(ctx: LaContext<'_>, m: u32, n_t: usize, bmdr: f64, delta: f64) -> Result<Vec<bool>> {
    let n = codeword_length(ctx.n_re, m, n_t);
    ctx.table.rates(m).into_iter().map(|r| Ok(bmdr >= threshold(ctx.targets, m, r, n, ctx.epsilon, delta)?)).collect()
}

/// Highest-index MCS whose criterion holds for a UE, given per-modulation BMDR.
///
/// `bmdr_for(m)` returns the UE's predicted BMDR at modulation `m`. Used by
/// effective-SINR link adaptation, where UEs are decoupled.
pub fn select_mcs_single(
    ctx: LaContext<'_>,
    n_t: usize,
    delta: f64,
    mut bmdr_for: impl FnMut(&McsEntry) -> Result<f64>,
) -> Result<UeMcs> {
    let mut chosen = None;
    for e in ctx.table.entries().iter().rev() {
        let n = codeword_length(ctx.n_re, e.m, n_t);
        let b = bmdr_for(e)?;
        if b >= threshold(ctx.targets, e.m, e.r, n, ctx.epsilon, delta)? {
            chosen = Some((e, b, true));
            break;
        }
    }
    let (e, b, ok) = match chosen {
        Some(c) => c,
        None => {
            let e = ctx.table.lowest();
            (e, bmdr_for(e)?, false)
        }
    };
    let n = codeword_length(ctx.n_re, e.m, n_t);
    Ok(UeMcs { m: e.m, r: e.r, mcs_index: e.index, k: message_length(e.r, n), n, bmdr: b, meets_target: ok })
}

fn check_results(results: &[Vec<(u32, f64)>], specs: &[DetectorSpec]) -> Result<usize> {
    if results.is_empty() {
        return Err(Error::invalid("no detector results to choose from"));
    }
    if results.len() != specs.len() {
        return Err(Error::invalid("one result per detector is required"));
    }
    crate::detect::check_ordering(specs)?;
    let n_u = results[0].len();
    if n_u == 0 || results.iter().any(|r| r.len() != n_u) {
        return Err(Error::invalid("every detector needs one (m, r) per UE"));
    }
    Ok(n_u)
}

fn mean_se(r: &[(u32, f64)]) -> f64 {
    r.iter().map(|&(m, rate)| m as f64 * rate).sum::<f64>() / r.len() as f64
}

/// Lowest-complexity detector among those maximizing the mean `r * m`.
pub fn select_detector(results: &[Vec<(u32, f64)>], specs: &[DetectorSpec]) -> Result<usize> {
    check_results(results, specs)?;
    let se: Vec<f64> = results.iter().map(|r| mean_se(r)).collect();
    let best = se.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(se.iter().position(|&s| s >= best - SE_TIE).unwrap_or(0))
}

/// Weighted trade-off `gamma * f1 + (1 - gamma) * f2` between spectral efficiency and complexity.
///
/// `f1` is the mean `r * m` normalized by `max_se`, `f2` the negated
/// complexity normalized by the most complex detector.
pub fn select_detector_weighted(
    results: &[Vec<(u32, f64)>],
    specs: &[DetectorSpec],
    gamma: f64,
    max_se: f64,
) -> Result<usize> {
    check_results(results, specs)?;
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma must lie in [0,1] (got {gamma})")));
    }
    if !(max_se > 0.0) {
        return Err(Error::invalid("max_se must be positive"));
    }
    let c_max = specs.last().map(|s| s.complexity).unwrap_or(0.0);
    if !(c_max > 0.0) {
        return Err(Error::invalid("the most complex detector needs a positive complexity"));
    }
    let score: Vec<f64> = results
        .iter()
        .zip(specs)
        .map(|(r, s)| gamma * mean_se(r) / max_se - (1.0 - gamma) * s.complexity / c_max)
        .collect();
    let best = score.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(score.iter().position(|&s| s >= best - SE_TIE).unwrap_or(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bmdr::BmdrEstimate;
    use crate::channel::CMatrix;
    use crate::detect::DetectorKind;

    struct Flat(Vec<f64>);

    impl BmdrPredictor for Flat {
        fn predict(&self, _h: &ChannelRealization, _m: &[u32], _r: &mut SimRng) -> Result<Vec<BmdrEstimate>> {
            Ok(self.0.iter().copied().map(BmdrEstimate::exact).collect())
        }
        fn is_separable(&self) -> bool {
            true
        }
        fn name(&self) -> String {
            "flat".into()
        }
    }

    struct RateTargets;

    impl TargetBmdr for RateTargets {
        fn target(&self, _m: u32, r: f64, _n: usize, _e: f64) -> Result<f64> {
            Ok(r + 0.1)
        }
    }

    fn channel(n_u: usize) -> ChannelRealization {
        let blocks = vec![CMatrix::identity(4, 1); n_u];
        ChannelRealization::assemble(&blocks, &vec![1.0; n_u]).unwrap()
    }

    fn run(pred: &dyn BmdrPredictor, n_u: usize, state: &LaState) -> LaDecision {
        let table = McsTable::default_table(DEFAULT_N_RE).unwrap();
        let ctx = LaContext { table: &table, targets: &RateTargets, epsilon: 0.01, n_re: DEFAULT_N_RE };
        select_mcs(pred, &[channel(n_u)], ctx, state, &mut crate::rng::stream(0, &[0])).unwrap()
    }

    #[test]
    fn default_table_is_valid() {
        let t = McsTable::default_table(DEFAULT_N_RE).unwrap();
        assert_eq!(t.len(), 12);
        assert_eq!(t.k_max(), 3);
        assert_eq!(t.rates(2).len(), 4);
        assert_eq!(t.entry(1).unwrap().n, 648);
        assert_eq!(t.entry(12).unwrap().k, 1458);
        assert!((t.max_se() - 4.5).abs() < 1e-12);
    }

    #[test]
    fn table_rejects_non_increasing_se() {
        let e = |index, m, r: f64| McsEntry { index, m, r, k: (r * 648.0) as usize, n: 648 };
        assert!(McsTable::new(vec![e(1, 2, 0.5), e(2, 4, 0.25)]).is_err());
        assert!(McsTable::new(vec![e(1, 4, 0.5)]).is_err());
    }

    #[test]
    fn table_csv_round_trip() {
        let t = McsTable::default_table(DEFAULT_N_RE).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("index,m,r,k,n"));
        assert_eq!(McsTable::read_csv(&buf[..]).unwrap(), t);
    }

    #[test]
    fn full_bmdr_selects_top_mcs() {
        let st = LaState::new(2, 3, 0.01).unwrap();
        let d = run(&Flat(vec![1.0, 1.0]), 2, &st);
        assert!(d.per_ue.iter().all(|u| u.mcs_index == 12 && u.meets_target));
        assert_eq!(d.iterations, 1);
    }

    #[test]
    fn zero_bmdr_falls_back_to_lowest() {
        let st = LaState::new(2, 3, 0.01).unwrap();
        let d = run(&Flat(vec![0.0, 0.0]), 2, &st);
        assert!(d.per_ue.iter().all(|u| u.mcs_index == 1 && !u.meets_target && u.m == 2));
        assert_eq!(d.iterations, 3);
        assert!(d.evaluations <= 2 * 12);
    }

    #[test]
    fn one_ue_descends_while_other_stays() {
        let st = LaState::new(2, 3, 0.01).unwrap();
        let d = run(&Flat(vec![0.9, 0.0]), 2, &st);
        assert_eq!(d.iterations, 3);
        assert_eq!(d.per_ue[0].mcs_index, 12);
        assert_eq!(d.per_ue[1].mcs_index, 1);
    }

    #[test]
    fn unreachable_target_falls_back() {
        struct Never;
        impl TargetBmdr for Never {
            fn target(&self, m: u32, _r: f64, n: usize, epsilon: f64) -> Result<f64> {
                Err(Error::TargetUnreachable { m, k: 0, n, epsilon })
            }
        }
        let table = McsTable::default_table(DEFAULT_N_RE).unwrap();
        let ctx = LaContext { table: &table, targets: &Never, epsilon: 0.01, n_re: DEFAULT_N_RE };
        let st = LaState::new(1, 3, 0.01).unwrap();
        let d = select_mcs(&Flat(vec![1.0]), &[channel(1)], ctx, &st, &mut crate::rng::stream(0, &[0])).unwrap();
        assert_eq!(d.per_ue[0].mcs_index, 1);
    }

    #[test]
    fn delta_updates_and_clamps() {
        let st = LaState::new(1, 3, 0.01).unwrap();
        let st = update_delta(st, 0, true, 0.002, 0.01).unwrap();
        assert!((st.delta(0) - 0.002).abs() < 1e-15);
        let mut st = st;
        for _ in 0..100 {
            st = update_delta(st, 0, false, 0.002, 0.01).unwrap();
        }
        assert_eq!(st.delta(0), -0.5);
        assert!(update_delta(st, 0, true, 0.0, 0.01).is_err());
    }

    #[test]
    fn default_steps_balance_target() {
        let st = LaState::new(1, 3, 0.01).unwrap();
        assert!((st.step_ok / st.step_fail - 0.01 / 0.99).abs() < 1e-15);
    }

    #[test]
    fn raising_delta_never_lowers_mcs() {
        let mut last = 0;
        for d in [-0.5, -0.2, 0.0, 0.1, 0.3, 0.5] {
            let mut st = LaState::new(1, 3, 0.01).unwrap();
            st.set_delta(0, d);
            let idx = run(&Flat(vec![0.55]), 1, &st).per_ue[0].mcs_index;
            assert!(idx >= last);
            last = idx;
        }
    }

    fn specs() -> Vec<DetectorSpec> {
        vec![
            DetectorSpec::new(DetectorKind::Lmmse, 4, 6).with_complexity(1.0),
            DetectorSpec::new(DetectorKind::KBest(32), 4, 6).with_complexity(32.0),
        ]
    }

    #[test]
    fn detector_selection_rules() {
        let s = specs();
        let tie = vec![vec![(4, 0.5), (2, 1.0 / 2.0)], vec![(2, 0.5), (4, 0.5)]];
        assert_eq!(select_detector(&tie, &s).unwrap(), 0);
        let kb = vec![vec![(2, 0.75)], vec![(4, 7.0 / 16.0)]];
        assert_eq!(select_detector(&kb, &s).unwrap(), 1);
        assert_eq!(select_detector(&kb[..1], &s[..1]).unwrap(), 0);
        assert!(select_detector(&[], &[]).is_err());
    }

    #[test]
    fn weighted_selection_example() {
        let s = specs();
        // f1 = (0.6, 0.8) with max SE 1
        let res = vec![vec![(2, 0.3)], vec![(2, 0.4)]];
        assert_eq!(select_detector_weighted(&res, &s, 0.5, 1.0).unwrap(), 0);
        assert_eq!(select_detector_weighted(&res, &s, 1.0, 1.0).unwrap(), 1);
        assert_eq!(select_detector_weighted(&res, &s, 0.0, 1.0).unwrap(), 0);
        assert!(select_detector_weighted(&res, &s, 1.5, 1.0).is_err());
    }
}
