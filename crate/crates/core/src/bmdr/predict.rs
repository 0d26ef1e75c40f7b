//! Pluggable BMDR predictors used by link adaptation and abstraction.

use std::sync::Arc;

use super::mc::{estimate_bmdr_mc, BmdrEstimate};
use super::mi::MiCurves;
use crate::channel::ChannelRealization;
use crate::detect::{lmmse_sinr, DetectorKind, DetectorSpec};
use crate::error::{Error, Result};
use crate::rng::SimRng;

/// Predicts per-UE BMDR of one detector on one channel realization.
pub trait BmdrPredictor: Send + Sync {
    fn predict(&self, h: &ChannelRealization, mods: &[u32], rng: &mut SimRng) -> Result<Vec<BmdrEstimate>>;

    /// True when a UE's prediction does not depend on other UEs' modulation.
    fn is_separable(&self) -> bool {
        false
    }

    fn name(&self) -> String;
}

/// Predictor selection as written in configuration files.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PredictorKind {
    MiTable,
    MonteCarlo { n_samples: usize },
}

impl PredictorKind {
    pub fn parse(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "mi_table" || s == "mi-table" {
            return Ok(PredictorKind::MiTable);
        }
        if let Some(rest) = s.strip_prefix("monte_carlo").or_else(|| s.strip_prefix("monte-carlo")) {
            let rest = rest.trim_start_matches([':', '(', '-', '_']).trim_end_matches(')');
            let n_samples = if rest.is_empty() {
                256
            } else {
                rest.parse().map_err(|_| Error::Config(format!("bad sample count in predictor {s:?}")))?
            };
            if n_samples == 0 {
                return Err(Error::Config("predictor sample count must be positive".into()));
            }
            return Ok(PredictorKind::MonteCarlo { n_samples });
        }
        Err(Error::Config(format!("unknown predictor {s:?}")))
    }
}

/// Build the predictor of `kind` bound to `detector`.
pub fn build_predictor(
    kind: PredictorKind,
    detector: &DetectorSpec,
    curves: Arc<MiCurves>,
) -> Result<Arc<dyn BmdrPredictor>> {
    match kind {
        PredictorKind::MiTable => {
            if detector.kind != DetectorKind::Lmmse {
                return Err(Error::Config(format!("the MI-table predictor only models LMMSE, not {}", detector.kind)));
            }
            Ok(Arc::new(MiTablePredictor::new(curves)))
        }
        PredictorKind::MonteCarlo { n_samples } => {
            Ok(Arc::new(MonteCarloPredictor { detector: detector.clone(), n_samples }))
        }
    }
}

/// LMMSE post-equalization SINR mapped through the AWGN curves, per stream.
#[derive(Debug, Clone)]
pub struct MiTablePredictor {
    curves: Arc<MiCurves>,
}

impl MiTablePredictor {
    pub fn new(curves: Arc<MiCurves>) -> Self {
        Self { curves }
    }

    pub fn curves(&self) -> &MiCurves {
        &self.curves
    }

    /// Per-UE prediction from precomputed per-stream SINRs.
    pub fn predict_from_sinr(&self, h: &ChannelRealization, sinr: &[f64], mods: &[u32]) -> Result<Vec<f64>> {
        if sinr.len() != h.n_streams() || mods.len() != h.n_ues() {
            return Err(Error::invalid("dimension mismatch in MI-table prediction"));
        }
        h.per_ue
            .iter()
            .zip(mods)
            .map(|(ue, &m)| {
                let curve = self.curves.curve(m)?;
                let s: f64 = sinr[ue.cols.clone()].iter().map(|&x| curve.eval(x)).sum();
                Ok((s / (ue.n_t as f64 * m as f64)).clamp(0.0, 1.0))
            })
            .collect()
    }
}

impl BmdrPredictor for MiTablePredictor {
    fn predict(&self, h: &ChannelRealization, mods: &[u32], _rng: &mut SimRng) -> Result<Vec<BmdrEstimate>> {
        let sinr = lmmse_sinr(&h.h)?;
        Ok(self.predict_from_sinr(h, &sinr, mods)?.into_iter().map(BmdrEstimate::exact).collect())
    }

    fn is_separable(&self) -> bool {
        true
    }

    fn name(&self) -> String {
        "mi_table".into()
    }
}

/// Monte-Carlo evaluation of the detector itself.
#[derive(Debug, Clone)]
pub struct MonteCarloPredictor {
    pub detector: DetectorSpec,
    pub n_samples: usize,
}

impl BmdrPredictor for MonteCarloPredictor {
    fn predict(&self, h: &ChannelRealization, mods: &[u32], rng: &mut SimRng) -> Result<Vec<BmdrEstimate>> {
        estimate_bmdr_mc(&self.detector, h, mods, self.n_samples, rng)
    }

    fn name(&self) -> String {
        format!("monte_carlo({})", self.n_samples)
    }
}

/// Per-UE prediction on one realization.
pub fn predict_bmdr(
    p: &dyn BmdrPredictor,
    mods: &[u32],
    h: &ChannelRealization,
    rng: &mut SimRng,
) -> Result<Vec<BmdrEstimate>> {
    if mods.len() != h.n_ues() {
        return Err(Error::invalid(format!("got {} modulation orders for {} UEs", mods.len(), h.n_ues())));
    }
    p.predict(h, mods, rng)
}

/// Per-UE mean prediction over a set of realizations.
pub fn predict_set(
    p: &dyn BmdrPredictor,
    mods: &[u32],
    channels: &[ChannelRealization],
    rng: &mut SimRng,
) -> Result<Vec<f64>> {
    if channels.is_empty() {
        return Err(Error::invalid("empty channel set"));
    }
    let mut acc = vec![0.0; mods.len()];
    for h in channels {
        for (a, e) in acc.iter_mut().zip(predict_bmdr(p, mods, h, rng)?) {
            *a += e.value;
        }
    }
    Ok(acc.into_iter().map(|a| a / channels.len() as f64).collect())
}
