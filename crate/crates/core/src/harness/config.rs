//! Simulation configuration (TOML, schema version 1).

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::abstraction::{EsmConfig, EsmFamily};
use crate::bmdr::{PredictorKind, TableBudget};
use crate::channel::{exponential_correlation, ChannelKind, ChannelModel};
use crate::detect::{DetectorKind, DetectorSpec};
use crate::error::{Error, Result};
use crate::linkadapt::{McsTable, DEFAULT_N_RE};

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    #[serde(default = "one")]
    pub version: u32,
    #[serde(default = "one_u64")]
    pub seed: u64,
    #[serde(default = "one")]
    pub drops: u32,
    pub slots: usize,
    #[serde(default = "default_t_slot")]
    pub t_slot: f64,
    #[serde(default = "default_n_re")]
    pub n_re: usize,
    /// Codewords per UE per slot; they form one transport block.
    #[serde(default = "one_usize")]
    pub codewords_per_slot: usize,
    /// Independent channel blocks across the band in each slot.
    #[serde(default = "default_blocks")]
    pub coherence_blocks: usize,
    pub n_r: usize,
    pub epsilon: f64,
    pub ues: Vec<UeConfig>,
    #[serde(default)]
    pub channel: ChannelConfig,
    #[serde(default)]
    pub power: PowerConfig,
    pub detectors: Vec<DetectorConfig>,
    /// Scheme names; empty selects one BMDR scheme per detector plus `hybrid`.
    #[serde(default)]
    pub schemes: Vec<String>,
    /// Weight for the SE/complexity trade-off of the hybrid selector.
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub la: LaConfig,
    #[serde(default)]
    pub esm: EsmSection,
    #[serde(default)]
    pub mcs_table: Option<PathBuf>,
    #[serde(default = "default_tables_dir")]
    pub tables_dir: PathBuf,
    #[serde(default = "default_iters")]
    pub decoder_iters: usize,
    #[serde(default)]
    pub cer_map: CerMap,
    #[serde(default)]
    pub table_build: TableBuildConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UeConfig {
    #[serde(default = "one_usize")]
    pub n_t: usize,
    /// Fixed pathloss; drawn per drop when absent.
    #[serde(default)]
    pub pl_db: Option<f64>,
    /// Repeat this entry.
    #[serde(default = "one_usize")]
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    #[serde(default = "default_ar1")]
    pub ar1: f64,
    /// Exponential receive correlation coefficient (0 = i.i.d.).
    #[serde(default)]
    pub rx_corr: f64,
    /// Exponential transmit correlation coefficient per UE.
    #[serde(default)]
    pub tx_corr: f64,
    /// Channel-estimation error variance relative to the noise.
    #[serde(default)]
    pub k_e: f64,
    /// Drop the receiver noise (detection still assumes unit noise).
    #[serde(default)]
    pub noiseless: bool,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self { ar1: default_ar1(), rx_corr: 0.0, tx_corr: 0.0, k_e: 0.0, noiseless: false }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerConfig {
    #[serde(default = "default_p0")]
    pub p0_dbm: f64,
    #[serde(default = "one_f64")]
    pub alpha: f64,
    #[serde(default = "default_pmax")]
    pub p_max_dbm: f64,
    #[serde(default = "default_n_prb")]
    pub n_prb: u32,
    /// Noise power per RE.
    #[serde(default = "default_noise")]
    pub noise_dbm: f64,
    #[serde(default = "default_pl_min")]
    pub pl_min_db: f64,
    #[serde(default = "default_pl_max")]
    pub pl_max_db: f64,
    /// Fixed per-RE SNR for every UE instead of power control (`-inf` = no power).
    #[serde(default)]
    pub snr_db: Option<f64>,
}

impl Default for PowerConfig {
    fn default() -> Self {
        Self {
            p0_dbm: default_p0(),
            alpha: 1.0,
            p_max_dbm: default_pmax(),
            n_prb: default_n_prb(),
            noise_dbm: default_noise(),
            pl_min_db: default_pl_min(),
            pl_max_db: default_pl_max(),
            snr_db: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorConfig {
    pub name: String,
    /// `mi_table` or `monte_carlo(N)`; defaults to `mi_table` for LMMSE.
    #[serde(default)]
    pub predictor: Option<String>,
    #[serde(default)]
    pub complexity: Option<f64>,
    /// LLR magnitude limit, also used for missing K-best counter-hypotheses.
    #[serde(default)]
    pub llr_clip: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LaConfig {
    #[serde(default)]
    pub step_ok: Option<f64>,
    #[serde(default)]
    pub step_fail: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EsmSection {
    #[serde(default = "one_f64")]
    pub beta: f64,
    /// `mcs_index,beta` CSV overriding `beta` per MCS.
    #[serde(default)]
    pub beta_table: Option<PathBuf>,
}

impl Default for EsmSection {
    fn default() -> Self {
        Self { beta: 1.0, beta_table: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CerMap {
    #[default]
    Nearest,
    LogInterp,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableBuildConfig {
    #[serde(default = "default_step")]
    pub step_db: f64,
    #[serde(default = "default_max_cw")]
    pub max_codewords: usize,
    #[serde(default = "default_max_err")]
    pub max_errors: usize,
    #[serde(default = "default_mi")]
    pub mi_samples: usize,
    #[serde(default = "default_clean")]
    pub stop_after_clean: usize,
    /// BMDR margin below the code rate where the sweep starts.
    #[serde(default = "default_below")]
    pub below: f64,
    /// BMDR margin above the code rate where the sweep ends.
    #[serde(default = "default_above")]
    pub above: f64,
    /// Build tables for every MCS and UE stream count of the scenario.
    #[serde(default = "yes")]
    pub include_mcs: bool,
    #[serde(default)]
    pub extra: Vec<TableSpec>,
}

impl Default for TableBuildConfig {
    fn default() -> Self {
        Self {
            step_db: default_step(),
            max_codewords: default_max_cw(),
            max_errors: default_max_err(),
            mi_samples: default_mi(),
            stop_after_clean: default_clean(),
            below: default_below(),
            above: default_above(),
            include_mcs: true,
            extra: Vec::new(),
        }
    }
}

impl TableBuildConfig {
    pub fn budget(&self, max_iters: usize) -> TableBudget {
        TableBudget {
            max_codewords: self.max_codewords,
            max_errors: self.max_errors,
            mi_samples: self.mi_samples,
            max_iters,
            stop_after_clean: self.stop_after_clean,
        }
    }
}

/// One `(m, r, n)` code/modulation pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub m: u32,
    pub r: f64,
    pub n: usize,
}

fn one() -> u32 {
    1
}
fn one_u64() -> u64 {
    1
}
fn one_usize() -> usize {
    1
}
fn one_f64() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn default_t_slot() -> f64 {
    5e-4
}
fn default_n_re() -> usize {
    DEFAULT_N_RE
}
fn default_blocks() -> usize {
    4
}
fn default_ar1() -> f64 {
    0.98
}
fn default_p0() -> f64 {
    -98.0
}
fn default_pmax() -> f64 {
    23.0
}
fn default_n_prb() -> u32 {
    24
}
fn default_noise() -> f64 {
    -120.2
}
fn default_pl_min() -> f64 {
    90.0
}
fn default_pl_max() -> f64 {
    115.0
}
fn default_tables_dir() -> PathBuf {
    PathBuf::from("tables")
}
fn default_iters() -> usize {
    crate::coding::DEFAULT_MAX_ITERS
}
fn default_step() -> f64 {
    0.2
}
fn default_max_cw() -> usize {
    10_000
}
fn default_max_err() -> usize {
    50
}
fn default_mi() -> usize {
    100_000
}
fn default_clean() -> usize {
    2
}
fn default_below() -> f64 {
    0.1
}
fn default_above() -> f64 {
    0.35
}

/// Link-adaptation flavour of a scheme.
#[derive(Debug, Clone, PartialEq)]
pub enum LaMode {
    Bmdr,
    Esm(EsmFamily),
}

/// One detector driven by one link-adaptation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSpec {
    pub name: String,
    pub detector: usize,
    pub la: LaMode,
}

/// Everything derived from a validated configuration.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub cfg: SimConfig,
    pub base_dir: PathBuf,
    pub n_t: Vec<usize>,
    pub pl_fixed: Vec<Option<f64>>,
    pub detectors: Vec<DetectorSpec>,
    pub predictors: Vec<PredictorKind>,
    pub paths: Vec<PathSpec>,
    /// Indices into `paths` taking part in per-slot detector selection.
    pub hybrid: Option<Vec<usize>>,
    pub mcs: McsTable,
    pub esm: EsmConfig,
    pub channel: ChannelModel,
    pub config_hash: String,
    /// File the configuration was read from.
    pub source: Option<PathBuf>,
}

impl SimConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|_| Error::MissingFile {
            path: path.to_path_buf(),
            hint: "pass an existing configuration file with --config".into(),
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize configuration: {e}")))
    }

    /// Validate and resolve relative paths against `base_dir`.
    pub fn scenario(self, base_dir: &Path) -> Result<Scenario> {
        let c = &self;
        let cfg_err = |m: String| Err(Error::Config(m));
        if c.version != CONFIG_VERSION {
            return cfg_err(format!("unsupported config version {} (expected {CONFIG_VERSION})", c.version));
        }
        if c.drops == 0 || c.slots == 0 || c.n_re == 0 || c.codewords_per_slot == 0 || c.n_r == 0 {
            return cfg_err("drops, slots, n_re, codewords_per_slot and n_r must be positive".into());
        }
        if c.coherence_blocks == 0 || !c.n_re.is_multiple_of(c.coherence_blocks) {
            return cfg_err(format!(
                "coherence_blocks must be positive and divide n_re={} (got {})",
                c.n_re, c.coherence_blocks
            ));
        }
        if !(c.t_slot > 0.0) {
            return cfg_err("t_slot must be positive".into());
        }
        if !(c.epsilon > 0.0 && c.epsilon < 1.0) {
            return cfg_err(format!("epsilon must lie in (0,1) (got {})", c.epsilon));
        }
        if c.decoder_iters == 0 {
            return cfg_err("decoder_iters must be positive".into());
        }
        let mut n_t = Vec::new();
        let mut pl_fixed = Vec::new();
        for u in &c.ues {
            if u.n_t == 0 || u.count == 0 {
                return cfg_err("every UE needs n_t >= 1 and count >= 1".into());
            }
            for _ in 0..u.count {
                n_t.push(u.n_t);
                pl_fixed.push(u.pl_db);
            }
        }
        if n_t.is_empty() {
            return cfg_err("no UEs configured".into());
        }
        let p = &c.power;
        if !(p.pl_min_db <= p.pl_max_db) || !(0.0..=1.0).contains(&p.alpha) {
            return cfg_err("power: need pl_min_db <= pl_max_db and alpha in [0,1]".into());
        }
        if let Some(g) = c.gamma {
            if !(0.0..=1.0).contains(&g) {
                return cfg_err(format!("gamma must lie in [0,1] (got {g})"));
            }
        }
        let n_streams: usize = n_t.iter().sum();
        let mcs = match &c.mcs_table {
            Some(path) => McsTable::load(&base_dir.join(path))?,
            None => McsTable::default_table(c.n_re)?,
        };
        let max_m = mcs.k_max() as u32 * 2;
        if c.detectors.is_empty() {
            return cfg_err("at least one detector is required".into());
        }
        let mut detectors = Vec::new();
        let mut predictors = Vec::new();
        for d in &c.detectors {
            let kind = DetectorKind::parse(&d.name).map_err(|e| Error::Config(e.to_string()))?;
            if !kind.is_linear() && n_streams > c.n_r {
                return cfg_err(format!("{kind} needs n_r >= total streams ({} < {n_streams})", c.n_r));
            }
            let mut spec = DetectorSpec::new(kind, n_streams, max_m);
            if let Some(cx) = d.complexity {
                if !(cx > 0.0) {
                    return cfg_err(format!("detector {}: complexity must be positive", d.name));
                }
                spec = spec.with_complexity(cx);
            }
            if let Some(clip) = d.llr_clip {
                if !(clip > 0.0) || !clip.is_finite() {
                    return cfg_err(format!("detector {}: llr_clip must be positive", d.name));
                }
                spec.llr_clip = clip;
            }
            let pk = match &d.predictor {
                Some(s) => PredictorKind::parse(s)?,
                None if kind.is_linear() => PredictorKind::MiTable,
                None => PredictorKind::MonteCarlo { n_samples: 64 },
            };
            if pk == PredictorKind::MiTable && !kind.is_linear() {
                return cfg_err(format!("detector {}: the mi_table predictor only models LMMSE", d.name));
            }
            detectors.push(spec);
            predictors.push(pk);
        }
        let names: Vec<String> = detectors.iter().map(DetectorSpec::name).collect();
        if (1..names.len()).any(|i| names[..i].contains(&names[i])) {
            return cfg_err("detector names must be unique".into());
        }
        let scheme_names = if c.schemes.is_empty() {
            let mut s: Vec<String> = names.iter().map(|n| format!("{n}-bmdr")).collect();
            if names.len() > 1 {
                s.push("hybrid".into());
            }
            s
        } else {
            c.schemes.clone()
        };
        let mut paths: Vec<PathSpec> = Vec::new();
        let mut want_hybrid = false;
        for s in &scheme_names {
            let s = s.trim().to_ascii_lowercase();
            if s == "hybrid" {
                want_hybrid = true;
                continue;
            }
            let (det, la) = match s.rsplit_once('-') {
                Some((d, "bmdr")) => (d.to_string(), LaMode::Bmdr),
                Some((d, fam)) => (d.to_string(), LaMode::Esm(fam.parse()?)),
                None => (s.clone(), LaMode::Bmdr),
            };
            let detector = names
                .iter()
                .position(|n| *n == DetectorKind::parse(&det).map(|k| k.to_string()).unwrap_or_default())
                .ok_or_else(|| Error::Config(format!("scheme {s:?} names a detector that is not configured")))?;
            if matches!(la, LaMode::Esm(_)) && !detectors[detector].kind.is_linear() {
                return cfg_err(format!("scheme {s:?}: effective-SINR mapping needs a linear detector"));
            }
            let name = match &la {
                LaMode::Bmdr => format!("{}-bmdr", names[detector]),
                LaMode::Esm(f) => format!("{}-{}", names[detector], format!("{f:?}").to_ascii_lowercase()),
            };
            if paths.iter().any(|p| p.name == name) {
                return cfg_err(format!("scheme {name} listed twice"));
            }
            paths.push(PathSpec { name, detector, la });
        }
        let hybrid = if want_hybrid {
            for (d, dname) in names.iter().enumerate() {
                if !paths.iter().any(|p| p.detector == d && p.la == LaMode::Bmdr) {
                    paths.push(PathSpec { name: format!("{dname}-bmdr"), detector: d, la: LaMode::Bmdr });
                }
            }
            let mut members: Vec<usize> = (0..paths.len()).filter(|&i| paths[i].la == LaMode::Bmdr).collect();
            members.sort_by(|&a, &b| {
                detectors[paths[a].detector]
                    .complexity
                    .total_cmp(&detectors[paths[b].detector].complexity)
                    .then(a.cmp(&b))
            });
            if members.len() < 2 {
                return cfg_err("hybrid selection needs at least two detectors".into());
            }
            Some(members)
        } else {
            None
        };
        if paths.is_empty() {
            return cfg_err("no schemes to simulate".into());
        }
        let kind = if c.channel.rx_corr == 0.0 && c.channel.tx_corr == 0.0 {
            ChannelKind::IidRayleigh
        } else {
            let rt = if c.channel.tx_corr != 0.0 {
                let t = n_t[0];
                if n_t.iter().any(|&x| x != t) {
                    return cfg_err("transmit correlation needs equal n_t for every UE".into());
                }
                Some(exponential_correlation(t, c.channel.tx_corr)?)
            } else {
                None
            };
            ChannelKind::Kronecker { rr: exponential_correlation(c.n_r, c.channel.rx_corr)?, rt }
        };
        let channel = ChannelModel::new(kind, c.channel.ar1).map_err(|e| Error::Config(e.to_string()))?;
        if !(c.channel.k_e >= 0.0) {
            return cfg_err("k_e must be non-negative".into());
        }
        let mut esm = EsmConfig::new(EsmFamily::Eesm).with_betas(c.esm.beta, c.esm.beta)?;
        if let Some(bt) = &c.esm.beta_table {
            let path = base_dir.join(bt);
            let f = std::fs::File::open(&path).map_err(|_| Error::MissingFile {
                path: path.clone(),
                hint: "produce it with `calibrate-beta --config <cfg>`".into(),
            })?;
            esm = esm.read_beta_csv(f)?;
        }
        let config_hash = hex_digest(self.to_toml()?.as_bytes());
        Ok(Scenario {
            base_dir: base_dir.to_path_buf(),
            n_t,
            pl_fixed,
            detectors,
            predictors,
            paths,
            hybrid,
            mcs,
            esm,
            channel,
            config_hash,
            source: None,
            cfg: self,
        })
    }
}

/// Lowercase hex SHA-256.
pub fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

impl Scenario {
    /// Load `path` and resolve it relative to its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let cfg = SimConfig::load(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        let mut sc = cfg.scenario(&base)?;
        sc.source = Some(path.to_path_buf());
        Ok(sc)
    }

    /// Command line that builds this scenario's tables.
    pub fn build_hint(&self) -> String {
        let cfg = self.source.as_ref().map(|p| p.display().to_string()).unwrap_or_else(|| "<cfg>".into());
        format!("build-table --config {cfg}")
    }

    pub fn n_ues(&self) -> usize {
        self.n_t.len()
    }

    pub fn tables_dir(&self) -> PathBuf {
        self.base_dir.join(&self.cfg.tables_dir)
    }

    /// Distinct `(m, r, n)` needed by the MCS table for this scenario's UEs.
    pub fn required_tables(&self) -> Vec<TableSpec> {
        let mut out: Vec<TableSpec> = Vec::new();
        let mut push = |t: TableSpec| {
            if !out.iter().any(|o| o.m == t.m && o.n == t.n && (o.r - t.r).abs() < 1e-9) {
                out.push(t);
            }
        };
        if self.cfg.table_build.include_mcs {
            let mut nts = self.n_t.clone();
            nts.sort_unstable();
            nts.dedup();
            for e in self.mcs.entries() {
                for &t in &nts {
                    push(TableSpec { m: e.m, r: e.r, n: crate::linkadapt::codeword_length(self.cfg.n_re, e.m, t) });
                }
            }
        }
        for &t in &self.cfg.table_build.extra {
            push(t);
        }
        out
    }

    /// Keep only schemes driven by detector `name`.
    pub fn restrict_detector(&mut self, name: &str) -> Result<()> {
        let kind = DetectorKind::parse(name).map_err(|e| Error::Config(e.to_string()))?;
        let d = self
            .detectors
            .iter()
            .position(|s| s.kind == kind)
            .ok_or_else(|| Error::Config(format!("detector {name} is not configured")))?;
        self.paths.retain(|p| p.detector == d);
        self.hybrid = None;
        Ok(())
    }

    /// Use the weighted selector with `gamma` for hybrid selection.
    pub fn set_gamma(&mut self, gamma: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::Config(format!("gamma must lie in [0,1] (got {gamma})")));
        }
        self.cfg.gamma = Some(gamma);
        Ok(())
    }
}
