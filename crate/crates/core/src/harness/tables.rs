//! Table building and EESM beta calibration for a scenario.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use super::config::{Scenario, TableSpec};
use super::sim::{Engine, Mode};
use crate::abstraction::{calibrate_beta, table_for, EesmObservation};
use crate::bmdr::{auto_grid, build_awgn_table, BmdrCerTable, MiCurves};
use crate::coding::CodeSpec;
use crate::detect::DetectorKind;
use crate::error::{Error, Result};
use crate::linkadapt::message_length;

/// Build one table per required `(m, r, n)` of `sc` and save it under `out_dir`.
///
/// Existing files are kept when `skip_existing` is set. `progress` receives
/// one line per table.
pub fn build_tables(
    sc: &Scenario,
    out_dir: &Path,
    seed: u64,
    skip_existing: bool,
    mut progress: impl FnMut(&str),
) -> Result<Vec<PathBuf>> {
    let curves = MiCurves::shared();
    let tb = &sc.cfg.table_build;
    let budget = tb.budget(sc.cfg.decoder_iters);
    let mut out = Vec::new();
    for spec in sc.required_tables() {
        let code = code_for(spec)?;
        let path = out_dir.join(crate::bmdr::table_file_name(spec.m, code.k(), code.n()));
        if skip_existing && path.is_file() {
            progress(&format!("keep {}", path.display()));
            out.push(path);
            continue;
        }
        let grid = auto_grid(&curves, spec.m, spec.r, tb.below, tb.above, tb.step_db)?;
        let t = build_awgn_table(&code, spec.m, &grid, budget, seed)?;
        let p = t.save(out_dir)?;
        progress(&format!("wrote {} ({} rows)", p.display(), t.rows.len()));
        out.push(p);
    }
    Ok(out)
}

/// Code used for a table of rate `r` and length `n`.
pub fn code_for(spec: TableSpec) -> Result<CodeSpec> {
    let code = CodeSpec::qc_for_rate(spec.n, spec.r)
        .map_err(|e| Error::Config(format!("no code for n={}, r={}: {e}", spec.n, spec.r)))?;
    if code.k() != message_length(spec.r, spec.n) {
        return Err(Error::Config(format!(
            "rate {} is not representable at n={} (code gives k={})",
            spec.r,
            spec.n,
            code.k()
        )));
    }
    Ok(code)
}

/// Fit one EESM beta per MCS index from a full simulation of `engine`'s scenario.
///
/// Observations come from every LMMSE scheme path. MCS indices without
/// observations are left out.
pub fn calibrate_betas(engine: &Engine) -> Result<BTreeMap<usize, f64>> {
    let sc = &engine.sc;
    let lmmse: Vec<usize> = sc
        .paths
        .iter()
        .enumerate()
        .filter(|(_, p)| sc.detectors[p.detector].kind == DetectorKind::Lmmse)
        .map(|(i, _)| i)
        .collect();
    if lmmse.is_empty() {
        return Err(Error::Config("beta calibration needs an LMMSE scheme".into()));
    }
    let run = engine.run(Mode::Full, false)?;
    let mut obs: BTreeMap<(usize, usize), (u32, f64, Vec<EesmObservation>)> = BTreeMap::new();
    for s in &run.slots {
        for &pi in &lmmse {
            for (i, u) in s.paths[pi].ues.iter().enumerate() {
                let e = obs.entry((u.mcs, u.n)).or_insert_with(|| (u.m, u.r, Vec::new()));
                for &ok in &u.ok {
                    e.2.push(EesmObservation { sinrs: s.sinr[i].clone(), failed: !ok });
                }
            }
        }
    }
    let mut best: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for ((mcs, n), (m, r, o)) in &obs {
        let table: &BmdrCerTable = table_for(engine.tables(), *m, *r, *n)?.0;
        let beta = calibrate_beta(o, *m, table, engine.curves())?;
        let slot = best.entry(*mcs).or_insert((0, beta));
        if o.len() > slot.0 {
            *slot = (o.len(), beta);
        }
    }
    Ok(best.into_iter().map(|(k, (_, b))| (k, b)).collect())
}
