//! Binary LDPC codes: construction, systematic encoding and normalized
//! min-sum decoding.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use super::gf2::{rref, BitRow};
use crate::error::{Error, Result};
use crate::rng;

/// Columns of the base matrix used by the quasi-cyclic family.
pub const QC_BASE_COLS: usize = 24;

/// Default min-sum normalization factor.
pub const DEFAULT_MIN_SUM_SCALE: f64 = 0.8;

/// Scale used by quasi-cyclic codes whose mean check degree is below
/// [`LOW_DEGREE_CHECKS`].
pub const LOW_DEGREE_MIN_SUM_SCALE: f64 = 0.9;
pub const LOW_DEGREE_CHECKS: f64 = 6.5;

/// Default decoder iteration cap.
pub const DEFAULT_MAX_ITERS: usize = 30;

/// A binary linear code defined by a sparse parity-check matrix.
#[derive(Clone)]
pub struct CodeSpec {
    n: usize,
    k: usize,
    /// Column indices of each parity check.
    checks: Vec<Vec<u32>>,
    // CSR adjacency used by the decoder
    edge_var: Vec<u32>,
    check_start: Vec<u32>,
    // encoder: pivot (parity) positions and their equations over the free bits
    free_cols: Vec<usize>,
    pivot_cols: Vec<usize>,
    pivot_eqs: Vec<BitRow>,
    min_sum_scale: f64,
    label: String,
}

impl fmt::Debug for CodeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CodeSpec")
            .field("label", &self.label)
            .field("n", &self.n)
            .field("k", &self.k)
            .field("checks", &self.checks.len())
            .finish()
    }
}

/// Result of one decoding attempt.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodeOutput {
    pub message: Vec<u8>,
    pub codeword: Vec<u8>,
    /// Parity satisfied at exit.
    pub success: bool,
    pub iterations: usize,
}

impl CodeSpec {
    /// Build a code from the column supports of its parity checks.
    pub fn from_checks(n: usize, checks: Vec<Vec<u32>>, label: impl Into<String>) -> Result<Self> {
        if n == 0 || checks.is_empty() {
            return Err(Error::invalid("empty parity-check matrix"));
        }
        let mut checks = checks;
        for row in &mut checks {
            row.sort_unstable();
            row.dedup();
            if let Some(&c) = row.last() {
                if c as usize >= n {
                    return Err(Error::invalid(format!("column {c} out of range for n={n}")));
                }
            }
        }
        let rows: Vec<BitRow> = checks
            .iter()
            .map(|cols| {
                let mut r = BitRow::zeros(n);
                for &c in cols {
                    r.set(c as usize);
                }
                r
            })
            .collect();
        let reduced = rref(rows, n);
        let rank = reduced.pivot_cols.len();
        let k = n - rank;
        if k == 0 {
            return Err(Error::invalid("parity-check matrix has full column rank"));
        }
        let mut is_pivot = vec![false; n];
        for &p in &reduced.pivot_cols {
            is_pivot[p] = true;
        }
        let free_cols: Vec<usize> = (0..n).filter(|&c| !is_pivot[c]).collect();
        let pivot_eqs = reduced
            .rows
            .iter()
            .map(|row| {
                let mut eq = BitRow::zeros(k);
                for (j, &c) in free_cols.iter().enumerate() {
                    if row.get(c) {
                        eq.set(j);
                    }
                }
                eq
            })
            .collect();

        let mut edge_var = Vec::new();
        let mut check_start = vec![0u32];
        for row in &checks {
            edge_var.extend_from_slice(row);
            check_start.push(edge_var.len() as u32);
        }
        Ok(Self {
            n,
            k,
            checks,
            edge_var,
            check_start,
            free_cols,
            pivot_cols: reduced.pivot_cols,
            pivot_eqs,
            min_sum_scale: DEFAULT_MIN_SUM_SCALE,
            label: label.into(),
        })
    }

    /// Quasi-cyclic repeat-accumulate code lifted from a 24-column base matrix.
    ///
    /// `info_cols` of the 24 base columns carry message bits, so the rate is
    /// `info_cols / 24`. The parity part has a weight-3 leading column followed
    /// by a dual diagonal, which keeps the lifted matrix full rank.
    /// Construction is deterministic in `(n, info_cols)`.
    pub fn qc_ira(n: usize, info_cols: usize) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(QC_BASE_COLS) {
            return Err(Error::invalid(format!(
                "quasi-cyclic length must be a positive multiple of {QC_BASE_COLS} (got {n})"
            )));
        }
        if !(2..=QC_BASE_COLS - 3).contains(&info_cols) {
            return Err(Error::invalid(format!("info columns must lie in 2..={} (got {info_cols})", QC_BASE_COLS - 3)));
        }
        let z = n / QC_BASE_COLS;
        let base = qc_base_matrix(info_cols, z);
        let checks = lift(&base, z);
        let code = Self::from_checks(n, checks, format!("qc-ira-{info_cols}/24-n{n}"))?;
        // low check degrees lose less to the min approximation
        let scale =
            if code.mean_check_degree() < LOW_DEGREE_CHECKS { LOW_DEGREE_MIN_SUM_SCALE } else { DEFAULT_MIN_SUM_SCALE };
        Ok(code.with_min_sum_scale(scale))
    }

    /// Code of rate closest to `rate` in the quasi-cyclic family.
    pub fn qc_for_rate(n: usize, rate: f64) -> Result<Self> {
        Self::qc_ira(n, info_cols_for_rate(rate)?)
    }

    /// Regular LDPC code built by progressive edge growth.
    pub fn peg_regular(n: usize, var_degree: usize, check_degree: usize, seed: u64) -> Result<Self> {
        if var_degree < 2 || check_degree <= var_degree || !(n * var_degree).is_multiple_of(check_degree) {
            return Err(Error::invalid(format!(
                "cannot build ({var_degree},{check_degree})-regular code of length {n}"
            )));
        }
        let m = n * var_degree / check_degree;
        let checks = peg(n, m, var_degree, check_degree, seed);
        Self::from_checks(n, checks, format!("peg-{var_degree}-{check_degree}-n{n}"))
    }

    /// Parse a parity-check matrix in alist format.
    pub fn from_alist(text: &str, label: impl Into<String>) -> Result<Self> {
        let mut nums = text
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|_| Error::Parse(format!("alist: bad integer {t:?}"))));
        let mut next = move || nums.next().unwrap_or_else(|| Err(Error::Parse("alist: truncated".into())));
        let n = next()?;
        let m = next()?;
        let _max_col = next()?;
        let max_row = next()?;
        let col_deg: Vec<usize> = (0..n).map(|_| next()).collect::<Result<_>>()?;
        let row_deg: Vec<usize> = (0..m).map(|_| next()).collect::<Result<_>>()?;
        // column lists are redundant with the row lists; skip them
        for &d in &col_deg {
            for _ in 0..d {
                next()?;
            }
        }
        let mut checks = Vec::with_capacity(m);
        for &d in &row_deg {
            if d > max_row {
                return Err(Error::Parse("alist: row degree exceeds maximum".into()));
            }
            let mut row = Vec::with_capacity(d);
            for _ in 0..d {
                let c = next()?;
                if c == 0 || c > n {
                    return Err(Error::Parse(format!("alist: column index {c} out of range")));
                }
                row.push((c - 1) as u32);
            }
            checks.push(row);
        }
        Self::from_checks(n, checks, label)
    }

    /// Serialize the parity-check matrix in alist format (no zero padding).
    pub fn to_alist(&self) -> String {
        let m = self.checks.len();
        let mut cols: Vec<Vec<usize>> = vec![Vec::new(); self.n];
        for (r, row) in self.checks.iter().enumerate() {
            for &c in row {
                cols[c as usize].push(r + 1);
            }
        }
        let join = |v: &mut dyn Iterator<Item = usize>| v.map(|x| x.to_string()).collect::<Vec<_>>().join(" ");
        let mut out = String::new();
        out.push_str(&format!("{} {}\n", self.n, m));
        out.push_str(&format!(
            "{} {}\n",
            cols.iter().map(Vec::len).max().unwrap_or(0),
            self.checks.iter().map(Vec::len).max().unwrap_or(0)
        ));
        out.push_str(&join(&mut cols.iter().map(Vec::len)));
        out.push('\n');
        out.push_str(&join(&mut self.checks.iter().map(Vec::len)));
        out.push('\n');
        for col in &cols {
            out.push_str(&join(&mut col.iter().copied()));
            out.push('\n');
        }
        for row in &self.checks {
            out.push_str(&join(&mut row.iter().map(|&c| c as usize + 1)));
            out.push('\n');
        }
        out
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    /// Normalization applied to check-to-variable messages by [`Self::decode`].
    pub fn min_sum_scale(&self) -> f64 {
        self.min_sum_scale
    }

    pub fn with_min_sum_scale(mut self, scale: f64) -> Self {
        self.min_sum_scale = scale;
        self
    }

    pub fn mean_check_degree(&self) -> f64 {
        self.edge_var.len() as f64 / self.checks.len() as f64
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn checks(&self) -> &[Vec<u32>] {
        &self.checks
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    /// Positions of the message bits inside a codeword.
    pub fn message_positions(&self) -> &[usize] {
        &self.free_cols
    }

    /// True if every parity check is satisfied.
    pub fn is_codeword(&self, word: &[u8]) -> bool {
        word.len() == self.n
            && self.checks.iter().all(|row| row.iter().fold(0u8, |acc, &c| acc ^ word[c as usize]) == 0)
    }

    /// Systematic encoding: message bits land on [`Self::message_positions`].
    pub fn encode(&self, msg: &[u8]) -> Result<Vec<u8>> {
        if msg.len() != self.k {
            return Err(Error::invalid(format!("message length {} does not match k={}", msg.len(), self.k)));
        }
        let packed = BitRow::from_bits(msg);
        let mut word = vec![0u8; self.n];
        for (&c, &b) in self.free_cols.iter().zip(msg) {
            word[c] = b & 1;
        }
        for (&p, eq) in self.pivot_cols.iter().zip(&self.pivot_eqs) {
            word[p] = eq.dot(&packed);
        }
        Ok(word)
    }

    pub fn extract_message(&self, word: &[u8]) -> Vec<u8> {
        self.free_cols.iter().map(|&c| word[c]).collect()
    }

    /// Normalized min-sum decoding with early exit on satisfied parity.
    ///
    /// `llrs` use the crate convention `log(P[b=1]/P[b=0])`.
    pub fn decode(&self, llrs: &[f64], max_iters: usize) -> Result<DecodeOutput> {
        self.decode_with_scale(llrs, max_iters, self.min_sum_scale)
    }

    pub fn decode_with_scale(&self, llrs: &[f64], max_iters: usize, scale: f64) -> Result<DecodeOutput> {
        if llrs.len() != self.n {
            return Err(Error::invalid(format!("got {} LLRs for a length-{} code", llrs.len(), self.n)));
        }
        if max_iters == 0 {
            return Err(Error::invalid("max_iters must be at least 1"));
        }
        // internally positive values favour bit 0
        let channel: Vec<f64> = llrs.iter().map(|&l| -l).collect();
        let mut total = channel.clone();
        let mut r = vec![0.0f64; self.edge_var.len()];
        let mut word = vec![0u8; self.n];
        let mut iterations = 0;
        let mut success = self.hard_decide(&total, &mut word);
        while !success && iterations < max_iters {
            iterations += 1;
            for c in 0..self.checks.len() {
                let (s, e) = (self.check_start[c] as usize, self.check_start[c + 1] as usize);
                let mut min1 = f64::INFINITY;
                let mut min2 = f64::INFINITY;
                let mut argmin = s;
                let mut sign_neg = false;
                for idx in s..e {
                    let q = total[self.edge_var[idx] as usize] - r[idx];
                    let a = q.abs();
                    if q < 0.0 {
                        sign_neg = !sign_neg;
                    }
                    if a < min1 {
                        min2 = min1;
                        min1 = a;
                        argmin = idx;
                    } else if a < min2 {
                        min2 = a;
                    }
                    // stash q for the sign pass
                    r[idx] = q;
                }
                for (idx, v) in r.iter_mut().enumerate().take(e).skip(s) {
                    let mag = scale * if idx == argmin { min2 } else { min1 };
                    let neg = sign_neg ^ (*v < 0.0);
                    *v = if neg { -mag } else { mag };
                }
            }
            total.copy_from_slice(&channel);
            for (idx, &v) in self.edge_var.iter().enumerate() {
                total[v as usize] += r[idx];
            }
            success = self.hard_decide(&total, &mut word);
        }
        Ok(DecodeOutput { message: self.extract_message(&word), codeword: word, success, iterations })
    }

    fn hard_decide(&self, total: &[f64], word: &mut [u8]) -> bool {
        for (i, (&t, w)) in total.iter().zip(word.iter_mut()).enumerate() {
            *w = if t < 0.0 {
                1
            } else if t > 0.0 {
                0
            } else {
                tie_bit(i)
            };
        }
        self.is_codeword(word)
    }
}

// Erasures resolve to a fixed pseudo-random pattern rather than all-zeros,
// which would always pass parity.
fn tie_bit(i: usize) -> u8 {
    (rng::stream_id(&[i as u64]) & 1) as u8
}

/// Number of information base columns for the closest supported rate.
pub fn info_cols_for_rate(rate: f64) -> Result<usize> {
    if !(rate > 0.0 && rate < 1.0) {
        return Err(Error::invalid(format!("code rate must lie in (0,1) (got {rate})")));
    }
    let kb = (rate * QC_BASE_COLS as f64).round() as usize;
    if !(2..=QC_BASE_COLS - 3).contains(&kb) {
        return Err(Error::invalid(format!("rate {rate} not supported by the quasi-cyclic family")));
    }
    Ok(kb)
}

/// Degree profile of the information columns: (heavy column count, heavy degree).
fn info_profile(kb: usize, mb: usize) -> (usize, usize) {
    let (heavy, deg) = match kb {
        2..=6 => (2, 12),
        7..=8 => (3, 10),
        9..=10 => (3, 9),
        11..=12 => (4, 8),
        13..=14 => (4, 7),
        15..=16 => (3, 7),
        17..=18 => (3, 6),
        _ => (2, 4),
    };
    (heavy.min(kb), deg.min(mb))
}

/// Base matrix with `-1` marking zero blocks.
#[allow(clippy::needless_range_loop)]
fn qc_base_matrix(kb: usize, z: usize) -> Vec<Vec<i64>> {
    let nb = QC_BASE_COLS;
    let mb = nb - kb;
    let mut base = vec![vec![-1i64; nb]; mb];
    // parity part
    let mid = mb / 2;
    base[0][kb] = 1 % z as i64;
    base[mid][kb] = 0;
    base[mb - 1][kb] = 1 % z as i64;
    for j in 1..mb {
        base[j - 1][kb + j] = 0;
        base[j][kb + j] = 0;
    }
    let mut rng = rng::stream(0x517C_C0DE, &[kb as u64, z as u64]);
    let (heavy, heavy_deg) = info_profile(kb, mb);
    let mut row_deg: Vec<usize> = (0..mb).map(|i| base[i].iter().filter(|&&s| s >= 0).count()).collect();
    for col in 0..kb {
        let deg = if col < heavy { heavy_deg } else { 3.min(mb) };
        let mut order: Vec<usize> = (0..mb).collect();
        order.shuffle(&mut rng);
        order.sort_by_key(|&i| row_deg[i]);
        for &row in order.iter().take(deg) {
            row_deg[row] += 1;
            base[row][col] = 0;
        }
    }
    // shifts, greedily avoiding short cycles in the lifted graph
    for col in 0..kb {
        for row in 0..mb {
            if base[row][col] < 0 {
                continue;
            }
            let mut shifts: Vec<i64> = (0..z as i64).collect();
            shifts.shuffle(&mut rng);
            let mut best = (usize::MAX, 0i64);
            for s in shifts {
                base[row][col] = s;
                let cost = 1000 * four_cycles_at(&base, row, col, z as i64) + six_cycles_at(&base, row, col, z as i64);
                if cost < best.0 {
                    best = (cost, s);
                    if cost == 0 {
                        break;
                    }
                }
            }
            base[row][col] = best.1;
        }
    }
    base
}

fn four_cycles_at(base: &[Vec<i64>], row: usize, col: usize, z: i64) -> usize {
    let mut count = 0;
    let s11 = base[row][col];
    for (r2, other) in base.iter().enumerate() {
        if r2 == row || other[col] < 0 {
            continue;
        }
        let s21 = other[col];
        for c2 in 0..base[row].len() {
            if c2 == col || base[row][c2] < 0 || other[c2] < 0 {
                continue;
            }
            if (s11 - base[row][c2] + other[c2] - s21).rem_euclid(z) == 0 {
                count += 1;
            }
        }
    }
    count
}

/// Lifted 6-cycles through base entry `(row, col)`.
fn six_cycles_at(base: &[Vec<i64>], row: usize, col: usize, z: i64) -> usize {
    let nb = base[row].len();
    let mut count = 0;
    let s0 = base[row][col];
    for c2 in 0..nb {
        if c2 == col || base[row][c2] < 0 {
            continue;
        }
        let a = s0 - base[row][c2];
        for (r2, row2) in base.iter().enumerate() {
            if r2 == row || row2[c2] < 0 {
                continue;
            }
            for c3 in 0..nb {
                if c3 == c2 || c3 == col || row2[c3] < 0 {
                    continue;
                }
                let b = a + row2[c2] - row2[c3];
                for (r3, row3) in base.iter().enumerate() {
                    if r3 == row || r3 == r2 || row3[c3] < 0 || row3[col] < 0 {
                        continue;
                    }
                    if (b + row3[c3] - row3[col]).rem_euclid(z) == 0 {
                        count += 1;
                    }
                }
            }
        }
    }
    count
}

fn lift(base: &[Vec<i64>], z: usize) -> Vec<Vec<u32>> {
    let mut checks = Vec::with_capacity(base.len() * z);
    for row in base {
        for r in 0..z {
            let cols = row
                .iter()
                .enumerate()
                .filter(|(_, &s)| s >= 0)
                .map(|(j, &s)| (j * z + (r + s as usize) % z) as u32)
                .collect();
            checks.push(cols);
        }
    }
    checks
}

/// Progressive edge growth for a regular bipartite graph.
fn peg(n: usize, m: usize, dv: usize, dc: usize, seed: u64) -> Vec<Vec<u32>> {
    let mut rng = rng::stream(seed, &[n as u64, dv as u64, dc as u64]);
    let mut var_adj: Vec<Vec<usize>> = vec![Vec::with_capacity(dv); n];
    let mut chk_adj: Vec<Vec<usize>> = vec![Vec::with_capacity(dc); m];
    let mut depth_chk = vec![usize::MAX; m];
    let mut seen_var = vec![false; n];
    for v in 0..n {
        for _ in 0..dv {
            // checks at the largest tree distance from v (or unreachable ones)
            let candidates: Vec<usize> = if var_adj[v].is_empty() {
                (0..m).collect()
            } else {
                depth_chk.fill(usize::MAX);
                seen_var.fill(false);
                seen_var[v] = true;
                let mut frontier = vec![v];
                let mut reached = 0;
                let mut depth = 0;
                loop {
                    let mut next = Vec::new();
                    let before = reached;
                    for &x in &frontier {
                        for &c in &var_adj[x] {
                            if depth_chk[c] == usize::MAX {
                                depth_chk[c] = depth;
                                reached += 1;
                                for &y in &chk_adj[c] {
                                    if !seen_var[y] {
                                        seen_var[y] = true;
                                        next.push(y);
                                    }
                                }
                            }
                        }
                    }
                    if reached == before || next.is_empty() {
                        break;
                    }
                    if reached == m {
                        break;
                    }
                    frontier = next;
                    depth += 1;
                }
                let unreached: Vec<usize> = (0..m).filter(|&c| depth_chk[c] == usize::MAX).collect();
                if !unreached.is_empty() {
                    unreached
                } else {
                    (0..m).filter(|&c| depth_chk[c] == depth).collect()
                }
            };
            let usable = |c: &usize| chk_adj[*c].len() < dc && !var_adj[v].contains(c);
            let mut pool: Vec<usize> = candidates.iter().copied().filter(usable).collect();
            if pool.is_empty() {
                pool = (0..m).filter(usable).collect();
            }
            if pool.is_empty() {
                pool = (0..m).filter(|c| !var_adj[v].contains(c)).collect();
            }
            let min_deg = pool.iter().map(|&c| chk_adj[c].len()).min().unwrap_or(0);
            pool.retain(|&c| chk_adj[c].len() == min_deg);
            let c = pool[rng.random_range(0..pool.len())];
            var_adj[v].push(c);
            chk_adj[c].push(v);
        }
    }
    chk_adj.into_iter().map(|vars| vars.into_iter().map(|v| v as u32).collect()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_msg(k: usize, seed: u64) -> Vec<u8> {
        let mut r = rng::stream(seed, &[k as u64]);
        (0..k).map(|_| r.random_range(0..2u8)).collect()
    }

    #[test]
    fn qc_codes_are_full_rank() {
        for (n, kb) in [(648, 12), (648, 8), (1800, 8), (1944, 18), (1296, 6)] {
            let code = CodeSpec::qc_ira(n, kb).unwrap();
            assert_eq!(code.k(), n * kb / 24, "n={n} kb={kb}");
        }
    }

    #[test]
    fn low_rate_codes_use_the_milder_scale() {
        assert_eq!(CodeSpec::qc_ira(648, 8).unwrap().min_sum_scale(), LOW_DEGREE_MIN_SUM_SCALE);
        assert_eq!(CodeSpec::qc_ira(648, 12).unwrap().min_sum_scale(), DEFAULT_MIN_SUM_SCALE);
        assert_eq!(CodeSpec::peg_regular(96, 3, 6, 1).unwrap().min_sum_scale(), DEFAULT_MIN_SUM_SCALE);
    }

    #[test]
    fn qc_rejects_bad_lengths() {
        assert!(CodeSpec::qc_ira(650, 12).is_err());
        assert!(CodeSpec::qc_ira(648, 1).is_err());
        assert!(CodeSpec::qc_for_rate(648, 1.2).is_err());
    }

    #[test]
    fn zero_message_gives_zero_codeword() {
        let code = CodeSpec::qc_ira(648, 12).unwrap();
        let word = code.encode(&vec![0; code.k()]).unwrap();
        assert!(word.iter().all(|&b| b == 0));
    }

    #[test]
    fn wrong_length_message() {
        let code = CodeSpec::qc_ira(648, 12).unwrap();
        assert!(matches!(code.encode(&[0; 10]), Err(Error::InvalidArgument(_))));
        assert!(code.decode(&[0.0; 10], 5).is_err());
        assert!(code.decode(&vec![0.0; 648], 0).is_err());
    }

    #[test]
    fn noiseless_round_trip() {
        for code in [
            CodeSpec::qc_ira(648, 12).unwrap(),
            CodeSpec::qc_ira(1944, 6).unwrap(),
            CodeSpec::peg_regular(648, 3, 6, 1).unwrap(),
        ] {
            for seed in 0..1000u64 {
                let msg = random_msg(code.k(), seed);
                let word = code.encode(&msg).unwrap();
                assert!(code.is_codeword(&word));
                if seed % 50 == 0 {
                    let llrs: Vec<f64> = word.iter().map(|&b| if b == 1 { 30.0 } else { -30.0 }).collect();
                    let out = code.decode(&llrs, 30).unwrap();
                    assert!(out.success);
                    assert_eq!(out.message, msg);
                }
            }
        }
    }

    #[test]
    fn alist_round_trip() {
        let code = CodeSpec::peg_regular(96, 3, 6, 7).unwrap();
        let text = code.to_alist();
        let back = CodeSpec::from_alist(&text, "x").unwrap();
        assert_eq!(back.checks(), code.checks());
        assert_eq!(back.k(), code.k());
        assert!(CodeSpec::from_alist("4 2\n1 2", "x").is_err());
    }

    #[test]
    fn zero_llrs_fail() {
        let code = CodeSpec::qc_ira(648, 12).unwrap();
        let out = code.decode(&vec![0.0; 648], 30).unwrap();
        assert!(!out.success);
    }

    #[test]
    fn peg_regular_degrees() {
        let code = CodeSpec::peg_regular(504, 3, 6, 3).unwrap();
        assert_eq!(code.checks().len(), 252);
        assert!(code.checks().iter().all(|c| c.len() == 6));
        let mut col_deg = vec![0; 504];
        for row in code.checks() {
            for &c in row {
                col_deg[c as usize] += 1;
            }
        }
        assert!(col_deg.iter().all(|&d| d == 3));
        assert!(code.k() >= 252);
    }

    #[test]
    fn corrects_a_few_flipped_bits() {
        let code = CodeSpec::qc_ira(648, 12).unwrap();
        let msg = random_msg(code.k(), 9);
        let word = code.encode(&msg).unwrap();
        let mut llrs: Vec<f64> = word.iter().map(|&b| if b == 1 { 2.0 } else { -2.0 }).collect();
        for i in [3, 100, 257, 400, 611] {
            llrs[i] = -llrs[i] * 0.5;
        }
        let out = code.decode(&llrs, 30).unwrap();
        assert!(out.success);
        assert_eq!(out.message, msg);
    }
}
