//! Key-extraction efficiency table over (block length, QBER).

use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cascade::cascade_reconcile;
use super::{binary_entropy, qber_threshold, DEFAULT_XI};
use crate::error::{domain, Error, Result};
use crate::seed::splitmix64;

pub const MIN_TRIALS: u32 = 20;
pub const GENERATOR: &str = concat!("satqkd-core ", env!("CARGO_PKG_VERSION"));

pub fn default_block_lengths() -> Vec<u64> {
    vec![100, 1_000, 10_000, 100_000, 1_000_000]
}

pub fn default_qber_grid() -> Vec<f64> {
    let mut q = vec![0.001, 0.005];
    q.extend((1..=10).map(|i| i as f64 / 100.0));
    q
}

/// Finite-size accounting used when a block is turned into key.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LutOptions {
    /// Fraction of the block disclosed to estimate the QBER.
    pub sacrifice_fraction: f64,
    /// Bits removed by privacy amplification on top of leakage.
    pub security_margin: u64,
    /// Blocks whose estimated QBER reaches this value are aborted.
    pub abort_qber: f64,
}

impl Default for LutOptions {
    fn default() -> Self {
        Self { sacrifice_fraction: 0.1, security_margin: 64, abort_qber: qber_threshold(DEFAULT_XI) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LutTable {
    pub block_lengths: Vec<u64>,
    pub qber_grid: Vec<f64>,
    /// `eta[i][j]` belongs to `block_lengths[i]`, `qber_grid[j]`.
    pub eta: Vec<Vec<f64>>,
    pub trials_per_cell: u32,
    pub seed: u64,
    pub generator: String,
    pub options: LutOptions,
    #[serde(default)]
    pub config_hash: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LutLookup {
    pub eta: f64,
    pub clamped: bool,
}

/// Efficiency of one simulated block.
pub fn block_efficiency(block_length: u64, qber: f64, options: &LutOptions, seed: u64) -> Result<f64> {
    let n = block_length as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let alice: Vec<u8> = (0..n).map(|_| rng.random_range(0..2u8)).collect();
    let bob: Vec<u8> = alice.iter().map(|&a| a ^ (rng.random::<f64>() < qber) as u8).collect();

    let n_s = ((options.sacrifice_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let est_errors = alice[..n_s].iter().zip(&bob[..n_s]).filter(|(a, b)| a != b).count();
    let q_est = est_errors as f64 / n_s as f64;
    if q_est >= options.abort_qber {
        return Ok(0.0);
    }
    let (a_rec, b_rec) = (&alice[n_s..], &bob[n_s..]);
    let n_rec = a_rec.len();
    if n_rec == 0 {
        return Ok(0.0);
    }
    // Size Cascade blocks from a pessimistic estimate: an optimistic one
    // leaves undetected errors in short blocks.
    let q_plan = ((est_errors + 2) as f64 / n_s as f64).min(0.49);
    let out = cascade_reconcile(a_rec, b_rec, q_plan, rng.random())?;
    if out.residual_errors > 0 {
        // the verification step would reject this block
        return Ok(0.0);
    }
    let q_ec = out.corrections as f64 / n_rec as f64;
    if q_ec >= options.abort_qber {
        return Ok(0.0);
    }
    let kept = n_rec as f64 * (1.0 - binary_entropy(q_est.max(q_ec)))
        - out.leaked_bits as f64
        - options.security_margin as f64;
    Ok((kept / n as f64).clamp(0.0, 1.0))
}

fn cell_seed(seed: u64, i: usize, j: usize, t: u32) -> u64 {
    splitmix64(splitmix64(splitmix64(seed ^ i as u64) ^ (j as u64).wrapping_mul(0x9e37)) ^ t as u64)
}

/// Builds the table by averaging `trials` simulated blocks per cell.
pub fn generate_lut(
    block_lengths: &[u64],
    qber_grid: &[f64],
    trials: u32,
    seed: u64,
    options: &LutOptions,
) -> Result<LutTable> {
    if trials < MIN_TRIALS {
        return domain(format!("trials must be at least {MIN_TRIALS}, got {trials}"));
    }
    check_axes(block_lengths, qber_grid)?;
    if !(0.0 < options.sacrifice_fraction && options.sacrifice_fraction < 1.0) {
        return domain(format!("sacrifice_fraction must lie in (0, 1), got {}", options.sacrifice_fraction));
    }
    if qber_grid.iter().any(|&q| !(q > 0.0 && q < 0.5)) {
        return domain("qber grid values must lie in (0, 0.5)");
    }
    let cells: Vec<(usize, usize)> =
        (0..block_lengths.len()).flat_map(|i| (0..qber_grid.len()).map(move |j| (i, j))).collect();
    let values: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let mut sum = 0.0;
            for t in 0..trials {
                sum += block_efficiency(block_lengths[i], qber_grid[j], options, cell_seed(seed, i, j, t))?;
            }
            Ok(sum / trials as f64)
        })
        .collect::<Result<_>>()?;
    let eta = values.chunks(qber_grid.len()).map(<[f64]>::to_vec).collect();
    Ok(LutTable {
        block_lengths: block_lengths.to_vec(),
        qber_grid: qber_grid.to_vec(),
        eta,
        trials_per_cell: trials,
        seed,
        generator: GENERATOR.to_string(),
        options: *options,
        config_hash: None,
    })
}

fn check_axes(block_lengths: &[u64], qber_grid: &[f64]) -> Result<()> {
    if block_lengths.is_empty() || qber_grid.is_empty() {
        return domain("grid axes must be non-empty");
    }
    if block_lengths.windows(2).any(|w| w[0] >= w[1]) || block_lengths[0] == 0 {
        return domain("block lengths must be positive and strictly increasing");
    }
    if qber_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return domain("qber grid must be strictly increasing");
    }
    Ok(())
}

/// Index of the lower node and the fractional position, clamped to the axis.
fn locate(axis: &[f64], x: f64) -> (usize, f64, bool) {
    let n = axis.len();
    if n == 1 {
        return (0, 0.0, x != axis[0]);
    }
    if x <= axis[0] {
        return (0, 0.0, x < axis[0]);
    }
    if x >= axis[n - 1] {
        return (n - 2, 1.0, x > axis[n - 1]);
    }
    let i = axis.partition_point(|&a| a <= x) - 1;
    (i, (x - axis[i]) / (axis[i + 1] - axis[i]), false)
}

impl LutTable {
    pub fn validate(&self) -> Result<()> {
        check_axes(&self.block_lengths, &self.qber_grid)?;
        if self.eta.len() != self.block_lengths.len() || self.eta.iter().any(|r| r.len() != self.qber_grid.len()) {
            return domain("eta matrix does not match the grid axes");
        }
        if self.eta.iter().flatten().any(|&e| !(0.0..=1.0).contains(&e)) {
            return domain("eta values must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn with_config_hash(mut self, hash: impl Into<String>) -> Self {
        self.config_hash = Some(hash.into());
        self
    }

    /// Bilinear interpolation in (ln L, Q); queries outside the grid are clamped.
    pub fn lookup(&self, block_length: f64, qber: f64) -> LutLookup {
        let ln_axis: Vec<f64> = self.block_lengths.iter().map(|&l| (l as f64).ln()).collect();
        let (i, u, ci) = locate(&ln_axis, block_length.max(f64::MIN_POSITIVE).ln());
        let (j, v, cj) = locate(&self.qber_grid, qber);
        let at = |a: usize, b: usize| {
            let a = a.min(self.block_lengths.len() - 1);
            let b = b.min(self.qber_grid.len() - 1);
            self.eta[a][b]
        };
        let mut eta = (1.0 - u) * (1.0 - v) * at(i, j) + (1.0 - u) * v * at(i, j + 1);
        if u > 0.0 {
            eta += u * (1.0 - v) * at(i + 1, j) + u * v * at(i + 1, j + 1);
        }
        // keep grid nodes exact
        if u == 0.0 && v == 0.0 {
            eta = at(i, j);
        }
        LutLookup { eta, clamped: ci || cj }
    }

    fn header_comment(&self) -> String {
        format!(
            "# satqkd-lut generator={} trials={} seed={} sacrifice_fraction={} security_margin={} abort_qber={} config_hash={}",
            self.generator.replace(' ', "_"),
            self.trials_per_cell,
            self.seed,
            self.options.sacrifice_fraction,
            self.options.security_margin,
            self.options.abort_qber,
            self.config_hash.as_deref().unwrap_or("none"),
        )
    }

    pub fn to_csv(&self) -> String {
        let mut s = self.header_comment();
        s.push('\n');
        s.push_str("block_length");
        for q in &self.qber_grid {
            write!(s, ",{q}").unwrap();
        }
        s.push('\n');
        for (l, row) in self.block_lengths.iter().zip(&self.eta) {
            write!(s, "{l}").unwrap();
            for e in row {
                write!(s, ",{e}").unwrap();
            }
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let perr = |m: String| Error::Parse(format!("LUT csv: {m}"));
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| perr("empty file".into()))?;
        let meta: std::collections::HashMap<&str, &str> = header
            .strip_prefix("# satqkd-lut")
            .ok_or_else(|| perr("missing '# satqkd-lut' header comment".into()))?
            .split_whitespace()
            .filter_map(|kv| kv.split_once('='))
            .collect();
        let get = |k: &str| meta.get(k).copied().ok_or_else(|| perr(format!("header lacks {k}")));
        let num = |k: &str| -> Result<f64> { get(k)?.parse().map_err(|e| perr(format!("{k}: {e}"))) };
        let int = |k: &str| -> Result<u64> { get(k)?.parse().map_err(|e| perr(format!("{k}: {e}"))) };

        let cols = lines.next().ok_or_else(|| perr("missing column header".into()))?;
        let mut cols = cols.split(',');
        if cols.next().map(str::trim) != Some("block_length") {
            return Err(perr("first column must be block_length".into()));
        }
        let qber_grid = cols
            .map(|c| c.trim().parse::<f64>().map_err(|e| perr(format!("qber header {c:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        let mut block_lengths = Vec::new();
        let mut eta = Vec::new();
        for (k, line) in lines.enumerate() {
            let mut f = line.split(',');
            let l = f.next().unwrap_or_default().trim();
            block_lengths.push(l.parse::<u64>().map_err(|e| perr(format!("row {k} block length {l:?}: {e}")))?);
            eta.push(
                f.map(|c| c.trim().parse::<f64>().map_err(|e| perr(format!("row {k} value {c:?}: {e}"))))
                    .collect::<Result<Vec<_>>>()?,
            );
        }
        let hash = get("config_hash")?;
        let table = LutTable {
            block_lengths,
            qber_grid,
            eta,
            trials_per_cell: int("trials")? as u32,
            seed: int("seed")?,
            generator: get("generator")?.replace('_', " "),
            options: LutOptions {
                sacrifice_fraction: num("sacrifice_fraction")?,
                security_margin: int("security_margin")?,
                abort_qber: num("abort_qber")?,
            },
            config_hash: (hash != "none").then(|| hash.to_string()),
        };
        table.validate()?;
        Ok(table)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("LUT serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: LutTable = serde_json::from_str(text).map_err(|e| Error::Parse(format!("LUT json: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    /// Writes CSV or JSON depending on the extension (`.json` → JSON).
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = if is_json(path) { self.to_json() } else { self.to_csv() };
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        if is_json(path) {
            Self::from_json(&text)
        } else {
            Self::from_csv(&text)
        }
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> LutTable {
        LutTable {
            block_lengths: vec![100, 1000, 10000],
            qber_grid: vec![0.01, 0.03, 0.05],
            eta: vec![vec![0.1, 0.05, 0.0], vec![0.6, 0.4, 0.2], vec![0.8, 0.55, 0.35]],
            trials_per_cell: 20,
            seed: 3,
            generator: GENERATOR.into(),
            options: LutOptions::default(),
            config_hash: Some("abc123".into()),
        }
    }

    #[test]
    fn lookup_on_nodes_is_exact() {
        let t = small();
        for (i, &l) in t.block_lengths.iter().enumerate() {
            for (j, &q) in t.qber_grid.iter().enumerate() {
                let r = t.lookup(l as f64, q);
                assert_eq!(r.eta, t.eta[i][j]);
                assert!(!r.clamped);
            }
        }
    }

    #[test]
    fn lookup_midpoint_and_clamp() {
        let mut t = small();
        t.eta[1] = vec![0.6, 0.6, 0.6];
        t.eta[2] = vec![0.8, 0.8, 0.8];
        let mid = (1000f64 * 10000.0).sqrt();
        assert!((t.lookup(mid, 0.02).eta - 0.7).abs() < 1e-12);
        assert!(t.lookup(1e7, 0.02).clamped);
        assert!(t.lookup(1000.0, 0.2).clamped);
    }

    #[test]
    fn csv_and_json_round_trip() {
        let mut t = small();
        t.eta[1][1] = 0.1 + 0.2;
        assert_eq!(LutTable::from_csv(&t.to_csv()).unwrap(), t);
        assert_eq!(LutTable::from_json(&t.to_json()).unwrap(), t);
        t.config_hash = None;
        assert_eq!(LutTable::from_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn rejects_malformed_csv() {
        assert!(LutTable::from_csv("").is_err());
        assert!(LutTable::from_csv("block_length,0.1\n100,0.5\n").is_err());
        let bad = small().to_csv().replace("0.8,", "1.8,");
        assert!(LutTable::from_csv(&bad).is_err());
    }

    #[test]
    fn generator_small_grid() {
        let opts = LutOptions::default();
        let t = generate_lut(&[1000, 10000], &[0.01, 0.05, 0.1], 20, 1, &opts).unwrap();
        t.validate().unwrap();
        assert!(t.eta[1][0] > t.eta[1][1]);
        assert_eq!(t.eta[0][2], 0.0);
        assert_eq!(t.eta[1][2], 0.0);
        assert!(generate_lut(&[1000], &[0.01], 5, 1, &opts).is_err());
    }
}
