//! Secret-key rate: binary-entropy bound with a fixed reconciliation
//! inefficiency, Cascade reconciliation and the block-length/QBER efficiency
//! table built from it.

pub mod cascade;
pub mod lut;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::fidelity::FidelityBreakdown;

pub use cascade::{cascade_reconcile, CascadeOutcome};
pub use lut::{generate_lut, LutLookup, LutOptions, LutTable};

/// Reconciliation inefficiency for large blocks.
pub const DEFAULT_XI: f64 = 1.22;

/// Binary Shannon entropy in bits. Exact at 0, ½ and 1.
pub fn binary_entropy(q: f64) -> f64 {
    if q <= 0.0 || q >= 1.0 {
        return 0.0;
    }
    if q == 0.5 {
        return 1.0;
    }
    -(q * q.log2() + (1.0 - q) * (1.0 - q).log2())
}

/// QBER at which `1 − (1+ξ)·H(Q)` reaches zero.
pub fn qber_threshold(xi: f64) -> f64 {
    let f = |q: f64| 1.0 - (1.0 + xi) * binary_entropy(q);
    let (mut lo, mut hi) = (0.0, 0.5);
    if f(hi) > 0.0 {
        return 0.5;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionMode {
    AnalyticXi,
    Lut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyRateResult {
    pub r_final: f64,
    pub qber: f64,
    pub skr: f64,
    pub mode: ExtractionMode,
    /// LUT query fell outside the table and was clamped.
    pub clamped: bool,
}

fn check_rate_inputs(r_final: f64, qber: f64) -> Result<()> {
    if !(0.0..=0.5).contains(&qber) {
        return domain(format!("qber must lie in [0, 0.5], got {qber}"));
    }
    if !(r_final >= 0.0 && r_final.is_finite()) {
        return domain(format!("r_final must be finite and non-negative, got {r_final}"));
    }
    Ok(())
}

/// `SKR = r_final · max(0, 1 − (1+ξ)·H(Q))`.
pub fn skr_analytic(r_final: f64, qber: f64, xi: f64) -> Result<KeyRateResult> {
    check_rate_inputs(r_final, qber)?;
    if !(xi >= 0.0) {
        return domain(format!("xi must be non-negative, got {xi}"));
    }
    let fraction = (1.0 - (1.0 + xi) * binary_entropy(qber)).max(0.0);
    Ok(KeyRateResult { r_final, qber, skr: r_final * fraction, mode: ExtractionMode::AnalyticXi, clamped: false })
}

/// Sifted coincidence rate. The breakdown's acceptance probability already
/// includes basis sifting, so no further factor is applied.
pub fn r_final(attempt_rate: f64, breakdown: &FidelityBreakdown) -> f64 {
    attempt_rate * breakdown.accept_prob
}

/// How sifted bits are turned into key.
#[derive(Debug, Clone)]
pub enum KeyExtraction {
    Analytic {
        xi: f64,
    },
    /// Table lookup; the block length is the sifted rate times `block_duration` seconds.
    Lut {
        table: Arc<LutTable>,
        block_duration: f64,
    },
}

impl KeyExtraction {
    pub fn mode(&self) -> ExtractionMode {
        match self {
            KeyExtraction::Analytic { .. } => ExtractionMode::AnalyticXi,
            KeyExtraction::Lut { .. } => ExtractionMode::Lut,
        }
    }

    pub fn skr(&self, r_final: f64, qber: f64) -> Result<KeyRateResult> {
        match self {
            KeyExtraction::Analytic { xi } => skr_analytic(r_final, qber, *xi),
            KeyExtraction::Lut { table, block_duration } => skr_lut(table, r_final, qber, r_final * block_duration),
        }
    }
}

/// SKR from the table for a block of `block_length` sifted bits.
/// Blocks shorter than the table's smallest length yield no key.
pub fn skr_lut(table: &LutTable, r_final: f64, qber: f64, block_length: f64) -> Result<KeyRateResult> {
    check_rate_inputs(r_final, qber)?;
    let (eta, clamped) = if block_length < table.block_lengths[0] as f64 {
        (0.0, false)
    } else {
        let l = table.lookup(block_length, qber);
        (l.eta, l.clamped)
    };
    Ok(KeyRateResult { r_final, qber, skr: r_final * eta, mode: ExtractionMode::Lut, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entropy_boundaries_and_symmetry() {
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        assert_eq!(binary_entropy(0.5), 1.0);
        for q in [0.01, 0.1, 0.23, 0.4] {
            assert!((binary_entropy(q) - binary_entropy(1.0 - q)).abs() < 1e-15);
        }
        assert!((binary_entropy(0.05) - 0.286_396_957_115_956_25).abs() < 1e-12);
    }

    #[test]
    fn skr_examples() {
        assert_eq!(skr_analytic(1234.0, 0.0, 1.22).unwrap().skr, 1234.0);
        let r = skr_analytic(1000.0, 0.05, 1.22).unwrap();
        assert!((r.skr - 364.2).abs() < 0.1, "{}", r.skr);
        assert!(skr_analytic(1000.0, 0.0946, 1.22).unwrap().skr <= 1.0);
        assert!(skr_analytic(1.0, 0.6, 1.22).is_err());
        assert!(skr_analytic(-1.0, 0.1, 1.22).is_err());
        assert!(skr_analytic(1.0, 0.1, -0.1).is_err());
    }

    #[test]
    fn threshold_root() {
        let t = qber_threshold(DEFAULT_XI);
        assert!((t - 0.0943).abs() < 1e-3, "{t}");
        assert!(t < 0.0946);
    }

    #[test]
    fn final_rate_composition() {
        let bd = FidelityBreakdown::from_coefficients(0.8e-4, 0.1e-4, 0.1e-4).unwrap();
        assert!((r_final(1e6, &bd) - 100.0).abs() < 1e-9);
        assert_eq!(r_final(2e6, &bd), 2.0 * r_final(1e6, &bd));
        assert_eq!(r_final(1e6, &FidelityBreakdown::empty()), 0.0);
    }
}
