//! Post-selected two-photon state: weights of the target, dephased and
//! garbage components, overall fidelity and the QBER derived from it.
//!
//! The weights already carry the ½ basis-sifting factor: every term is the
//! manifold probability times the event probability times ½. Consequently
//! `A + B + C` is the probability of a *sifted* coincidence per attempt.

mod fock;

use serde::{Deserialize, Serialize};

pub use fock::{simulate_measurement_fock, FockEstimate};

use crate::error::{domain, Error, Result};
use crate::source::SourceParams;

/// Fidelity of the dephased two-pair component with the target Bell state.
pub const DEPHASED_FIDELITY: f64 = 5.0 / 12.0;

/// Transmission of both downlink arms and the spurious-click probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelBudget {
    pub p_ta: f64,
    pub p_tb: f64,
    pub p_dark: f64,
}

impl ChannelBudget {
    pub fn new(p_ta: f64, p_tb: f64, p_dark: f64) -> Result<Self> {
        let b = Self { p_ta, p_tb, p_dark };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("p_ta", self.p_ta), ("p_tb", self.p_tb), ("p_dark", self.p_dark)] {
            if !(0.0..=1.0).contains(&v) {
                return domain(format!("{name} must lie in [0, 1], got {v}"));
            }
        }
        Ok(())
    }
}

/// Weights of the post-selected state and the figures derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FidelityBreakdown {
    pub coeff_a: f64,
    pub coeff_b: f64,
    pub coeff_c: f64,
    pub fidelity: f64,
    pub qber: f64,
    /// `A + B + C`: sifted coincidences per attempt.
    pub accept_prob: f64,
}

impl FidelityBreakdown {
    pub fn from_coefficients(a: f64, b: f64, c: f64) -> Result<Self> {
        let f = fidelity(a, b, c)?;
        Ok(Self { coeff_a: a, coeff_b: b, coeff_c: c, fidelity: f, qber: qber(f)?, accept_prob: a + b + c })
    }

    /// A breakdown with no accepted events: fidelity 0, QBER at its maximum.
    pub fn empty() -> Self {
        Self { coeff_a: 0.0, coeff_b: 0.0, coeff_c: 0.0, fidelity: 0.0, qber: 0.375, accept_prob: 0.0 }
    }
}

/// Target (`A`), dephased (`B`) and garbage (`C`) weights.
pub fn coefficients(params: &SourceParams, budget: &ChannelBudget) -> Result<(f64, f64, f64)> {
    budget.validate()?;
    let l = params.lambda();
    if !(0.0..1.0).contains(&l) {
        return domain(format!("lambda must lie in [0, 1), got {l}"));
    }
    let (pa, pb, pd) = (budget.p_ta, budget.p_tb, budget.p_dark);
    let (qa, qb) = (1.0 - pa, 1.0 - pb);
    let one_pair = l * (1.0 - l);
    let two_pair = l * l;

    let a = one_pair * pa * pb;
    let b = 5.0 * two_pair * pa * pb * qa * qb;
    let c = one_pair * (pa * qb * pd + pb * qa * pd + qa * qb * pd * pd)
        + two_pair * (3.0 * pa * qa * qb * qb * pd + 3.0 * pb * qb * qa * qa * pd + 1.5 * qa * qa * qb * qb * pd * pd)
        + 0.5 * (1.0 - l) * (1.0 - l) * pd * pd;
    Ok((a, b, c))
}

/// `F = (A + 5/12·B) / (A + B + C)`.
pub fn fidelity(a: f64, b: f64, c: f64) -> Result<f64> {
    if a < 0.0 || b < 0.0 || c < 0.0 {
        return domain(format!("coefficients must be non-negative, got ({a}, {b}, {c})"));
    }
    let total = a + b + c;
    if total <= 0.0 {
        return Err(Error::ZeroAcceptance);
    }
    Ok(((a + DEPHASED_FIDELITY * b) / total).min(1.0))
}

/// `Q = (1 − (3F+1)/4) / 2`.
pub fn qber(f: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&f) {
        return domain(format!("fidelity must lie in [0, 1], got {f}"));
    }
    Ok((1.0 - (3.0 * f + 1.0) / 4.0) / 2.0)
}

/// Fraction of coincidences kept after basis reconciliation.
pub fn sifting_factor() -> f64 {
    0.5
}

/// Full breakdown for a source and a channel budget.
///
/// A budget that yields no accepted events maps to [`FidelityBreakdown::empty`].
pub fn evaluate(params: &SourceParams, budget: &ChannelBudget) -> Result<FidelityBreakdown> {
    let (a, b, c) = coefficients(params, budget)?;
    match FidelityBreakdown::from_coefficients(a, b, c) {
        Err(Error::ZeroAcceptance) => Ok(FidelityBreakdown::empty()),
        other => other,
    }
}
