//! SPDC pair source: photon-number statistics of the polarization-entangled
//! state and the choice of squeezing parameter λ.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::extraction::{r_final, KeyExtraction};
use crate::fidelity::{self, ChannelBudget};

/// Default λ search interval.
pub const LAMBDA_BOUNDS: (f64, f64) = (1e-4, 0.5);

const COARSE_POINTS: usize = 64;
const GOLDEN_ITERATIONS: usize = 60;

/// How the detection-window rate follows from the configured source rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RateModel {
    /// Continuous pumping: the pair rate is held fixed and the window rate is
    /// `pair_rate / (2λ(1−λ))`.
    ConstantPairRate { pair_rate: f64 },
    /// Pulsed pumping at a fixed clock; the pair rate follows from λ.
    FixedPulseRate { pulse_rate: f64 },
}

impl RateModel {
    fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            RateModel::ConstantPairRate { pair_rate } => ("pair_rate", pair_rate),
            RateModel::FixedPulseRate { pulse_rate } => ("pulse_rate", pulse_rate),
        };
        if !(v.is_finite() && v >= 0.0) {
            return domain(format!("{name} must be finite and non-negative, got {v}"));
        }
        Ok(())
    }

    /// Attempts (pulses or detection windows) per second at squeezing `lambda`.
    pub fn attempt_rate(&self, lambda: f64) -> f64 {
        match *self {
            RateModel::ConstantPairRate { pair_rate } => {
                let p1 = 2.0 * lambda * (1.0 - lambda);
                if p1 > 0.0 {
                    pair_rate / p1
                } else {
                    0.0
                }
            }
            RateModel::FixedPulseRate { pulse_rate } => pulse_rate,
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        match *self {
            RateModel::ConstantPairRate { pair_rate } => RateModel::ConstantPairRate { pair_rate: pair_rate * factor },
            RateModel::FixedPulseRate { pulse_rate } => RateModel::FixedPulseRate { pulse_rate: pulse_rate * factor },
        }
    }
}

/// Source operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub lambda_sq: f64,
    /// Mean pairs per pulse, always `2·lambda_sq`.
    pub mu: f64,
    pub pulse_rate: f64,
    pub pair_rate: f64,
    pub p_dark: f64,
}

impl SourceParams {
    /// Continuously pumped source with the given pair rate.
    pub fn new(lambda: f64, pair_rate: f64, p_dark: f64) -> Result<Self> {
        Self::with_rate_model(lambda, RateModel::ConstantPairRate { pair_rate }, p_dark)
    }

    pub fn with_rate_model(lambda: f64, model: RateModel, p_dark: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&lambda) {
            return domain(format!("lambda must lie in [0, 1), got {lambda}"));
        }
        if !(0.0..1.0).contains(&p_dark) {
            return domain(format!("p_dark must lie in [0, 1), got {p_dark}"));
        }
        model.validate()?;
        let pulse_rate = model.attempt_rate(lambda);
        let pair_rate = match model {
            RateModel::ConstantPairRate { pair_rate } => pair_rate,
            RateModel::FixedPulseRate { pulse_rate } => pulse_rate * 2.0 * lambda * (1.0 - lambda),
        };
        Ok(Self { lambda_sq: lambda, mu: 2.0 * lambda, pulse_rate, pair_rate, p_dark })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda_sq
    }

    /// Attempts per second; the `pulse_rate` field.
    pub fn attempt_rate(&self) -> f64 {
        self.pulse_rate
    }
}

/// Photon-number content of a pair manifold.
///
/// The `n`-pair manifold is `(1/√(n+1)) Σ_k |k H, (n−k) V⟩_A |(n−k) H, k V⟩_B`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FockAmplitudes {
    pub lambda: f64,
    /// Amplitude of each manifold, index = number of pairs.
    pub manifold_amplitudes: Vec<f64>,
}

impl FockAmplitudes {
    pub fn n_max(&self) -> usize {
        self.manifold_amplitudes.len() - 1
    }

    pub fn manifold_probability(&self, n: usize) -> f64 {
        self.manifold_amplitudes.get(n).map_or(0.0, |a| a * a)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.manifold_amplitudes.iter().map(|a| a * a).collect()
    }

    pub fn squared_norm(&self) -> f64 {
        self.probabilities().iter().sum()
    }

    /// Amplitude of `|k H, (n−k) V⟩_A |(n−k) H, k V⟩_B` within the full state.
    pub fn term_amplitude(&self, n: usize, k: usize) -> f64 {
        if k > n {
            return 0.0;
        }
        self.manifold_amplitudes.get(n).map_or(0.0, |a| a / ((n + 1) as f64).sqrt())
    }
}

/// Fock expansion of the source state up to `n_max` pairs.
pub fn state_coefficients(params: &SourceParams, n_max: usize) -> Result<FockAmplitudes> {
    if n_max < 2 {
        return domain(format!("n_max must be at least 2, got {n_max}"));
    }
    let l = params.lambda();
    if !(0.0..1.0).contains(&l) {
        return domain(format!("lambda must lie in [0, 1), got {l}"));
    }
    let manifold_amplitudes = (0..=n_max).map(|n| ((n + 1) as f64 * l.powi(n as i32)).sqrt() * (1.0 - l)).collect();
    Ok(FockAmplitudes { lambda: l, manifold_amplitudes })
}

/// Result of a λ optimization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaSearch {
    pub lambda: f64,
    pub skr: f64,
    /// Coarse scan as (λ, SKR) pairs.
    pub scan: Vec<(f64, f64)>,
}

/// SKR at squeezing `lambda` for a fixed channel.
pub fn skr_at(lambda: f64, budget: &ChannelBudget, extraction: &KeyExtraction, rate: &RateModel) -> Result<f64> {
    let src = SourceParams::with_rate_model(lambda, *rate, budget.p_dark.min(1.0 - f64::EPSILON))?;
    let bd = fidelity::evaluate(&src, budget)?;
    let r = r_final(src.attempt_rate(), &bd);
    Ok(extraction.skr(r, bd.qber)?.skr)
}

/// Squeezing parameter that maximizes the SKR over `bounds`.
pub fn optimize_lambda(
    budget: &ChannelBudget,
    extraction: &KeyExtraction,
    rate: &RateModel,
    bounds: (f64, f64),
) -> Result<LambdaSearch> {
    let (lo, hi) = bounds;
    if !(lo > 0.0 && hi <= 0.5 && lo < hi) {
        return domain(format!("lambda bounds must satisfy 0 < lo < hi <= 0.5, got ({lo}, {hi})"));
    }
    budget.validate()?;
    let (ln_lo, ln_hi) = (lo.ln(), hi.ln());
    let step = (ln_hi - ln_lo) / (COARSE_POINTS - 1) as f64;
    let f = |ln_l: f64| skr_at(ln_l.exp().clamp(lo, hi), budget, extraction, rate);

    let mut scan = Vec::with_capacity(COARSE_POINTS);
    for i in 0..COARSE_POINTS {
        let ln_l = ln_lo + step * i as f64;
        scan.push((ln_l.exp(), f(ln_l)?));
    }
    let mut best = 0;
    for (i, &(_, s)) in scan.iter().enumerate() {
        if s > scan[best].1 {
            best = i;
        }
    }
    if scan[best].1 <= 0.0 {
        return Err(Error::AllZero);
    }

    let mut a = ln_lo + step * best.saturating_sub(1) as f64;
    let mut b = ln_lo + step * (best + 1).min(COARSE_POINTS - 1) as f64;
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a < 1e-9 {
            break;
        }
        // >= keeps the lower interval on ties
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
    }
    let (ln_star, s_star) = if fc >= fd { (c, fc) } else { (d, fd) };
    let (lambda, skr) = if s_star > scan[best].1 { (ln_star.exp(), s_star) } else { scan[best] };
    Ok(LambdaSearch { lambda, skr, scan })
}
