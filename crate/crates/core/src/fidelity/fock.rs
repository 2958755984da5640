//! Monte-Carlo model of the two-station measurement chain in a truncated Fock
//! space: pair-manifold sampling, photon loss, dark clicks, passive basis
//! choice, polarization measurement and sifting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ChannelBudget, FidelityBreakdown};
use crate::error::{domain, Result};
use crate::source::{state_coefficients, SourceParams};

pub const MIN_TRIALS: u64 = 10_000;

/// Empirical statistics with binomial standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FockEstimate {
    pub trials: u64,
    /// Exactly one click at each station.
    pub coincidences: u64,
    /// Coincidences with matching bases.
    pub sifted: u64,
    pub errors: u64,
    pub fidelity: f64,
    pub fidelity_se: f64,
    pub qber: f64,
    pub qber_se: f64,
    pub accept_prob: f64,
    pub accept_se: f64,
    pub same_basis_fraction: f64,
    pub same_basis_se: f64,
}

/// Deviation of each statistic from an analytic breakdown, in pooled
/// standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Agreement {
    pub fidelity_sigmas: f64,
    pub qber_sigmas: f64,
    pub accept_sigmas: f64,
}

impl Agreement {
    pub fn max_sigmas(&self) -> f64 {
        self.fidelity_sigmas.max(self.qber_sigmas).max(self.accept_sigmas)
    }
}

fn pooled_sigmas(p_ref: f64, p_emp: f64, n: u64) -> f64 {
    let diff = (p_ref - p_emp).abs();
    if diff == 0.0 {
        return 0.0;
    }
    let p = 0.5 * (p_ref + p_emp);
    let se = (p * (1.0 - p) / n.max(1) as f64).sqrt();
    if se > 0.0 {
        diff / se
    } else {
        f64::INFINITY
    }
}

impl FockEstimate {
    pub fn compare(&self, analytic: &FidelityBreakdown) -> Agreement {
        let q = pooled_sigmas(analytic.qber, self.qber, self.sifted);
        Agreement {
            // F is affine in Q, so its deviation in standard errors is the same
            fidelity_sigmas: q,
            qber_sigmas: q,
            accept_sigmas: pooled_sigmas(analytic.accept_prob, self.accept_prob, self.trials),
        }
    }
}

// Remaining-photon slot at one station: vacuum, H or V.
const VAC: usize = 0;

/// One loss trajectory of one pair manifold.
#[derive(Debug, Clone)]
struct Branch {
    m_a: u32,
    m_b: u32,
    /// Normalized amplitudes over (slot_a, slot_b), each slot in {vac, H, V}.
    /// Only meaningful when both photon counts are at most one.
    psi: [f64; 9],
}

struct Manifold {
    cdf: Vec<f64>,
    branches: Vec<Branch>,
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn kraus(m: u32, lost: u32, t: f64) -> f64 {
    (binomial(m, lost) * t.powi((m - lost) as i32) * (1.0 - t).powi(lost as i32)).sqrt()
}

fn slot(h: u32, v: u32) -> usize {
    match (h, v) {
        (0, 0) => VAC,
        (1, 0) => 1,
        (0, 1) => 2,
        _ => usize::MAX,
    }
}

fn build_manifold(n: u32, p_ta: f64, p_tb: f64) -> Manifold {
    let mut branches = Vec::new();
    let mut weights = Vec::new();
    let amp = 1.0 / ((n + 1) as f64).sqrt();
    for la_h in 0..=n {
        for la_v in 0..=n - la_h {
            for lb_h in 0..=n {
                for lb_v in 0..=n - lb_h {
                    let m_a = n - la_h - la_v;
                    let m_b = n - lb_h - lb_v;
                    let mut psi = [0.0; 9];
                    let mut w = 0.0;
                    for k in 0..=n {
                        let (a_h, a_v, b_h, b_v) = (k, n - k, n - k, k);
                        if la_h > a_h || la_v > a_v || lb_h > b_h || lb_v > b_v {
                            continue;
                        }
                        let c = amp
                            * kraus(a_h, la_h, p_ta)
                            * kraus(a_v, la_v, p_ta)
                            * kraus(b_h, lb_h, p_tb)
                            * kraus(b_v, lb_v, p_tb);
                        w += c * c;
                        let (sa, sb) = (slot(a_h - la_h, a_v - la_v), slot(b_h - lb_h, b_v - lb_v));
                        if sa != usize::MAX && sb != usize::MAX {
                            psi[3 * sa + sb] += c;
                        }
                    }
                    if w <= 0.0 {
                        continue;
                    }
                    let norm = psi.iter().map(|x| x * x).sum::<f64>().sqrt();
                    if norm > 0.0 {
                        psi.iter_mut().for_each(|x| *x /= norm);
                    }
                    branches.push(Branch { m_a, m_b, psi });
                    weights.push(w);
                }
            }
        }
    }
    Manifold { cdf: cumulative(&weights), branches }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let total: f64 = weights.iter().sum();
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w / total;
            acc
        })
        .collect()
}

fn draw(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

// Measurement vectors over (H, V): Z basis {H, V}, X basis {+, −}.
fn basis_vector(basis: usize, outcome: usize) -> [f64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    match (basis, outcome) {
        (0, 0) => [1.0, 0.0],
        (0, _) => [0.0, 1.0],
        (_, 0) => [s, s],
        _ => [s, -s],
    }
}

/// Samples `(out_a, out_b)` for one sifted coincidence. A station whose click
/// is dark contributes a uniformly random outcome.
fn measure(psi: &[f64; 9], real_a: bool, real_b: bool, basis: usize, rng: &mut ChaCha8Rng) -> (usize, usize) {
    let mut probs = [0.0; 4];
    for oa in 0..2 {
        for ob in 0..2 {
            let va = basis_vector(basis, oa);
            let vb = basis_vector(basis, ob);
            let amp = match (real_a, real_b) {
                (true, true) => (0..2)
                    .flat_map(|i| (0..2).map(move |j| (i, j)))
                    .map(|(i, j)| va[i] * vb[j] * psi[3 * (i + 1) + (j + 1)])
                    .sum::<f64>(),
                (false, true) => {
                    (0..2).map(|j| vb[j] * psi[3 * VAC + j + 1]).sum::<f64>() * std::f64::consts::FRAC_1_SQRT_2
                }
                (true, false) => {
                    (0..2).map(|i| va[i] * psi[3 * (i + 1) + VAC]).sum::<f64>() * std::f64::consts::FRAC_1_SQRT_2
                }
                (false, false) => 0.5,
            };
            probs[2 * oa + ob] = amp * amp;
        }
    }
    let total: f64 = probs.iter().sum();
    let u = rng.random::<f64>() * total;
    let mut acc = 0.0;
    for (i, p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return (i / 2, i % 2);
        }
    }
    (1, 1)
}

/// Empirical fidelity, QBER and sifted-coincidence probability of the
/// measurement chain, reproducible per `seed`.
pub fn simulate_measurement_fock(
    params: &SourceParams,
    budget: &ChannelBudget,
    n_cutoff: usize,
    trials: u64,
    seed: u64,
) -> Result<FockEstimate> {
    budget.validate()?;
    if n_cutoff < 2 {
        return domain(format!("n_cutoff must be at least 2, got {n_cutoff}"));
    }
    if trials < MIN_TRIALS {
        return domain(format!("trials must be at least {MIN_TRIALS}, got {trials}"));
    }
    let amps = state_coefficients(params, n_cutoff)?;
    let manifold_cdf = cumulative(&amps.probabilities());
    let manifolds: Vec<Manifold> = (0..=n_cutoff as u32).map(|n| build_manifold(n, budget.p_ta, budget.p_tb)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut coincidences, mut sifted, mut errors) = (0u64, 0u64, 0u64);
    for _ in 0..trials {
        let m = &manifolds[draw(&manifold_cdf, rng.random())];
        let br = &m.branches[draw(&m.cdf, rng.random())];
        let dark_a = rng.random::<f64>() < budget.p_dark;
        let dark_b = rng.random::<f64>() < budget.p_dark;
        if br.m_a + dark_a as u32 != 1 || br.m_b + dark_b as u32 != 1 {
            continue;
        }
        coincidences += 1;
        let basis_a = rng.random_range(0..2usize);
        let basis_b = rng.random_range(0..2usize);
        if basis_a != basis_b {
            continue;
        }
        sifted += 1;
        let (oa, ob) = measure(&br.psi, !dark_a, !dark_b, basis_a, &mut rng);
        // |Ψ+⟩ is anticorrelated in Z and correlated in X
        let error = if basis_a == 0 { oa == ob } else { oa != ob };
        errors += error as u64;
    }

    let ratio = |k: u64, n: u64| if n > 0 { k as f64 / n as f64 } else { 0.0 };
    let se = |p: f64, n: u64| if n > 0 { (p * (1.0 - p) / n as f64).sqrt() } else { 0.0 };
    let qber = ratio(errors, sifted);
    let qber_se = se(qber, sifted);
    let accept_prob = ratio(sifted, trials);
    let same_basis_fraction = ratio(sifted, coincidences);
    Ok(FockEstimate {
        trials,
        coincidences,
        sifted,
        errors,
        fidelity: 1.0 - 8.0 * qber / 3.0,
        fidelity_se: 8.0 * qber_se / 3.0,
        qber,
        qber_se,
        accept_prob,
        accept_se: se(accept_prob, trials),
        same_basis_fraction,
        same_basis_se: se(same_basis_fraction, coincidences),
    })
}
