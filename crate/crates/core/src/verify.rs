//! Built-in oracle checks: Monte-Carlo jitter averaging, the Fock-space
//! measurement simulator and Cascade's Shannon bound.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extraction::{binary_entropy, cascade_reconcile};
use crate::fidelity::{evaluate, simulate_measurement_fock, ChannelBudget};
use crate::optics::{capture_probability_map, jitter_averaged_capture, propagate, BeamChannel, GridSpec};
use crate::seed::SeedTree;
use crate::source::SourceParams;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JitterCheck {
    pub analytic: f64,
    pub monte_carlo: f64,
    pub standard_error: f64,
    pub relative_error: f64,
}

/// Averages the capture map over `samples` Gaussian pointing offsets and
/// compares with the grid-weighted average.
pub fn jitter_monte_carlo(channel: &BeamChannel, grid: &GridSpec, samples: usize, seed: u64) -> Result<JitterCheck> {
    let field = propagate(channel, grid)?;
    let map = capture_probability_map(&field, channel.b)?;
    let analytic = jitter_averaged_capture(&map, channel)?;
    let sigma = channel.jitter_sigma();
    let mut rng = SeedTree::new(seed).rng("jitter-oracle");
    let (mut sum, mut sum2) = (0.0, 0.0);
    if sigma == 0.0 {
        sum = map.center() * samples as f64;
        sum2 = map.center().powi(2) * samples as f64;
    } else {
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        for _ in 0..samples {
            let g = map.interpolate(normal.sample(&mut rng), normal.sample(&mut rng));
            sum += g;
            sum2 += g * g;
        }
    }
    let n = samples as f64;
    let monte_carlo = sum / n;
    let var = (sum2 / n - monte_carlo * monte_carlo).max(0.0);
    Ok(JitterCheck {
        analytic,
        monte_carlo,
        standard_error: (var / n).sqrt(),
        relative_error: (monte_carlo - analytic).abs() / analytic,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CascadeCheck {
    pub runs: usize,
    pub block_length: usize,
    pub qber: f64,
    /// Runs left with residual errors.
    pub failed_runs: usize,
    /// Reconciled runs whose leakage fell below `H(e/L)·L`, `e` the realized
    /// error count.
    pub below_shannon: usize,
    /// Runs whose leakage fell below `H(qber)·L`. Expected to be nonzero when
    /// a run draws fewer errors than `qber·L`.
    pub below_nominal: usize,
    /// Mean of leakage over `H(e/L)·L` across reconciled runs with errors.
    pub mean_leak_ratio: f64,
    pub residual_error_rate: f64,
}

/// Reconciles `runs` random strings with i.i.d. errors at rate `qber`.
pub fn cascade_statistics(block_length: usize, qber: f64, runs: usize, seed: u64) -> Result<CascadeCheck> {
    let tree = SeedTree::new(seed);
    let l = block_length as f64;
    let nominal = binary_entropy(qber) * l;
    let mut c = CascadeCheck {
        runs,
        block_length,
        qber,
        failed_runs: 0,
        below_shannon: 0,
        below_nominal: 0,
        mean_leak_ratio: 0.0,
        residual_error_rate: 0.0,
    };
    let (mut ratio_sum, mut ratio_n, mut residual) = (0.0, 0usize, 0u64);
    for r in 0..runs {
        let mut rng = tree.indexed_rng("cascade", r as u64);
        let a: Vec<u8> = (0..block_length).map(|_| rng.random_range(0..2u8)).collect();
        let b: Vec<u8> = a.iter().map(|&x| x ^ (rng.random::<f64>() < qber) as u8).collect();
        let errors = a.iter().zip(&b).filter(|(x, y)| x != y).count();
        let out = cascade_reconcile(&a, &b, qber, rng.random())?;
        let leaked = out.leaked_bits as f64;
        residual += out.residual_errors;
        if leaked < nominal {
            c.below_nominal += 1;
        }
        if out.residual_errors > 0 {
            c.failed_runs += 1;
            continue;
        }
        let bound = binary_entropy(errors as f64 / l) * l;
        if leaked < bound {
            c.below_shannon += 1;
        }
        if bound > 0.0 {
            ratio_sum += leaked / bound;
            ratio_n += 1;
        }
    }
    c.mean_leak_ratio = if ratio_n > 0 { ratio_sum / ratio_n as f64 } else { f64::NAN };
    c.residual_error_rate = residual as f64 / (runs * block_length) as f64;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Runs the three oracle checks at reduced size.
pub fn run_oracles(seed: u64) -> Result<Vec<CheckResult>> {
    let tree = SeedTree::new(seed);
    let mut out = Vec::new();

    let grid = GridSpec { size: 512, oversampling: 2.0, source_samples: 256 };
    let ch = BeamChannel::new(0.12, 0.15, 0.6, 1.0e6, 810e-9, 0.47e-6)?;
    let j = jitter_monte_carlo(&ch, &grid, 100_000, tree.seed("jitter-oracle"))?;
    out.push(CheckResult {
        name: "jitter_monte_carlo".into(),
        passed: j.relative_error < 0.01,
        detail: format!(
            "analytic {:.6} vs monte carlo {:.6} (rel. err {:.2e})",
            j.analytic, j.monte_carlo, j.relative_error
        ),
    });

    let src = SourceParams::new(0.05, 1e6, 0.0)?;
    let budget = ChannelBudget::new(0.5, 0.5, 0.0)?;
    let est = simulate_measurement_fock(&src, &budget, 3, 100_000, tree.seed("fock-oracle"))?;
    let ag = est.compare(&evaluate(&src, &budget)?);
    out.push(CheckResult {
        name: "fock_fidelity".into(),
        passed: ag.max_sigmas() < 3.0,
        detail: format!(
            "empirical F {:.4} ± {:.4}; max deviation {:.2} σ",
            est.fidelity,
            est.fidelity_se,
            ag.max_sigmas()
        ),
    });

    let c = cascade_statistics(10_000, 0.05, 20, tree.seed("cascade"))?;
    out.push(CheckResult {
        name: "cascade_shannon_bound".into(),
        passed: c.below_shannon == 0 && c.residual_error_rate <= 1e-3,
        detail: format!(
            "{} runs, {} below H(Q)L of the realized errors, {} unreconciled; mean leak/H(Q)L = {:.3}",
            c.runs, c.below_shannon, c.failed_runs, c.mean_leak_ratio
        ),
    });
    Ok(out)
}
