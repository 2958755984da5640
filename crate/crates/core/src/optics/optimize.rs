//! Beam-waist optimization of the jitter-averaged capture probability.

use std::sync::{Arc, Mutex};

use super::capture::capture_probability_map;
use super::channel::BeamChannel;
use super::jitter::{jitter_averaged_capture, JitterKernel};
use super::propagation::{propagate, GridSpec};
use crate::error::{domain, Error, Result};

/// Log-spaced points of the coarse scan.
pub const COARSE_POINTS: usize = 32;
/// Golden-section stops once the bracket is this narrow relative to `w0`.
pub const BRACKET_TOLERANCE: f64 = 1e-3;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Result of a waist search.
#[derive(Debug, Clone, PartialEq)]
pub struct WaistSearch {
    /// Optimal waist (m).
    pub w0: f64,
    /// `η̄` at the optimal waist.
    pub eta: f64,
    /// Coarse scan as `(w0, η̄)` pairs, increasing in `w0`.
    pub scan: Vec<(f64, f64)>,
    pub evaluations: usize,
}

/// `η̄` for one full channel: propagate, convolve with the aperture, average
/// over the jitter.
pub fn mean_capture(channel: &BeamChannel, grid: &GridSpec) -> Result<f64> {
    let field = propagate(channel, grid)?;
    let map = capture_probability_map(&field, channel.b)?;
    jitter_averaged_capture(&map, channel)
}

/// Evaluates `η̄(w0)` for a fixed link geometry.
pub struct WaistEvaluator {
    base: BeamChannel,
    grid: GridSpec,
    // Waists above a/3 share one receiver grid, so one cached kernel serves
    // the whole region around the optimum.
    kernel: Mutex<Option<Arc<JitterKernel>>>,
}

impl WaistEvaluator {
    pub fn new(a: f64, b: f64, z: f64, sigma_pj: f64, wavelength: f64, grid: GridSpec) -> Result<Self> {
        let base = BeamChannel::new(a, a, b, z, wavelength, sigma_pj)?;
        grid.validate()?;
        Ok(Self { base, grid, kernel: Mutex::new(None) })
    }

    pub fn channel(&self, w0: f64) -> BeamChannel {
        self.base.with_w0(w0)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    fn kernel_for(&self, pitch: f64) -> Result<Arc<JitterKernel>> {
        let mut slot = self.kernel.lock().expect("kernel cache poisoned");
        if let Some(k) = slot.as_ref() {
            if (k.pitch() - pitch).abs() <= 1e-12 * pitch {
                return Ok(Arc::clone(k));
            }
        }
        let k = Arc::new(JitterKernel::new(self.grid.size, pitch, self.base.b, self.base.jitter_sigma())?);
        *slot = Some(Arc::clone(&k));
        Ok(k)
    }

    /// `η̄(w0)`.
    pub fn eval(&self, w0: f64) -> Result<f64> {
        let ch = self.channel(w0);
        ch.validate()?;
        let field = propagate(&ch, &self.grid)?;
        self.kernel_for(field.pitch)?.mean_capture(&field)
    }

    pub fn scan(&self, w0s: &[f64]) -> Result<Vec<(f64, f64)>> {
        w0s.iter().map(|&w| Ok((w, self.eval(w)?))).collect()
    }

    /// Coarse log-spaced scan, then golden-section refinement.
    pub fn optimize(&self, bounds: (f64, f64)) -> Result<WaistSearch> {
        let (lo, hi) = bounds;
        if !(lo > 0.0 && hi > lo && hi.is_finite()) {
            return domain(format!("invalid waist bounds ({lo}, {hi})"));
        }
        let ratio = (hi / lo).ln() / (COARSE_POINTS - 1) as f64;
        let w0s: Vec<f64> = (0..COARSE_POINTS).map(|k| lo * (ratio * k as f64).exp()).collect();
        let scan = self.scan(&w0s)?;
        let mut evaluations = scan.len();

        let (k_best, _) = scan
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (k, &(_, e))| if e > acc.1 { (k, e) } else { acc });
        if k_best == 0 || k_best == scan.len() - 1 {
            return Err(Error::NoInteriorMaximum(format!(
                "η̄ is largest at the bound w0 = {:.4} m over [{lo}, {hi}]",
                scan[k_best].0
            )));
        }

        // Golden section in ln(w0) on the bracket around the best sample.
        let mut a = scan[k_best - 1].0.ln();
        let mut b = scan[k_best + 1].0.ln();
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = self.eval(c.exp())?;
        let mut fd = self.eval(d.exp())?;
        evaluations += 2;
        while (b - a).exp() - 1.0 > BRACKET_TOLERANCE {
            if fc >= fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = self.eval(c.exp())?;
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = self.eval(d.exp())?;
            }
            evaluations += 1;
        }
        let (mut w0, mut eta) = if fc >= fd { (c.exp(), fc) } else { (d.exp(), fd) };
        let (ws, es) = scan[k_best];
        if es > eta {
            w0 = ws;
            eta = es;
        }
        Ok(WaistSearch { w0, eta, scan, evaluations })
    }
}

/// Find the waist maximizing `η̄` within `search_bounds`.
pub fn optimize_beamwaist(
    a: f64,
    b: f64,
    z: f64,
    sigma_pj: f64,
    wavelength: f64,
    search_bounds: (f64, f64),
    grid: &GridSpec,
) -> Result<WaistSearch> {
    WaistEvaluator::new(a, b, z, sigma_pj, wavelength, *grid)?.optimize(search_bounds)
}

/// Number of strict interior local maxima of a sampled curve.
pub fn interior_maxima(curve: &[(f64, f64)]) -> usize {
    curve.windows(3).filter(|w| w[1].1 > w[0].1 && w[1].1 > w[2].1).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_grid() -> GridSpec {
        GridSpec { size: 256, oversampling: 2.0, source_samples: 128 }
    }

    #[test]
    fn kernel_route_matches_full_route() {
        let ev = WaistEvaluator::new(0.15, 0.6, 1e6, 0.47e-6, 810e-9, small_grid()).unwrap();
        for w0 in [0.03, 0.1] {
            let fast = ev.eval(w0).unwrap();
            let full = mean_capture(&ev.channel(w0), &small_grid()).unwrap();
            assert!((fast - full).abs() < 1e-12 * full.max(1e-30) + 1e-15, "{fast} vs {full}");
        }
    }

    #[test]
    fn monotone_bracket_is_rejected() {
        // Below a/10 the capture keeps rising with w0.
        let ev = WaistEvaluator::new(0.15, 0.6, 1e6, 0.47e-6, 810e-9, small_grid()).unwrap();
        assert!(matches!(ev.optimize((0.015, 0.04)), Err(Error::NoInteriorMaximum(_))));
        assert!(matches!(ev.optimize((0.03, 0.01)), Err(Error::Domain(_))));
    }

    #[test]
    fn interior_maxima_counts() {
        let c = [(0.0, 1.0), (1.0, 2.0), (2.0, 1.5), (3.0, 1.7), (4.0, 1.0)];
        assert_eq!(interior_maxima(&c), 2);
        assert_eq!(interior_maxima(&c[..3]), 1);
    }
}
