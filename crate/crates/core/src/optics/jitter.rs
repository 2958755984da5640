//! Pointing-jitter statistics of the capture probability.

use ndarray::Array2;

use super::capture::{check_resolution, disk_kernel, CaptureMap};
use super::channel::BeamChannel;
use super::fft2::{circular_convolve, real_spectrum, Fft2};
use super::propagation::IntensityField;
use crate::error::{domain, Error, Result};

/// The jitter Gaussian must fit this many standard deviations inside the map.
const TAIL_SIGMAS: f64 = 4.0;

/// Histogram estimate of the capture-probability density `f(η)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CapturePdf {
    /// `n_bins + 1` edges; both edges coincide for a point mass.
    pub bin_edges: Vec<f64>,
    /// Probability density per bin (infinite for a point mass).
    pub densities: Vec<f64>,
    /// Probability mass per bin, summing to one.
    pub masses: Vec<f64>,
}

impl CapturePdf {
    pub fn centers(&self) -> Vec<f64> {
        self.bin_edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn mean(&self) -> f64 {
        self.centers().iter().zip(&self.masses).map(|(c, m)| c * m).sum()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        self.centers().iter().zip(&self.masses).map(|(c, m)| m * (c - mu) * (c - mu)).sum()
    }

    /// `∫ f(η) dη`, evaluated from the densities.
    pub fn integral(&self) -> f64 {
        if self.is_point_mass() {
            return self.masses.iter().sum();
        }
        self.densities.iter().zip(self.bin_edges.windows(2)).map(|(d, w)| d * (w[1] - w[0])).sum()
    }

    pub fn is_point_mass(&self) -> bool {
        self.bin_edges.len() == 2 && self.bin_edges[0] == self.bin_edges[1]
    }
}

/// Normalized isotropic Gaussian weights over the centred square of
/// half-width `valid_half`; `None` when `sigma` is zero.
fn jitter_weights(n: usize, pitch: f64, sigma: f64, valid_half: f64) -> Option<Vec<f64>> {
    if sigma == 0.0 {
        return None;
    }
    let c = (n / 2) as f64;
    let mut w = vec![0.0; n * n];
    let inv = 1.0 / (2.0 * sigma * sigma);
    for i in 0..n {
        let y = (i as f64 - c) * pitch;
        if y.abs() > valid_half {
            continue;
        }
        for j in 0..n {
            let x = (j as f64 - c) * pitch;
            if x.abs() > valid_half {
                continue;
            }
            w[i * n + j] = (-(x * x + y * y) * inv).exp();
        }
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    Some(w)
}

fn check_tail(sigma: f64, valid_half: f64) -> Result<()> {
    if TAIL_SIGMAS * sigma > valid_half {
        return Err(Error::TailTruncation(format!(
            "{TAIL_SIGMAS}σ = {:.3} m exceeds the usable map half-width {valid_half:.3} m",
            TAIL_SIGMAS * sigma
        )));
    }
    Ok(())
}

/// Mean capture probability `η̄` over the pointing-jitter distribution.
pub fn jitter_averaged_capture(map: &CaptureMap, channel: &BeamChannel) -> Result<f64> {
    let sigma = channel.jitter_sigma();
    check_tail(sigma, map.valid_half_extent())?;
    let n = map.size();
    let Some(w) = jitter_weights(n, map.pitch, sigma, map.valid_half_extent()) else {
        return Ok(map.center());
    };
    Ok(w.iter().zip(map.grid.iter()).map(|(a, b)| a * b).sum())
}

/// Histogram of `η = g(x0, y0)` under the jitter distribution.
pub fn capture_pdf(map: &CaptureMap, channel: &BeamChannel, n_bins: usize) -> Result<CapturePdf> {
    if n_bins == 0 {
        return domain("n_bins must be positive");
    }
    let sigma = channel.jitter_sigma();
    check_tail(sigma, map.valid_half_extent())?;
    let n = map.size();
    let point = |eta: f64| CapturePdf { bin_edges: vec![eta, eta], densities: vec![f64::INFINITY], masses: vec![1.0] };
    let Some(w) = jitter_weights(n, map.pitch, sigma, map.valid_half_extent()) else {
        return Ok(point(map.center()));
    };

    let support = || w.iter().zip(map.grid.iter()).filter(|(wt, _)| **wt > 0.0);
    let lo = support().map(|(_, g)| *g).fold(f64::INFINITY, f64::min);
    let hi = support().map(|(_, g)| *g).fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        return Ok(point(lo));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut masses = vec![0.0; n_bins];
    for (wt, g) in support() {
        let k = (((g - lo) / width) as usize).min(n_bins - 1);
        masses[k] += wt;
    }
    let total: f64 = masses.iter().sum();
    masses.iter_mut().for_each(|m| *m /= total);
    let bin_edges = (0..=n_bins).map(|k| lo + k as f64 * width).collect();
    let densities = masses.iter().map(|m| m / width).collect();
    Ok(CapturePdf { bin_edges, densities, masses })
}

/// Jitter-smeared receiver aperture for one grid geometry.
///
/// Since `η̄ = Σ_p w_p Σ_q I_q D_{p−q} = Σ_q I_q (w ⊛ D)_q`, a fixed geometry
/// evaluates `η̄` of any field on the same grid with one inner product, which
/// is what the waist optimizer needs.
#[derive(Debug, Clone)]
pub struct JitterKernel {
    kernel: Array2<f64>,
    pitch: f64,
}

impl JitterKernel {
    pub fn new(n: usize, pitch: f64, b: f64, sigma: f64) -> Result<Self> {
        check_resolution(pitch, b)?;
        let valid_half = (n as f64 * pitch / 2.0 - b).max(0.0);
        check_tail(sigma, valid_half)?;
        let fft = Fft2::new(n);
        let disk = disk_kernel(n, pitch, b);
        let weights = jitter_weights(n, pitch, sigma, valid_half).unwrap_or_else(|| {
            let mut w = vec![0.0; n * n];
            w[(n / 2) * n + n / 2] = 1.0;
            w
        });
        let k = circular_convolve(&fft, &weights, &real_spectrum(&fft, &disk));
        Ok(Self { kernel: Array2::from_shape_vec((n, n), k).expect("square grid"), pitch })
    }

    pub fn size(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn mean_capture(&self, field: &IntensityField) -> Result<f64> {
        if field.size() != self.size() || (field.pitch - self.pitch).abs() > 1e-12 * self.pitch {
            return domain("field grid does not match the jitter kernel grid");
        }
        Ok(field.grid.iter().zip(self.kernel.iter()).map(|(a, b)| a * b).sum())
    }
}
