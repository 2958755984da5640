//! Fresnel propagation of an aperture-truncated Gaussian mode.
//!
//! The single-step Fresnel integral is evaluated with separable chirp-z
//! transforms so that the transmitter grid (which must resolve the aperture
//! edge) and the receiver grid (which must span the far-field spot and the
//! jitter excursions) are sampled independently.

use std::f64::consts::PI;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::BeamChannel;
use super::czt::{Axis, Czt};
use super::fft2::transpose_square;
use crate::error::{domain, Error, Result};

/// Waists wider than this fraction of the aperture radius do not shrink the
/// receiver grid further: the hard-edge diffraction tail sets the spread.
const TRUNCATION_WAIST_CAP: f64 = 1.0 / 3.0;

/// Beyond `4·w0` the Gaussian amplitude is below e⁻¹⁶ and the aperture edge
/// is irrelevant.
const SOURCE_SPAN_WAISTS: f64 = 4.0;

/// Sampling of the transmitter and receiver planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Receiver-plane grid side length; must be a power of two.
    pub size: usize,
    /// Receiver half-extent in units of the effective far-field radius.
    pub oversampling: f64,
    /// Samples across the transmitter-plane grid.
    pub source_samples: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { size: 2048, oversampling: 8.0, source_samples: 512 }
    }
}

impl GridSpec {
    pub fn new(size: usize, oversampling: f64) -> Self {
        Self { size, oversampling, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 8 || !self.size.is_power_of_two() {
            return domain(format!("grid size must be a power of two ≥ 8, got {}", self.size));
        }
        if !(self.oversampling.is_finite() && self.oversampling > 0.0) {
            return domain(format!("oversampling must be positive, got {}", self.oversampling));
        }
        if self.source_samples < 16 {
            return domain(format!("source_samples must be ≥ 16, got {}", self.source_samples));
        }
        Ok(())
    }

    /// Receiver half-extent (m) chosen for `channel`.
    pub fn half_extent(&self, channel: &BeamChannel) -> f64 {
        let w_eff = channel.w0.min(TRUNCATION_WAIST_CAP * channel.a);
        self.oversampling * channel.wavelength * channel.z / (PI * w_eff)
    }

    pub fn pitch(&self, channel: &BeamChannel) -> f64 {
        2.0 * self.half_extent(channel) / self.size as f64
    }
}

/// Photon position probability density on the receiver plane (m⁻²).
///
/// Sample `(i, j)` sits at `y = (i − n/2)·pitch`, `x = (j − n/2)·pitch`, so the
/// optical axis falls exactly on sample `(n/2, n/2)`.
#[derive(Debug, Clone)]
pub struct IntensityField {
    pub grid: Array2<f64>,
    pub pitch: f64,
    /// Discrete integral of `grid`.
    pub total_power: f64,
    /// Discrete power leaving the transmitter aperture.
    pub source_power: f64,
}

impl IntensityField {
    pub fn size(&self) -> usize {
        self.grid.nrows()
    }

    pub fn half_extent(&self) -> f64 {
        self.size() as f64 * self.pitch / 2.0
    }

    pub fn coord(&self, index: usize) -> f64 {
        (index as f64 - (self.size() / 2) as f64) * self.pitch
    }

    /// `sqrt(2⟨r²⟩)`: the 1/e² radius for a Gaussian spot.
    pub fn rms_radius(&self) -> f64 {
        let mut m2 = 0.0;
        let mut m0 = 0.0;
        for ((i, j), &v) in self.grid.indexed_iter() {
            let (y, x) = (self.coord(i), self.coord(j));
            m2 += v * (x * x + y * y);
            m0 += v;
        }
        (2.0 * m2 / m0).sqrt()
    }

    /// Samples along the +x axis starting at the optical axis.
    pub fn radial_profile(&self) -> Vec<f64> {
        let c = self.size() / 2;
        (c..self.size()).map(|j| self.grid[[c, j]]).collect()
    }
}

/// Propagate the truncated Gaussian of `channel` to the receiver plane.
pub fn propagate_truncated_gaussian(
    channel: &BeamChannel,
    grid_size: usize,
    oversampling: f64,
) -> Result<IntensityField> {
    propagate(channel, &GridSpec { size: grid_size, oversampling, ..GridSpec::default() })
}

pub fn propagate(channel: &BeamChannel, spec: &GridSpec) -> Result<IntensityField> {
    channel.validate()?;
    spec.validate()?;

    let lz = channel.wavelength * channel.z;
    let s = channel.a.min(SOURCE_SPAN_WAISTS * channel.w0);
    let ns = spec.source_samples;
    let dx = 2.0 * s / ns as f64;
    let n = spec.size;
    let half = spec.half_extent(channel);
    let du = 2.0 * half / n as f64;

    check_sampling(lz, s, dx, half, du)?;

    // Transmitter plane: amplitude of the unit-power Gaussian mode, clipped by
    // the aperture (area-weighted at the edge) and multiplied by the Fresnel
    // quadratic phase.
    let amp0 = (2.0 / (PI * channel.w0 * channel.w0)).sqrt();
    let x0 = -s + 0.5 * dx;
    let mut source = vec![Complex64::default(); ns * ns];
    let mut source_power = 0.0;
    for i in 0..ns {
        let y = x0 + i as f64 * dx;
        for j in 0..ns {
            let x = x0 + j as f64 * dx;
            let cover = disk_coverage(x, y, 0.5 * dx, channel.a);
            if cover == 0.0 {
                continue;
            }
            let r2 = x * x + y * y;
            let amp = amp0 * (-r2 / (channel.w0 * channel.w0)).exp() * cover;
            source_power += amp * amp * dx * dx;
            source[i * ns + j] = Complex64::from_polar(amp, PI * r2 / lz);
        }
    }

    let czt = Czt::new(
        Axis { start: x0, step: dx, len: ns },
        Axis { start: -((n / 2) as f64) * du, step: du, len: n },
        1.0 / lz,
    );
    let scratch_len = czt.scratch_len();

    // Along x for every transmitter row.
    let mut rows = vec![Complex64::default(); ns * n];
    rows.par_chunks_mut(n)
        .zip(source.par_chunks(ns))
        .for_each_init(|| vec![Complex64::default(); scratch_len], |scratch, (out, inp)| czt.apply(inp, out, scratch));
    drop(source);

    // Along y for every receiver column; column m lands in row m, then the
    // square result is transposed back.
    let mut field = vec![Complex64::default(); n * n];
    field.par_chunks_mut(n).enumerate().for_each_init(
        || (vec![Complex64::default(); scratch_len], vec![Complex64::default(); ns]),
        |(scratch, column), (m, out)| {
            for (r, c) in column.iter_mut().enumerate() {
                *c = rows[r * n + m];
            }
            czt.apply(column, out, scratch);
        },
    );
    drop(rows);
    transpose_square(&mut field, n);

    let norm = (dx * dx / lz).powi(2);
    let intensity: Vec<f64> = field.iter().map(|c| c.norm_sqr() * norm).collect();
    let total_power = intensity.iter().sum::<f64>() * du * du;
    let grid = Array2::from_shape_vec((n, n), intensity).expect("square grid");

    Ok(IntensityField { grid, pitch: du, total_power, source_power })
}

fn check_sampling(lz: f64, s: f64, dx: f64, half: f64, du: f64) -> Result<()> {
    // Quadratic phase π r²/(λz) must advance by less than π per source sample.
    if 2.0 * s * dx > lz {
        return Err(Error::Aliasing(format!(
            "transmitter chirp under-sampled: 2·s·dx = {:.3e} m² exceeds λz = {lz:.3e} m²",
            2.0 * s * dx
        )));
    }
    // The sampled source spectrum repeats every λz/dx on the receiver plane.
    if 2.0 * half > lz / dx {
        return Err(Error::Aliasing(format!(
            "receiver extent {:.3e} m exceeds the replica period λz/dx = {:.3e} m",
            2.0 * half,
            lz / dx
        )));
    }
    // The intensity is band-limited by the source autocorrelation (support 4s).
    if du > lz / (4.0 * s) {
        return Err(Error::Aliasing(format!(
            "receiver pitch {du:.3e} m coarser than the fringe limit λz/4s = {:.3e} m",
            lz / (4.0 * s)
        )));
    }
    Ok(())
}

/// Fraction of the square pixel centred at `(cx, cy)` with half-width `half`
/// covered by the disk of radius `r` centred at the origin.
pub(crate) fn disk_coverage(cx: f64, cy: f64, half: f64, r: f64) -> f64 {
    const SUB: usize = 8;
    let near_x = (cx.abs() - half).max(0.0);
    let near_y = (cy.abs() - half).max(0.0);
    if near_x * near_x + near_y * near_y >= r * r {
        return 0.0;
    }
    let far_x = cx.abs() + half;
    let far_y = cy.abs() + half;
    if far_x * far_x + far_y * far_y <= r * r {
        return 1.0;
    }
    let step = 2.0 * half / SUB as f64;
    let mut inside = 0usize;
    for a in 0..SUB {
        let y = cy - half + (a as f64 + 0.5) * step;
        for b in 0..SUB {
            let x = cx - half + (b as f64 + 0.5) * step;
            if x * x + y * y <= r * r {
                inside += 1;
            }
        }
    }
    inside as f64 / (SUB * SUB) as f64
}
