use ndarray::Array2;

use super::fft2::{circular_convolve, real_spectrum, Fft2};
use super::propagation::{disk_coverage, IntensityField};
use crate::error::{domain, Error, Result};

/// Receiver aperture must span at least this many samples across its diameter.
const MIN_APERTURE_SAMPLES: f64 = 4.0;

/// Rounding noise tolerated outside [0, 1] before clipping.
const CLIP_TOLERANCE: f64 = 1e-12;

/// Capture probability `g(x0, y0)` for a beam centre displaced to `(x0, y0)`.
///
/// Same sample layout as [`IntensityField`]. Values closer than `b` to the
/// grid edge are affected by the circular convolution and lie outside
/// [`CaptureMap::valid_half_extent`].
#[derive(Debug, Clone)]
pub struct CaptureMap {
    pub grid: Array2<f64>,
    pub pitch: f64,
    /// Receiver aperture radius used for the convolution.
    pub b: f64,
    /// Total power of the source field.
    pub total_power: f64,
}

impl CaptureMap {
    pub fn size(&self) -> usize {
        self.grid.nrows()
    }

    pub fn half_extent(&self) -> f64 {
        self.size() as f64 * self.pitch / 2.0
    }

    /// Half-width of the square where the map equals the linear convolution.
    pub fn valid_half_extent(&self) -> f64 {
        (self.half_extent() - self.b).max(0.0)
    }

    pub fn coord(&self, index: usize) -> f64 {
        (index as f64 - (self.size() / 2) as f64) * self.pitch
    }

    /// Value on the optical axis.
    pub fn center(&self) -> f64 {
        let c = self.size() / 2;
        self.grid[[c, c]]
    }

    /// Bilinear interpolation; zero outside the grid.
    pub fn interpolate(&self, x: f64, y: f64) -> f64 {
        let n = self.size();
        let c = (n / 2) as f64;
        let fx = x / self.pitch + c;
        let fy = y / self.pitch + c;
        if !(fx >= 0.0 && fy >= 0.0) || fx > (n - 1) as f64 || fy > (n - 1) as f64 {
            return 0.0;
        }
        let j = (fx.floor() as usize).min(n - 2);
        let i = (fy.floor() as usize).min(n - 2);
        let tx = fx - j as f64;
        let ty = fy - i as f64;
        let g = &self.grid;
        (1.0 - ty) * ((1.0 - tx) * g[[i, j]] + tx * g[[i, j + 1]])
            + ty * ((1.0 - tx) * g[[i + 1, j]] + tx * g[[i + 1, j + 1]])
    }
}

/// Disk indicator of radius `b` on an `n × n` grid in circular (wrapped)
/// offset order, each sample weighted by its covered area.
pub(crate) fn disk_kernel(n: usize, pitch: f64, b: f64) -> Vec<f64> {
    let mut k = vec![0.0; n * n];
    let r = b / pitch;
    let reach = (r.ceil() as usize + 1).min(n / 2);
    let offset = |i: usize| if i < n / 2 { i as f64 } else { i as f64 - n as f64 };
    let area = pitch * pitch;
    for i in 0..n {
        let di = offset(i);
        if di.abs() > reach as f64 {
            continue;
        }
        for j in 0..n {
            let dj = offset(j);
            if dj.abs() > reach as f64 {
                continue;
            }
            k[i * n + j] = disk_coverage(dj, di, 0.5, r) * area;
        }
    }
    k
}

pub(crate) fn check_resolution(pitch: f64, b: f64) -> Result<()> {
    if !(b.is_finite() && b > 0.0) {
        return domain(format!("receiver radius must be positive, got {b}"));
    }
    if 2.0 * b / pitch < MIN_APERTURE_SAMPLES {
        return Err(Error::Resolution(format!(
            "aperture diameter {:.3} m spans {:.2} samples of pitch {:.3} m (need ≥ {MIN_APERTURE_SAMPLES})",
            2.0 * b,
            2.0 * b / pitch,
            pitch
        )));
    }
    Ok(())
}

/// Convolve the intensity with the receiver aperture (convolution theorem).
pub fn capture_probability_map(field: &IntensityField, b: f64) -> Result<CaptureMap> {
    check_resolution(field.pitch, b)?;
    let n = field.size();
    let fft = Fft2::new(n);
    let kernel = real_spectrum(&fft, &disk_kernel(n, field.pitch, b));
    let input: Vec<f64> = field.grid.iter().copied().collect();
    let mut g = circular_convolve(&fft, &input, &kernel);
    for v in g.iter_mut() {
        if *v < 0.0 && *v > -CLIP_TOLERANCE {
            *v = 0.0;
        } else if *v > 1.0 && *v < 1.0 + CLIP_TOLERANCE {
            *v = 1.0;
        }
    }
    Ok(CaptureMap {
        grid: Array2::from_shape_vec((n, n), g).expect("square grid"),
        pitch: field.pitch,
        b,
        total_power: field.total_power,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian_field(n: usize, pitch: f64, w: f64) -> IntensityField {
        let c = (n / 2) as f64;
        let grid = Array2::from_shape_fn((n, n), |(i, j)| {
            let y = (i as f64 - c) * pitch;
            let x = (j as f64 - c) * pitch;
            2.0 / (std::f64::consts::PI * w * w) * (-2.0 * (x * x + y * y) / (w * w)).exp()
        });
        let total_power = grid.sum() * pitch * pitch;
        IntensityField { grid, pitch, total_power, source_power: total_power }
    }

    #[test]
    fn under_resolved_aperture() {
        let f = gaussian_field(32, 1.0, 4.0);
        assert!(matches!(capture_probability_map(&f, 1.0), Err(Error::Resolution(_))));
        assert!(matches!(capture_probability_map(&f, -1.0), Err(Error::Domain(_))));
        assert!(capture_probability_map(&f, 2.0).is_ok());
    }

    #[test]
    fn kernel_area_matches_disk() {
        let k = disk_kernel(128, 0.1, 2.0);
        let area: f64 = k.iter().sum();
        let want = std::f64::consts::PI * 4.0;
        assert!((area - want).abs() / want < 2e-3, "{area} vs {want}");
    }

    #[test]
    fn symmetric_input_peaks_on_axis() {
        let f = gaussian_field(64, 0.1, 1.0);
        let map = capture_probability_map(&f, 0.5).unwrap();
        let c = map.center();
        assert!(map.grid.iter().all(|&v| v <= c + 1e-15));
        assert!(map.grid.iter().all(|&v| (0.0..=1.0).contains(&v)));
        // Analytic Gaussian capture on axis: 1 − exp(−2b²/w²).
        let want = 1.0 - (-0.5f64).exp();
        assert!((c - want).abs() < 5e-3, "{c} vs {want}");
    }

    #[test]
    fn interpolation_hits_nodes() {
        let f = gaussian_field(32, 0.2, 1.5);
        let map = capture_probability_map(&f, 0.6).unwrap();
        let (i, j) = (10, 21);
        let v = map.interpolate(map.coord(j), map.coord(i));
        assert!((v - map.grid[[i, j]]).abs() < 1e-14);
        assert_eq!(map.interpolate(1e3, 0.0), 0.0);
    }
}
