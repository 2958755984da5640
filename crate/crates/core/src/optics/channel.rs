use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Geometry of one satellite-to-ground optical downlink.
///
/// Lengths are in metres, the pointing jitter in radians (one-axis standard
/// deviation).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamChannel {
    /// Gaussian mode waist at the transmitter aperture.
    pub w0: f64,
    /// Transmitter aperture radius.
    pub a: f64,
    /// Receiver aperture radius.
    pub b: f64,
    /// Transmitter to receiver distance.
    pub z: f64,
    pub wavelength: f64,
    /// Angular pointing jitter, one-axis standard deviation.
    pub sigma_pj: f64,
}

impl BeamChannel {
    pub fn new(w0: f64, a: f64, b: f64, z: f64, wavelength: f64, sigma_pj: f64) -> Result<Self> {
        let ch = Self { w0, a, b, z, wavelength, sigma_pj };
        ch.validate()?;
        Ok(ch)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("w0", self.w0), ("a", self.a), ("b", self.b), ("z", self.z), ("wavelength", self.wavelength)]
        {
            if !(v.is_finite() && v > 0.0) {
                return domain(format!("{name} must be finite and strictly positive, got {v}"));
            }
        }
        // A zero jitter is the delta-function limit and is allowed.
        if !(self.sigma_pj.is_finite() && self.sigma_pj >= 0.0) {
            return domain(format!("sigma_pj must be finite and non-negative, got {}", self.sigma_pj));
        }
        Ok(())
    }

    /// Beam-centre displacement standard deviation on the receiver plane.
    pub fn jitter_sigma(&self) -> f64 {
        self.z * self.sigma_pj
    }

    /// Fresnel number of the transmitter aperture, `a² / (λ z)`.
    pub fn fresnel_number(&self) -> f64 {
        self.a * self.a / (self.wavelength * self.z)
    }

    /// Far-field validity flag (`z ≫ a`, Fresnel number well below one).
    pub fn is_far_field(&self) -> bool {
        self.fresnel_number() < 0.1
    }

    /// Power transmitted by the circular aperture: `1 − exp(−2a²/w0²)`.
    pub fn aperture_transmission(&self) -> f64 {
        -(-2.0 * self.a * self.a / (self.w0 * self.w0)).exp_m1()
    }

    /// 1/e² radius of the untruncated Gaussian in the far field, `λz/(π w0)`.
    pub fn far_field_radius(&self) -> f64 {
        self.wavelength * self.z / (PI * self.w0)
    }

    pub fn with_w0(mut self, w0: f64) -> Self {
        self.w0 = w0;
        self
    }

    pub fn with_sigma_pj(mut self, sigma_pj: f64) -> Self {
        self.sigma_pj = sigma_pj;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_positive_geometry() {
        assert!(BeamChannel::new(0.1, 0.15, 0.6, 1e6, 810e-9, 0.47e-6).is_ok());
        assert!(BeamChannel::new(0.0, 0.15, 0.6, 1e6, 810e-9, 0.47e-6).is_err());
        assert!(BeamChannel::new(0.1, -0.15, 0.6, 1e6, 810e-9, 0.47e-6).is_err());
        assert!(BeamChannel::new(f64::INFINITY, 0.15, 0.6, 1e6, 810e-9, 0.0).is_err());
        assert!(BeamChannel::new(0.1, 0.15, 0.6, 1e6, 810e-9, -1e-6).is_err());
    }

    #[test]
    fn far_field_flag() {
        let ch = BeamChannel::new(0.1, 0.15, 0.6, 1e6, 810e-9, 0.0).unwrap();
        assert!(ch.is_far_field());
        let near = ch.with_w0(0.1);
        let near = BeamChannel { z: 100.0, ..near };
        assert!(!near.is_far_field());
    }

    #[test]
    fn transmission_limits() {
        let ch = BeamChannel::new(0.015, 0.15, 0.6, 1e6, 810e-9, 0.0).unwrap();
        assert!((ch.aperture_transmission() - 1.0).abs() < 1e-15);
        let ch = ch.with_w0(0.15);
        assert!((ch.aperture_transmission() - (1.0 - (-2.0f64).exp())).abs() < 1e-15);
    }
}
