//! Jitter-averaged capture probability tabulated over slant range.

use serde::{Deserialize, Serialize};

use crate::config::{BeamMode, ScenarioConfig};
use crate::error::{domain, Result};
use crate::optics::WaistEvaluator;
use crate::orbit::EARTH_RADIUS_KM;

/// Slant range (km) at zenith angle `zenith_deg` for a satellite at `altitude_km`.
pub fn slant_range_km(altitude_km: f64, zenith_deg: f64) -> f64 {
    let c = zenith_deg.to_radians().cos();
    let r = EARTH_RADIUS_KM;
    -r * c + (r * r * c * c + 2.0 * r * altitude_km + altitude_km * altitude_km).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaCache {
    pub receiver_radius: f64,
    pub mode: BeamMode,
    pub ranges_km: Vec<f64>,
    pub eta: Vec<f64>,
    /// Waist used at each node.
    pub w0: Vec<f64>,
}

impl EtaCache {
    /// Tabulates `η̄` between the zenith range and the range at the zenith mask.
    pub fn build(cfg: &ScenarioConfig, receiver_radius: f64, mode: BeamMode) -> Result<Self> {
        let h = cfg.orbit.altitude_km;
        let lo = h;
        let hi = slant_range_km(h, cfg.span.max_zenith_deg) * 1.01;
        let n = cfg.beam.range_nodes;
        if n < 2 {
            return domain("at least two range nodes are required");
        }
        let sat = &cfg.satellite;
        let a = sat.aperture_radius;
        let mut ranges_km = Vec::with_capacity(n);
        let mut eta = Vec::with_capacity(n);
        let mut w0 = Vec::with_capacity(n);
        for k in 0..n {
            let z = lo * ((hi / lo).ln() * k as f64 / (n - 1) as f64).exp();
            let ev = WaistEvaluator::new(
                a,
                receiver_radius,
                z * 1e3,
                sat.jitter_rad(),
                sat.wavelength_m(),
                cfg.beam.grid(),
            )?;
            let (w, e) = match mode {
                BeamMode::Optimized => {
                    let s = ev.optimize((a / 10.0, 2.0 * a))?;
                    (s.w0, s.eta)
                }
                BeamMode::Fixed => {
                    let w = cfg.beam.fixed_waist(a);
                    (w, ev.eval(w)?)
                }
            };
            ranges_km.push(z);
            eta.push(e);
            w0.push(w);
        }
        Ok(Self { receiver_radius, mode, ranges_km, eta, w0 })
    }

    /// Piecewise-linear interpolation in (ln z, ln η̄), clamped to the table.
    pub fn eta_at(&self, range_km: f64) -> f64 {
        let r = &self.ranges_km;
        let z = range_km.clamp(r[0], r[r.len() - 1]);
        let i = r.partition_point(|&x| x <= z).clamp(1, r.len() - 1) - 1;
        let t = (z.ln() - r[i].ln()) / (r[i + 1].ln() - r[i].ln());
        let (e0, e1) = (self.eta[i], self.eta[i + 1]);
        if e0 > 0.0 && e1 > 0.0 {
            (e0.ln() + t * (e1.ln() - e0.ln())).exp()
        } else {
            e0 + t * (e1 - e0)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slant_geometry() {
        assert!((slant_range_km(400.0, 0.0) - 400.0).abs() < 1e-9);
        assert!((slant_range_km(400.0, 90.0) - 2292.77).abs() < 0.01);
    }

    #[test]
    fn interpolation_hits_nodes() {
        let c = EtaCache {
            receiver_radius: 0.6,
            mode: BeamMode::Fixed,
            ranges_km: vec![400.0, 600.0, 1000.0],
            eta: vec![0.3, 0.15, 0.05],
            w0: vec![0.015; 3],
        };
        for (r, e) in c.ranges_km.iter().zip(&c.eta) {
            assert!((c.eta_at(*r) - e).abs() < 1e-12);
        }
        let mid = c.eta_at(800.0);
        assert!(mid < 0.15 && mid > 0.05);
        assert_eq!(c.eta_at(100.0), 0.3);
        assert!((c.eta_at(5000.0) - 0.05).abs() < 1e-12);
    }
}
