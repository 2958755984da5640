//! Slant-path extinction, detector noise and a per-pass weather process.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::orbit::GroundStation;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeatherMode {
    ClearSky,
    Stochastic,
}

/// Background light at the receivers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Night,
    Day,
    Rate(f64),
}

impl Background {
    /// Background click rate per station (Hz).
    pub fn rate_hz(&self) -> f64 {
        match *self {
            Background::Night => 200.0,
            Background::Day => 20_000.0,
            Background::Rate(r) => r,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AtmosphereParams {
    /// Clear-sky vertical optical depth τ₀.
    pub zenith_optical_depth: f64,
    pub weather_mode: WeatherMode,
    pub cloud_block_probability: f64,
    /// σ of ln(τ multiplier) for clear passes; the multiplier has median 1.
    pub tau_log_sigma: f64,
    pub background: Background,
    /// Coincidence window (s).
    pub detection_window_s: f64,
}

impl Default for AtmosphereParams {
    fn default() -> Self {
        Self {
            zenith_optical_depth: 0.35,
            weather_mode: WeatherMode::ClearSky,
            cloud_block_probability: 0.0,
            tau_log_sigma: 0.3,
            background: Background::Night,
            detection_window_s: 1e-9,
        }
    }
}

impl AtmosphereParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.zenith_optical_depth >= 0.0 && self.zenith_optical_depth.is_finite()) {
            return domain(format!("zenith optical depth must be non-negative, got {}", self.zenith_optical_depth));
        }
        if !(0.0..=1.0).contains(&self.cloud_block_probability) {
            return domain(format!("cloud block probability must lie in [0, 1], got {}", self.cloud_block_probability));
        }
        if !(self.tau_log_sigma >= 0.0) {
            return domain(format!("tau_log_sigma must be non-negative, got {}", self.tau_log_sigma));
        }
        if !(self.background.rate_hz() >= 0.0) {
            return domain("background rate must be non-negative");
        }
        if !(self.detection_window_s > 0.0) {
            return domain(format!("detection window must be positive, got {}", self.detection_window_s));
        }
        Ok(())
    }
}

/// `exp(−τ·sec ζ)`.
pub fn atml_tau(zenith_deg: f64, tau: f64) -> f64 {
    (-tau / zenith_deg.to_radians().cos()).exp()
}

/// Clear-sky slant transmission for zenith angles inside the mask.
pub fn atml(zenith_deg: f64, params: &AtmosphereParams, max_zenith_deg: f64) -> Result<f64> {
    if !(0.0..=max_zenith_deg).contains(&zenith_deg) || max_zenith_deg >= 90.0 {
        return domain(format!("zenith angle {zenith_deg} deg outside [0, {max_zenith_deg}]"));
    }
    Ok(atml_tau(zenith_deg, params.zenith_optical_depth))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeatherRealization {
    pub blocked: bool,
    /// Optical depth for this pass.
    pub tau: f64,
}

/// Weather for one pass, deterministic per seed.
pub fn sample_weather(params: &AtmosphereParams, seed: u64) -> WeatherRealization {
    match params.weather_mode {
        WeatherMode::ClearSky => WeatherRealization { blocked: false, tau: params.zenith_optical_depth },
        WeatherMode::Stochastic => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let blocked = rng.random::<f64>() < params.cloud_block_probability;
            let m = if params.tau_log_sigma > 0.0 {
                LogNormal::new(0.0, params.tau_log_sigma).expect("valid sigma").sample(&mut rng)
            } else {
                1.0
            };
            WeatherRealization { blocked, tau: params.zenith_optical_depth * m }
        }
    }
}

/// Probability of a spurious click in one window: `1 − exp(−(dark + background)·window)`.
pub fn dark_click_probability(params: &AtmosphereParams, station: &GroundStation, window_s: f64) -> Result<f64> {
    if !(window_s > 0.0) {
        return domain(format!("window must be positive, got {window_s}"));
    }
    let rate = station.dark_count_rate_hz + params.background.rate_hz();
    Ok((-(-rate * window_s).exp_m1()).min(1.0 - f64::EPSILON))
}
