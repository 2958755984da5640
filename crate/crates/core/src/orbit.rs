//! Circular LEO orbit over a spherical, rotating Earth and joint visibility
//! windows for station pairs.

use chrono::{DateTime, Duration, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

pub const EARTH_RADIUS_KM: f64 = 6371.0;
/// Gravitational parameter (km³/s²).
pub const MU_EARTH: f64 = 398_600.441_8;
/// Sidereal rotation rate (rad/s).
pub const EARTH_ROTATION_RATE: f64 = 7.292_115_0e-5;

pub type Vec3 = [f64; 3];

fn norm(v: Vec3) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

fn sub(a: Vec3, b: Vec3) -> Vec3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OrbitConfig {
    pub altitude_km: f64,
    pub inclination_deg: f64,
    pub raan_deg: f64,
    /// Argument of latitude at the epoch.
    pub initial_phase_deg: f64,
    pub epoch: DateTime<Utc>,
}

impl Default for OrbitConfig {
    fn default() -> Self {
        Self {
            altitude_km: 400.0,
            inclination_deg: 42.0,
            raan_deg: 0.0,
            initial_phase_deg: 0.0,
            epoch: Utc.with_ymd_and_hms(2025, 6, 1, 0, 0, 0).unwrap(),
        }
    }
}

impl OrbitConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.altitude_km > 0.0 && self.altitude_km.is_finite()) {
            return domain(format!("altitude must be positive, got {} km", self.altitude_km));
        }
        if !(0.0..=180.0).contains(&self.inclination_deg) {
            return domain(format!("inclination must lie in [0, 180] deg, got {}", self.inclination_deg));
        }
        Ok(())
    }

    pub fn radius_km(&self) -> f64 {
        EARTH_RADIUS_KM + self.altitude_km
    }

    pub fn period_s(&self) -> f64 {
        2.0 * std::f64::consts::PI * (self.radius_km().powi(3) / MU_EARTH).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundStation {
    pub name: String,
    pub latitude_deg: f64,
    pub longitude_deg: f64,
    /// Receiver aperture radius (m).
    #[serde(default = "default_aperture")]
    pub aperture_radius: f64,
    #[serde(default = "default_coupling_loss")]
    pub coupling_loss: f64,
    /// Detector dark-count rate (Hz); turned into a per-window probability by
    /// the atmosphere model.
    #[serde(default = "default_dark_rate")]
    pub dark_count_rate_hz: f64,
}

fn default_aperture() -> f64 {
    0.6
}

fn default_coupling_loss() -> f64 {
    0.5
}

fn default_dark_rate() -> f64 {
    100.0
}

impl GroundStation {
    pub fn new(name: &str, latitude_deg: f64, longitude_deg: f64) -> Self {
        Self {
            name: name.to_string(),
            latitude_deg,
            longitude_deg,
            aperture_radius: default_aperture(),
            coupling_loss: default_coupling_loss(),
            dark_count_rate_hz: default_dark_rate(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.latitude_deg.abs() > 90.0 {
            return domain(format!("{}: |latitude| must be at most 90 deg", self.name));
        }
        if !(self.aperture_radius > 0.0) {
            return domain(format!("{}: aperture radius must be positive", self.name));
        }
        if !(0.0..=1.0).contains(&self.coupling_loss) {
            return domain(format!("{}: coupling loss must lie in [0, 1]", self.name));
        }
        if !(self.dark_count_rate_hz >= 0.0) {
            return domain(format!("{}: dark count rate must be non-negative", self.name));
        }
        Ok(())
    }
}

/// Stations shipped with the default configuration.
pub fn default_stations() -> Vec<GroundStation> {
    vec![
        GroundStation::new("Madrid", 40.4168, -3.7038),
        GroundStation::new("Barcelona", 41.3874, 2.1686),
        GroundStation::new("Bilbao", 43.2630, -2.9350),
        GroundStation::new("Lisbon", 38.7223, -9.1393),
    ]
}

/// Greenwich mean sidereal angle (rad).
pub fn gmst(t: DateTime<Utc>) -> f64 {
    let j2000 = Utc.with_ymd_and_hms(2000, 1, 1, 12, 0, 0).unwrap();
    let days = seconds_between(j2000, t) / 86_400.0;
    (280.460_618_37 + 360.985_647_366_29 * days).rem_euclid(360.0).to_radians()
}

pub fn seconds_between(t0: DateTime<Utc>, t1: DateTime<Utc>) -> f64 {
    let d = t1 - t0;
    d.num_seconds() as f64 + f64::from(d.subsec_nanos()) * 1e-9
}

pub fn offset(t: DateTime<Utc>, seconds: f64) -> DateTime<Utc> {
    t + Duration::nanoseconds((seconds * 1e9).round() as i64)
}

/// Satellite position in an Earth-centred inertial frame (km).
pub fn propagate(orbit: &OrbitConfig, t: DateTime<Utc>) -> Vec3 {
    let r = orbit.radius_km();
    let n = 2.0 * std::f64::consts::PI / orbit.period_s();
    let u = orbit.initial_phase_deg.to_radians() + n * seconds_between(orbit.epoch, t);
    let (i, o) = (orbit.inclination_deg.to_radians(), orbit.raan_deg.to_radians());
    let (su, cu) = u.sin_cos();
    let (si, ci) = i.sin_cos();
    let (so, co) = o.sin_cos();
    [r * (co * cu - so * su * ci), r * (so * cu + co * su * ci), r * su * si]
}

/// Station position in the same inertial frame (km).
pub fn station_position(station: &GroundStation, t: DateTime<Utc>) -> Vec3 {
    let lat = station.latitude_deg.to_radians();
    let lon = station.longitude_deg.to_radians() + gmst(t);
    [EARTH_RADIUS_KM * lat.cos() * lon.cos(), EARTH_RADIUS_KM * lat.cos() * lon.sin(), EARTH_RADIUS_KM * lat.sin()]
}

/// Slant range (km) and zenith angle (deg) of `sat` seen from `station`.
pub fn slant_and_zenith(sat: Vec3, station: &GroundStation, t: DateTime<Utc>) -> (f64, f64) {
    look_from(sat, station_position(station, t))
}

fn look_from(sat: Vec3, site: Vec3) -> (f64, f64) {
    let d = sub(sat, site);
    let range = norm(d);
    let cos_z = (dot(d, site) / (range * norm(site))).clamp(-1.0, 1.0);
    (range, cos_z.acos().to_degrees())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PassSample {
    pub t: DateTime<Utc>,
    pub slant_a_km: f64,
    pub slant_b_km: f64,
    pub zenith_a_deg: f64,
    pub zenith_b_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassWindow {
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub step_s: f64,
    pub samples: Vec<PassSample>,
}

impl PassWindow {
    pub fn duration_s(&self) -> f64 {
        seconds_between(self.start, self.end)
    }

    /// Index of the sample where the lower of the two elevations is highest.
    pub fn best_sample(&self) -> Option<usize> {
        (0..self.samples.len()).min_by(|&i, &j| {
            let zi = self.samples[i].zenith_a_deg.max(self.samples[i].zenith_b_deg);
            let zj = self.samples[j].zenith_a_deg.max(self.samples[j].zenith_b_deg);
            zi.total_cmp(&zj)
        })
    }

    /// Splits the window at sample `k` (the sample belongs to the second part).
    pub fn split_at(&self, k: usize) -> (PassWindow, PassWindow) {
        let k = k.clamp(1, self.samples.len().saturating_sub(1).max(1));
        let first = self.samples[..k].to_vec();
        let second = self.samples[k..].to_vec();
        let a = PassWindow {
            start: self.start,
            end: first.last().map_or(self.start, |s| s.t),
            step_s: self.step_s,
            samples: first,
        };
        let b = PassWindow {
            start: second.first().map_or(self.end, |s| s.t),
            end: self.end,
            step_s: self.step_s,
            samples: second,
        };
        (a, b)
    }
}

/// Geometry of one station pair along an orbit.
pub struct LinkGeometry<'a> {
    pub orbit: &'a OrbitConfig,
    pub station_a: &'a GroundStation,
    pub station_b: &'a GroundStation,
}

impl LinkGeometry<'_> {
    pub fn sample(&self, t: DateTime<Utc>) -> PassSample {
        let sat = propagate(self.orbit, t);
        let (slant_a_km, zenith_a_deg) = slant_and_zenith(sat, self.station_a, t);
        let (slant_b_km, zenith_b_deg) = slant_and_zenith(sat, self.station_b, t);
        PassSample { t, slant_a_km, slant_b_km, zenith_a_deg, zenith_b_deg }
    }

    fn visible(&self, t: DateTime<Utc>, max_zenith: f64) -> bool {
        let s = self.sample(t);
        s.zenith_a_deg <= max_zenith && s.zenith_b_deg <= max_zenith
    }

    /// Bisects `[lo, hi]` (seconds from `t0`) to a 1 s bracket; `lo` has
    /// visibility `v_lo`. Returns the bracket end with the opposite state.
    fn refine(&self, t0: DateTime<Utc>, mut lo: f64, mut hi: f64, v_lo: bool, max_zenith: f64) -> (f64, f64) {
        while hi - lo > 1.0 {
            let mid = (0.5 * (lo + hi)).floor().max(lo + 0.5);
            if self.visible(offset(t0, mid), max_zenith) == v_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo, hi)
    }
}

/// Maximal intervals in `span` where both stations see the satellite within
/// `max_zenith`. Samples are spaced `sample_step` seconds from the window start.
pub fn pass_windows(
    orbit: &OrbitConfig,
    station_a: &GroundStation,
    station_b: &GroundStation,
    span: (DateTime<Utc>, DateTime<Utc>),
    max_zenith: f64,
    step: f64,
    sample_step: f64,
) -> Result<Vec<PassWindow>> {
    let (t0, t1) = span;
    if t1 <= t0 {
        return Err(Error::EmptySpan(format!("span end {t1} is not after start {t0}")));
    }
    if !(step > 0.0 && step <= 10.0) {
        return domain(format!("search step must lie in (0, 10] s, got {step}"));
    }
    if !(sample_step > 0.0) {
        return domain(format!("sample step must be positive, got {sample_step}"));
    }
    if !(0.0..90.0).contains(&max_zenith) {
        return domain(format!("max zenith must lie in [0, 90) deg, got {max_zenith}"));
    }
    orbit.validate()?;
    station_a.validate()?;
    station_b.validate()?;
    let geo = LinkGeometry { orbit, station_a, station_b };
    let total = seconds_between(t0, t1);
    let n_steps = (total / step).ceil() as usize;

    let mut edges: Vec<(f64, f64)> = Vec::new();
    let mut open: Option<f64> = None;
    let mut prev_t = 0.0;
    let mut prev_v = geo.visible(t0, max_zenith);
    if prev_v {
        open = Some(0.0);
    }
    for k in 1..=n_steps {
        let t = (k as f64 * step).min(total);
        let v = geo.visible(offset(t0, t), max_zenith);
        if v != prev_v {
            let (lo, hi) = geo.refine(t0, prev_t, t, prev_v, max_zenith);
            if v {
                open = Some(hi);
            } else if let Some(s) = open.take() {
                edges.push((s, lo));
            }
        }
        prev_t = t;
        prev_v = v;
    }
    if let Some(s) = open {
        edges.push((s, total));
    }

    Ok(edges
        .into_iter()
        .map(|(s, e)| {
            let n = ((e - s) / sample_step).floor() as usize + 1;
            let samples = (0..n).map(|k| geo.sample(offset(t0, s + k as f64 * sample_step))).collect();
            PassWindow { start: offset(t0, s), end: offset(t0, e), step_s: sample_step, samples }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn period_at_400_km() {
        let o = OrbitConfig::default();
        assert!((o.period_s() - 5544.85).abs() < 0.1, "{}", o.period_s());
    }

    #[test]
    fn radius_is_constant_and_periodic() {
        let o = OrbitConfig::default();
        for k in 0..50 {
            let t = offset(o.epoch, k as f64 * 51_840.0);
            assert!((norm(propagate(&o, t)) - o.radius_km()).abs() < 1e-3);
        }
        let p0 = propagate(&o, o.epoch);
        let p1 = propagate(&o, offset(o.epoch, o.period_s()));
        assert!(norm(sub(p0, p1)) < 1e-3);
    }

    #[test]
    fn overhead_and_horizon_geometry() {
        let st = GroundStation::new("X", 40.0, -3.0);
        let t = OrbitConfig::default().epoch;
        let site = station_position(&st, t);
        let up = site.map(|c| c / EARTH_RADIUS_KM);
        let (r, z) = slant_and_zenith(up.map(|c| c * (EARTH_RADIUS_KM + 400.0)), &st, t);
        assert!((r - 400.0).abs() < 1e-9 && z.abs() < 1e-5);

        // horizontal direction at the site
        let east = [-up[1], up[0], 0.0];
        let e = norm(east);
        let slant = ((EARTH_RADIUS_KM + 400.0).powi(2) - EARTH_RADIUS_KM.powi(2)).sqrt();
        let sat = [0, 1, 2].map(|i| site[i] + slant * east[i] / e);
        let (r, z) = slant_and_zenith(sat, &st, t);
        assert!((r - 2292.77).abs() < 0.01 && (z - 90.0).abs() < 1e-6, "{r} {z}");
    }

    #[test]
    fn window_errors() {
        let o = OrbitConfig::default();
        let s = default_stations();
        assert!(matches!(
            pass_windows(&o, &s[0], &s[1], (o.epoch, o.epoch), 70.0, 10.0, 1.0),
            Err(Error::EmptySpan(_))
        ));
        let span = (o.epoch, offset(o.epoch, 3600.0));
        assert!(pass_windows(&o, &s[0], &s[1], span, 70.0, 30.0, 1.0).is_err());
        assert!(pass_windows(&o, &s[0], &s[1], span, 90.0, 10.0, 1.0).is_err());
    }

    #[test]
    fn windows_satisfy_mask() {
        let o = OrbitConfig::default();
        let s = default_stations();
        let span = (o.epoch, offset(o.epoch, 3.0 * 86_400.0));
        let w = pass_windows(&o, &s[0], &s[1], span, 70.0, 10.0, 1.0).unwrap();
        assert!(!w.is_empty());
        for p in &w {
            assert!(p.end > p.start);
            for smp in &p.samples {
                assert!(smp.zenith_a_deg <= 70.0 && smp.zenith_b_deg <= 70.0);
            }
            assert!(p.samples.windows(2).all(|x| seconds_between(x[0].t, x[1].t) == 1.0));
        }
    }
}
