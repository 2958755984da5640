//! Scenario configuration (TOML), validation and hashing.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use chrono::{DateTime, TimeZone, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::atmosphere::AtmosphereParams;
use crate::error::{Error, FieldError, Result};
use crate::extraction::{KeyExtraction, LutTable, DEFAULT_XI};
use crate::optics::{GridSpec, DEFAULT_WAVELENGTH};
use crate::orbit::{default_stations, GroundStation, OrbitConfig};
use crate::source::{RateModel, LAMBDA_BOUNDS};

/// Configuration shipped with the crate (Micius-like source, Madrid–Barcelona).
pub const DEFAULT_CONFIG: &str = include_str!("../data/default.toml");
/// Key-extraction table shipped with the crate, selected by `lut_path = "builtin"`.
pub const DEFAULT_LUT: &str = include_str!("../data/lut_default.csv");
pub const BUILTIN_LUT: &str = "builtin";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    #[serde(default)]
    pub orbit: OrbitConfig,
    #[serde(default)]
    pub stations: Vec<GroundStation>,
    #[serde(default)]
    pub link: LinkConfig,
    #[serde(default)]
    pub span: SpanConfig,
    #[serde(default)]
    pub satellite: SatelliteConfig,
    #[serde(default)]
    pub source: SourceConfig,
    #[serde(default)]
    pub atmosphere: AtmosphereParams,
    #[serde(default)]
    pub beam: BeamConfig,
    #[serde(default)]
    pub extraction: ExtractionConfig,
    #[serde(default = "default_use_cases")]
    pub use_cases: Vec<UseCase>,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinkConfig {
    pub station_a: String,
    pub station_b: String,
}

impl Default for LinkConfig {
    fn default() -> Self {
        Self { station_a: "Madrid".into(), station_b: "Barcelona".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpanConfig {
    pub start: DateTime<Utc>,
    pub days: f64,
    pub max_zenith_deg: f64,
    /// Coarse visibility search step (s).
    pub search_step_s: f64,
    /// Sample spacing inside a pass (s).
    pub sample_step_s: f64,
}

impl Default for SpanConfig {
    fn default() -> Self {
        Self {
            start: Utc.with_ymd_and_hms(2025, 6, 1, 0, 0, 0).unwrap(),
            days: 30.0,
            max_zenith_deg: 70.0,
            search_step_s: 10.0,
            sample_step_s: 1.0,
        }
    }
}

impl SpanConfig {
    pub fn end(&self) -> DateTime<Utc> {
        crate::orbit::offset(self.start, self.days * 86_400.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SatelliteConfig {
    /// Transmitter aperture radius (m).
    pub aperture_radius: f64,
    pub pointing_jitter_urad: f64,
    pub wavelength_nm: f64,
}

impl Default for SatelliteConfig {
    fn default() -> Self {
        Self { aperture_radius: 0.15, pointing_jitter_urad: 0.47, wavelength_nm: DEFAULT_WAVELENGTH * 1e9 }
    }
}

impl SatelliteConfig {
    pub fn jitter_rad(&self) -> f64 {
        self.pointing_jitter_urad * 1e-6
    }

    pub fn wavelength_m(&self) -> f64 {
        self.wavelength_nm * 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SourceConfig {
    /// Pairs per second; with `pulse_rate` unset the source is treated as
    /// continuously pumped.
    pub pair_rate: f64,
    pub pulse_rate: Option<f64>,
    /// Fixed squeezing parameter; optimized per pass when unset.
    pub lambda: Option<f64>,
    pub lambda_bounds: (f64, f64),
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { pair_rate: 5.9e6, pulse_rate: None, lambda: None, lambda_bounds: LAMBDA_BOUNDS }
    }
}

impl SourceConfig {
    pub fn rate_model(&self) -> RateModel {
        match self.pulse_rate {
            Some(pulse_rate) => RateModel::FixedPulseRate { pulse_rate },
            None => RateModel::ConstantPairRate { pair_rate: self.pair_rate },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BeamMode {
    Optimized,
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BeamConfig {
    pub mode: BeamMode,
    /// Waist for fixed mode (m); defaults to a tenth of the transmitter aperture.
    pub fixed_w0: Option<f64>,
    pub grid_size: usize,
    pub oversampling: f64,
    pub source_samples: usize,
    /// Slant-range nodes of the capture-probability cache.
    pub range_nodes: usize,
}

impl Default for BeamConfig {
    fn default() -> Self {
        Self {
            mode: BeamMode::Optimized,
            fixed_w0: None,
            grid_size: 256,
            oversampling: 1.0,
            source_samples: 128,
            range_nodes: 20,
        }
    }
}

impl BeamConfig {
    pub fn grid(&self) -> GridSpec {
        GridSpec { size: self.grid_size, oversampling: self.oversampling, source_samples: self.source_samples }
    }

    pub fn fixed_waist(&self, transmitter_radius: f64) -> f64 {
        self.fixed_w0.unwrap_or(transmitter_radius / 10.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractionKind {
    Analytic,
    Lut,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractionConfig {
    pub mode: ExtractionKind,
    pub xi: f64,
    /// LUT file (CSV or JSON), relative to the config file, or `"builtin"`.
    pub lut_path: Option<String>,
    pub key_size_bits: u32,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self { mode: ExtractionKind::Analytic, xi: DEFAULT_XI, lut_path: None, key_size_bits: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UseCase {
    pub name: String,
    /// Required keys per second.
    pub keys_per_second: f64,
}

pub fn default_use_cases() -> Vec<UseCase> {
    vec![
        UseCase { name: "Telefonica".into(), keys_per_second: 0.006 },
        UseCase { name: "JPMorgan".into(), keys_per_second: 2.13 },
    ]
}

struct Checker(Vec<FieldError>);

impl Checker {
    fn check(&mut self, ok: bool, path: impl Into<String>, message: impl Into<String>) {
        if !ok {
            self.0.push(FieldError { path: path.into(), message: message.into() });
        }
    }

    fn domain(&mut self, path: &str, r: Result<()>) {
        if let Err(e) = r {
            self.0.push(FieldError { path: path.into(), message: e.to_string() });
        }
    }
}

impl ScenarioConfig {
    /// Parses and validates TOML text. Relative LUT paths resolve against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let cfg: ScenarioConfig = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        cfg.validate(base_dir)?;
        Ok(cfg)
    }

    pub fn default_config() -> Self {
        Self::from_toml_str(DEFAULT_CONFIG, None).expect("shipped config is valid")
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// SHA-256 of the canonical TOML serialization, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.to_toml().as_bytes()).iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn station(&self, name: &str) -> Option<&GroundStation> {
        self.stations.iter().find(|s| s.name == name)
    }

    pub fn link_stations(&self) -> Result<(&GroundStation, &GroundStation)> {
        let get = |n: &str| self.station(n).ok_or_else(|| Error::Domain(format!("unknown station {n:?}")));
        Ok((get(&self.link.station_a)?, get(&self.link.station_b)?))
    }

    pub fn resolve_lut_path(&self, base_dir: Option<&Path>) -> Option<PathBuf> {
        let p = self.extraction.lut_path.as_deref()?;
        if p == BUILTIN_LUT {
            return None;
        }
        let p = Path::new(p);
        Some(match base_dir {
            Some(b) if p.is_relative() => b.join(p),
            _ => p.to_path_buf(),
        })
    }

    /// Loads the table referenced by the extraction section, if any.
    pub fn load_lut(&self, base_dir: Option<&Path>) -> Result<Option<Arc<LutTable>>> {
        if self.extraction.mode != ExtractionKind::Lut {
            return Ok(None);
        }
        let table = match self.resolve_lut_path(base_dir) {
            Some(p) => LutTable::load(&p)?,
            None => LutTable::from_csv(DEFAULT_LUT)?,
        };
        Ok(Some(Arc::new(table)))
    }

    /// Extraction for a pass of `block_duration` seconds.
    pub fn key_extraction(&self, lut: Option<&Arc<LutTable>>, block_duration: f64) -> KeyExtraction {
        match (self.extraction.mode, lut) {
            (ExtractionKind::Lut, Some(t)) => KeyExtraction::Lut { table: Arc::clone(t), block_duration },
            _ => KeyExtraction::Analytic { xi: self.extraction.xi },
        }
    }

    /// Checks every invariant and reports all violations at once.
    pub fn validate(&self, base_dir: Option<&Path>) -> Result<()> {
        let mut c = Checker(Vec::new());
        c.domain("orbit", self.orbit.validate());
        c.check(self.stations.len() >= 2, "stations", "at least two ground stations are required");
        for (i, s) in self.stations.iter().enumerate() {
            let p = format!("stations[{i}]");
            c.check(s.latitude_deg.abs() <= 90.0, format!("{p}.latitude_deg"), "must lie in [-90, 90]");
            c.check(s.aperture_radius > 0.0, format!("{p}.aperture_radius"), "must be positive");
            c.check((0.0..=1.0).contains(&s.coupling_loss), format!("{p}.coupling_loss"), "must lie in [0, 1]");
            c.check(s.dark_count_rate_hz >= 0.0, format!("{p}.dark_count_rate_hz"), "must be non-negative");
            c.check(
                self.stations[..i].iter().all(|o| o.name != s.name),
                format!("{p}.name"),
                format!("duplicate station name {:?}", s.name),
            );
        }
        if !self.stations.is_empty() {
            for (field, name) in [("link.station_a", &self.link.station_a), ("link.station_b", &self.link.station_b)] {
                c.check(self.station(name).is_some(), field, format!("unknown station {name:?}"));
            }
            c.check(self.link.station_a != self.link.station_b, "link", "the two link stations must differ");
        }

        let sp = &self.span;
        c.check(sp.days > 0.0 && sp.days.is_finite(), "span.days", "must be positive");
        c.check((0.0..90.0).contains(&sp.max_zenith_deg), "span.max_zenith_deg", "must lie in [0, 90)");
        c.check(sp.search_step_s > 0.0 && sp.search_step_s <= 10.0, "span.search_step_s", "must lie in (0, 10]");
        c.check(sp.sample_step_s > 0.0, "span.sample_step_s", "must be positive");

        let sat = &self.satellite;
        c.check(sat.aperture_radius > 0.0, "satellite.aperture_radius", "must be positive");
        c.check(sat.pointing_jitter_urad >= 0.0, "satellite.pointing_jitter_urad", "must be non-negative");
        c.check(sat.wavelength_nm > 0.0, "satellite.wavelength_nm", "must be positive");

        let src = &self.source;
        c.check(
            src.pair_rate >= 0.0 && src.pair_rate.is_finite(),
            "source.pair_rate",
            "must be finite and non-negative",
        );
        if let Some(r) = src.pulse_rate {
            c.check(r >= 0.0 && r.is_finite(), "source.pulse_rate", "must be finite and non-negative");
        }
        if let Some(l) = src.lambda {
            c.check((0.0..1.0).contains(&l), "source.lambda", format!("must lie in [0, 1), got {l}"));
        }
        let (lo, hi) = src.lambda_bounds;
        c.check(lo > 0.0 && lo < hi && hi <= 0.5, "source.lambda_bounds", "must satisfy 0 < lo < hi <= 0.5");

        c.domain("atmosphere", self.atmosphere.validate());

        let b = &self.beam;
        c.domain("beam", b.grid().validate());
        c.check(b.range_nodes >= 2, "beam.range_nodes", "at least two nodes are required");
        if let Some(w) = b.fixed_w0 {
            c.check(w > 0.0, "beam.fixed_w0", "must be positive");
        }

        let x = &self.extraction;
        c.check(x.xi >= 0.0, "extraction.xi", "must be non-negative");
        c.check(x.key_size_bits > 0, "extraction.key_size_bits", "must be positive");
        if x.mode == ExtractionKind::Lut {
            match (&x.lut_path, self.resolve_lut_path(base_dir)) {
                (None, _) => c.check(false, "extraction.lut_path", "required when mode = \"lut\""),
                (Some(_), Some(p)) => {
                    c.check(p.is_file(), "extraction.lut_path", format!("file {} does not exist", p.display()))
                }
                _ => {}
            }
        }
        for (i, u) in self.use_cases.iter().enumerate() {
            c.check(u.keys_per_second > 0.0, format!("use_cases[{i}].keys_per_second"), "must be positive");
        }

        if c.0.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(c.0))
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            output_dir: default_output_dir(),
            orbit: OrbitConfig::default(),
            stations: default_stations(),
            link: LinkConfig::default(),
            span: SpanConfig::default(),
            satellite: SatelliteConfig::default(),
            source: SourceConfig::default(),
            atmosphere: AtmosphereParams::default(),
            beam: BeamConfig::default(),
            extraction: ExtractionConfig::default(),
            use_cases: default_use_cases(),
        }
    }
}

/// Reads and validates a config file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    ScenarioConfig::from_toml_str(&text, path.parent())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_paths(e: Error) -> Vec<String> {
        match e {
            Error::Validation(v) => v.into_iter().map(|f| f.path).collect(),
            other => panic!("expected validation error, got {other}"),
        }
    }

    #[test]
    fn shipped_config_loads() {
        let c = ScenarioConfig::default_config();
        assert_eq!(c.link.station_a, "Madrid");
        assert_eq!(c.extraction.mode, ExtractionKind::Lut);
        assert!(c.load_lut(None).unwrap().is_some());
    }

    #[test]
    fn missing_stations_named() {
        let e = ScenarioConfig::from_toml_str("seed = 1\n", None).unwrap_err();
        assert!(field_paths(e).contains(&"stations".to_string()));
    }

    #[test]
    fn errors_are_aggregated() {
        let mut c = ScenarioConfig::default();
        c.source.lambda = Some(1.5);
        c.span.days = -1.0;
        c.stations[1].latitude_deg = 100.0;
        let text = c.to_toml();
        let e = ScenarioConfig::from_toml_str(&text, None).unwrap_err();
        let msg = e.to_string();
        assert!(msg.contains("[0, 1)"), "{msg}");
        let paths = field_paths(e);
        for p in ["source.lambda", "span.days", "stations[1].latitude_deg"] {
            assert!(paths.contains(&p.to_string()), "{paths:?}");
        }
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(ScenarioConfig::from_toml_str("seed = [", None), Err(Error::Parse(_))));
        assert!(matches!(ScenarioConfig::from_toml_str("sed = 1", None), Err(Error::Parse(_))));
    }

    #[test]
    fn missing_lut_file() {
        let mut c = ScenarioConfig::default();
        c.extraction.mode = ExtractionKind::Lut;
        c.extraction.lut_path = Some("no/such/file.csv".into());
        assert!(field_paths(c.validate(None).unwrap_err()).contains(&"extraction.lut_path".to_string()));
    }

    #[test]
    fn round_trip_and_hash() {
        let c = ScenarioConfig::default_config();
        let again = ScenarioConfig::from_toml_str(&c.to_toml(), None).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.hash(), again.hash());
        let mut d = c.clone();
        d.seed += 1;
        assert_ne!(c.hash(), d.hash());
    }
}
