use std::sync::Arc;

use satqkd_core::atmosphere::{sample_weather, AtmosphereParams, WeatherMode};
use satqkd_core::campaign::{run_campaign, EtaCache, LinkSimulator};
use satqkd_core::config::{BeamMode, ExtractionKind, ScenarioConfig, DEFAULT_CONFIG, DEFAULT_LUT};
use satqkd_core::extraction::LutTable;
use satqkd_core::orbit::{offset, pass_windows, seconds_between};

fn short(days: f64) -> ScenarioConfig {
    let mut c = ScenarioConfig::default_config();
    c.span.days = days;
    c
}

struct Fixture {
    caches: (Arc<EtaCache>, Arc<EtaCache>),
    lut: Option<Arc<LutTable>>,
}

impl Fixture {
    fn new(cfg: &ScenarioConfig) -> Self {
        let lut = Some(Arc::new(LutTable::from_csv(DEFAULT_LUT).unwrap()));
        let sim = LinkSimulator::new(cfg, lut.clone(), BeamMode::Optimized).unwrap();
        Self { caches: sim.caches(), lut }
    }

    fn keys_per_second(&self, cfg: &ScenarioConfig) -> f64 {
        let lut = if cfg.extraction.mode == ExtractionKind::Lut { self.lut.clone() } else { None };
        let sim = LinkSimulator::with_caches(cfg, lut, self.caches.0.clone(), self.caches.1.clone()).unwrap();
        sim.run().unwrap().summary.keys_per_second
    }
}

fn assert_non_decreasing(label: &str, v: &[f64]) {
    assert!(v.iter().all(|&x| x > 0.0), "{label}: {v:?}");
    assert!(v.windows(2).all(|w| w[1] >= w[0]), "{label} not monotone: {v:?}");
}

#[test]
fn shipped_config_file_matches_embedded_copy() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.toml");
    let on_disk = std::fs::read_to_string(path).unwrap();
    assert_eq!(on_disk, DEFAULT_CONFIG);
    let cfg = satqkd_core::config::load_config(std::path::Path::new(path)).unwrap();
    assert_eq!(cfg, ScenarioConfig::default_config());
}

#[test]
fn key_rate_monotone_in_link_parameters() {
    let base = short(5.0);
    let fx = Fixture::new(&base);

    let cl: Vec<f64> = [0.3, 0.5, 0.7]
        .iter()
        .map(|&c| {
            let mut cfg = base.clone();
            cfg.stations.iter_mut().for_each(|s| s.coupling_loss = c);
            fx.keys_per_second(&cfg)
        })
        .collect();
    assert_non_decreasing("coupling", &cl);

    let tau: Vec<f64> = [0.6, 0.35, 0.1]
        .iter()
        .map(|&t| {
            let mut cfg = base.clone();
            cfg.atmosphere.zenith_optical_depth = t;
            fx.keys_per_second(&cfg)
        })
        .collect();
    assert_non_decreasing("optical depth (decreasing)", &tau);

    let rate: Vec<f64> = [3e6, 5.9e6, 1.2e7]
        .iter()
        .map(|&r| {
            let mut cfg = base.clone();
            cfg.source.pair_rate = r;
            fx.keys_per_second(&cfg)
        })
        .collect();
    assert_non_decreasing("pair rate", &rate);
}

#[test]
fn gigahertz_source_scales_linearly() {
    // With analytic extraction the optimal λ does not depend on the pair
    // rate, so keys/s is linear in it.
    let mut base = short(5.0);
    base.extraction.mode = ExtractionKind::Analytic;
    let fx = Fixture::new(&base);
    let slow = fx.keys_per_second(&base);
    let mut fast_cfg = base.clone();
    fast_cfg.source.pair_rate = 1e9;
    let fast = fx.keys_per_second(&fast_cfg);
    let ratio = fast / slow;
    let expected = 1e9 / 5.9e6;
    assert!((ratio / expected - 1.0).abs() < 0.01, "ratio {ratio} vs {expected}");

    // Larger blocks only help under the finite-size table.
    let lut_base = short(5.0);
    let slow = fx.keys_per_second(&lut_base);
    let mut lut_fast = lut_base.clone();
    lut_fast.source.pair_rate = 1e9;
    assert!(fx.keys_per_second(&lut_fast) / slow >= expected * 0.99);
}

#[test]
fn key_bits_additive_over_split_pass() {
    let mut cfg = short(2.0);
    cfg.extraction.mode = ExtractionKind::Analytic;
    cfg.source.lambda = Some(0.005);
    let sim = LinkSimulator::new(&cfg, None, BeamMode::Optimized).unwrap();
    let passes = sim.passes().unwrap();
    assert!(!passes.is_empty());
    for (i, pass) in passes.iter().enumerate().take(4) {
        let w = sim.weather(i);
        let full = sim.simulate_pass_with(i, pass, w, Some(0.005));
        let (a, b) = pass.split_at(pass.samples.len() / 2);
        let ka = sim.simulate_pass_with(i, &a, w, Some(0.005)).key_bits;
        let kb = sim.simulate_pass_with(i, &b, w, Some(0.005)).key_bits;
        let max_step = full.samples.iter().map(|s| s.skr).fold(0.0, f64::max) * pass.step_s;
        assert!(
            (ka + kb - full.key_bits).abs() <= max_step,
            "pass {i}: {ka} + {kb} vs {} (step {max_step})",
            full.key_bits
        );
    }
}

#[test]
fn blocked_passes_yield_nothing() {
    let mut cfg = short(2.0);
    cfg.atmosphere.weather_mode = WeatherMode::Stochastic;
    cfg.atmosphere.cloud_block_probability = 1.0;
    let r = run_campaign(&cfg, cfg.load_lut(None).unwrap()).unwrap();
    assert!(r.summary.n_passes > 0);
    assert!(r.passes.iter().all(|p| p.weather.blocked && p.key_bits == 0.0 && !p.successful));
    assert_eq!(r.summary.keys_per_second, 0.0);
    assert_eq!(r.summary.success_fraction, 0.0);
}

#[test]
fn empty_span_reports_zero_rate() {
    let mut cfg = short(1.0);
    cfg.span.max_zenith_deg = 0.5;
    let r = run_campaign(&cfg, cfg.load_lut(None).unwrap()).unwrap();
    assert_eq!(r.summary.n_passes, 0);
    assert_eq!(r.summary.keys_per_second, 0.0);
    assert_eq!(r.summary.success_fraction, 0.0);
}

#[test]
fn summary_invariants() {
    let cfg = short(3.0);
    let r = run_campaign(&cfg, cfg.load_lut(None).unwrap()).unwrap();
    let s = &r.summary;
    assert_eq!(s.n_passes, r.passes.len());
    assert_eq!(s.n_successful, r.passes.iter().filter(|p| p.key_bits > 0.0).count());
    assert!(r.passes.iter().all(|p| p.successful == (p.key_bits > 0.0) && p.key_bits >= 0.0));
    let total: f64 = r.passes.iter().map(|p| p.key_bits).sum();
    assert!((s.keys_per_second - total / (256.0 * 3.0 * 86_400.0)).abs() <= 1e-12 * s.keys_per_second.max(1.0));
    assert!(s.verdicts.iter().all(|v| v.met == (s.keys_per_second >= v.required_keys_per_second)));
}

#[test]
fn weather_block_fraction_matches_probability() {
    let p = AtmosphereParams {
        weather_mode: WeatherMode::Stochastic,
        cloud_block_probability: 0.3,
        ..AtmosphereParams::default()
    };
    let n = 20_000;
    let blocked = (0..n).filter(|&s| sample_weather(&p, s).blocked).count() as f64 / n as f64;
    let se = (0.3f64 * 0.7 / n as f64).sqrt();
    assert!((blocked - 0.3).abs() < 4.0 * se, "{blocked}");
}

#[test]
fn wider_mask_contains_narrower_windows() {
    let cfg = short(5.0);
    let (a, b) = cfg.link_stations().unwrap();
    let span = (cfg.span.start, offset(cfg.span.start, 5.0 * 86_400.0));
    let at = |z: f64| pass_windows(&cfg.orbit, a, b, span, z, 10.0, 1.0).unwrap();
    let masks = [at(40.0), at(60.0), at(70.0)];
    for pair in masks.windows(2) {
        let (narrow, wide) = (&pair[0], &pair[1]);
        for w in narrow {
            let host = wide
                .iter()
                .find(|v| v.start <= w.start && v.end >= w.end)
                .unwrap_or_else(|| panic!("window {} - {} lost", w.start, w.end));
            assert!(seconds_between(host.start, host.end) >= seconds_between(w.start, w.end));
        }
    }
    assert!(!masks[2].is_empty());
}
