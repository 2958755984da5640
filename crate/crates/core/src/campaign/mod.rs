//! Pass-by-pass key generation over a campaign and use-case verdicts.

mod cache;

use std::sync::Arc;

use chrono::{DateTime, Utc};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use cache::{slant_range_km, EtaCache};

use crate::atmosphere::{atml_tau, dark_click_probability, sample_weather, WeatherRealization};
use crate::config::{BeamMode, ExtractionKind, ScenarioConfig};
use crate::error::{Error, Result};
use crate::extraction::{r_final, skr_lut, LutTable};
use crate::fidelity::{evaluate, ChannelBudget};
use crate::orbit::{pass_windows, seconds_between, GroundStation, PassWindow};
use crate::seed::SeedTree;
use crate::source::{optimize_lambda, LambdaSearch, SourceParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub t: DateTime<Utc>,
    pub zenith_a_deg: f64,
    pub zenith_b_deg: f64,
    pub slant_a_km: f64,
    pub slant_b_km: f64,
    pub p_ta: f64,
    pub p_tb: f64,
    pub fidelity: f64,
    pub qber: f64,
    /// Sifted bits per second.
    pub r_final: f64,
    pub skr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassRecord {
    pub index: usize,
    pub start: DateTime<Utc>,
    pub end: DateTime<Utc>,
    pub duration_s: f64,
    pub weather: WeatherRealization,
    /// Squeezing parameter used; `None` when no λ gives key.
    pub lambda: Option<f64>,
    pub sifted_bits: f64,
    pub key_bits: f64,
    pub successful: bool,
    /// Samples whose evaluation failed and were counted as zero key.
    pub failed_samples: usize,
    pub samples: Vec<SampleRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub use_case: String,
    pub required_keys_per_second: f64,
    pub met: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignSummary {
    pub link: String,
    pub beam_mode: BeamMode,
    pub n_passes: usize,
    pub n_successful: usize,
    pub success_fraction: f64,
    /// Averaged over all passes, blocked ones included.
    pub mean_key_bits: f64,
    pub total_key_bits: f64,
    pub span_seconds: f64,
    pub key_size_bits: u32,
    pub keys_per_second: f64,
    pub verdicts: Vec<Verdict>,
}

/// Whether a campaign meets a use case's key-rate requirement.
pub fn use_case_verdict(summary: &CampaignSummary, requirement: f64) -> bool {
    summary.keys_per_second >= requirement
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CampaignResult {
    pub summary: CampaignSummary,
    pub passes: Vec<PassRecord>,
}

/// Everything needed to evaluate passes of one link.
pub struct LinkSimulator<'a> {
    pub cfg: &'a ScenarioConfig,
    pub station_a: &'a GroundStation,
    pub station_b: &'a GroundStation,
    pub beam_mode: BeamMode,
    cache_a: Arc<EtaCache>,
    cache_b: Arc<EtaCache>,
    lut: Option<Arc<LutTable>>,
    p_dark: f64,
    seeds: SeedTree,
}

impl<'a> LinkSimulator<'a> {
    /// Builds the capture caches for the configured link.
    pub fn new(cfg: &'a ScenarioConfig, lut: Option<Arc<LutTable>>, beam_mode: BeamMode) -> Result<Self> {
        let (a, b) = cfg.link_stations()?;
        let cache_a = Arc::new(EtaCache::build(cfg, a.aperture_radius, beam_mode)?);
        let cache_b = if b.aperture_radius == a.aperture_radius {
            Arc::clone(&cache_a)
        } else {
            Arc::new(EtaCache::build(cfg, b.aperture_radius, beam_mode)?)
        };
        Self::with_caches(cfg, lut, cache_a, cache_b)
    }

    /// Reuses caches, e.g. across configs that differ only outside the optics.
    pub fn with_caches(
        cfg: &'a ScenarioConfig,
        lut: Option<Arc<LutTable>>,
        cache_a: Arc<EtaCache>,
        cache_b: Arc<EtaCache>,
    ) -> Result<Self> {
        let (station_a, station_b) = cfg.link_stations()?;
        if cfg.extraction.mode == ExtractionKind::Lut && lut.is_none() {
            return Err(Error::Domain("LUT extraction selected but no table supplied".into()));
        }
        let w = cfg.atmosphere.detection_window_s;
        let p_dark = dark_click_probability(&cfg.atmosphere, station_a, w)?.max(dark_click_probability(
            &cfg.atmosphere,
            station_b,
            w,
        )?);
        Ok(Self {
            cfg,
            station_a,
            station_b,
            beam_mode: cache_a.mode,
            cache_a,
            cache_b,
            lut,
            p_dark,
            seeds: SeedTree::new(cfg.seed),
        })
    }

    pub fn caches(&self) -> (Arc<EtaCache>, Arc<EtaCache>) {
        (Arc::clone(&self.cache_a), Arc::clone(&self.cache_b))
    }

    pub fn link_name(&self) -> String {
        format!("{}-{}", self.station_a.name, self.station_b.name)
    }

    pub fn p_dark(&self) -> f64 {
        self.p_dark
    }

    fn budget(&self, slant_a: f64, zen_a: f64, slant_b: f64, zen_b: f64, w: &WeatherRealization) -> ChannelBudget {
        let arm = |cache: &EtaCache, st: &GroundStation, slant: f64, zen: f64| {
            if w.blocked {
                0.0
            } else {
                (cache.eta_at(slant) * atml_tau(zen, w.tau) * st.coupling_loss).clamp(0.0, 1.0)
            }
        };
        ChannelBudget {
            p_ta: arm(&self.cache_a, self.station_a, slant_a, zen_a),
            p_tb: arm(&self.cache_b, self.station_b, slant_b, zen_b),
            p_dark: self.p_dark,
        }
    }

    /// Weather for pass `index`.
    pub fn weather(&self, index: usize) -> WeatherRealization {
        sample_weather(&self.cfg.atmosphere, self.seeds.indexed_seed("weather", index as u64))
    }

    /// λ for a pass: the configured value, or the SKR optimum at the sample
    /// with the highest joint elevation.
    pub fn pass_lambda(&self, pass: &PassWindow, weather: &WeatherRealization) -> Option<f64> {
        if let Some(l) = self.cfg.source.lambda {
            return Some(l);
        }
        self.lambda_search(pass, weather).map(|r| r.lambda)
    }

    /// The λ search behind [`Self::pass_lambda`], ignoring any configured λ.
    pub fn lambda_search(&self, pass: &PassWindow, weather: &WeatherRealization) -> Option<LambdaSearch> {
        if weather.blocked {
            return None;
        }
        let s = &pass.samples[pass.best_sample()?];
        let budget = self.budget(s.slant_a_km, s.zenith_a_deg, s.slant_b_km, s.zenith_b_deg, weather);
        let extraction = self.cfg.key_extraction(self.lut.as_ref(), pass.duration_s().max(pass.step_s));
        optimize_lambda(&budget, &extraction, &self.cfg.source.rate_model(), self.cfg.source.lambda_bounds).ok()
    }

    /// Key material of one pass.
    pub fn simulate_pass(&self, index: usize, pass: &PassWindow) -> PassRecord {
        let weather = self.weather(index);
        let lambda = self.pass_lambda(pass, &weather);
        self.simulate_pass_with(index, pass, weather, lambda)
    }

    /// Key material of one pass with weather and λ given.
    pub fn simulate_pass_with(
        &self,
        index: usize,
        pass: &PassWindow,
        weather: WeatherRealization,
        lambda: Option<f64>,
    ) -> PassRecord {
        let dt = pass.step_s;
        let rate = self.cfg.source.rate_model();
        let mut failed_samples = 0;
        let mut samples = Vec::with_capacity(pass.samples.len());
        for s in &pass.samples {
            let budget = self.budget(s.slant_a_km, s.zenith_a_deg, s.slant_b_km, s.zenith_b_deg, &weather);
            let mut rec = SampleRecord {
                t: s.t,
                zenith_a_deg: s.zenith_a_deg,
                zenith_b_deg: s.zenith_b_deg,
                slant_a_km: s.slant_a_km,
                slant_b_km: s.slant_b_km,
                p_ta: budget.p_ta,
                p_tb: budget.p_tb,
                fidelity: 0.0,
                qber: 0.375,
                r_final: 0.0,
                skr: 0.0,
            };
            if let Some(l) = lambda {
                let eval = SourceParams::with_rate_model(l, rate, self.p_dark).and_then(|src| {
                    let bd = evaluate(&src, &budget)?;
                    Ok((bd, r_final(src.attempt_rate(), &bd)))
                });
                match eval {
                    Ok((bd, r)) => {
                        rec.fidelity = bd.fidelity;
                        rec.qber = bd.qber;
                        rec.r_final = r;
                        if self.cfg.extraction.mode == ExtractionKind::Analytic {
                            match crate::extraction::skr_analytic(r, bd.qber, self.cfg.extraction.xi) {
                                Ok(k) => rec.skr = k.skr,
                                Err(_) => failed_samples += 1,
                            }
                        }
                    }
                    Err(_) => failed_samples += 1,
                }
            }
            samples.push(rec);
        }

        let sifted_bits: f64 = samples.iter().map(|s| s.r_final * dt).sum();
        if let (ExtractionKind::Lut, Some(table)) = (self.cfg.extraction.mode, &self.lut) {
            // the whole pass is one block
            let eta = if sifted_bits > 0.0 {
                let q = samples.iter().map(|s| s.r_final * s.qber * dt).sum::<f64>() / sifted_bits;
                skr_lut(table, 1.0, q.clamp(0.0, 0.5), sifted_bits).map(|k| k.skr).unwrap_or(0.0)
            } else {
                0.0
            };
            for s in &mut samples {
                s.skr = s.r_final * eta;
            }
        }
        let key_bits: f64 = samples.iter().map(|s| s.skr * dt).sum();
        PassRecord {
            index,
            start: pass.start,
            end: pass.end,
            duration_s: pass.duration_s(),
            weather,
            lambda,
            sifted_bits,
            key_bits,
            successful: key_bits > 0.0,
            failed_samples,
            samples,
        }
    }

    /// All joint passes of the link in the configured span.
    pub fn passes(&self) -> Result<Vec<PassWindow>> {
        let sp = &self.cfg.span;
        pass_windows(
            &self.cfg.orbit,
            self.station_a,
            self.station_b,
            (sp.start, sp.end()),
            sp.max_zenith_deg,
            sp.search_step_s,
            sp.sample_step_s,
        )
    }

    /// Simulates every pass in the span and aggregates.
    pub fn run(&self) -> Result<CampaignResult> {
        let windows = self.passes()?;
        let passes: Vec<PassRecord> = windows.par_iter().enumerate().map(|(i, w)| self.simulate_pass(i, w)).collect();
        let sp = &self.cfg.span;
        Ok(CampaignResult { summary: self.summarize(&passes, seconds_between(sp.start, sp.end())), passes })
    }

    pub fn summarize(&self, passes: &[PassRecord], span_seconds: f64) -> CampaignSummary {
        let n_passes = passes.len();
        let n_successful = passes.iter().filter(|p| p.successful).count();
        let total_key_bits: f64 = passes.iter().map(|p| p.key_bits).sum();
        let key_size_bits = self.cfg.extraction.key_size_bits;
        let keys_per_second =
            if span_seconds > 0.0 { total_key_bits / (key_size_bits as f64 * span_seconds) } else { 0.0 };
        let mut summary = CampaignSummary {
            link: self.link_name(),
            beam_mode: self.beam_mode,
            n_passes,
            n_successful,
            success_fraction: if n_passes > 0 { n_successful as f64 / n_passes as f64 } else { 0.0 },
            mean_key_bits: if n_passes > 0 { total_key_bits / n_passes as f64 } else { 0.0 },
            total_key_bits,
            span_seconds,
            key_size_bits,
            keys_per_second,
            verdicts: Vec::new(),
        };
        summary.verdicts = self
            .cfg
            .use_cases
            .iter()
            .map(|u| Verdict {
                use_case: u.name.clone(),
                required_keys_per_second: u.keys_per_second,
                met: use_case_verdict(&summary, u.keys_per_second),
            })
            .collect();
        summary
    }
}

/// Runs the configured campaign with the configured beam mode.
pub fn run_campaign(cfg: &ScenarioConfig, lut: Option<Arc<LutTable>>) -> Result<CampaignResult> {
    if !(cfg.span.days > 0.0) {
        return Err(Error::EmptySpan(format!("span of {} days", cfg.span.days)));
    }
    LinkSimulator::new(cfg, lut, cfg.beam.mode)?.run()
}
