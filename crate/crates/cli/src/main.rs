use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use satqkd_core::campaign::{CampaignResult, LinkSimulator};
use satqkd_core::config::{load_config, BeamMode, ScenarioConfig};
use satqkd_core::extraction::lut::{default_block_lengths, default_qber_grid, generate_lut, LutOptions};
use satqkd_core::extraction::LutTable;
use satqkd_core::optics::{capture_pdf, capture_probability_map, propagate, BeamChannel, GridSpec, WaistEvaluator};
use satqkd_core::report::{self, Provenance};
use satqkd_core::verify::run_oracles;
use satqkd_core::{Error, Result};

#[derive(Parser)]
#[command(name = "satqkd", version, about = "Entanglement-based satellite QKD link simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Beam {
    Optimized,
    Fixed,
}

impl From<Beam> for BeamMode {
    fn from(b: Beam) -> Self {
        match b {
            Beam::Optimized => BeamMode::Optimized,
            Beam::Fixed => BeamMode::Fixed,
        }
    }
}

#[derive(clap::Args)]
struct Common {
    /// Scenario file, or `default` for the shipped scenario.
    #[arg(long, default_value = "default")]
    config: String,
    /// Overrides the root seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Scan and optimize the transmitter waist for one range.
    OptimizeBeam {
        #[command(flatten)]
        common: Common,
        /// Link range, e.g. `1000km` or `1e6m`.
        #[arg(long, value_parser = parse_distance, default_value = "1000km")]
        z: f64,
        /// Receiver grid side length.
        #[arg(long, default_value_t = GridSpec::default().size)]
        grid: usize,
        /// Histogram bins of the capture distribution at the optimum.
        #[arg(long, default_value_t = 50)]
        bins: usize,
    },
    /// Generate a Cascade efficiency table.
    GenLut {
        /// Scenario whose hash is recorded in the table header.
        #[arg(long)]
        config: Option<String>,
        #[arg(long, default_value_t = 50)]
        trials: u32,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Output path; `.json` selects JSON, anything else CSV.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated block lengths.
        #[arg(long, value_delimiter = ',')]
        block_lengths: Option<Vec<u64>>,
        /// Comma-separated QBER grid.
        #[arg(long, value_delimiter = ',')]
        qber: Option<Vec<f64>>,
    },
    /// Simulate one pass of the configured link.
    SimulatePass {
        #[command(flatten)]
        common: Common,
        /// Pass index within the span.
        #[arg(long, default_value_t = 0)]
        pass: usize,
        #[arg(long, value_enum)]
        beam: Option<Beam>,
    },
    /// Simulate every pass of the configured span.
    Campaign {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        beam: Option<Beam>,
        /// Also write per-sample records.
        #[arg(long)]
        samples: bool,
    },
    /// Run the built-in oracle checks.
    Verify {
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn parse_distance(s: &str) -> std::result::Result<f64, String> {
    let t = s.trim();
    let (num, scale) = if let Some(n) = t.strip_suffix("km") {
        (n, 1e3)
    } else if let Some(n) = t.strip_suffix('m') {
        (n, 1.0)
    } else {
        (t, 1.0)
    };
    match num.trim().parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v * scale),
        _ => Err(format!("expected a positive distance such as 1000km, got {s:?}")),
    }
}

struct Scenario {
    cfg: ScenarioConfig,
    base_dir: Option<PathBuf>,
}

impl Scenario {
    fn load(spec: &str, seed: Option<u64>) -> Result<Self> {
        let (mut cfg, base_dir) = if spec == "default" {
            (ScenarioConfig::default_config(), None)
        } else {
            let p = Path::new(spec);
            if !p.is_file() {
                let msg = format!("config file not found: {}", p.display());
                return Err(Error::Io(std::io::Error::new(std::io::ErrorKind::NotFound, msg)));
            }
            (load_config(p)?, p.parent().map(Path::to_path_buf))
        };
        if let Some(s) = seed {
            cfg.seed = s;
        }
        Ok(Self { cfg, base_dir })
    }

    fn provenance(&self) -> Provenance {
        Provenance::new(self.cfg.hash(), self.cfg.seed)
    }

    fn out_dir(&self, over: Option<PathBuf>) -> Result<PathBuf> {
        let d = over.unwrap_or_else(|| self.cfg.output_dir.clone());
        fs::create_dir_all(&d)?;
        Ok(d)
    }

    fn lut(&self) -> Result<Option<Arc<LutTable>>> {
        self.cfg.load_lut(self.base_dir.as_deref())
    }
}

fn write(dir: &Path, name: &str, text: &str, written: &mut Vec<String>) -> Result<()> {
    let p = dir.join(name);
    fs::write(&p, text)?;
    written.push(p.display().to_string());
    Ok(())
}

fn optimize_beam(common: Common, z: f64, grid_size: usize, bins: usize) -> Result<serde_json::Value> {
    let sc = Scenario::load(&common.config, common.seed)?;
    let cfg = &sc.cfg;
    let (station, _) = cfg.link_stations()?;
    let a = cfg.satellite.aperture_radius;
    let b = station.aperture_radius;
    let grid = GridSpec { size: grid_size, ..GridSpec::default() };
    let ev = WaistEvaluator::new(a, b, z, cfg.satellite.jitter_rad(), cfg.satellite.wavelength_m(), grid)?;
    let search = ev.optimize((a / 10.0, 2.0 * a))?;

    let channel = BeamChannel::new(search.w0, a, b, z, cfg.satellite.wavelength_m(), cfg.satellite.jitter_rad())?;
    let map = capture_probability_map(&propagate(&channel, &grid)?, b)?;
    let pdf = capture_pdf(&map, &channel, bins)?;

    let prov = sc.provenance();
    let dir = sc.out_dir(common.out_dir)?;
    let tag = format!("z{}km", z / 1e3);
    let mut written = Vec::new();
    let mut curve = search.scan.clone();
    curve.push((search.w0, search.eta));
    curve.sort_by(|x, y| x.0.total_cmp(&y.0));
    write(&dir, &format!("waist_curve_{tag}.txt"), &report::waist_curve(&curve, &prov), &mut written)?;
    write(&dir, &format!("capture_pdf_{tag}.txt"), &report::pdf_histogram(&pdf, &prov), &mut written)?;
    Ok(json!({
        "command": "optimize-beam",
        "z_m": z,
        "w0_m": search.w0,
        "eta_mean": search.eta,
        "evaluations": search.evaluations,
        "files": written,
    }))
}

fn gen_lut(
    config: Option<String>,
    trials: u32,
    seed: u64,
    out: PathBuf,
    block_lengths: Option<Vec<u64>>,
    qber: Option<Vec<f64>>,
) -> Result<serde_json::Value> {
    let ls = block_lengths.unwrap_or_else(default_block_lengths);
    let qs = qber.unwrap_or_else(default_qber_grid);
    let mut table = generate_lut(&ls, &qs, trials, seed, &LutOptions::default())?;
    if let Some(c) = config {
        table = table.with_config_hash(Scenario::load(&c, None)?.cfg.hash());
    }
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    table.save(&out)?;
    Ok(json!({
        "command": "gen-lut",
        "trials": trials,
        "seed": seed,
        "cells": ls.len() * qs.len(),
        "files": [out.display().to_string()],
    }))
}

fn simulate_pass(common: Common, index: usize, beam: Option<Beam>) -> Result<serde_json::Value> {
    let sc = Scenario::load(&common.config, common.seed)?;
    let lut = sc.lut()?;
    let mode = beam.map_or(sc.cfg.beam.mode, BeamMode::from);
    let sim = LinkSimulator::new(&sc.cfg, lut, mode)?;
    let passes = sim.passes()?;
    let pass = passes
        .get(index)
        .ok_or_else(|| Error::Domain(format!("pass {index} out of range: span has {} passes", passes.len())))?;
    let weather = sim.weather(index);
    let search = if sc.cfg.source.lambda.is_none() { sim.lambda_search(pass, &weather) } else { None };
    let record = sim.simulate_pass_with(index, pass, weather, sim.pass_lambda(pass, &weather));
    let result = CampaignResult {
        summary: sim.summarize(std::slice::from_ref(&record), pass.duration_s()),
        passes: vec![record],
    };

    let prov = sc.provenance();
    let dir = sc.out_dir(common.out_dir)?;
    let mut written = Vec::new();
    write(&dir, &format!("pass_{index}_samples.csv"), &report::samples_csv(&result, &prov), &mut written)?;
    write(&dir, &format!("pass_{index}_summary.json"), &report::summary_json(&result, &prov), &mut written)?;
    if let Some(s) = &search {
        let trace = report::two_column("lambda-trace", ("lambda", "skr_bits_per_s"), &s.scan, &prov);
        write(&dir, &format!("pass_{index}_lambda.txt"), &trace, &mut written)?;
    }
    let p = &result.passes[0];
    Ok(json!({
        "command": "simulate-pass",
        "pass": index,
        "start": p.start,
        "duration_s": p.duration_s,
        "blocked": p.weather.blocked,
        "lambda": p.lambda,
        "key_bits": p.key_bits,
        "files": written,
    }))
}

fn campaign(common: Common, beam: Option<Beam>, samples: bool) -> Result<serde_json::Value> {
    let sc = Scenario::load(&common.config, common.seed)?;
    let lut = sc.lut()?;
    let mode = beam.map_or(sc.cfg.beam.mode, BeamMode::from);
    let result = LinkSimulator::new(&sc.cfg, lut, mode)?.run()?;

    let prov = sc.provenance();
    let dir = sc.out_dir(common.out_dir)?;
    let mut written = Vec::new();
    write(&dir, "passes.csv", &report::passes_csv(&result, &prov), &mut written)?;
    write(&dir, "summary.json", &report::summary_json(&result, &prov), &mut written)?;
    write(&dir, "key_bits.txt", &report::key_bits_plot(&result, &prov), &mut written)?;
    if samples {
        write(&dir, "samples.csv", &report::samples_csv(&result, &prov), &mut written)?;
    }
    let s = &result.summary;
    Ok(json!({
        "command": "campaign",
        "link": s.link,
        "n_passes": s.n_passes,
        "n_successful": s.n_successful,
        "keys_per_second": s.keys_per_second,
        "verdicts": s.verdicts,
        "files": written,
    }))
}

fn verify(seed: u64) -> Result<(serde_json::Value, bool)> {
    let checks = run_oracles(seed)?;
    for c in &checks {
        eprintln!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let ok = checks.iter().all(|c| c.passed);
    Ok((json!({ "command": "verify", "seed": seed, "passed": ok, "checks": checks }), ok))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::OptimizeBeam { common, z, grid, bins } => optimize_beam(common, z, grid, bins).map(|v| (v, true)),
        Command::GenLut { config, trials, seed, out, block_lengths, qber } => {
            gen_lut(config, trials, seed, out, block_lengths, qber).map(|v| (v, true))
        }
        Command::SimulatePass { common, pass, beam } => simulate_pass(common, pass, beam).map(|v| (v, true)),
        Command::Campaign { common, beam, samples } => campaign(common, beam, samples).map(|v| (v, true)),
        Command::Verify { seed } => verify(seed),
    };
    match outcome {
        Ok((v, ok)) => {
            println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            if ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.kind(), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}
