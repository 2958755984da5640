//! Plain-text and JSON renderings of results. Every file starts with a header
//! (a `#` comment, or a `header` object in JSON) carrying the config hash and
//! seed.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use crate::campaign::CampaignResult;
use crate::optics::CapturePdf;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Provenance {
    pub config_hash: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(config_hash: impl Into<String>, seed: u64) -> Self {
        Self { config_hash: config_hash.into(), seed }
    }

    pub fn comment(&self, kind: &str) -> String {
        format!("# satqkd {kind} config_hash={} seed={}\n", self.config_hash, self.seed)
    }
}

/// One row per pass.
pub fn passes_csv(result: &CampaignResult, prov: &Provenance) -> String {
    let mut s = prov.comment("passes");
    s.push_str("index,start,end,duration_s,blocked,tau,lambda,sifted_bits,key_bits,successful,failed_samples\n");
    for p in &result.passes {
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            p.index,
            p.start.to_rfc3339(),
            p.end.to_rfc3339(),
            p.duration_s,
            p.weather.blocked,
            p.weather.tau,
            p.lambda.map_or_else(|| "none".to_string(), |l| l.to_string()),
            p.sifted_bits,
            p.key_bits,
            p.successful,
            p.failed_samples
        )
        .unwrap();
    }
    s
}

/// One row per time sample of every pass.
pub fn samples_csv(result: &CampaignResult, prov: &Provenance) -> String {
    let mut s = prov.comment("samples");
    s.push_str("pass,t,zenith_a_deg,zenith_b_deg,slant_a_km,slant_b_km,p_ta,p_tb,fidelity,qber,r_final,skr\n");
    for p in &result.passes {
        for x in &p.samples {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                p.index,
                x.t.to_rfc3339(),
                x.zenith_a_deg,
                x.zenith_b_deg,
                x.slant_a_km,
                x.slant_b_km,
                x.p_ta,
                x.p_tb,
                x.fidelity,
                x.qber,
                x.r_final,
                x.skr
            )
            .unwrap();
        }
    }
    s
}

pub fn summary_json(result: &CampaignResult, prov: &Provenance) -> String {
    serde_json::to_string_pretty(&json!({ "header": prov, "summary": result.summary })).expect("summary serializes")
        + "\n"
}

/// Key bits per pass against pass start (Unix seconds).
pub fn key_bits_plot(result: &CampaignResult, prov: &Provenance) -> String {
    let mut s = prov.comment("key-bits-per-pass");
    s.push_str("# pass_index start_unix_s key_bits\n");
    for p in &result.passes {
        writeln!(s, "{} {} {}", p.index, p.start.timestamp(), p.key_bits).unwrap();
    }
    s
}

/// `(w0, η̄)` curve; the third column flags the maximum.
pub fn waist_curve(curve: &[(f64, f64)], prov: &Provenance) -> String {
    let best = curve.iter().enumerate().max_by(|a, b| a.1 .1.total_cmp(&b.1 .1)).map(|(i, _)| i);
    let mut s = prov.comment("waist-curve");
    s.push_str("# w0_m eta_mean is_max\n");
    for (i, (w, e)) in curve.iter().enumerate() {
        writeln!(s, "{w} {e} {}", u8::from(Some(i) == best)).unwrap();
    }
    s
}

/// Two-column `(value, density)` histogram.
pub fn pdf_histogram(pdf: &CapturePdf, prov: &Provenance) -> String {
    let mut s = prov.comment("capture-pdf");
    s.push_str("# eta density\n");
    for (c, d) in pdf.centers().iter().zip(&pdf.densities) {
        writeln!(s, "{c} {d}").unwrap();
    }
    s
}

/// Two-column `(x, y)` trace, e.g. λ against SKR.
pub fn two_column(kind: &str, columns: (&str, &str), rows: &[(f64, f64)], prov: &Provenance) -> String {
    let mut s = prov.comment(kind);
    writeln!(s, "# {} {}", columns.0, columns.1).unwrap();
    for (x, y) in rows {
        writeln!(s, "{x} {y}").unwrap();
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_marks_single_maximum() {
        let p = Provenance::new("h", 1);
        let text = waist_curve(&[(0.1, 1.0), (0.2, 3.0), (0.3, 2.0)], &p);
        assert!(text.starts_with("# satqkd waist-curve config_hash=h seed=1\n"));
        let flags: Vec<&str> =
            text.lines().filter(|l| !l.starts_with('#')).map(|l| l.split(' ').nth(2).unwrap()).collect();
        assert_eq!(flags, ["0", "1", "0"]);
    }
}
