//! Report documents: one JSON object per command, schema-versioned, with
//! the effective configuration echoed and every intermediate quantity
//! included. Identical (config, seed) must produce byte-identical output,
//! so nothing time- or thread-dependent is ever written.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use heatbloch_core::bounds::BlochBoundReport;
use heatbloch_core::contraction::{ContractionReport, SchlichtReport};
use heatbloch_core::takahashi::RadiusRatio;
use heatbloch_core::{ConstantsOptimum, KEstimate, RadiiSequence, SchlichtCertificate};

use crate::config::RunConfig;
use crate::error::CliResult;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Json,
    Csv,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct MapSummary {
    pub source: String,
    pub m: usize,
    /// |det F'(0)| of the document as loaded.
    pub det_origin_raw: f64,
    /// Scale applied by normalization (1 when already normalized).
    pub normalization_scale: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KSection {
    pub raw_estimate: f64,
    pub safety_factor: f64,
    pub applied: f64,
    pub per_radius: Vec<RadiusRatio>,
}

impl KSection {
    pub fn new(est: &KEstimate, safety: f64, applied: f64) -> Self {
        KSection {
            raw_estimate: est.k,
            safety_factor: safety,
            applied,
            per_radius: est.per_radius.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AmSection {
    pub raw_estimate: f64,
    pub safety_factor: f64,
    pub applied: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EstimateKReport {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub map: MapSummary,
    pub k_estimate: KSection,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifySection {
    pub interior: Option<SchlichtCertificate>,
    pub origin: SchlichtCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertifyReport {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    pub map: MapSummary,
    pub k_estimate: KSection,
    pub a_m: AmSection,
    pub gamma: f64,
    pub r_gamma: f64,
    pub sequence: RadiiSequence,
    /// Index chosen by the selection inequality
    /// eps_n^4 M(r_n)^{1/(m+1)} >= M(r_gamma)^{1/(m+1)} / gamma^4.
    pub chosen_n: Option<usize>,
    pub certificates: CertifySection,
    pub bounds: BlochBoundReport,
}

/// Certificates persisted by `certify` for `invert`/`verify`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateStore {
    pub schema_version: u32,
    pub map_source: String,
    pub m: usize,
    pub seed: u64,
    pub k: f64,
    pub a_m: f64,
    pub gamma: f64,
    pub sigma: f64,
    pub sequence: RadiiSequence,
    pub interior: Option<SchlichtCertificate>,
    pub origin: SchlichtCertificate,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvertReport {
    pub schema_version: u32,
    pub command: String,
    pub branch: String,
    pub target: Vec<f64>,
    pub solution: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertVerifyResult {
    pub branch: String,
    pub structurally_valid: bool,
    pub validity_error: Option<String>,
    pub contraction: Option<ContractionReport>,
    pub schlicht: Option<SchlichtReport>,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct VerifyReport {
    pub schema_version: u32,
    pub command: String,
    pub store: String,
    pub results: Vec<CertVerifyResult>,
    pub all_passed: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremRow {
    pub m: usize,
    pub k: f64,
    pub a_m: f64,
    /// Denominator (m+1), as derived.
    pub bound: f64,
    /// Denominator m, as displayed in the theorem statement.
    pub bound_stated: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConstantsReport {
    pub schema_version: u32,
    pub command: String,
    pub resolution: usize,
    pub optimum: ConstantsOptimum,
    pub table: Vec<TheoremRow>,
}

fn to_json<T: Serialize>(value: &T) -> CliResult<String> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| crate::error::CliError::Numerical(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

/// Write `text` to `out` (or stdout when absent), UTF-8 with LF endings.
pub fn emit(text: &str, out: Option<&Path>) -> CliResult<()> {
    match out {
        Some(path) => fs::write(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn push_f64(line: &mut String, v: f64) {
    let _ = write!(line, "{v}");
}

fn csv_radius_table(rows: &[RadiusRatio]) -> String {
    let mut s = String::from("r,max_frob,det_max,ratio\n");
    for row in rows {
        let mut line = String::new();
        push_f64(&mut line, row.r);
        line.push(',');
        push_f64(&mut line, row.max_frob);
        line.push(',');
        push_f64(&mut line, row.det_max);
        line.push(',');
        push_f64(&mut line, row.ratio);
        line.push('\n');
        s.push_str(&line);
    }
    s
}

fn csv_sequence_table(seq: &RadiiSequence) -> String {
    let mut s = String::from("j,r,eps,det_max\n");
    for j in 0..=seq.l {
        let mut line = format!("{j},");
        push_f64(&mut line, seq.r[j]);
        line.push(',');
        push_f64(&mut line, seq.eps[j]);
        line.push(',');
        push_f64(&mut line, seq.det_max[j]);
        line.push('\n');
        s.push_str(&line);
    }
    s
}

fn csv_theorem_table(rows: &[TheoremRow]) -> String {
    let mut s = String::from("m,k,a_m,bound,bound_stated\n");
    for row in rows {
        let mut line = format!("{},", row.m);
        push_f64(&mut line, row.k);
        line.push(',');
        push_f64(&mut line, row.a_m);
        line.push(',');
        push_f64(&mut line, row.bound);
        line.push(',');
        push_f64(&mut line, row.bound_stated);
        line.push('\n');
        s.push_str(&line);
    }
    s
}

fn csv_verify_table(results: &[CertVerifyResult]) -> String {
    let mut s = String::from(
        "branch,structurally_valid,contraction_passed,schlicht_passed,passed\n",
    );
    for r in results {
        let c = r
            .contraction
            .as_ref()
            .map_or("-".to_string(), |c| c.passed.to_string());
        let v = r
            .schlicht
            .as_ref()
            .map_or("-".to_string(), |v| v.passed.to_string());
        s.push_str(&format!(
            "{},{},{},{},{}\n",
            r.branch, r.structurally_valid, c, v, r.passed
        ));
    }
    s
}

impl EstimateKReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => Ok(csv_radius_table(&self.k_estimate.per_radius)),
        }
    }
}

impl CertifyReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => Ok(csv_sequence_table(&self.sequence)),
        }
    }
}

impl InvertReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => {
                let mut s = String::from("branch,iterations,residual\n");
                let mut line = format!("{},{},", self.branch, self.iterations);
                push_f64(&mut line, self.residual);
                line.push('\n');
                s.push_str(&line);
                Ok(s)
            }
        }
    }
}

impl VerifyReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => Ok(csv_verify_table(&self.results)),
        }
    }
}

impl ConstantsReport {
    pub fn render(&self, format: OutputFormat) -> CliResult<String> {
        match format {
            OutputFormat::Json => to_json(self),
            OutputFormat::Csv => Ok(csv_theorem_table(&self.table)),
        }
    }
}

impl CertificateStore {
    pub fn save(&self, path: &Path) -> CliResult<()> {
        emit(&to_json(self)?, Some(path))
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| {
            crate::error::CliError::invalid(format!("cannot read certificates {path:?}: {e}"))
        })?;
        serde_json::from_str(&text).map_err(|e| {
            crate::error::CliError::invalid(format!("cannot parse certificates {path:?}: {e}"))
        })
    }
}
