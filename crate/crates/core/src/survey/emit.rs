use std::io::Write;
use std::str::FromStr;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::{Evidence, Result, SurveyError, SurveyReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
}

impl FromStr for ReportFormat {
    type Err = SurveyError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(ReportFormat::Json),
            "csv" => Ok(ReportFormat::Csv),
            other => Err(SurveyError::Domain(format!(
                "unknown report format {other}"
            ))),
        }
    }
}

/// Pretty JSON, fields in declaration order, trailing newline.
pub fn report_json(report: &SurveyReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

/// SHA-256 of [`report_json`], hex encoded.
pub fn report_hash(report: &SurveyReport) -> Result<String> {
    let json = report_json(report)?;
    Ok(hex::encode(Sha256::digest(json.as_bytes())))
}

#[derive(Serialize)]
struct Row<'a> {
    q: u64,
    n: u32,
    omega: Option<usize>,
    stage: &'a str,
    note: String,
}

/// JSON writes the whole report; CSV writes one row per survivor.
pub fn emit_report<W: Write>(
    report: &SurveyReport,
    format: ReportFormat,
    mut out: W,
) -> Result<()> {
    match format {
        ReportFormat::Json => out.write_all(report_json(report)?.as_bytes())?,
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(out);
            let mut wrote = false;
            for &q in &report.survivors {
                let rec = report.record(q);
                let note = match rec.map(|r| &r.evidence) {
                    Some(Evidence::Unresolved { reason }) => reason.clone(),
                    _ => String::new(),
                };
                w.serialize(Row {
                    q,
                    n: report.n,
                    omega: rec.and_then(|r| r.omega_exact),
                    stage: rec.map_or("needs_verification", |r| r.stage.as_str()),
                    note,
                })?;
                wrote = true;
            }
            if !wrote {
                w.write_record(["q", "n", "omega", "stage", "note"])?;
            }
            w.flush()?;
        }
    }
    Ok(())
}
