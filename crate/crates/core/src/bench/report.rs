use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::campaign::{Campaign, CaseReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Csv,
    Json,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(ReportFormat::Csv),
            "json" => Ok(ReportFormat::Json),
            _ => Err(Error::Parse(format!("unknown report format {s:?} (expected csv or json)"))),
        }
    }
}

pub const CSV_HEADER: [&str; 22] = [
    "case",
    "m",
    "l",
    "n",
    "categories",
    "algorithm",
    "exact",
    "cloud_add",
    "cloud_mult_cc",
    "cloud_mult_cp",
    "cloud_rot",
    "client_add",
    "client_mult_cc",
    "client_mult_cp",
    "client_rot",
    "encrypt",
    "decrypt",
    "client_ms",
    "cloud_ms",
    "total_ms",
    "peak_ciphertexts",
    "memory_proxy_slots",
];

/// Writes one CSV row per case and algorithm.
pub fn write_csv<W: Write>(cases: &[CaseReport], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(CSV_HEADER)?;
    for case in cases {
        let (m, l, n) = case.dims;
        let categories: Vec<&str> = case.categories.iter().map(|c| c.label()).collect();
        for run in &case.runs {
            let (cl, cd) = (&run.stats.client, &run.stats.cloud);
            let fields: [String; 22] = [
                case.index.to_string(),
                m.to_string(),
                l.to_string(),
                n.to_string(),
                categories.join(";"),
                run.algorithm.name().to_string(),
                run.exact.to_string(),
                cd.add.to_string(),
                cd.mult_cc.to_string(),
                cd.mult_cp.to_string(),
                cd.rot.to_string(),
                cl.add.to_string(),
                cl.mult_cc.to_string(),
                cl.mult_cp.to_string(),
                cl.rot.to_string(),
                (cl.encrypt + cd.encrypt).to_string(),
                (cl.decrypt + cd.decrypt).to_string(),
                format!("{:.3}", run.cost.client_ms),
                format!("{:.3}", run.cost.cloud_ms),
                format!("{:.3}", run.cost.total_ms),
                run.peak_ciphertexts.to_string(),
                run.memory_proxy_slots.to_string(),
            ];
            w.write_record(&fields)?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the whole campaign (config, cases, summary) as pretty JSON.
pub fn write_json<W: Write>(campaign: &Campaign, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, campaign)?;
    writeln!(out)?;
    Ok(())
}

pub fn emit_report<W: Write>(campaign: &Campaign, format: ReportFormat, out: W) -> Result<()> {
    match format {
        ReportFormat::Csv => write_csv(&campaign.cases, out),
        ReportFormat::Json => write_json(campaign, out),
    }
}
