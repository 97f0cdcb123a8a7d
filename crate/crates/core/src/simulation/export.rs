//! CSV and JSON output of distribution series and sweeps.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{DistributionSeries, SweepReport};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExportFormat {
    #[default]
    Csv,
    Json,
}

impl FromStr for ExportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(ExportFormat::Csv),
            "json" => Ok(ExportFormat::Json),
            other => Err(Error::InvalidConfig(format!("unknown format `{other}`"))),
        }
    }
}

/// One histogram bin; `coord` counts from 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub t: usize,
    pub coord: usize,
    pub bin_left: f64,
    pub bin_right: f64,
    pub count_pos: u64,
    pub count_neg: u64,
}

pub const HISTOGRAM_HEADER: [&str; 6] = ["t", "coord", "bin_left", "bin_right", "count_pos", "count_neg"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    #[serde(rename = "U")]
    pub u: f64,
    #[serde(rename = "W1")]
    pub w1: f64,
    #[serde(rename = "W2")]
    pub w2: f64,
    pub err: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

pub const SWEEP_HEADER: [&str; 6] = ["U", "W1", "W2", "err", "ci_lo", "ci_hi"];

pub fn histogram_rows(series: &DistributionSeries) -> Vec<HistogramRow> {
    let mut rows = Vec::new();
    for snap in &series.snapshots {
        for (c, h) in snap.histograms.iter().enumerate() {
            for b in 0..h.bins() {
                rows.push(HistogramRow {
                    t: snap.t,
                    coord: c + 1,
                    bin_left: h.bin_edges[b],
                    bin_right: h.bin_edges[b + 1],
                    count_pos: h.counts_pos[b],
                    count_neg: h.counts_neg[b],
                });
            }
        }
    }
    rows
}

pub fn sweep_rows(report: &SweepReport) -> Vec<SweepRow> {
    report
        .points
        .iter()
        .map(|p| SweepRow {
            u: p.u,
            w1: p.w1,
            w2: p.w2,
            err: p.error,
            ci_lo: p.ci_lo,
            ci_hi: p.ci_hi,
        })
        .collect()
}

fn write_rows<T: Serialize, W: Write>(rows: &[T], header: &[&str], format: ExportFormat, mut out: W) -> Result<()> {
    match format {
        ExportFormat::Csv => {
            let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
            w.write_record(header)?;
            for row in rows {
                w.serialize(row)?;
            }
            w.flush()?;
        }
        ExportFormat::Json => {
            serde_json::to_writer_pretty(&mut out, rows)?;
            writeln!(out)?;
        }
    }
    Ok(())
}

/// Rows `t,coord,bin_left,bin_right,count_pos,count_neg`.
pub fn export_histograms<W: Write>(series: &DistributionSeries, format: ExportFormat, out: W) -> Result<()> {
    write_rows(&histogram_rows(series), &HISTOGRAM_HEADER, format, out)
}

/// Rows `U,W1,W2,err,ci_lo,ci_hi`.
pub fn export_sweep<W: Write>(report: &SweepReport, format: ExportFormat, out: W) -> Result<()> {
    write_rows(&sweep_rows(report), &SWEEP_HEADER, format, out)
}
