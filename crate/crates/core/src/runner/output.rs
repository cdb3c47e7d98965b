use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Result, RunError};
use crate::Scheme;

/// One scheme evaluated at one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub scheme: Scheme,
    pub n: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(rename = "K_a")]
    pub k_a: usize,
    #[serde(rename = "N")]
    pub neighbors: usize,
    pub ee_u: f64,
    pub ee_d: f64,
    pub ee_m: f64,
    pub energy_compute_j: f64,
    pub energy_comm_j: f64,
    pub energy_total_j: f64,
    pub carbon_comm_g: f64,
    pub carbon_compute_g: f64,
    pub carbon_total_g: f64,
    /// Final validation loss; empty for closed-form rows.
    pub loss_final: Option<f64>,
    /// Whether the target loss was reached; empty for closed-form rows.
    pub target_reached: Option<bool>,
    pub kg_per_year: f64,
}

const HEADER: [&str; 17] = [
    "scheme",
    "n",
    "K",
    "K_a",
    "N",
    "ee_u",
    "ee_d",
    "ee_m",
    "energy_compute_j",
    "energy_comm_j",
    "energy_total_j",
    "carbon_comm_g",
    "carbon_compute_g",
    "carbon_total_g",
    "loss_final",
    "target_reached",
    "kg_per_year",
];

/// Rounds to `digits` significant digits (decimal), via the shortest
/// representation of the rounded scientific form.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    s.parse().unwrap_or(x)
}

fn sig6(x: f64) -> String {
    round_sig(x, 6).to_string()
}

impl ResultRow {
    /// The row as it reads back after emission.
    pub fn rounded(&self) -> Self {
        let r = |x: f64| round_sig(x, 6);
        Self {
            ee_u: r(self.ee_u),
            ee_d: r(self.ee_d),
            ee_m: r(self.ee_m),
            energy_compute_j: r(self.energy_compute_j),
            energy_comm_j: r(self.energy_comm_j),
            energy_total_j: r(self.energy_total_j),
            carbon_comm_g: r(self.carbon_comm_g),
            carbon_compute_g: r(self.carbon_compute_g),
            carbon_total_g: r(self.carbon_total_g),
            loss_final: self.loss_final.map(r),
            kg_per_year: r(self.kg_per_year),
            ..self.clone()
        }
    }

    fn record(&self) -> [String; 17] {
        [
            self.scheme.to_string(),
            self.n.to_string(),
            self.k.to_string(),
            self.k_a.to_string(),
            self.neighbors.to_string(),
            sig6(self.ee_u),
            sig6(self.ee_d),
            sig6(self.ee_m),
            sig6(self.energy_compute_j),
            sig6(self.energy_comm_j),
            sig6(self.energy_total_j),
            sig6(self.carbon_comm_g),
            sig6(self.carbon_compute_g),
            sig6(self.carbon_total_g),
            self.loss_final.map(sig6).unwrap_or_default(),
            self.target_reached.map(|b| b.to_string()).unwrap_or_default(),
            sig6(self.kg_per_year),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Csv,
    Jsonl,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(format!("unknown format `{s}` (expected csv or jsonl)")),
        }
    }
}

/// CSV with a fixed header; floats at 6 significant digits.
pub fn write_csv<W: Write>(rows: &[ResultRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line, floats at 6 significant digits.
pub fn write_jsonl<W: Write>(rows: &[ResultRow], mut out: W) -> Result<()> {
    for row in rows {
        serde_json::to_writer(&mut out, &row.rounded())
            .map_err(|e| RunError::Output(e.to_string()))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `rows` to `path`.
pub fn emit_results(rows: &[ResultRow], format: Format, path: impl AsRef<Path>) -> Result<()> {
    if rows.is_empty() {
        return Err(RunError::Output("no rows to write".into()));
    }
    let path = path.as_ref();
    let file = File::create(path)
        .map_err(|e| RunError::Output(format!("cannot write {}: {e}", path.display())))?;
    let out = BufWriter::new(file);
    match format {
        Format::Csv => write_csv(rows, out),
        Format::Jsonl => write_jsonl(rows, out),
    }
}

/// Reads rows written by [`write_csv`].
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<ResultRow>> {
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    if !header.iter().eq(HEADER) {
        return Err(RunError::Output(format!("unexpected CSV header: {header:?}")));
    }
    r.deserialize().map(|row| row.map_err(RunError::from)).collect()
}
