//! Table rendering of fit statistics in text, CSV and JSON.

use serde::{Deserialize, Serialize};

use crate::model::IntensityClass;
use crate::stats::FitStats;

pub const CSV_HEADER: [&str; 12] = [
    "industry",
    "rho_set",
    "r2",
    "std_error",
    "sigma_outer",
    "sigma_inner",
    "delta",
    "delta1",
    "A",
    "rss",
    "convergence",
    "intensity",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReportFormat {
    #[default]
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReportMeta {
    pub industry_code: String,
    pub rho_set_label: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub meta: ReportMeta,
    pub stats: FitStats,
}

/// Wire form shared by CSV and JSON.
#[derive(Debug, Serialize, Deserialize)]
struct Record {
    industry: String,
    rho_set: String,
    r2: f64,
    std_error: f64,
    #[serde(with = "finite_or_null")]
    sigma_outer: f64,
    #[serde(with = "finite_or_null")]
    sigma_inner: f64,
    delta: f64,
    delta1: f64,
    #[serde(rename = "A")]
    a: f64,
    rss: f64,
    convergence: String,
    intensity: IntensityClass,
}

/// JSON has no infinity; `σ` at `ρ = −1` is written as `null` and read back
/// as `+∞`.
mod finite_or_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

impl From<&ReportRow> for Record {
    fn from(row: &ReportRow) -> Self {
        let s = &row.stats;
        Record {
            industry: row.meta.industry_code.clone(),
            rho_set: row.meta.rho_set_label.clone(),
            r2: s.r_squared,
            std_error: s.std_error,
            sigma_outer: s.sigma_outer,
            sigma_inner: s.sigma_inner,
            delta: s.delta,
            delta1: s.delta1,
            a: s.efficiency_a,
            rss: s.rss,
            convergence: s.convergence.clone(),
            intensity: s.intensity,
        }
    }
}

impl From<Record> for ReportRow {
    fn from(r: Record) -> Self {
        ReportRow {
            meta: ReportMeta {
                industry_code: r.industry,
                rho_set_label: r.rho_set,
            },
            stats: FitStats {
                r_squared: r.r2,
                std_error: r.std_error,
                rss: r.rss,
                sigma_outer: r.sigma_outer,
                sigma_inner: r.sigma_inner,
                delta: r.delta,
                delta1: r.delta1,
                efficiency_a: r.a,
                convergence: r.convergence,
                intensity: r.intensity,
            },
        }
    }
}

pub fn render_report(rows: &[ReportRow], format: ReportFormat) -> String {
    match format {
        ReportFormat::Text => render_text(rows),
        ReportFormat::Csv => render_csv(rows),
        ReportFormat::Json => render_json(rows),
    }
}

/// Parses the output of [`render_report`] with [`ReportFormat::Json`].
pub fn parse_json_report(text: &str) -> Result<Vec<ReportRow>, serde_json::Error> {
    let records: Vec<Record> = serde_json::from_str(text)?;
    Ok(records.into_iter().map(ReportRow::from).collect())
}

fn fixed2(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.2}")
    } else {
        v.to_string()
    }
}

/// `1.40 ≈ 1`: the elasticity with its nearest integer (ties to even), as an
/// annotation only.
fn sigma_cell(sigma: f64) -> String {
    if sigma.is_finite() {
        format!("{sigma:.2} \u{2248} {}", sigma.round_ties_even() as i64)
    } else {
        sigma.to_string()
    }
}

fn render_text(rows: &[ReportRow]) -> String {
    let header = [
        "Industry",
        "Rho_set",
        "R2",
        "StdError",
        "Sigma_outer",
        "Sigma_inner",
        "delta",
        "delta1",
        "A",
        "RSS",
        "Convergence",
        "Intensity",
    ];
    let body: Vec<Vec<String>> = rows
        .iter()
        .map(|row| {
            let s = &row.stats;
            vec![
                row.meta.industry_code.clone(),
                row.meta.rho_set_label.clone(),
                fixed2(s.r_squared),
                fixed2(s.std_error),
                sigma_cell(s.sigma_outer),
                sigma_cell(s.sigma_inner),
                fixed2(s.delta),
                fixed2(s.delta1),
                fixed2(s.efficiency_a),
                fixed2(s.rss),
                s.convergence.clone(),
                s.intensity.label.to_string(),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for line in &body {
        for (w, cell) in widths.iter_mut().zip(line) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let mut push_line = |cells: &mut dyn Iterator<Item = &str>| {
        let parts: Vec<String> = cells
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect();
        out.push_str(parts.join("  ").trim_end());
        out.push('\n');
    };
    push_line(&mut header.iter().copied());
    for line in &body {
        push_line(&mut line.iter().map(String::as_str));
    }
    out
}

fn render_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for row in rows {
        let r = Record::from(row);
        w.write_record([
            r.industry,
            r.rho_set,
            r.r2.to_string(),
            r.std_error.to_string(),
            r.sigma_outer.to_string(),
            r.sigma_inner.to_string(),
            r.delta.to_string(),
            r.delta1.to_string(),
            r.a.to_string(),
            r.rss.to_string(),
            r.convergence,
            r.intensity.label.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

fn render_json(rows: &[ReportRow]) -> String {
    let records: Vec<Record> = rows.iter().map(Record::from).collect();
    let mut s = serde_json::to_string_pretty(&records).expect("records serialize");
    s.push('\n');
    s
}
