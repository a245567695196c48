//! Negative sum-of-squares surface over the `(ρ₁, ρ)` grid and its text
//! exports.
//!
//! Numbers are written with Rust's shortest round-trip `Display`, so parsing
//! an export reproduces every finite value bit for bit. Output uses `\n` line
//! endings and `.` decimals regardless of locale.

use std::fmt::Write as _;

use crate::error::SurfaceParseError;
use crate::lm::{LmOutcome, LmStatus};

pub const LONG_CSV_HEADER: &str = "rho1,rho,neg_ssr,status";

#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceCell {
    /// `−RSS`, or `None` if no admissible fit was found.
    pub neg_ssr: Option<f64>,
    pub status: LmStatus,
    /// Full solver outcome; absent for missing cells and parsed surfaces.
    pub fit: Option<LmOutcome>,
}

/// Row-major over `rho1_values` (rows) × `rho_values` (columns).
#[derive(Debug, Clone, PartialEq)]
pub struct SsrSurface {
    pub rho1_values: Vec<f64>,
    pub rho_values: Vec<f64>,
    pub cells: Vec<SurfaceCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SurfaceFormat {
    /// One row per cell: `rho1,rho,neg_ssr,status`.
    #[default]
    LongCsv,
    /// Heatmap layout: ρ₁ rows, ρ columns.
    Matrix,
}

impl SsrSurface {
    pub fn cell(&self, i_rho1: usize, j_rho: usize) -> &SurfaceCell {
        &self.cells[i_rho1 * self.rho_values.len() + j_rho]
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// `(i, j)` of the largest `neg_ssr`, first in row-major order on ties.
    pub fn argmax(&self) -> Option<(usize, usize)> {
        let cols = self.rho_values.len();
        let mut best: Option<(usize, f64)> = None;
        for (idx, c) in self.cells.iter().enumerate() {
            if let Some(v) = c.neg_ssr {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((idx, v));
                }
            }
        }
        best.map(|(idx, _)| (idx / cols, idx % cols))
    }

    pub fn export(&self, format: SurfaceFormat) -> String {
        match format {
            SurfaceFormat::LongCsv => self.to_long_csv(),
            SurfaceFormat::Matrix => self.to_matrix(),
        }
    }

    pub fn to_long_csv(&self) -> String {
        let mut out = String::with_capacity(32 * (self.cells.len() + 1));
        out.push_str(LONG_CSV_HEADER);
        out.push('\n');
        for (i, r1) in self.rho1_values.iter().enumerate() {
            for (j, r) in self.rho_values.iter().enumerate() {
                let c = self.cell(i, j);
                let v = c.neg_ssr.map(|v| v.to_string()).unwrap_or_default();
                writeln!(out, "{r1},{r},{v},{}", c.status).unwrap();
            }
        }
        out
    }

    /// First line `rho1\rho,<ρ values>`, then one line per ρ₁ value; missing
    /// cells are empty fields.
    pub fn to_matrix(&self) -> String {
        let mut out = String::from("rho1\\rho");
        for r in &self.rho_values {
            write!(out, ",{r}").unwrap();
        }
        out.push('\n');
        for (i, r1) in self.rho1_values.iter().enumerate() {
            write!(out, "{r1}").unwrap();
            for j in 0..self.rho_values.len() {
                match self.cell(i, j).neg_ssr {
                    Some(v) => write!(out, ",{v}").unwrap(),
                    None => out.push(','),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Parses a [`SurfaceFormat::LongCsv`] document. Solver outcomes are not
    /// part of the format, so `fit` is `None` in every parsed cell.
    pub fn from_long_csv(text: &str) -> Result<Self, SurfaceParseError> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or_default();
        if header != LONG_CSV_HEADER {
            return Err(SurfaceParseError::Header(header.to_string()));
        }
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let line_no = k + 2;
            let bad = |reason: String| SurfaceParseError::Line {
                line: line_no,
                reason,
            };
            let fields: Vec<&str> = line.split(',').collect();
            let [r1, r, v, s] = fields[..] else {
                return Err(bad(format!("expected 4 fields, got {}", fields.len())));
            };
            let num = |f: &str| f.parse::<f64>().map_err(|e| bad(format!("`{f}`: {e}")));
            let neg_ssr = if v.is_empty() { None } else { Some(num(v)?) };
            let status = s.parse::<LmStatus>().map_err(bad)?;
            rows.push((num(r1)?, num(r)?, neg_ssr, status));
        }

        let mut rho1_values: Vec<f64> = Vec::new();
        let mut rho_values: Vec<f64> = Vec::new();
        for &(r1, r, _, _) in &rows {
            if rho1_values.last() != Some(&r1) {
                rho1_values.push(r1);
            }
            if rho1_values.len() == 1 {
                rho_values.push(r);
            }
        }
        if rows.len() != rho1_values.len() * rho_values.len() {
            return Err(SurfaceParseError::NotRectangular);
        }
        let cols = rho_values.len();
        let mut cells = Vec::with_capacity(rows.len());
        for (idx, (r1, r, neg_ssr, status)) in rows.into_iter().enumerate() {
            if r1 != rho1_values[idx / cols] || r != rho_values[idx % cols] {
                return Err(SurfaceParseError::NotRectangular);
            }
            cells.push(SurfaceCell {
                neg_ssr,
                status,
                fit: None,
            });
        }
        Ok(SsrSurface {
            rho1_values,
            rho_values,
            cells,
        })
    }
}
