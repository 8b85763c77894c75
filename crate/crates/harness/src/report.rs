//! Result emission: JSONL records, CSV tables, and SVG scatter plots.
//!
//! All numeric output uses `.` decimal separators (Rust's `Display` for
//! floats is locale-independent); non-finite values serialize as `null` in
//! JSON and empty cells in CSV.

use std::fmt::Write as _;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// One JSON value in a flat report record.
#[derive(Debug, Clone)]
pub enum JsonValue {
    Str(String),
    Num(f64),
    Int(i64),
    Bool(bool),
}

impl From<&str> for JsonValue {
    fn from(s: &str) -> Self {
        JsonValue::Str(s.to_string())
    }
}

impl From<String> for JsonValue {
    fn from(s: String) -> Self {
        JsonValue::Str(s)
    }
}

impl From<f64> for JsonValue {
    fn from(v: f64) -> Self {
        JsonValue::Num(v)
    }
}

impl From<usize> for JsonValue {
    fn from(v: usize) -> Self {
        JsonValue::Int(v as i64)
    }
}

impl From<bool> for JsonValue {
    fn from(v: bool) -> Self {
        JsonValue::Bool(v)
    }
}

fn escape_json(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out
}

/// Serializes one flat record as a single JSON line.
pub fn json_record(fields: &[(&str, JsonValue)]) -> String {
    let mut out = String::from("{");
    for (i, (key, value)) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        let _ = write!(out, "\"{}\":", escape_json(key));
        match value {
            JsonValue::Str(s) => {
                let _ = write!(out, "\"{}\"", escape_json(s));
            }
            JsonValue::Num(v) if v.is_finite() => {
                let _ = write!(out, "{v}");
            }
            JsonValue::Num(_) => out.push_str("null"),
            JsonValue::Int(v) => {
                let _ = write!(out, "{v}");
            }
            JsonValue::Bool(b) => {
                let _ = write!(out, "{b}");
            }
        }
    }
    out.push('}');
    out
}

/// An in-memory CSV table with a fixed column set.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self { columns: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::Data(format!("no column '{name}' in table ({:?})", self.columns)))
    }

    /// Finite numeric values of a column, skipping empty cells.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        let idx = self.column_index(name)?;
        let mut out = Vec::with_capacity(self.rows.len());
        for row in &self.rows {
            let cell = &row[idx];
            if cell.is_empty() {
                continue;
            }
            let v: f64 = cell
                .parse()
                .map_err(|e| Error::Data(format!("column '{name}' cell '{cell}': {e}")))?;
            if v.is_finite() {
                out.push(v);
            }
        }
        Ok(out)
    }

    /// Paired finite values of two columns (rows where both parse).
    pub fn paired_columns(&self, x: &str, y: &str) -> Result<(Vec<f64>, Vec<f64>)> {
        let xi = self.column_index(x)?;
        let yi = self.column_index(y)?;
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for row in &self.rows {
            let (a, b) = (&row[xi], &row[yi]);
            if a.is_empty() || b.is_empty() {
                continue;
            }
            if let (Ok(a), Ok(b)) = (a.parse::<f64>(), b.parse::<f64>()) {
                if a.is_finite() && b.is_finite() {
                    xs.push(a);
                    ys.push(b);
                }
            }
        }
        Ok((xs, ys))
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)?;
        file.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?;
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Data(format!("{}: empty table", path.display())))?;
        let columns: Vec<String> = header.split(',').map(|c| c.to_string()).collect();
        let mut rows = Vec::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            let row: Vec<String> = line.split(',').map(|c| c.to_string()).collect();
            if row.len() != columns.len() {
                return Err(Error::Data(format!(
                    "{}: row with {} cells in a {}-column table",
                    path.display(),
                    row.len(),
                    columns.len()
                )));
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }
}

/// Renders a minimal scatter plot as standalone SVG markup: axes, min/max
/// tick labels, one circle per point, and a caption.
pub fn svg_scatter(points: &[(f64, f64)], x_label: &str, y_label: &str, caption: &str) -> String {
    const W: f64 = 640.0;
    const H: f64 = 480.0;
    const M: f64 = 64.0;

    let finite: Vec<(f64, f64)> =
        points.iter().copied().filter(|(x, y)| x.is_finite() && y.is_finite()).collect();
    let (mut x_lo, mut x_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut y_lo, mut y_hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &(x, y) in &finite {
        x_lo = x_lo.min(x);
        x_hi = x_hi.max(x);
        y_lo = y_lo.min(y);
        y_hi = y_hi.max(y);
    }
    if finite.is_empty() {
        x_lo = 0.0;
        x_hi = 1.0;
        y_lo = 0.0;
        y_hi = 1.0;
    }
    if x_hi <= x_lo {
        x_hi = x_lo + 1.0;
    }
    if y_hi <= y_lo {
        y_hi = y_lo + 1.0;
    }
    let px = |x: f64| M + (x - x_lo) / (x_hi - x_lo) * (W - 2.0 * M);
    let py = |y: f64| H - M - (y - y_lo) / (y_hi - y_lo) * (H - 2.0 * M);

    let mut svg = String::new();
    let _ = writeln!(svg, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">"#
    );
    let _ = writeln!(svg, r#"<rect width="{W}" height="{H}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<line x1="{M}" y1="{}" x2="{}" y2="{}" stroke="black"/>"#,
        H - M,
        W - M,
        H - M
    );
    let _ = writeln!(svg, r#"<line x1="{M}" y1="{M}" x2="{M}" y2="{}" stroke="black"/>"#, H - M);
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#,
        W / 2.0,
        H - M / 3.0,
        escape_xml(x_label)
    );
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 {} {})">{}</text>"#,
        M / 3.0,
        H / 2.0,
        M / 3.0,
        H / 2.0,
        escape_xml(y_label)
    );
    for (value, at, anchor, is_x) in [
        (x_lo, px(x_lo), "start", true),
        (x_hi, px(x_hi), "end", true),
        (y_lo, py(y_lo), "start", false),
        (y_hi, py(y_hi), "start", false),
    ] {
        if is_x {
            let _ = writeln!(
                svg,
                r#"<text x="{at}" y="{}" text-anchor="{anchor}" font-size="11">{value:.4}</text>"#,
                H - M + 16.0
            );
        } else {
            let _ = writeln!(
                svg,
                r#"<text x="{}" y="{at}" text-anchor="{anchor}" font-size="11">{value:.4}</text>"#,
                4.0
            );
        }
    }
    for &(x, y) in &finite {
        let _ = writeln!(
            svg,
            r#"<circle cx="{:.2}" cy="{:.2}" r="3" fill="steelblue" fill-opacity="0.7"/>"#,
            px(x),
            py(y)
        );
    }
    let _ = writeln!(
        svg,
        r#"<text x="{}" y="{}" text-anchor="middle" font-size="14">{}</text>"#,
        W / 2.0,
        M / 2.0,
        escape_xml(caption)
    );
    svg.push_str("</svg>\n");
    svg
}

fn escape_xml(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut file = File::create(path)?;
    file.write_all(text.as_bytes())?;
    Ok(())
}
