//! Text formats for point patterns, posterior draws and two-column curves.
//!
//! Pattern CSV:
//!
//! ```text
//! # window 0 1 0 1
//! x,y
//! 1.2500000000000000e-1,7.5000000000000000e-1
//! ```
//!
//! Coordinates are written with 17 significant digits, so a write/read round trip
//! reproduces every `f64` exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::abc::PosteriorSamples;
use crate::error::{Error, Result};
use crate::model::ModelKind;
use crate::pattern::{Point, PointPattern, Window};

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, msg: msg.into() }
}

fn parse_f64(tok: &str, line: usize, what: &str) -> Result<f64> {
    let v: f64 = tok.trim().parse().map_err(|_| parse_err(line, format!("{what}: cannot parse {:?} as a number", tok.trim())))?;
    if !v.is_finite() {
        return Err(parse_err(line, format!("{what}: {v} is not finite")));
    }
    Ok(v)
}

/// Parses the pattern CSV format. Blank lines after the header are ignored.
/// Points outside the window are reported together by line number.
pub fn parse_pattern(text: &str) -> Result<PointPattern> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let fields: Vec<&str> = first.strip_prefix('#').map(|s| s.split_whitespace().collect()).unwrap_or_default();
    if fields.len() != 5 || fields[0] != "window" {
        return Err(parse_err(ln, "expected `# window x_min x_max y_min y_max`"));
    }
    let c: Vec<f64> = fields[1..].iter().map(|t| parse_f64(t, ln, "window")).collect::<Result<_>>()?;
    let window = Window::new(c[0], c[1], c[2], c[3]).map_err(|e| parse_err(ln, e.to_string()))?;

    match lines.next() {
        Some((_, "x,y")) => {}
        Some((ln, _)) => return Err(parse_err(ln, "expected header `x,y`")),
        None => return Err(parse_err(2, "missing header `x,y`")),
    }

    let mut points = Vec::new();
    let mut outside = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let (xs, ys) = line.split_once(',').ok_or_else(|| parse_err(ln, "expected two comma-separated values"))?;
        if ys.contains(',') {
            return Err(parse_err(ln, "expected two comma-separated values"));
        }
        let p = Point::new(parse_f64(xs, ln, "x")?, parse_f64(ys, ln, "y")?);
        if !window.contains(p) {
            outside.push(ln);
        }
        points.push(p);
    }
    if !outside.is_empty() {
        return Err(Error::RowsOutsideWindow { count: outside.len(), rows: outside });
    }
    PointPattern::new(points, window)
}

pub fn read_pattern(path: impl AsRef<Path>) -> Result<PointPattern> {
    parse_pattern(&fs::read_to_string(path)?)
}

pub fn format_pattern(p: &PointPattern) -> String {
    let w = p.window();
    let mut s = format!("# window {} {} {} {}\nx,y\n", w.x_min(), w.x_max(), w.y_min(), w.y_max());
    for q in p.points() {
        let _ = writeln!(s, "{:.16e},{:.16e}", q.x, q.y);
    }
    s
}

pub fn write_pattern(path: impl AsRef<Path>, p: &PointPattern) -> Result<()> {
    Ok(fs::write(path, format_pattern(p))?)
}

/// Posterior CSV: a `# model <json>` line naming the family and its fixed parameters,
/// then one row per retained draw with the natural-scale parameters and `sim_count`.
pub fn format_posterior(samples: &PosteriorSamples) -> String {
    let kind = serde_json::to_string(&samples.kind).expect("model kind serializes");
    let mut s = format!("# model {kind}\n{},sim_count\n", samples.param_names.join(","));
    for (row, count) in samples.draws.iter().zip(&samples.sim_counts) {
        for v in row {
            let _ = write!(s, "{v:.16e},");
        }
        let _ = writeln!(s, "{count}");
    }
    s
}

/// Natural-scale draws and their simulation counts read back from a posterior CSV.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorTable {
    pub kind: ModelKind,
    pub param_names: Vec<String>,
    pub draws: Vec<Vec<f64>>,
    pub sim_counts: Vec<usize>,
}

impl PosteriorTable {
    /// Wraps the table as samples usable for posterior prediction; diagnostics that
    /// the CSV does not carry are left empty.
    pub fn into_samples(self) -> PosteriorSamples {
        let n = self.draws.len();
        PosteriorSamples {
            kind: self.kind,
            param_names: self.param_names,
            draws: self.draws,
            sim_counts: self.sim_counts,
            n_points: vec![None; n],
            acceptance_rate: f64::NAN,
            cap_events: 0,
            epsilon: f64::NAN,
            seed: 0,
            prior: Vec::new(),
        }
    }
}

pub fn parse_posterior(text: &str) -> Result<PosteriorTable> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let json = first.strip_prefix("# model").ok_or_else(|| parse_err(ln, "expected `# model <json>`"))?;
    let kind: ModelKind = serde_json::from_str(json.trim()).map_err(|e| parse_err(ln, e.to_string()))?;
    let names: Vec<&str> = kind.param_names().to_vec();
    let (ln, header) = lines.next().ok_or_else(|| parse_err(2, "missing header"))?;
    let expected = format!("{},sim_count", names.join(","));
    if header != expected {
        return Err(parse_err(ln, format!("expected header `{expected}`")));
    }
    let mut draws = Vec::new();
    let mut sim_counts = Vec::new();
    for (ln, line) in lines {
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split(',').collect();
        if toks.len() != names.len() + 1 {
            return Err(parse_err(ln, format!("expected {} values", names.len() + 1)));
        }
        let row: Vec<f64> =
            toks[..names.len()].iter().zip(&names).map(|(t, n)| parse_f64(t, ln, n)).collect::<Result<_>>()?;
        kind.with_params(&row)?.validate().map_err(|e| parse_err(ln, e.to_string()))?;
        let count = toks[names.len()].trim().parse().map_err(|_| parse_err(ln, "sim_count must be a nonnegative integer"))?;
        draws.push(row);
        sim_counts.push(count);
    }
    Ok(PosteriorTable { kind, param_names: names.iter().map(|s| s.to_string()).collect(), draws, sim_counts })
}

pub fn read_posterior(path: impl AsRef<Path>) -> Result<PosteriorTable> {
    parse_posterior(&fs::read_to_string(path)?)
}

/// Two-column `r,value` table.
pub fn format_curve(curve: &[(f64, f64)]) -> String {
    let mut s = String::from("r,value\n");
    for (r, v) in curve {
        let _ = writeln!(s, "{r:.16e},{v:.16e}");
    }
    s
}
