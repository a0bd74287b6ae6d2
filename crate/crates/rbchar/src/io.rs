//! CSV inputs, report JSON and trajectory CSV.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::{BandReport, DetectionReport, StageRecord, Verdict};
use crate::error::{Error, Result};
use crate::frequency::FrequencyRun;
use crate::point_process::{PointPattern, Window};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

fn reader(text: &str) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes())
}

/// Numeric rows; a leading non-numeric row is taken as the header.
fn numeric_table(text: &str, want: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::new();
    let mut cols: Option<Vec<usize>> = None;
    for (i, rec) in reader(text).records().enumerate() {
        let rec = rec?;
        if rec.iter().all(|f| f.is_empty()) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> = rec.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(v) => {
                let idx = cols.get_or_insert_with(|| (0..want.len()).collect());
                let row: Option<Vec<f64>> = idx.iter().map(|&c| v.get(c).copied()).collect();
                let row = row.ok_or_else(|| {
                    Error::Input(format!("row {} has {} fields, expected {}", i + 1, v.len(), want.join(",")))
                })?;
                if row.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Input(format!("non-finite value on row {}", i + 1)));
                }
                rows.push(row);
            }
            Err(_) if rows.is_empty() && cols.is_none() => {
                let names: Vec<String> = rec.iter().map(|f| f.to_ascii_lowercase()).collect();
                let idx: Option<Vec<usize>> = want.iter().map(|w| names.iter().position(|n| n == w)).collect();
                cols = Some(idx.ok_or_else(|| {
                    Error::Input(format!("header {:?} lacks columns {}", names, want.join(",")))
                })?);
            }
            Err(_) => return Err(Error::Input(format!("non-numeric field on row {}", i + 1))),
        }
    }
    if rows.is_empty() {
        return Err(Error::Input("no data rows".into()));
    }
    Ok(rows)
}

fn read_text(path: &Path) -> Result<String> {
    let mut s = String::new();
    fs::File::open(path)
        .map_err(|e| Error::Input(format!("{}: {e}", path.display())))?
        .read_to_string(&mut s)?;
    Ok(s)
}

pub fn parse_series(text: &str) -> Result<Vec<f64>> {
    Ok(numeric_table(text, &["value"])?.into_iter().map(|r| r[0]).collect())
}

/// `x,y,value` rows into (locations, values).
pub fn parse_spatial(text: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    Ok(numeric_table(text, &["x", "y", "value"])?
        .into_iter()
        .map(|r| (vec![r[0], r[1]], r[2]))
        .unzip())
}

/// `x,y,t,value` rows into (locations [x,y,t], values).
pub fn parse_spacetime(text: &str) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    Ok(numeric_table(text, &["x", "y", "t", "value"])?
        .into_iter()
        .map(|r| (vec![r[0], r[1], r[2]], r[3]))
        .unzip())
}

fn parse_window_comment(text: &str) -> Result<Option<Window>> {
    for line in text.lines() {
        let l = line.trim();
        if let Some(rest) = l.strip_prefix('#') {
            let mut it = rest.split_whitespace();
            if it.next() == Some("window") {
                let v: std::result::Result<Vec<f64>, _> = it.map(|s| s.parse::<f64>()).collect();
                let v = v.map_err(|_| Error::Input(format!("bad window line: {l}")))?;
                if v.len() != 4 {
                    return Err(Error::Input(format!("window line needs 4 numbers: {l}")));
                }
                return Window::new(v[0], v[1], v[2], v[3]).map(Some);
            }
        }
    }
    Ok(None)
}

/// Point pattern with `# window x0 x1 y0 y1`. Without it the bounding box is
/// used and the returned flag is true so callers can warn.
pub fn parse_pattern(text: &str) -> Result<(PointPattern, bool)> {
    let pts: Vec<[f64; 2]> = numeric_table(text, &["x", "y"])?.into_iter().map(|r| [r[0], r[1]]).collect();
    match parse_window_comment(text)? {
        Some(w) => Ok((PointPattern::new(w, pts)?, false)),
        None => Ok((PointPattern::new(Window::bounding_box(&pts)?, pts)?, true)),
    }
}

pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    parse_series(&read_text(path)?)
}

pub fn read_spatial(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    parse_spatial(&read_text(path)?)
}

pub fn read_spacetime(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    parse_spacetime(&read_text(path)?)
}

pub fn read_pattern(path: &Path) -> Result<(PointPattern, bool)> {
    parse_pattern(&read_text(path)?)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

pub fn write_series<W: Write>(w: W, values: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["value"])?;
    for v in values {
        out.write_record([fmt(*v)])?;
    }
    out.flush()?;
    Ok(())
}

/// Locations of length 2 write `x,y,value`; length 3 write `x,y,t,value`.
pub fn write_field<W: Write>(w: W, locations: &[Vec<f64>], values: &[f64]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let dim = locations.first().map_or(2, |l| l.len());
    if dim == 3 {
        out.write_record(["x", "y", "t", "value"])?;
    } else {
        out.write_record(["x", "y", "value"])?;
    }
    for (l, v) in locations.iter().zip(values) {
        let mut rec: Vec<String> = l.iter().map(|c| fmt(*c)).collect();
        rec.push(fmt(*v));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_pattern<W: Write>(mut w: W, pattern: &PointPattern) -> Result<()> {
    let win = pattern.window;
    writeln!(w, "# window {} {} {} {}", win.x0, win.x1, win.y0, win.y1)?;
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["x", "y"])?;
    for p in &pattern.points {
        out.write_record([fmt(p[0]), fmt(p[1])])?;
    }
    out.flush()?;
    Ok(())
}

/// Document written by every detector subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDoc {
    pub verdict: Option<Verdict>,
    pub stages: Vec<StageRecord>,
    pub bands: Vec<BandReport>,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub version: String,
}

impl ReportDoc {
    pub fn from_detection(r: &DetectionReport, config: serde_json::Value) -> Self {
        Self {
            verdict: Some(r.verdict),
            stages: r.stages.clone(),
            bands: Vec::new(),
            config,
            seed: r.seed,
            version: VERSION.to_string(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Io(e.to_string()))
    }
}

pub fn write_trajectory_csv<W: Write>(w: W, stages: &[StageRecord]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["j", "s", "c", "y", "post_mean", "post_var"])?;
    for s in stages {
        out.write_record([
            s.j.to_string(),
            fmt(s.s),
            fmt(s.c),
            (s.y as u8).to_string(),
            fmt(s.post_mean),
            fmt(s.post_var),
        ])?;
    }
    out.flush()?;
    Ok(())
}

/// Long format: stage, bin, posterior_mean, posterior_variance.
pub fn write_frequency_csv<W: Write>(w: W, run: &FrequencyRun) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["stage", "bin", "posterior_mean", "posterior_variance"])?;
    for st in &run.trajectory {
        for (b, (m, v)) in st.means.iter().zip(&st.vars).enumerate() {
            out.write_record([st.stage.to_string(), (b + 1).to_string(), fmt(*m), fmt(*v)])?;
        }
    }
    out.flush()?;
    Ok(())
}
