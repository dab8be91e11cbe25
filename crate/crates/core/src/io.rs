//! Run configuration, result tables, manifests and SVG plots.

use crate::conventions::ledger_json;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

/// Version of the run-configuration and manifest schema.
pub const RUN_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    KernelCheck,
    Solve,
    Fit,
    PCheck,
    DerivativeCheck,
    Newton,
    OracleCompare,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::KernelCheck,
        Command::Solve,
        Command::Fit,
        Command::PCheck,
        Command::DerivativeCheck,
        Command::Newton,
        Command::OracleCompare,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::KernelCheck => "kernel-check",
            Command::Solve => "solve",
            Command::Fit => "fit",
            Command::PCheck => "p-check",
            Command::DerivativeCheck => "derivative-check",
            Command::Newton => "newton",
            Command::OracleCompare => "oracle-compare",
        }
    }
}

/// Fully resolved settings of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub command: Command,
    /// Input configuration file; built-in defaults when absent.
    pub config: Option<PathBuf>,
    pub out: PathBuf,
    pub tolerances: BTreeMap<String, f64>,
    /// Grid spacings, coarse to fine.
    pub resolutions: Vec<f64>,
    pub seed: u64,
    pub single_thread: bool,
}

impl RunConfig {
    /// Applies `NAME=VALUE` overrides; names must already be known.
    pub fn override_tolerances(&mut self, pairs: &[String]) -> Result<()> {
        for pair in pairs {
            let (name, value) = pair
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("--tol expects NAME=VALUE, got `{pair}`")))?;
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| Error::InvalidConfig(format!("tolerance `{name}`: `{value}` is not a number")))?;
            match self.tolerances.get_mut(name.trim()) {
                Some(slot) => *slot = value,
                None => {
                    let known: Vec<&str> = self.tolerances.keys().map(String::as_str).collect();
                    return Err(Error::InvalidConfig(format!(
                        "unknown tolerance `{name}` for {} (known: {})",
                        self.command.name(),
                        known.join(", ")
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn tolerance(&self, name: &str) -> f64 {
        self.tolerances[name]
    }
}

/// Parses a comma-separated resolution ladder; entries are spacings `h` or
/// reciprocals written `1/N`.
pub fn parse_resolutions(text: &str) -> Result<Vec<f64>> {
    let out: Vec<f64> = text
        .split(',')
        .map(|t| {
            let t = t.trim();
            let v = match t.strip_prefix("1/") {
                Some(n) => n.parse::<f64>().map(|n| 1.0 / n),
                None => t.parse::<f64>(),
            };
            match v {
                Ok(h) if h > 0.0 && h.is_finite() => Ok(h),
                _ => Err(Error::InvalidConfig(format!("resolution `{t}` is not a positive spacing"))),
            }
        })
        .collect::<Result<_>>()?;
    if out.is_empty() {
        return Err(Error::InvalidConfig("empty resolution ladder".into()));
    }
    Ok(out)
}

/// Hex SHA-256 of the canonical convention-ledger JSON.
pub fn ledger_sha256() -> String {
    let digest = Sha256::digest(ledger_json().as_bytes());
    digest.iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Formats a float with the shortest representation that round-trips.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:e}")
}

/// A CSV table held in memory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Self {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: vec![],
        }
    }

    pub fn push(&mut self, row: Vec<String>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::InvalidArgument(format!("row of {} cells for {} columns", row.len(), self.header.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(e.to_string());
        w.write_record(&self.header).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv_string()?)?;
        Ok(())
    }
}

/// Outcome of one checked assertion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssertionResult {
    pub name: String,
    pub passed: bool,
    pub value: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl AssertionResult {
    /// Passes when `value ≤ tolerance`.
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value <= tolerance,
            value,
            tolerance,
            detail: String::new(),
        }
    }

    /// Passes when `value ≥ tolerance`.
    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Self {
            name: name.into(),
            passed: value >= tolerance,
            value,
            tolerance,
            detail: String::new(),
        }
    }

    pub fn with_detail(mut self, detail: impl Into<String>) -> Self {
        self.detail = detail.into();
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub run: RunConfig,
    /// The resolved input configuration (built-in or read from file).
    pub input: serde_json::Value,
    pub code_version: String,
    pub ledger_sha256: String,
    pub wall_time_s: f64,
    pub assertions: Vec<AssertionResult>,
    /// Files written, relative to the output directory.
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(run: RunConfig, input: serde_json::Value) -> Self {
        Self {
            schema_version: RUN_SCHEMA_VERSION,
            run,
            input,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            ledger_sha256: ledger_sha256(),
            wall_time_s: 0.0,
            assertions: vec![],
            outputs: vec![],
        }
    }

    pub fn all_passed(&self) -> bool {
        self.assertions.iter().all(|a| a.passed)
    }

    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}

/// One named polyline of a line plot.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// SVG line plot with optional logarithmic axes. Non-positive values are
/// dropped on log axes.
pub fn svg_line_plot(title: &str, x_label: &str, y_label: &str, series: &[Series], log_x: bool, log_y: bool) -> String {
    let (w, h, margin) = (640.0, 420.0, 60.0);
    let tx = |x: f64| if log_x { x.log10() } else { x };
    let ty = |y: f64| if log_y { y.log10() } else { y };
    let keep = |&(x, y): &(f64, f64)| (!log_x || x > 0.0) && (!log_y || y > 0.0) && x.is_finite() && y.is_finite();
    let pts: Vec<(f64, f64)> = series.iter().flat_map(|s| s.points.iter().copied().filter(keep)).map(|(x, y)| (tx(x), ty(y))).collect();
    let (mut x0, mut x1, mut y0, mut y1) = pts.iter().fold((f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY), |a, p| {
        (a.0.min(p.0), a.1.max(p.0), a.2.min(p.1), a.3.max(p.1))
    });
    if pts.is_empty() {
        (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
    }
    if x1 - x0 <= 0.0 {
        (x0, x1) = (x0 - 0.5, x1 + 0.5);
    }
    if y1 - y0 <= 0.0 {
        (y0, y1) = (y0 - 0.5, y1 + 0.5);
    }
    let px = |x: f64| margin + (x - x0) / (x1 - x0) * (w - 2.0 * margin);
    let py = |y: f64| h - margin - (y - y0) / (y1 - y0) * (h - 2.0 * margin);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#);
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="24" text-anchor="middle" font-size="16">{}</text>"#, w / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<rect x="{margin}" y="{margin}" width="{}" height="{}" fill="none" stroke="black"/>"#,
        w - 2.0 * margin,
        h - 2.0 * margin
    );
    let axis = |v: f64, log: bool| if log { format!("1e{v:.2}") } else { format!("{v:.3e}") };
    let _ = writeln!(s, r#"<text x="{margin}" y="{}" font-size="11">{}</text>"#, h - margin + 16.0, axis(x0, log_x));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, w - margin, h - margin + 16.0, axis(x1, log_x));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, margin - 4.0, h - margin, axis(y0, log_y));
    let _ = writeln!(s, r#"<text x="{}" y="{}" font-size="11" text-anchor="end">{}</text>"#, margin - 4.0, margin + 10.0, axis(y1, log_y));
    let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle" font-size="13">{}</text>"#, w / 2.0, h - 16.0, escape(x_label));
    let _ = writeln!(
        s,
        r#"<text x="16" y="{}" text-anchor="middle" font-size="13" transform="rotate(-90 16 {})">{}</text>"#,
        h / 2.0,
        h / 2.0,
        escape(y_label)
    );
    for (k, ser) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let coords: Vec<String> = ser
            .points
            .iter()
            .copied()
            .filter(keep)
            .map(|(x, y)| format!("{:.2},{:.2}", px(tx(x)), py(ty(y))))
            .collect();
        let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{}"/>"#, coords.join(" "));
        for c in &coords {
            let (cx, cy) = c.split_once(',').expect("formatted pair");
            let _ = writeln!(s, r#"<circle cx="{cx}" cy="{cy}" r="3" fill="{color}"/>"#);
        }
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" font-size="12" fill="{color}">{}</text>"#,
            w - margin - 150.0,
            margin + 16.0 + 15.0 * k as f64,
            escape(&ser.name)
        );
    }
    s.push_str("</svg>\n");
    s
}

/// SVG heatmap of a row-major `nx × ny` array (row `j` at the bottom for
/// `j = 0`); NaN cells are left blank.
pub fn svg_heatmap(title: &str, values: &[f64], nx: usize, ny: usize) -> Result<String> {
    if values.len() != nx * ny || nx == 0 || ny == 0 {
        return Err(Error::InvalidArgument(format!("{} values for a {nx} × {ny} heatmap", values.len())));
    }
    let (lo, hi) = values
        .iter()
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |a, &v| (a.0.min(v), a.1.max(v)));
    let span = if hi > lo { hi - lo } else { 1.0 };
    let cell = (480.0 / nx.max(ny) as f64).max(1.0);
    let (w, h) = (cell * nx as f64 + 20.0, cell * ny as f64 + 50.0);
    let mut s = String::new();
    let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}">"#);
    let _ = writeln!(s, r#"<text x="10" y="20" font-size="14">{} [{lo:.3e}, {hi:.3e}]</text>"#, escape(title));
    for j in 0..ny {
        for i in 0..nx {
            let v = values[j * nx + i];
            if !v.is_finite() {
                continue;
            }
            let t = (v - lo) / span;
            let (r, g, b) = (255.0 * t, 255.0 * (1.0 - (2.0 * t - 1.0).abs()), 255.0 * (1.0 - t));
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{cell:.2}" height="{cell:.2}" fill="rgb({},{},{})"/>"#,
                10.0 + cell * i as f64,
                40.0 + cell * (ny - 1 - j) as f64,
                r as u8,
                g as u8,
                b as u8
            );
        }
    }
    s.push_str("</svg>\n");
    Ok(s)
}

fn escape(t: &str) -> String {
    t.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
