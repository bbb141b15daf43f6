//! Result tables, pass/fail checks and their on-disk form.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum GateKind {
    /// `|value − target| ≤ gate`.
    Absolute,
    /// `|value − target| ≤ gate · scale`, for relative gates.
    Relative,
    /// `|value − target| ≤ gate · stderr`.
    Sigmas,
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub target: f64,
    /// `|value − target|`, divided by the standard error for sigma gates.
    pub deviation: f64,
    pub gate: f64,
    pub kind: GateKind,
    pub pass: bool,
}

impl Check {
    pub fn absolute(name: impl Into<String>, value: f64, target: f64, gate: f64) -> Self {
        let deviation = (value - target).abs();
        Check {
            name: name.into(),
            value,
            target,
            deviation,
            gate,
            kind: GateKind::Absolute,
            pass: deviation <= gate,
        }
    }

    pub fn relative(name: impl Into<String>, value: f64, target: f64, gate: f64, scale: f64) -> Self {
        let deviation = (value - target).abs() / scale;
        Check {
            name: name.into(),
            value,
            target,
            deviation,
            gate,
            kind: GateKind::Relative,
            pass: deviation <= gate,
        }
    }

    /// Monte Carlo check; an exact hit passes even when `stderr` is 0.
    pub fn sigmas(name: impl Into<String>, value: f64, target: f64, stderr: f64, gate: f64) -> Self {
        let dev = (value - target).abs();
        let deviation = if dev == 0.0 { 0.0 } else { dev / stderr };
        Check {
            name: name.into(),
            value,
            target,
            deviation,
            gate,
            kind: GateKind::Sigmas,
            pass: deviation <= gate,
        }
    }

    /// A yes/no condition recorded as 1/0 against a target of 1.
    pub fn boolean(name: impl Into<String>, ok: bool) -> Self {
        let value = if ok { 1.0 } else { 0.0 };
        Check::absolute(name, value, 1.0, 0.0)
    }
}

/// A CSV table. Cells are preformatted strings.
#[derive(Debug, Clone)]
pub struct Table {
    pub file: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(file: &str, columns: &[&str]) -> Self {
        Table {
            file: file.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Shortest decimal form that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

#[derive(Debug, Clone, Default)]
pub struct Report {
    pub subcommand: String,
    pub tables: Vec<Table>,
    pub checks: Vec<Check>,
    /// Lines printed to stdout after the run.
    pub notes: Vec<String>,
}

impl Report {
    pub fn new(subcommand: &str) -> Self {
        Report { subcommand: subcommand.to_string(), ..Default::default() }
    }

    pub fn pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn merge(&mut self, other: Report) {
        self.tables.extend(other.tables);
        self.checks.extend(other.checks);
        self.notes.extend(other.notes);
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    version: &'a str,
    subcommand: &'a str,
    config: &'a BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stamp: Option<u64>,
    pass: bool,
    checks: &'a [Check],
}

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Writes every table as `<file>` and the summary as `summary.json` under
/// `out`. Each CSV starts with `#` lines naming the version and the settings
/// that produced it; a Unix timestamp is added only when `stamp` is set.
pub fn emit_report(
    report: &Report,
    config: &BTreeMap<String, String>,
    stamp: Option<u64>,
    out: &Path,
) -> io::Result<()> {
    std::fs::create_dir_all(out)?;
    for table in &report.tables {
        let mut s = String::new();
        let _ = writeln!(s, "# rkhs-transform {VERSION}");
        let cfg: Vec<String> = config.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(s, "# config: {}", cfg.join("; "));
        if let Some(t) = stamp {
            let _ = writeln!(s, "# stamp: {t}");
        }
        let _ = writeln!(s, "{}", table.columns.join(","));
        for row in &table.rows {
            let _ = writeln!(s, "{}", row.join(","));
        }
        std::fs::write(out.join(&table.file), s)?;
    }
    let summary = Summary {
        version: VERSION,
        subcommand: &report.subcommand,
        config,
        stamp,
        pass: report.pass(),
        checks: &report.checks,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(io::Error::other)?;
    std::fs::write(out.join("summary.json"), json + "\n")
}
