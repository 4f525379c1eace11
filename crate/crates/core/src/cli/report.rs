//! Aggregation of sweep manifests into one table.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Fail,
    Unreadable,
    NotApplicable,
    Pass,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Fail => "fail",
            Status::Unreadable => "unreadable",
            Status::NotApplicable => "n/a",
            Status::Pass => "pass",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub run: PathBuf,
    pub command: String,
    pub field: String,
    pub family: String,
    pub p: Option<f64>,
    pub gamma: Option<f64>,
    pub limit: Option<f64>,
    pub target: Option<f64>,
    pub relative_gap: Option<f64>,
    pub tolerance: Option<f64>,
    pub status: Status,
}

fn unreadable(run: &Path) -> ReportRow {
    ReportRow {
        run: run.to_path_buf(),
        command: String::new(),
        field: String::new(),
        family: String::new(),
        p: None,
        gamma: None,
        limit: None,
        target: None,
        relative_gap: None,
        tolerance: None,
        status: Status::Unreadable,
    }
}

fn read_row(run: &Path) -> Option<ReportRow> {
    let text = std::fs::read_to_string(run.join("manifest.json")).ok()?;
    let m: Value = serde_json::from_str(&text).ok()?;
    let s = m.get("summary")?;
    let num = |v: &Value, k: &str| v.get(k).and_then(Value::as_f64);
    let text = |v: &Value, k: &str| v.get(k).and_then(Value::as_str).unwrap_or("").to_string();
    let command = text(&m, "command");
    let status = match s.get("pass").and_then(Value::as_bool) {
        Some(true) => Status::Pass,
        Some(false) => Status::Fail,
        None => Status::NotApplicable,
    };
    Some(ReportRow {
        run: run.to_path_buf(),
        command,
        field: text(s, "field"),
        family: text(s, "family"),
        p: num(s, "p"),
        gamma: num(s, "gamma"),
        limit: num(s, "extrapolated_limit"),
        target: num(s, "reference_target"),
        relative_gap: num(s, "relative_gap"),
        tolerance: num(s, "tolerance"),
        status,
    })
}

/// One row per run directory, failures first, input order otherwise.
pub fn collect(runs: &[PathBuf]) -> Vec<ReportRow> {
    let mut rows: Vec<ReportRow> = runs.iter().map(|r| read_row(r).unwrap_or_else(|| unreadable(r))).collect();
    rows.sort_by_key(|r| r.status);
    rows
}

const HEADER: [&str; 10] = ["run", "command", "field", "family", "p", "gamma", "limit", "target", "relative_gap", "status"];

fn cells(r: &ReportRow) -> [String; 10] {
    let f = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    [
        r.run.display().to_string(),
        r.command.clone(),
        r.field.clone(),
        r.family.clone(),
        f(r.p),
        f(r.gamma),
        f(r.limit),
        f(r.target),
        f(r.relative_gap),
        r.status.as_str().to_string(),
    ]
}

pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut s = HEADER.join(",") + "\n";
    for r in rows {
        s += &cells(r).join(",");
        s.push('\n');
    }
    s
}

pub fn render_markdown(rows: &[ReportRow]) -> String {
    let mut s = format!("| {} |\n", HEADER.join(" | "));
    s += &format!("|{}\n", "---|".repeat(HEADER.len()));
    for r in rows {
        s += &format!("| {} |\n", cells(r).join(" | "));
    }
    s
}
