//! Tabular output.
//!
//! CSV files start with a single `# {json}` metadata line, followed by the
//! data rows, a `# summary` marker and `name,value` summary rows. The JSON
//! format carries the same three parts. Wall time only ever appears in the
//! metadata, so reruns with the same seed differ in that line alone.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub command: String,
    /// Column names; the first names the label column.
    pub columns: Vec<String>,
    pub rows: Vec<Row>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Output {
    pub metadata: Value,
    pub table: Table,
    pub summary: Vec<(String, f64)>,
}

impl Table {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Table {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, label: impl ToString, values: Vec<f64>) {
        self.rows.push(Row {
            label: label.to_string(),
            values,
        });
    }

    fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().skip(1).position(|c| c == name)
    }

    fn values(&self, name: &str) -> impl Iterator<Item = f64> + '_ {
        let idx = self.column(name);
        self.rows
            .iter()
            .filter_map(move |r| idx.map(|i| r.values[i]))
    }
}

fn max_abs(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |m, v| m.max(v.abs()))
}

fn sum(it: impl Iterator<Item = f64>) -> f64 {
    it.fold(0.0, |s, v| s + v)
}

/// Label as an integer `j`, if it is one.
fn j_of(row: &Row) -> Option<f64> {
    row.label.parse::<u64>().ok().map(|j| j as f64)
}

/// Summary rows, computed from the table alone so that a re-read file
/// reproduces them exactly.
pub fn summarize(table: &Table) -> Vec<(String, f64)> {
    let mut out = Vec::new();
    match table.command.as_str() {
        "empirical-hist" => {
            out.push(("total".into(), sum(table.values("E_jN"))));
            let col = table.column("E_jN").unwrap_or(0);
            out.push((
                "sum_j_E_j".into(),
                sum(table
                    .rows
                    .iter()
                    .filter_map(|r| j_of(r).map(|j| j * r.values[col]))),
            ));
        }
        "limit-hist" => {
            out.push(("total".into(), sum(table.values("estimate"))));
            let col = table.column("estimate").unwrap_or(0);
            out.push((
                "sum_j_E_j".into(),
                sum(table
                    .rows
                    .iter()
                    .filter_map(|r| j_of(r).map(|j| j * r.values[col]))),
            ));
            out.push((
                "sum_j2_E_j".into(),
                sum(table
                    .rows
                    .iter()
                    .filter_map(|r| j_of(r).map(|j| j * j * r.values[col]))),
            ));
        }
        "compare" => {
            let limit = table.column("limit").unwrap_or(0);
            let poisson = table.column("poisson").unwrap_or(0);
            for (i, name) in table.columns.iter().enumerate().skip(1) {
                if let Some(n) = name.strip_prefix("empirical_N=") {
                    let c = i - 1;
                    out.push((
                        format!("max_dev_limit_N={n}"),
                        max_abs(table.rows.iter().map(|r| r.values[c] - r.values[limit])),
                    ));
                    out.push((
                        format!("max_dev_poisson_N={n}"),
                        max_abs(table.rows.iter().map(|r| r.values[c] - r.values[poisson])),
                    ));
                }
            }
        }
        "second-moment" => {
            out.push((
                "max_abs_deviation".into(),
                max_abs(table.values("deviation")),
            ));
        }
        "void" | "horocycle" => {
            out.push(("max_abs_diff".into(), max_abs(table.values("abs_diff"))));
            out.push((
                "min_abs_diff".into(),
                table.values("abs_diff").fold(f64::INFINITY, f64::min),
            ));
        }
        "minkowski" => {
            let v = table.column("value").unwrap_or(0);
            let get = |label: &str| {
                table
                    .rows
                    .iter()
                    .find(|r| r.label == label)
                    .map(|r| r.values[v])
            };
            if let (Some(c), Some(u)) = (get("conditional"), get("unconditional")) {
                out.push(("conditional_minus_unconditional".into(), c - u));
            }
        }
        _ => {}
    }
    out
}

pub fn render_csv(out: &Output) -> String {
    let mut s = String::new();
    writeln!(s, "# {}", out.metadata).unwrap();
    writeln!(s, "{}", out.table.columns.join(",")).unwrap();
    for r in &out.table.rows {
        s.push_str(&r.label);
        for v in &r.values {
            write!(s, ",{v}").unwrap();
        }
        s.push('\n');
    }
    s.push_str("# summary\nname,value\n");
    for (name, v) in &out.summary {
        writeln!(s, "{name},{v}").unwrap();
    }
    s
}

pub fn render_json(out: &Output) -> String {
    let mut s = serde_json::to_string_pretty(out).expect("output serializes");
    s.push('\n');
    s
}

fn parse_error(msg: impl Into<String>) -> CliError {
    CliError::Config(format!("cannot parse output: {}", msg.into()))
}

/// Reads back a CSV file written by [`render_csv`]. The command name is
/// taken from the metadata line.
pub fn parse_csv(text: &str) -> Result<Output, CliError> {
    let mut lines = text.lines();
    let meta_line = lines.next().ok_or_else(|| parse_error("empty file"))?;
    let metadata: Value = serde_json::from_str(
        meta_line
            .strip_prefix("# ")
            .ok_or_else(|| parse_error("missing metadata line"))?,
    )
    .map_err(|e| parse_error(e.to_string()))?;
    let command = metadata["command"]
        .as_str()
        .ok_or_else(|| parse_error("metadata has no command"))?
        .to_string();
    let columns: Vec<String> = lines
        .next()
        .ok_or_else(|| parse_error("missing column header"))?
        .split(',')
        .map(str::to_string)
        .collect();
    let parse_f = |t: &str| {
        t.parse::<f64>()
            .map_err(|e| parse_error(format!("'{t}': {e}")))
    };
    let mut table = Table {
        command,
        columns,
        rows: Vec::new(),
    };
    for line in lines.by_ref() {
        if line == "# summary" {
            break;
        }
        let mut cells = line.split(',');
        let label = cells.next().unwrap_or_default().to_string();
        let values = cells.map(parse_f).collect::<Result<_, _>>()?;
        table.rows.push(Row { label, values });
    }
    if lines.next() != Some("name,value") {
        return Err(parse_error("missing summary header"));
    }
    let mut summary = Vec::new();
    for line in lines {
        let (name, v) = line.split_once(',').ok_or_else(|| parse_error(line))?;
        summary.push((name.to_string(), parse_f(v)?));
    }
    Ok(Output {
        metadata,
        table,
        summary,
    })
}

pub fn parse_json(text: &str) -> Result<Output, CliError> {
    serde_json::from_str(text).map_err(|e| parse_error(e.to_string()))
}
