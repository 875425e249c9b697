//! Rendering of jitter reports, comparison tables and error-rate vs. jitter
//! trade-off data.
//!
//! Text output shows percentages with two decimals; JSON and CSV carry the
//! raw fractions so they parse back to identical values.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::analysis::csv_error;
use crate::error::{Error, Result};
use crate::metrics::{JitterReport, PairwiseJitter};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::InvalidArgument(format!("unknown format `{other}`"))),
        }
    }
}

/// Fixed-point rendering. Exact binary ties round half to even.
pub fn format_fixed(value: f64, decimals: usize) -> String {
    format!("{value:.decimals$}")
}

/// A fraction as a percentage with two decimals, e.g. `0.18` -> `18.00%`.
pub fn percent(fraction: f64) -> String {
    format!("{}%", format_fixed(fraction * 100.0, 2))
}

fn csv_writer() -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("utf-8 csv")
}

pub fn render_jitter_report(report: &JitterReport, format: Format) -> String {
    match format {
        Format::Json => serde_json::to_string_pretty(report).expect("report serializes") + "\n",
        Format::Csv => render_report_csv(report),
        Format::Text => render_report_text(report),
    }
}

fn run_name(report: &JitterReport, i: usize) -> String {
    report
        .run_ids
        .get(i)
        .cloned()
        .unwrap_or_else(|| format!("run{i}"))
}

fn render_report_text(report: &JitterReport) -> String {
    let mut out = String::new();
    let scope = match (report.n_examples, report.n_tokens) {
        (_, Some(t)) => format!("{t} tokens"),
        (Some(n), _) => format!("{n} examples"),
        _ => "unknown units".into(),
    };
    let _ = writeln!(out, "jitter report: {} runs over {scope}", report.n_runs);
    let _ = writeln!(out);

    let names: Vec<String> = (0..report.n_runs).map(|i| run_name(report, i)).collect();
    let width = names.iter().map(String::len).max().unwrap_or(3).max(3);
    let _ = writeln!(out, "{:<width$}  {:>8}", "run", "accuracy");
    for (name, acc) in names.iter().zip(&report.accuracy) {
        let _ = writeln!(out, "{name:<width$}  {:>8}", percent(*acc));
    }
    let _ = writeln!(out);

    let pair_width = (2 * width + 3).max(4);
    let _ = writeln!(
        out,
        "{:<pair_width$}  {:>8}  {:>8}  {:>8}",
        "pair", "jitter", "min", "max"
    );
    for p in &report.pairwise {
        let pair = format!("{} - {}", names[p.i], names[p.j]);
        let _ = writeln!(
            out,
            "{pair:<pair_width$}  {:>8}  {:>8}  {:>8}",
            percent(p.jitter),
            percent(p.min_bound),
            percent(p.max_bound)
        );
    }
    let _ = writeln!(
        out,
        "{:<pair_width$}  {:>8}  {:>8}  {:>8}",
        "avg",
        percent(report.jitter),
        percent(report.min_bound),
        percent(report.max_bound)
    );
    let _ = writeln!(out);
    let _ = writeln!(out, "jitter {}", percent(report.jitter));
    let _ = writeln!(out, "min {}", percent(report.min_bound));
    let _ = writeln!(out, "max {}", percent(report.max_bound));
    let _ = writeln!(out, "V {}", percent(report.accuracy_stddev));
    out
}

/// Long-format CSV: `metric,i,j,value`.
fn render_report_csv(report: &JitterReport) -> String {
    let mut w = csv_writer();
    w.write_record(["metric", "i", "j", "value"])
        .expect("in-memory write");
    let mut row = |metric: &str, i: Option<usize>, j: Option<usize>, value: String| {
        let i = i.map(|v| v.to_string()).unwrap_or_default();
        let j = j.map(|v| v.to_string()).unwrap_or_default();
        w.write_record([metric, &i, &j, &value])
            .expect("in-memory write");
    };
    row("n_runs", None, None, report.n_runs.to_string());
    if let Some(n) = report.n_examples {
        row("n_examples", None, None, n.to_string());
    }
    if let Some(n) = report.n_tokens {
        row("n_tokens", None, None, n.to_string());
    }
    for (i, id) in report.run_ids.iter().enumerate() {
        row("run_id", Some(i), None, id.clone());
    }
    for (i, a) in report.accuracy.iter().enumerate() {
        row("accuracy", Some(i), None, a.to_string());
    }
    for p in &report.pairwise {
        row("pairwise", Some(p.i), Some(p.j), p.jitter.to_string());
        row(
            "pair_min_bound",
            Some(p.i),
            Some(p.j),
            p.min_bound.to_string(),
        );
        row(
            "pair_max_bound",
            Some(p.i),
            Some(p.j),
            p.max_bound.to_string(),
        );
    }
    row("jitter", None, None, report.jitter.to_string());
    row("min_bound", None, None, report.min_bound.to_string());
    row("max_bound", None, None, report.max_bound.to_string());
    row(
        "accuracy_stddev",
        None,
        None,
        report.accuracy_stddev.to_string(),
    );
    finish(w)
}

pub fn parse_jitter_report_json(body: &str) -> Result<JitterReport> {
    serde_json::from_str(body).map_err(|e| Error::parse("<report>", e.line(), e.to_string()))
}

pub fn parse_jitter_report_csv(body: &str) -> Result<JitterReport> {
    let bad = |line: usize, m: String| Error::parse("<report>", line, m);
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let mut report = JitterReport {
        n_runs: 0,
        n_examples: None,
        n_tokens: None,
        run_ids: Vec::new(),
        pairwise: Vec::new(),
        jitter: 0.0,
        min_bound: 0.0,
        max_bound: 0.0,
        accuracy: Vec::new(),
        accuracy_stddev: 0.0,
    };
    for record in reader.records() {
        let record = record.map_err(|e| bad(0, e.to_string()))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| record.get(k).unwrap_or("");
        let index = |k: usize| -> Result<usize> {
            field(k)
                .parse()
                .map_err(|_| bad(line, format!("bad index `{}`", field(k))))
        };
        let value = field(3);
        let num = || -> Result<f64> {
            value
                .parse()
                .map_err(|_| bad(line, format!("bad value `{value}`")))
        };
        let count = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| bad(line, format!("bad count `{value}`")))
        };
        match field(0) {
            "n_runs" => report.n_runs = count()?,
            "n_examples" => report.n_examples = Some(count()?),
            "n_tokens" => report.n_tokens = Some(count()?),
            "run_id" => report.run_ids.push(value.to_string()),
            "accuracy" => report.accuracy.push(num()?),
            "pairwise" => report.pairwise.push(PairwiseJitter {
                i: index(1)?,
                j: index(2)?,
                jitter: num()?,
                min_bound: 0.0,
                max_bound: 0.0,
            }),
            "pair_min_bound" | "pair_max_bound" => {
                let (i, j) = (index(1)?, index(2)?);
                let v = num()?;
                let p = report
                    .pairwise
                    .iter_mut()
                    .find(|p| p.i == i && p.j == j)
                    .ok_or_else(|| bad(line, format!("bound for unknown pair ({i}, {j})")))?;
                if field(0) == "pair_min_bound" {
                    p.min_bound = v;
                } else {
                    p.max_bound = v;
                }
            }
            "jitter" => report.jitter = num()?,
            "min_bound" => report.min_bound = num()?,
            "max_bound" => report.max_bound = num()?,
            "accuracy_stddev" => report.accuracy_stddev = num()?,
            other => return Err(bad(line, format!("unknown metric `{other}`"))),
        }
    }
    Ok(report)
}

/// One row of an architecture comparison: dispersion `V` and jitter `J`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub config: String,
    pub accuracy_stddev: f64,
    pub jitter: f64,
}

/// Text table with `V` and `J` columns in percent.
pub fn render_comparison_table(rows: &[ComparisonRow]) -> String {
    let width = rows
        .iter()
        .map(|r| r.config.len())
        .max()
        .unwrap_or(0)
        .max(6);
    let mut out = format!("{:<width$}  {:>6}  {:>6}\n", "config", "V", "J");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>6}  {:>6}",
            r.config,
            format_fixed(r.accuracy_stddev * 100.0, 2),
            format_fixed(r.jitter * 100.0, 2)
        );
    }
    out
}

/// A configuration's position in the error-rate / jitter plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    #[serde(rename = "config")]
    pub config_name: String,
    #[serde(default, deserialize_with = "empty_as_none")]
    pub group: Option<String>,
    pub error_rate: f64,
    pub jitter: f64,
}

fn empty_as_none<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<String>, D::Error> {
    let v: Option<String> = Option::deserialize(d)?;
    Ok(v.filter(|s| !s.is_empty()))
}

impl TradeoffPoint {
    /// No worse on both axes and strictly better on one.
    pub fn dominates(&self, other: &TradeoffPoint) -> bool {
        self.error_rate <= other.error_rate
            && self.jitter <= other.jitter
            && (self.error_rate < other.error_rate || self.jitter < other.jitter)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TradeoffRow {
    pub config: String,
    pub group: String,
    pub error_rate: f64,
    pub jitter: f64,
    pub dominated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TradeoffFormat {
    Csv,
    Json,
}

/// Rows sorted by `(group, error_rate)` with the Pareto-dominated flag.
pub fn tradeoff_rows(points: &[TradeoffPoint]) -> Result<Vec<TradeoffRow>> {
    if points.is_empty() {
        return Err(Error::EmptyInput);
    }
    for p in points {
        if !(0.0..=1.0).contains(&p.error_rate) || !(0.0..=1.0).contains(&p.jitter) {
            return Err(Error::InvalidArgument(format!(
                "point `{}` has a rate outside [0, 1]",
                p.config_name
            )));
        }
    }
    let mut rows: Vec<TradeoffRow> = points
        .iter()
        .map(|p| TradeoffRow {
            config: p.config_name.clone(),
            group: p.group.clone().unwrap_or_default(),
            error_rate: p.error_rate,
            jitter: p.jitter,
            dominated: points.iter().any(|q| q.dominates(p)),
        })
        .collect();
    rows.sort_by(|a, b| {
        a.group
            .cmp(&b.group)
            .then(a.error_rate.total_cmp(&b.error_rate))
            .then(a.jitter.total_cmp(&b.jitter))
            .then(a.config.cmp(&b.config))
    });
    Ok(rows)
}

pub fn emit_tradeoff(points: &[TradeoffPoint], format: TradeoffFormat) -> Result<String> {
    let rows = tradeoff_rows(points)?;
    Ok(match format {
        TradeoffFormat::Json => serde_json::to_string_pretty(&rows).expect("rows serialize") + "\n",
        TradeoffFormat::Csv => {
            let mut w = csv_writer();
            for row in &rows {
                w.serialize(row).expect("in-memory write");
            }
            finish(w)
        }
    })
}

pub fn parse_tradeoff_csv(body: &str) -> Result<Vec<TradeoffRow>> {
    csv::Reader::from_reader(body.as_bytes())
        .deserialize()
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(|e| Error::parse("<tradeoff>", 0, e.to_string()))
}

/// Reads `config,group,error_rate,jitter` CSV; `group` may be empty.
pub fn read_tradeoff_csv(path: impl AsRef<Path>) -> Result<Vec<TradeoffPoint>> {
    let path = path.as_ref();
    let mut reader = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    reader
        .deserialize()
        .map(|row| row.map_err(|e| csv_error(path, e)))
        .collect()
}
