//! Report rendering: CSV rows, a full JSON document and a plain-text table.

use clfkit_core::metrics::{MetricReport, MetricRow, Rate};
use serde::{Deserialize, Serialize};

pub const CSV_COLUMNS: [&str; 9] = [
    "split",
    "template",
    "n",
    "accuracy",
    "gen_exec",
    "gt_exec",
    "exact",
    "local_coherency",
    "missing_object_ratio",
];

/// One CSV line. Undefined rates (empty denominators) are empty cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvRow {
    pub split: String,
    pub template: String,
    pub n: u64,
    pub accuracy: Option<f64>,
    pub gen_exec: Option<f64>,
    pub gt_exec: Option<f64>,
    pub exact: Option<f64>,
    pub local_coherency: Option<f64>,
    pub missing_object_ratio: Option<f64>,
}

impl From<&MetricRow> for CsvRow {
    fn from(r: &MetricRow) -> Self {
        CsvRow {
            split: r.split.clone(),
            template: r.template.clone(),
            n: r.n,
            accuracy: r.accuracy.value(),
            gen_exec: r.gen_exec.value(),
            gt_exec: r.gt_exec.value(),
            exact: r.exact.value(),
            local_coherency: r.local_coherency.and_then(Rate::value),
            missing_object_ratio: r.missing_object_ratio.value(),
        }
    }
}

pub fn to_csv(report: &MetricReport) -> anyhow::Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in &report.rows {
        w.serialize(CsvRow::from(r))?;
    }
    if report.rows.is_empty() {
        w.write_record(CSV_COLUMNS)?;
    }
    Ok(String::from_utf8(w.into_inner()?)?)
}

pub fn from_csv(text: &str) -> anyhow::Result<Vec<CsvRow>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    Ok(r.deserialize().collect::<Result<_, _>>()?)
}

/// Full report with exact hit and total counts.
pub fn to_json(report: &MetricReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

fn pct(r: Rate) -> String {
    r.value()
        .map_or_else(|| "-".into(), |v| format!("{:.1}", 100.0 * v))
}

/// Split/template rows with GenExec followed by GTExec in brackets, and the
/// missing-object ratio in parentheses.
pub fn render_table(report: &MetricReport) -> String {
    let header = [
        "split",
        "template",
        "n",
        "Acc",
        "GenExec [GTExec]",
        "Exact",
        "LC",
        "Missing",
    ];
    let rows: Vec<[String; 8]> = report
        .rows
        .iter()
        .map(|r| {
            [
                r.split.clone(),
                r.template.clone(),
                r.n.to_string(),
                pct(r.accuracy),
                format!("{} [{}]", pct(r.gen_exec), pct(r.gt_exec)),
                pct(r.exact),
                r.local_coherency.map_or_else(|| "-".into(), pct),
                format!("({})", pct(r.missing_object_ratio)),
            ]
        })
        .collect();
    let mut width = header.map(str::len);
    for row in &rows {
        for (w, c) in width.iter_mut().zip(row) {
            *w = (*w).max(c.len());
        }
    }
    let line = |cells: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cells.iter().zip(width).enumerate() {
            if i > 0 {
                s.push_str("  ");
            }
            s.push_str(&format!("{c:<w$}"));
        }
        s.trim_end().to_string() + "\n"
    };
    let mut out = line(&header.map(String::from));
    for row in &rows {
        out.push_str(&line(row));
    }
    out
}
