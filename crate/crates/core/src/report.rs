//! Report emission: long-format CSV (one row per model and metric), nested
//! JSON, and a fixed-width text table with percentages to one decimal.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::evaluation::MetricReport;

/// `(metric, value)` rows of one report in a fixed order: accuracies by K,
/// recalls by K, then MRR (`None` when not applicable).
pub fn metric_rows(report: &MetricReport) -> Vec<(String, Option<f64>)> {
    let mut rows: Vec<(String, Option<f64>)> = Vec::new();
    rows.extend(report.accuracy.iter().map(|(k, v)| (format!("A@{k}"), Some(*v))));
    rows.extend(report.recall.iter().map(|(k, v)| (format!("R@{k}"), Some(*v))));
    rows.push(("MRR".to_string(), report.mrr));
    rows
}

/// Writes `model,metric,value` rows at full precision; MRR is `NA` when
/// not applicable.
pub fn write_metrics_csv<W: Write>(reports: &[MetricReport], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["model", "metric", "value"])?;
    for r in reports {
        for (metric, value) in metric_rows(r) {
            let value = value.map_or_else(|| "NA".to_string(), |v| v.to_string());
            w.write_record([r.model_id.as_str(), metric.as_str(), value.as_str()])?;
        }
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn metrics_csv_string(reports: &[MetricReport]) -> Result<String> {
    let mut buf = Vec::new();
    write_metrics_csv(reports, &mut buf)?;
    Ok(String::from_utf8(buf).expect("csv output is utf-8"))
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

/// Human-readable table; percentages to one decimal, MRR to three.
pub fn text_table(reports: &[MetricReport]) -> String {
    let Some(first) = reports.first() else {
        return String::new();
    };
    let headers: Vec<String> = metric_rows(first).into_iter().map(|(m, _)| m).collect();
    let width = reports.iter().map(|r| r.model_id.len()).max().unwrap_or(0).max(5);
    let mut out = format!("{:<width$}", "model");
    for h in &headers {
        out.push_str(&format!(" {h:>7}"));
    }
    out.push('\n');
    for r in reports {
        out.push_str(&format!("{:<width$}", r.model_id));
        for (metric, value) in metric_rows(r) {
            let cell = match value {
                None => "n/a".to_string(),
                Some(v) if metric == "MRR" => format!("{v:.3}"),
                Some(v) => format!("{v:.1}"),
            };
            out.push_str(&format!(" {cell:>7}"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    fn report(model: &str, mrr: Option<f64>) -> MetricReport {
        MetricReport {
            model_id: model.into(),
            accuracy: BTreeMap::from([(1, 50.0), (5, 100.0)]),
            recall: BTreeMap::from([(1, 25.0), (5, 87.5)]),
            mrr,
            noun_count: 2,
            pair_count: 4,
            per_noun: Vec::new(),
        }
    }

    #[test]
    fn csv_rows() {
        let s = metrics_csv_string(&[report("lm", Some(0.4375)), report("gen", None)]).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "model,metric,value");
        assert_eq!(lines[1], "lm,A@1,50");
        assert_eq!(lines[4], "lm,R@5,87.5");
        assert_eq!(lines[5], "lm,MRR,0.4375");
        assert_eq!(lines[10], "gen,MRR,NA");
    }

    #[test]
    fn text_rounding() {
        let mut r = report("lm", Some(0.4375));
        r.accuracy.insert(1, 100.0 / 3.0);
        let t = text_table(&[r]);
        assert!(t.contains("33.3"));
        assert!(t.contains("0.438") || t.contains("0.437"));
        assert!(text_table(&[report("gen", None)]).contains("n/a"));
    }
}
