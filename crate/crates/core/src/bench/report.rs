use std::fs::File;
use std::path::Path;

use super::{BenchSummary, TraceRow};
use crate::error::{Error, Result};

fn csv_error(path: &Path) -> impl Fn(csv::Error) -> Error + '_ {
    move |source| Error::Csv {
        path: path.to_path_buf(),
        source,
    }
}

fn create(path: &Path) -> Result<csv::Writer<File>> {
    csv::WriterBuilder::new()
        .has_headers(false)
        .from_path(path)
        .map_err(csv_error(path))
}

/// Header `t,eps,min_visits,rel_dist_log10,statistic,threshold`.
pub fn export_trace_csv(rows: &[TraceRow], path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let err = csv_error(path);
    w.write_record([
        "t",
        "eps",
        "min_visits",
        "rel_dist_log10",
        "statistic",
        "threshold",
    ])
    .map_err(&err)?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.eps.to_string(),
            r.min_visits.to_string(),
            r.rel_dist_log10.to_string(),
            r.statistic.to_string(),
            r.threshold.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Per-checkpoint quantiles of the log relative distance, header `t,q10,q50,q90`.
pub fn export_summary_csv(summary: &BenchSummary, path: &Path) -> Result<()> {
    let mut w = create(path)?;
    let err = csv_error(path);
    w.write_record(["t", "q10", "q50", "q90"]).map_err(&err)?;
    for c in &summary.checkpoints {
        w.write_record([
            c.t.to_string(),
            c.q10.to_string(),
            c.q50.to_string(),
            c.q90.to_string(),
        ])
        .map_err(&err)?;
    }
    w.flush().map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads an exported file back as `(header, rows)`.
pub fn read_csv_matrix(path: &Path) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let err = csv_error(path);
    let mut r = csv::Reader::from_path(path).map_err(&err)?;
    let header = r
        .headers()
        .map_err(&err)?
        .iter()
        .map(str::to_owned)
        .collect();
    let mut rows = Vec::new();
    for record in r.records() {
        let record = record.map_err(&err)?;
        let row = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|e| {
                    Error::Validation(format!("{}: bad number '{field}': {e}", path.display()))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok((header, rows))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::CheckpointQuantiles;

    #[test]
    fn empty_trace_is_header_only() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        export_trace_csv(&[], &path).unwrap();
        assert_eq!(
            std::fs::read_to_string(&path).unwrap(),
            "t,eps,min_visits,rel_dist_log10,statistic,threshold\n"
        );
    }

    #[test]
    fn round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = [
            TraceRow {
                t: 10,
                eps: 0.1,
                min_visits: 2,
                rel_dist_log10: -0.25,
                statistic: 1.5e-3,
                threshold: 12.75,
            },
            TraceRow {
                t: 20,
                eps: 1.0 / 3.0,
                min_visits: 4,
                rel_dist_log10: f64::INFINITY,
                statistic: f64::NAN,
                threshold: 13.0,
            },
        ];
        export_trace_csv(&rows, &path).unwrap();
        let (header, m) = read_csv_matrix(&path).unwrap();
        assert_eq!(header.len(), 6);
        assert_eq!(m[0], vec![10.0, 0.1, 2.0, -0.25, 1.5e-3, 12.75]);
        assert_eq!(m[1][1], 1.0 / 3.0);
        assert_eq!(m[1][3], f64::INFINITY);
        assert!(m[1][4].is_nan());

        let summary = BenchSummary {
            n_runs: 1,
            n_capped: 0,
            n_errors: 0,
            error_rate: 0.0,
            mean_tau: None,
            median_tau: None,
            q10_tau: None,
            q90_tau: None,
            checkpoints: vec![CheckpointQuantiles {
                t: 100,
                n: 3,
                q10: -1.0,
                q50: -0.5,
                q90: 0.0,
            }],
        };
        export_summary_csv(&summary, &path).unwrap();
        let (header, m) = read_csv_matrix(&path).unwrap();
        assert_eq!(header, ["t", "q10", "q50", "q90"]);
        assert_eq!(m, vec![vec![100.0, -1.0, -0.5, 0.0]]);
    }
}
