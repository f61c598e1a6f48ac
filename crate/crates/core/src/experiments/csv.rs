//! Flow trajectories as CSV.

use std::path::Path;

use crate::error::{Error, Result};
use crate::lattice::flow::TrajectoryRow;

pub const CSV_HEADER: &str = "iteration,l2_residual,linf_residual,sup_log_metric";

/// Header plus one row per accepted step, LF line endings, floats in
/// shortest round-trip form.
pub fn trajectory_csv(rows: &[TrajectoryRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{:?},{:?},{:?}\n",
            r.iteration, r.l2_residual, r.linf_residual, r.sup_log_metric
        ));
    }
    out
}

pub fn emit_csv(rows: &[TrajectoryRow], path: &Path) -> Result<()> {
    crate::format::save(path, &trajectory_csv(rows))
}

pub fn parse_csv(text: &str) -> Result<Vec<TrajectoryRow>> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(CSV_HEADER) => {}
        other => {
            return Err(Error::Format(format!(
                "line 1: expected header {CSV_HEADER:?}, found {other:?}"
            )))
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let bad = || Error::Format(format!("line {}: malformed row {line:?}", i + 2));
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 4 {
            return Err(bad());
        }
        let num = |s: &str| s.parse::<f64>().map_err(|_| bad());
        rows.push(TrajectoryRow {
            iteration: f[0].parse().map_err(|_| bad())?,
            l2_residual: num(f[1])?,
            linf_residual: num(f[2])?,
            sup_log_metric: num(f[3])?,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn row(i: usize, a: f64, b: f64, c: f64) -> TrajectoryRow {
        TrajectoryRow {
            iteration: i,
            l2_residual: a,
            linf_residual: b,
            sup_log_metric: c,
        }
    }

    #[test]
    fn empty_and_short() {
        assert_eq!(trajectory_csv(&[]), format!("{CSV_HEADER}\n"));
        let rows = [
            row(0, 1.0, 2.0, 0.0),
            row(1, 0.5, 1e-300, 0.25),
            row(2, 1e-9, f64::INFINITY, 3.5),
        ];
        let text = trajectory_csv(&rows);
        assert_eq!(text.lines().count(), 4);
        assert!(!text.contains('\r'));
        assert_eq!(parse_csv(&text).unwrap(), rows);
    }

    #[test]
    fn writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/t.csv");
        let rows = [row(0, 0.1, 0.2, 0.3)];
        emit_csv(&rows, &path).unwrap();
        assert_eq!(parse_csv(&std::fs::read_to_string(&path).unwrap()).unwrap(), rows);
    }

    proptest! {
        #[test]
        fn round_trip_exact(v in prop::collection::vec((any::<f64>(), any::<f64>(), any::<f64>()), 0..20)) {
            let rows: Vec<TrajectoryRow> = v
                .iter()
                .enumerate()
                .map(|(i, &(a, b, c))| row(i, a.abs(), b.abs(), c))
                .collect();
            let back = parse_csv(&trajectory_csv(&rows)).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (x, y) in back.iter().zip(&rows) {
                prop_assert_eq!(x.iteration, y.iteration);
                for (p, q) in [(x.l2_residual, y.l2_residual), (x.linf_residual, y.linf_residual), (x.sup_log_metric, y.sup_log_metric)] {
                    prop_assert!(p.to_bits() == q.to_bits() || (p.is_nan() && q.is_nan()));
                }
            }
        }
    }
}
