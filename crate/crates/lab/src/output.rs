//! CSV artifacts. Every file has a header row; floats use the shortest
//! representation that round-trips, so identical runs give identical bytes.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{LabError, LabResult};

pub const CONTRACTION_PATHS: &str = "contraction_paths.csv";
pub const CONTRACTION_CURVE: &str = "contraction_curve.csv";
pub const CONTRACTION_SUMMARY: &str = "contraction_summary.csv";
pub const FIT_REPORT: &str = "fit_report.csv";
pub const OBSERVABLES: &str = "observables.csv";
pub const INVARIANT_DISTANCES: &str = "invariant_w1.csv";
pub const STATES: &str = "states.csv";
pub const WEIGHT: &str = "weight.csv";
pub const ASSUMPTIONS: &str = "assumptions.csv";
pub const HEAT_ORACLE: &str = "heat_oracle.csv";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Serialize)]
pub struct PathRow {
    pub time: f64,
    pub path: usize,
    pub l1w_diff: f64,
    pub l1_diff: f64,
    pub mass_1: f64,
    pub mass_2: f64,
}

#[derive(Debug, Serialize)]
pub struct CurveRow {
    pub time: f64,
    pub mean: f64,
    pub stderr: f64,
    pub gap_integral: f64,
}

#[derive(Debug, Serialize)]
pub struct SummaryRow<'a> {
    pub quantity: &'a str,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct FitRow {
    pub model: &'static str,
    pub prefactor: f64,
    /// Decay rate c2 (exponential) or exponent p (polynomial).
    pub parameter: f64,
    pub r_squared: f64,
    pub window_lo: f64,
    pub window_hi: f64,
    pub n_points: usize,
    pub q_star: Option<f64>,
    pub preferred: bool,
}

#[derive(Debug, Serialize)]
pub struct ObservableRow {
    pub path: usize,
    pub initial_id: usize,
    pub time: f64,
    pub mass: f64,
    pub l2: f64,
    pub max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct InvariantDistanceRow {
    pub initial_id: usize,
    pub time: f64,
    pub w1_mass: f64,
    pub w1_l2: f64,
    pub w1_max: f64,
}

#[derive(Debug, Serialize)]
pub struct StateRow {
    pub initial_id: usize,
    pub cell: usize,
    pub x: f64,
    pub rho_mean: f64,
}

#[derive(Debug, Serialize)]
pub struct WeightRow {
    pub cell: usize,
    pub x: f64,
    pub w: f64,
    pub dw: f64,
    pub lapw: f64,
    pub slack1: f64,
    pub slack2: f64,
    pub slack3: f64,
}

#[derive(Debug, Serialize)]
pub struct AssumptionRow<'a> {
    pub name: &'a str,
    pub constant: f64,
    pub passed: bool,
    pub xi1: Option<f64>,
    pub xi2: Option<f64>,
    pub detail: &'a str,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatRow {
    pub time: f64,
    pub sup_norm: f64,
    pub ratio: f64,
    pub predicted: f64,
    pub rel_error: f64,
}

/// Writes `rows` to `dir/name` and returns the path.
pub fn write_csv<R: Serialize>(
    dir: &Path,
    name: &str,
    rows: impl IntoIterator<Item = R>,
) -> LabResult<PathBuf> {
    let path = dir.join(name);
    let file = File::create(&path).map_err(|e| LabError::io(&path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| LabError::io(&path, e))?;
    Ok(path)
}

pub fn ensure_dir(dir: &Path) -> LabResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))
}

/// First differing line of two files; `None` contents mean that file ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LineDiff {
    /// 1-based, header included.
    pub row: usize,
    pub expected: Option<String>,
    pub actual: Option<String>,
}

/// Compares two files line by line.
pub fn first_difference(expected: &Path, actual: &Path) -> LabResult<Option<LineDiff>> {
    let a = std::fs::read(expected).map_err(|e| LabError::io(expected, e))?;
    let b = std::fs::read(actual).map_err(|e| LabError::io(actual, e))?;
    if a == b {
        return Ok(None);
    }
    let mut la = a.split(|&c| c == b'\n');
    let mut lb = b.split(|&c| c == b'\n');
    let mut row = 1;
    loop {
        match (la.next(), lb.next()) {
            (Some(x), Some(y)) if x == y => row += 1,
            (x, y) => {
                let text = |s: Option<&[u8]>| s.map(|v| String::from_utf8_lossy(v).into_owned());
                return Ok(Some(LineDiff {
                    row,
                    expected: text(x),
                    actual: text(y),
                }));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_and_headers_present() {
        let dir = tempfile::tempdir().unwrap();
        let rows = [CurveRow {
            time: 0.1,
            mean: 1.0 / 3.0,
            stderr: 1e-300,
            gap_integral: 0.0,
        }];
        let p = write_csv(dir.path(), "c.csv", &rows).unwrap();
        let text = std::fs::read_to_string(p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("time,mean,stderr,gap_integral"));
        let fields: Vec<f64> = lines
            .next()
            .unwrap()
            .split(',')
            .map(|s| s.parse().unwrap())
            .collect();
        assert_eq!(fields, vec![0.1, 1.0 / 3.0, 1e-300, 0.0]);
    }

    #[test]
    fn difference_reports_first_row() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a");
        let b = dir.path().join("b");
        std::fs::write(&a, "h\n1\n2\n").unwrap();
        std::fs::write(&b, "h\n1\n3\n").unwrap();
        assert_eq!(
            first_difference(&a, &b).unwrap(),
            Some(LineDiff {
                row: 3,
                expected: Some("2".into()),
                actual: Some("3".into())
            })
        );
        assert_eq!(first_difference(&a, &a).unwrap(), None);
        std::fs::write(&b, "h\n1\n").unwrap();
        assert_eq!(first_difference(&a, &b).unwrap().unwrap().row, 3);
    }
}
