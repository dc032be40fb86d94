//! Dataset container, synthetic test functions, and CSV ingestion.

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression dataset: inputs are row vectors of equal dimension.
#[derive(Debug, Clone)]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    source: String,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<f64>, source: impl Into<String>) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::Config(format!(
                "{} inputs vs {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        if inputs.is_empty() {
            return Err(Error::Config("empty dataset".into()));
        }
        let d = inputs[0].len();
        if d == 0 {
            return Err(Error::Config("zero-dimensional inputs".into()));
        }
        for (i, row) in inputs.iter().enumerate() {
            if row.len() != d {
                return Err(Error::Config(format!(
                    "row {i} has {} coordinates, expected {d}",
                    row.len()
                )));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config(format!("non-finite input in row {i}")));
            }
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(Error::Config(format!("non-finite target in row {i}")));
        }
        Ok(Self {
            inputs,
            targets,
            source: source.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.inputs[0].len()
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    /// j-th input coordinate across all rows.
    pub fn column(&self, j: usize) -> Vec<f64> {
        self.inputs.iter().map(|row| row[j]).collect()
    }

    /// Subset by row indices.
    pub fn select(&self, idx: &[usize]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let xs = idx.iter().map(|&i| self.inputs[i].clone()).collect();
        let ys = idx.iter().map(|&i| self.targets[i]).collect();
        (xs, ys)
    }
}

/// Piecewise sine with a sharp frequency and amplitude change at 0.5.
pub fn f0(t: f64) -> f64 {
    if t <= 0.5 {
        (60.0 * PI * t).sin()
    } else {
        3.75 * (16.0 * PI * t).sin()
    }
}

/// Piecewise sine with a mild frequency and amplitude change at 0.5.
pub fn f1(t: f64) -> f64 {
    if t <= 0.5 {
        (16.0 * PI * t).sin()
    } else {
        0.5 * (32.0 * PI * t).sin()
    }
}

/// Separable product surface.
pub fn f2(u: f64, v: f64) -> f64 {
    f0(u) * f1(v)
}

/// Non-separable radial combination.
pub fn f3(u: f64, v: f64) -> f64 {
    (f0(u) * f0(u) + f1(v) * f1(v)).sqrt()
}

/// Grid specification for the synthetic generators.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridSpec {
    /// Inclusive uniform grid lo, lo+step, ..., hi.
    Line { lo: f64, hi: f64, step: f64 },
    /// Uniform mesh of the unit square with the given step per axis.
    Mesh { step: f64 },
}

fn uniform_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || lo >= hi {
        return Err(Error::Config(format!(
            "bad grid: lo={lo}, hi={hi}, step={step}"
        )));
    }
    let n = ((hi - lo) / step).round() as usize;
    if n == 0 {
        return Err(Error::Config("grid has a single point".into()));
    }
    // Tolerate steps that do not exactly divide the range.
    let mut ts: Vec<f64> = (0..=n).map(|i| lo + i as f64 * step).collect();
    let last = ts.len() - 1;
    if (ts[last] - hi).abs() < 1e-9 {
        ts[last] = hi;
    } else if ts[last] > hi {
        ts.pop();
    }
    Ok(ts)
}

/// Evaluate one of the synthetic test functions on a grid.
///
/// `f0`/`f1` take a 1-D grid inside [0, 1]; `f2`/`f3` take a unit-square
/// mesh. Targets are exact function values.
pub fn gen_synthetic(name: &str, grid: &GridSpec) -> Result<Dataset> {
    match (name, grid) {
        ("f0", GridSpec::Line { lo, hi, step }) | ("f1", GridSpec::Line { lo, hi, step }) => {
            if *lo < -1e-12 || *hi > 1.0 + 1e-12 {
                return Err(Error::Config(format!(
                    "{name} is defined on [0, 1], got grid [{lo}, {hi}]"
                )));
            }
            let f = if name == "f0" { f0 } else { f1 };
            let ts = uniform_grid(*lo, *hi, *step)?;
            let inputs: Vec<Vec<f64>> = ts.iter().map(|&t| vec![t]).collect();
            let targets: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
            Dataset::new(inputs, targets, format!("synthetic:{name}"))
        }
        ("f2", GridSpec::Mesh { step }) | ("f3", GridSpec::Mesh { step }) => {
            let f = if name == "f2" { f2 } else { f3 };
            let ts = uniform_grid(0.0, 1.0, *step)?;
            let mut inputs = Vec::with_capacity(ts.len() * ts.len());
            let mut targets = Vec::with_capacity(ts.len() * ts.len());
            for &u in &ts {
                for &v in &ts {
                    inputs.push(vec![u, v]);
                    targets.push(f(u, v));
                }
            }
            Dataset::new(inputs, targets, format!("synthetic:{name}"))
        }
        ("f0", _) | ("f1", _) => Err(Error::Config(format!("{name} needs a line grid"))),
        ("f2", _) | ("f3", _) => Err(Error::Config(format!("{name} needs a mesh grid"))),
        _ => Err(Error::UnknownName(format!("synthetic function {name}"))),
    }
}

/// Column layout of a CSV dataset file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvSchema {
    /// Header `x,y`: one input coordinate, one target.
    Xy,
    /// Header `lat,lon,anomaly`: two input coordinates, one target.
    /// Latitude must lie in [-90, 90]; longitude is wrapped into [0, 360).
    LatLonAnomaly,
}

impl CsvSchema {
    fn header(&self) -> &'static [&'static str] {
        match self {
            CsvSchema::Xy => &["x", "y"],
            CsvSchema::LatLonAnomaly => &["lat", "lon", "anomaly"],
        }
    }
}

fn parse_field(
    path: &Path,
    line: u64,
    name: &str,
    raw: &str,
) -> std::result::Result<f64, Error> {
    raw.trim().parse::<f64>().map_err(|_| Error::ParseRow {
        path: path.to_path_buf(),
        line,
        message: format!("cannot parse {name} value {raw:?}"),
    })
}

fn read_rows(path: &Path, text: &str, schema: CsvSchema) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let head = reader.headers()?.clone();
    let want = schema.header();
    let got: Vec<String> = head.iter().map(|h| h.to_ascii_lowercase()).collect();
    if got != want {
        return Err(Error::Config(format!(
            "{}: expected header {:?}, found {:?}",
            path.display(),
            want.join(","),
            got.join(",")
        )));
    }
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != want.len() {
            return Err(Error::ParseRow {
                path: path.to_path_buf(),
                line,
                message: format!("expected {} fields, found {}", want.len(), record.len()),
            });
        }
        match schema {
            CsvSchema::Xy => {
                inputs.push(vec![parse_field(path, line, "x", &record[0])?]);
                targets.push(parse_field(path, line, "y", &record[1])?);
            }
            CsvSchema::LatLonAnomaly => {
                let lat = parse_field(path, line, "lat", &record[0])?;
                if !(-90.0..=90.0).contains(&lat) {
                    return Err(Error::ParseRow {
                        path: path.to_path_buf(),
                        line,
                        message: format!("latitude {lat} outside [-90, 90]"),
                    });
                }
                let lon = parse_field(path, line, "lon", &record[1])?.rem_euclid(360.0);
                inputs.push(vec![lat, lon]);
                targets.push(parse_field(path, line, "anomaly", &record[2])?);
            }
        }
    }
    Dataset::new(inputs, targets, path.display().to_string())
}

/// Load a dataset from a CSV file with the given column schema.
pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_rows(path, &text, schema)
}

/// The bundled crash-helmet accelerometer dataset: head acceleration (g)
/// against time after impact (ms), 133 observations.
pub fn motorcycle() -> Dataset {
    let text = include_str!("../data/motorcycle.csv");
    read_rows(Path::new("data/motorcycle.csv"), text, CsvSchema::Xy)
        .expect("bundled dataset parses")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::io::Write;

    #[test]
    fn branch_boundaries_vanish() {
        assert_eq!(f0(0.25), (15.0 * PI).sin());
        assert!(f0(0.25).abs() < 1e-12);
        assert!(f1(0.75).abs() < 1e-12);
        // Both branches of f0 vanish at the breakpoint.
        assert!(f0(0.5).abs() < 1e-12);
        assert!((3.75 * (16.0 * PI * 0.5).sin()).abs() < 1e-12);
    }

    #[test]
    fn generators_match_direct_formulas() {
        let direct0 = |t: f64| {
            if t <= 0.5 {
                (60.0 * PI * t).sin()
            } else {
                15.0 / 4.0 * (16.0 * PI * t).sin()
            }
        };
        let direct1 = |t: f64| {
            if t <= 0.5 {
                (16.0 * PI * t).sin()
            } else {
                0.5 * (32.0 * PI * t).sin()
            }
        };
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        for _ in 0..1000 {
            let t: f64 = rng.random_range(0.0..1.0);
            assert!((f0(t) - direct0(t)).abs() <= 1e-14);
            assert!((f1(t) - direct1(t)).abs() <= 1e-14);
            let u: f64 = rng.random_range(0.0..1.0);
            assert!((f2(t, u) - direct0(t) * direct1(u)).abs() <= 1e-14);
            let radial = (direct0(t) * direct0(t) + direct1(u) * direct1(u)).sqrt();
            assert!((f3(t, u) - radial).abs() <= 1e-14);
        }
    }

    #[test]
    fn line_grid_hits_training_window() {
        let ds = gen_synthetic(
            "f0",
            &GridSpec::Line {
                lo: 0.25,
                hi: 0.75,
                step: 1.0 / 300.0,
            },
        )
        .unwrap();
        assert_eq!(ds.len(), 151);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.inputs()[0][0], 0.25);
        assert_eq!(*ds.inputs().last().unwrap(), vec![0.75]);
    }

    #[test]
    fn mesh_grid_covers_square() {
        let ds = gen_synthetic("f3", &GridSpec::Mesh { step: 0.25 }).unwrap();
        assert_eq!(ds.len(), 25);
        assert_eq!(ds.dim(), 2);
        assert!(ds.targets().iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn unknown_name_rejected() {
        let err = gen_synthetic(
            "f9",
            &GridSpec::Line {
                lo: 0.0,
                hi: 1.0,
                step: 0.5,
            },
        )
        .err()
        .unwrap();
        assert!(matches!(err, Error::UnknownName(_)));
    }

    #[test]
    fn out_of_domain_grid_rejected() {
        let err = gen_synthetic(
            "f0",
            &GridSpec::Line {
                lo: -0.5,
                hi: 0.5,
                step: 0.1,
            },
        )
        .err()
        .unwrap();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn bundled_motorcycle_has_133_rows() {
        let ds = motorcycle();
        assert_eq!(ds.len(), 133);
        assert_eq!(ds.dim(), 1);
        assert_eq!(ds.inputs()[0][0], 2.4);
        assert_eq!(*ds.targets().last().unwrap(), 10.7);
    }

    #[test]
    fn xy_roundtrip_and_line_numbered_errors() {
        let dir = tempfile::tempdir().unwrap();
        let good = dir.path().join("good.csv");
        std::fs::write(&good, "x,y\n10.0,-3.2\n11.5,4.0\n").unwrap();
        let ds = load_csv(&good, CsvSchema::Xy).unwrap();
        assert_eq!(ds.len(), 2);
        assert_eq!(ds.inputs()[0][0], 10.0);
        assert_eq!(ds.targets()[0], -3.2);

        let bad = dir.path().join("bad.csv");
        let mut f = std::fs::File::create(&bad).unwrap();
        writeln!(f, "x,y").unwrap();
        writeln!(f, "1.0,2.0").unwrap();
        writeln!(f, "oops,3.0").unwrap();
        let err = load_csv(&bad, CsvSchema::Xy).err().unwrap();
        match err {
            Error::ParseRow { line, .. } => assert_eq!(line, 3),
            other => panic!("expected ParseRow, got {other:?}"),
        }
    }

    #[test]
    fn latlon_validates_latitude_and_wraps_longitude() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.csv");
        std::fs::write(&p, "lat,lon,anomaly\n45.0,370.0,1.5\n").unwrap();
        let ds = load_csv(&p, CsvSchema::LatLonAnomaly).unwrap();
        assert_eq!(ds.inputs()[0], vec![45.0, 10.0]);

        std::fs::write(&p, "lat,lon,anomaly\n91.0,0.0,1.5\n").unwrap();
        let err = load_csv(&p, CsvSchema::LatLonAnomaly).err().unwrap();
        assert!(matches!(err, Error::ParseRow { line: 2, .. }));
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("h.csv");
        std::fs::write(&p, "time,accel\n1.0,2.0\n").unwrap();
        let err = load_csv(&p, CsvSchema::Xy).err().unwrap();
        assert!(matches!(err, Error::Config(_)));
    }
}
