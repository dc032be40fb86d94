//! Experiment report structure and byte-stable emission as JSON and CSV.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::{write_json, SCHEMA_VERSION};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, Aggregate, Metrics};

/// Results of one model across all replications of an experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelReport {
    pub name: String,
    pub per_replication: Vec<Metrics>,
    /// Mean and spread per metric, over replications where it is present.
    pub aggregate: BTreeMap<String, Aggregate>,
    /// Searched hyperparameters of the representative (full-train) fit.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fitted_params: Option<BTreeMap<String, f64>>,
}

impl ModelReport {
    pub fn new(name: String, per_replication: Vec<Metrics>) -> Self {
        let mut agg = BTreeMap::new();
        for (key, get) in METRIC_COLUMNS {
            if let Some(a) = aggregate(per_replication.iter().map(|m| get(m).as_ref())) {
                agg.insert((*key).to_string(), a);
            }
        }
        if let Some(a) = aggregate(per_replication.iter().map(|m| Some(&m.train_loglik))) {
            agg.insert("train_loglik".to_string(), a);
        }
        Self {
            name,
            per_replication,
            aggregate: agg,
            fitted_params: None,
        }
    }
}

/// Head-to-head split-win count against a shared baseline model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub model: String,
    pub baseline: String,
    /// Replications where this model's predictive log likelihood beats
    /// the baseline's on the same split.
    pub pred_loglik_wins: usize,
    pub replications: usize,
}

/// One point of a posterior curve over a dense 1-D grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CurvePoint {
    pub series: String,
    pub x: f64,
    pub mean: f64,
    /// Predictive standard deviation (noise included).
    pub std: f64,
}

/// Posterior mean and gradient at one 2-D input.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GradientPoint {
    pub x: f64,
    pub y: f64,
    pub mean: f64,
    pub d_dx: f64,
    pub d_dy: f64,
}

/// Full record of one experiment run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub name: String,
    pub seed: u64,
    pub replications: usize,
    pub models: Vec<ModelReport>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub comparisons: Vec<Comparison>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub curves: Vec<CurvePoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gradient_field: Vec<GradientPoint>,
    /// Scalar diagnostics that fit no other slot.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub extras: BTreeMap<String, f64>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, seed: u64, replications: usize) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            name: name.into(),
            seed,
            replications,
            models: Vec::new(),
            comparisons: Vec::new(),
            curves: Vec::new(),
            gradient_field: Vec::new(),
            extras: BTreeMap::new(),
        }
    }
}

/// Output format selector for emission.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Plotdata,
    All,
}

impl Format {
    fn wants_json(self) -> bool {
        matches!(self, Format::Json | Format::All)
    }
    fn wants_csv(self) -> bool {
        matches!(self, Format::Csv | Format::All)
    }
    fn wants_plotdata(self) -> bool {
        matches!(self, Format::Plotdata | Format::All)
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "json" => Ok(Format::Json),
            "plotdata" => Ok(Format::Plotdata),
            "all" => Ok(Format::All),
            other => Err(Error::UnknownName(format!("output format {other}"))),
        }
    }
}

/// Metric CSV columns in emission order, paired with their accessors.
type MetricGet = fn(&Metrics) -> &Option<f64>;
const METRIC_COLUMNS: &[(&str, MetricGet)] = &[
    ("pred_loglik", |m| &m.pred_loglik),
    ("mae", |m| &m.mae),
    ("mae_point_spread", |m| &m.mae_point_spread),
    ("avg_std", |m| &m.avg_std),
    ("avg_std_predictive", |m| &m.avg_std_predictive),
    ("rr_std", |m| &m.rr_std),
    ("rr_std_predictive", |m| &m.rr_std_predictive),
];

fn fmt_opt(v: &Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn write_csv<F>(path: &Path, build: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut writer = csv::Writer::from_writer(Vec::new());
    build(&mut writer)?;
    let bytes = writer
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Write the report under `dir` in the requested format(s); returns the
/// files written. Emission is byte-stable: the same report produces the
/// same bytes.
pub fn emit_report(report: &ExperimentReport, dir: &Path, format: Format) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();

    if format.wants_json() {
        let path = dir.join("report.json");
        write_json(&path, report)?;
        written.push(path);
    }

    if format.wants_csv() {
        let path = dir.join("metrics.csv");
        write_csv(&path, |w| {
            let mut header = vec!["model".to_string(), "replication".into(), "train_loglik".into()];
            header.extend(METRIC_COLUMNS.iter().map(|(k, _)| (*k).to_string()));
            w.write_record(&header)?;
            for model in &report.models {
                for (r, m) in model.per_replication.iter().enumerate() {
                    let mut row = vec![
                        model.name.clone(),
                        r.to_string(),
                        m.train_loglik.to_string(),
                    ];
                    row.extend(METRIC_COLUMNS.iter().map(|(_, get)| fmt_opt(get(m))));
                    w.write_record(&row)?;
                }
            }
            Ok(())
        })?;
        written.push(path);

        let path = dir.join("aggregates.csv");
        write_csv(&path, |w| {
            w.write_record(["model", "metric", "mean", "two_std", "count"])?;
            for model in &report.models {
                for (metric, agg) in &model.aggregate {
                    w.write_record([
                        model.name.as_str(),
                        metric.as_str(),
                        &agg.mean.to_string(),
                        &agg.two_std.to_string(),
                        &agg.count.to_string(),
                    ])?;
                }
            }
            Ok(())
        })?;
        written.push(path);

        if !report.comparisons.is_empty() {
            let path = dir.join("comparisons.csv");
            write_csv(&path, |w| {
                w.write_record(["model", "baseline", "pred_loglik_wins", "replications"])?;
                for c in &report.comparisons {
                    w.write_record([
                        c.model.as_str(),
                        c.baseline.as_str(),
                        &c.pred_loglik_wins.to_string(),
                        &c.replications.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            written.push(path);
        }
    }

    if format.wants_plotdata() {
        if !report.curves.is_empty() {
            let path = dir.join("plotdata.csv");
            write_csv(&path, |w| {
                w.write_record(["series", "x", "mean", "lo", "hi"])?;
                for p in &report.curves {
                    w.write_record([
                        p.series.as_str(),
                        &p.x.to_string(),
                        &p.mean.to_string(),
                        &(p.mean - 2.0 * p.std).to_string(),
                        &(p.mean + 2.0 * p.std).to_string(),
                    ])?;
                }
                Ok(())
            })?;
            written.push(path);
        }
        if !report.gradient_field.is_empty() {
            let path = dir.join("gradient.csv");
            write_csv(&path, |w| {
                w.write_record(["x", "y", "mean", "d_dx", "d_dy"])?;
                for p in &report.gradient_field {
                    w.write_record([
                        &p.x.to_string(),
                        &p.y.to_string(),
                        &p.mean.to_string(),
                        &p.d_dx.to_string(),
                        &p.d_dy.to_string(),
                    ])?;
                }
                Ok(())
            })?;
            written.push(path);
        }
    }

    Ok(written)
}
