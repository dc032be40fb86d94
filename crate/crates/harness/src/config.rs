//! Versioned JSON configuration schema and its mapping onto library types.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use stringgp::kernels::{DerivativeKernel, Hyperparams, KernelFamily};
use stringgp::string_gp::{Partition, StringGp, StringKernel};

use crate::data::{CsvSchema, GridSpec};
use crate::error::{Error, Result};

/// Current config schema version; every config file carries it.
pub const SCHEMA_VERSION: u32 = 1;

pub fn check_schema(schema: u32) -> Result<()> {
    if schema != SCHEMA_VERSION {
        return Err(Error::Config(format!(
            "unsupported schema version {schema}, expected {SCHEMA_VERSION}"
        )));
    }
    Ok(())
}

/// One kernel: a family name plus named positive hyperparameters.
///
/// Spectral mixture components use indexed names (`weight_0`, `scale_0`,
/// `frequency_0`, ...); the component count is inferred from the keys.
/// The `linear` family additionally takes an unconstrained `center`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct KernelSpec {
    pub family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    pub params: BTreeMap<String, f64>,
}

impl KernelSpec {
    pub fn new(family: &str, params: &[(&str, f64)]) -> Self {
        Self {
            family: family.into(),
            center: None,
            params: params.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
        }
    }

    pub fn with_center(mut self, center: f64) -> Self {
        self.center = Some(center);
        self
    }

    pub fn family(&self) -> Result<KernelFamily> {
        Ok(match self.family.as_str() {
            "squared_exponential" => KernelFamily::SquaredExponential,
            "rational_quadratic" => KernelFamily::RationalQuadratic,
            "matern32" => KernelFamily::Matern32,
            "matern52" => KernelFamily::Matern52,
            "periodic" => KernelFamily::Periodic,
            "spectral_mixture" => {
                let q = self
                    .params
                    .keys()
                    .filter(|k| k.starts_with("weight_"))
                    .count();
                if q == 0 {
                    return Err(Error::Config(
                        "spectral_mixture needs weight_0/scale_0/frequency_0 parameters".into(),
                    ));
                }
                KernelFamily::SpectralMixture(q)
            }
            "polynomial2" => KernelFamily::Polynomial2,
            "linear" => KernelFamily::Linear {
                center: self.center.ok_or_else(|| {
                    Error::Config("linear kernel needs a \"center\" field".into())
                })?,
            },
            other => return Err(Error::UnknownName(format!("kernel family {other}"))),
        })
    }

    /// Ordered natural-space parameter vector for this family.
    pub fn param_vector(&self) -> Result<Vec<f64>> {
        let family = self.family()?;
        let names = family.param_names();
        let mut out = Vec::with_capacity(names.len());
        for name in &names {
            match self.params.get(name) {
                Some(&v) => out.push(v),
                None => {
                    return Err(Error::Config(format!(
                        "kernel {}: missing parameter {name}",
                        self.family
                    )))
                }
            }
        }
        if self.params.len() != names.len() {
            let extra: Vec<&String> = self
                .params
                .keys()
                .filter(|k| !names.contains(k))
                .collect();
            return Err(Error::Config(format!(
                "kernel {}: unknown parameters {extra:?}",
                self.family
            )));
        }
        Ok(out)
    }

    pub fn to_kernel(&self) -> Result<DerivativeKernel> {
        let family = self.family()?;
        let values = self.param_vector()?;
        Ok(DerivativeKernel::new(
            family,
            Hyperparams::from_natural(&values)?,
        )?)
    }

    /// Same family with a replacement natural-space parameter vector.
    pub fn kernel_with(&self, values: &[f64]) -> Result<DerivativeKernel> {
        let family = self.family()?;
        Ok(DerivativeKernel::new(
            family,
            Hyperparams::from_natural(values)?,
        )?)
    }
}

/// Partition boundaries plus one kernel per string.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct StringSpec {
    pub boundaries: Vec<f64>,
    pub strings: Vec<KernelSpec>,
}

impl StringSpec {
    pub fn uniform(boundaries: Vec<f64>, kernel: KernelSpec) -> Self {
        let n = boundaries.len().saturating_sub(1);
        Self {
            boundaries,
            strings: vec![kernel; n],
        }
    }

    pub fn num_strings(&self) -> usize {
        self.strings.len()
    }

    pub fn to_string_gp(&self) -> Result<StringGp> {
        let partition = Partition::new(self.boundaries.clone())?;
        let kernels: Vec<DerivativeKernel> = self
            .strings
            .iter()
            .map(|s| s.to_kernel())
            .collect::<Result<_>>()?;
        Ok(StringGp::new(StringKernel::new(partition, kernels)?)?)
    }

    /// Same structure with replacement parameters, one slice per string.
    pub fn string_gp_with(&self, per_string: &[&[f64]]) -> Result<StringGp> {
        if per_string.len() != self.strings.len() {
            return Err(Error::Config(format!(
                "expected {} per-string parameter slices, got {}",
                self.strings.len(),
                per_string.len()
            )));
        }
        let partition = Partition::new(self.boundaries.clone())?;
        let kernels: Vec<DerivativeKernel> = self
            .strings
            .iter()
            .zip(per_string)
            .map(|(s, vals)| s.kernel_with(vals))
            .collect::<Result<_>>()?;
        Ok(StringGp::new(StringKernel::new(partition, kernels)?)?)
    }
}

/// One factor of a product kernel: either a plain kernel or a string GP.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum DimSpec {
    String(StringSpec),
    Kernel(KernelSpec),
}

/// Product kernel over several input dimensions.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ProductSpec {
    pub dims: Vec<DimSpec>,
}

/// Independent GP experts on a shared partition: the no-boundary-sharing
/// baseline. Every segment gets its own copy of the base kernel and its
/// own noise variance.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExpertsSpec {
    pub boundaries: Vec<f64>,
    pub base: KernelSpec,
}

/// Top-level model shape.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum ModelSpec {
    Kernel(KernelSpec),
    String(StringSpec),
    Product(ProductSpec),
    Experts(ExpertsSpec),
}

impl ModelSpec {
    pub fn input_dim(&self) -> usize {
        match self {
            ModelSpec::Kernel(_) | ModelSpec::String(_) | ModelSpec::Experts(_) => 1,
            ModelSpec::Product(p) => p.dims.len(),
        }
    }
}

/// Observation noise structure. Per-string noise requires a string model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Homoskedastic,
    PerString,
}

/// Overrides for the hyperparameter search: box bounds, restart seed
/// values, penalized parameters, and optimizer knobs. Keys match either a
/// full parameter name (`s2.length_scale`) or its leaf (`length_scale`).
#[derive(Debug, Clone, Default, Serialize, Deserialize, PartialEq)]
pub struct SearchConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub restarts: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_evals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub penalty: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gradient_polish: Option<bool>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub bounds: BTreeMap<String, (f64, f64)>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub seeds: BTreeMap<String, Vec<f64>>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub penalized: Vec<String>,
}

/// One model entry of an experiment: a name for reports, the model shape,
/// the noise structure, and optional search overrides.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ModelConfig {
    pub name: String,
    pub model: ModelSpec,
    pub noise: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
}

/// Where an experiment's data comes from.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum DatasetRef {
    /// `f0`/`f1` (line grid, optional step, default 1/300) or `f2`/`f3`
    /// (unit-square mesh, optional step, default 1/60), or `motorcycle`.
    Preset {
        preset: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        step: Option<f64>,
    },
    File {
        path: String,
        format: CsvSchema,
    },
}

/// How train and test sets are derived from the dataset.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum SplitPolicy {
    /// Train on inputs inside [train_lo, train_hi]; test on the rest.
    Extrapolate { train_lo: f64, train_hi: f64 },
    /// 2-D interpolation: train where every coordinate is outside the
    /// open band (band_lo, band_hi); test on the rest.
    HoldBand { band_lo: f64, band_hi: f64 },
    /// Leave `count` points out uniformly at random, fresh per replication.
    LeaveOut { count: usize },
    /// Train on everything; no test metrics.
    None,
}

/// A full experiment: dataset, split policy, replication count, and the
/// models to compare. The first model is the comparison baseline.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExperimentConfig {
    pub schema: u32,
    pub name: String,
    pub dataset: DatasetRef,
    pub split: SplitPolicy,
    pub replications: usize,
    pub seed: u64,
    /// Std of i.i.d. Gaussian noise added to training targets (synthetic
    /// presets); omit to train on raw targets.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_sigma: Option<f64>,
    /// Emit posterior-band curves from a final full-train fit (1-D only).
    #[serde(default = "default_true")]
    pub curves: bool,
    pub models: Vec<ModelConfig>,
}

fn default_true() -> bool {
    true
}

/// Config for the `sample` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SampleConfig {
    pub schema: u32,
    pub string: StringSpec,
    pub grid: GridSpec,
    pub draws: usize,
    #[serde(default)]
    pub seed: u64,
}

/// Config for the `kernel-eval` subcommand.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelEvalConfig {
    pub schema: u32,
    pub model: ModelSpec,
    pub grid: GridSpec,
}

/// Config for the `fit` and `predict` subcommands.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitConfig {
    pub schema: u32,
    pub dataset: DatasetRef,
    pub model: ModelSpec,
    pub noise: NoiseKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchConfig>,
    /// Explicit natural-space parameters keyed by name; when present,
    /// `predict` skips the search and conditions on these directly.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<BTreeMap<String, f64>>,
    #[serde(default)]
    pub seed: u64,
    /// Prediction grid for `predict`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predict_grid: Option<GridSpec>,
}

/// Serialized outcome of a hyperparameter search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitResultJson {
    pub schema: u32,
    pub params: BTreeMap<String, f64>,
    pub log_params: BTreeMap<String, f64>,
    pub objective: f64,
    pub log_marginal: f64,
    pub restarts: Vec<RestartJson>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RestartJson {
    pub restart: usize,
    pub objective: f64,
    pub evals: usize,
}

impl FitResultJson {
    pub fn new(names: &[String], result: &stringgp::optim::FitResult) -> Self {
        let params = names
            .iter()
            .cloned()
            .zip(result.params.iter().copied())
            .collect();
        let log_params = names
            .iter()
            .cloned()
            .zip(result.log_params.iter().copied())
            .collect();
        Self {
            schema: SCHEMA_VERSION,
            params,
            log_params,
            objective: result.objective,
            log_marginal: result.log_marginal,
            restarts: result
                .traces
                .iter()
                .map(|t| RestartJson {
                    restart: t.restart,
                    objective: t.objective,
                    evals: t.evals,
                })
                .collect(),
        }
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: impl AsRef<std::path::Path>) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<std::path::Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_spec_roundtrip() {
        let spec = KernelSpec::new(
            "periodic",
            &[("variance", 1.5), ("length_scale", 0.3), ("period", 0.25)],
        );
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("\"family\":\"periodic\""));
        let back: KernelSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back, spec);
        let k = spec.to_kernel().unwrap();
        assert_eq!(k.family(), &KernelFamily::Periodic);
        assert!((k.params().natural(2) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn spectral_mixture_component_count_inferred() {
        let spec = KernelSpec::new(
            "spectral_mixture",
            &[
                ("weight_0", 1.0),
                ("scale_0", 0.5),
                ("frequency_0", 8.0),
                ("weight_1", 0.2),
                ("scale_1", 0.1),
                ("frequency_1", 16.0),
            ],
        );
        let k = spec.to_kernel().unwrap();
        assert_eq!(k.family(), &KernelFamily::SpectralMixture(2));
        // Ordered as weight_0, scale_0, frequency_0, weight_1, ...
        // Storage is log-space, so allow for the ln/exp round trip.
        assert!((k.params().natural(5) - 16.0).abs() < 1e-12);
    }

    #[test]
    fn missing_and_unknown_params_rejected() {
        let spec = KernelSpec::new("squared_exponential", &[("variance", 1.0)]);
        assert!(matches!(spec.to_kernel(), Err(Error::Config(_))));
        let spec = KernelSpec::new(
            "squared_exponential",
            &[("variance", 1.0), ("length_scale", 1.0), ("bogus", 2.0)],
        );
        assert!(matches!(spec.to_kernel(), Err(Error::Config(_))));
        let spec = KernelSpec::new("warp_drive", &[]);
        assert!(matches!(spec.to_kernel(), Err(Error::UnknownName(_))));
    }

    #[test]
    fn model_spec_json_shapes() {
        let text = r#"{
            "string": {
                "boundaries": [0.0, 0.5, 1.0],
                "strings": [
                    {"family": "periodic", "params": {"variance": 1.0, "length_scale": 0.5, "period": 0.3}},
                    {"family": "periodic", "params": {"variance": 1.0, "length_scale": 0.5, "period": 0.2}}
                ]
            }
        }"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        match &spec {
            ModelSpec::String(s) => {
                assert_eq!(s.num_strings(), 2);
                s.to_string_gp().unwrap();
            }
            other => panic!("expected string model, got {other:?}"),
        }

        let text = r#"{
            "product": {"dims": [
                {"family": "squared_exponential", "params": {"variance": 1.0, "length_scale": 0.4}},
                {"boundaries": [0.0, 1.0], "strings": [
                    {"family": "matern52", "params": {"variance": 1.0, "length_scale": 0.4}}
                ]}
            ]}
        }"#;
        let spec: ModelSpec = serde_json::from_str(text).unwrap();
        match &spec {
            ModelSpec::Product(p) => {
                assert!(matches!(p.dims[0], DimSpec::Kernel(_)));
                assert!(matches!(p.dims[1], DimSpec::String(_)));
            }
            other => panic!("expected product model, got {other:?}"),
        }
    }

    #[test]
    fn schema_version_enforced() {
        assert!(check_schema(1).is_ok());
        assert!(check_schema(2).is_err());
    }
}
