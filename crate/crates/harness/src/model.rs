//! From config specs to fitted models: parameter layouts, default search
//! boxes, and maximum-marginal-likelihood fits.

use std::collections::BTreeMap;

use stringgp::optim::{
    fit_independent_experts, optimize, FitResult, IndependentExperts, ParamSpec, SearchSpec,
};
use stringgp::product::ProductKernel;
use stringgp::regression::{fit, GradientPrediction, Kernel, NoiseModel, Posterior, Prediction};
use stringgp::string_gp::Partition;

use crate::config::{
    DimSpec, ExpertsSpec, KernelSpec, ModelConfig, ModelSpec, NoiseKind, SearchConfig,
};
use crate::error::{Error, Result};

/// Summary statistics of a training set, used to size default search boxes.
#[derive(Debug, Clone)]
pub struct DataStats {
    pub n: usize,
    pub x_lo: Vec<f64>,
    pub x_hi: Vec<f64>,
    pub y_var: f64,
}

impl DataStats {
    pub fn new(xs: &[Vec<f64>], ys: &[f64]) -> Self {
        let d = xs.first().map_or(1, |r| r.len());
        let mut x_lo = vec![f64::INFINITY; d];
        let mut x_hi = vec![f64::NEG_INFINITY; d];
        for row in xs {
            for j in 0..d {
                x_lo[j] = x_lo[j].min(row[j]);
                x_hi[j] = x_hi[j].max(row[j]);
            }
        }
        let n = ys.len().max(1);
        let mean = ys.iter().sum::<f64>() / n as f64;
        let y_var = ys.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n as f64;
        Self {
            n: xs.len(),
            x_lo,
            x_hi,
            y_var: y_var.max(1e-12),
        }
    }

    pub fn range(&self, j: usize) -> f64 {
        (self.x_hi[j] - self.x_lo[j]).max(1e-9)
    }
}

/// One atomic kernel inside a model, with the report-name prefix and the
/// input window it acts on.
struct Unit<'a> {
    prefix: String,
    kernel: &'a KernelSpec,
    /// Length of the input window (string length, or full range).
    local_range: f64,
    /// Full range of the dimension this unit lives on.
    dim_range: f64,
}

fn collect_units<'a>(
    spec: &'a ModelSpec,
    stats: &DataStats,
    out: &mut Vec<Unit<'a>>,
) -> Result<()> {
    match spec {
        ModelSpec::Kernel(ks) => {
            let r = stats.range(0);
            out.push(Unit {
                prefix: String::new(),
                kernel: ks,
                local_range: r,
                dim_range: r,
            });
        }
        ModelSpec::String(ss) => collect_string_units(ss, "", stats.range(0), out)?,
        ModelSpec::Product(ps) => {
            if ps.dims.is_empty() {
                return Err(Error::Config("product model has no dimensions".into()));
            }
            for (j, dim) in ps.dims.iter().enumerate() {
                let r = stats.range(j.min(stats.x_lo.len() - 1));
                let prefix = format!("d{}.", j + 1);
                match dim {
                    DimSpec::Kernel(ks) => out.push(Unit {
                        prefix,
                        kernel: ks,
                        local_range: r,
                        dim_range: r,
                    }),
                    DimSpec::String(ss) => collect_string_units(ss, &prefix, r, out)?,
                }
            }
        }
        ModelSpec::Experts(_) => {
            return Err(Error::Config(
                "independent experts are fit per segment, not as one kernel".into(),
            ))
        }
    }
    Ok(())
}

fn collect_string_units<'a>(
    ss: &'a crate::config::StringSpec,
    prefix: &str,
    dim_range: f64,
    out: &mut Vec<Unit<'a>>,
) -> Result<()> {
    if ss.strings.is_empty() || ss.boundaries.len() != ss.strings.len() + 1 {
        return Err(Error::Config(format!(
            "string spec needs one kernel per interval: {} boundaries, {} kernels",
            ss.boundaries.len(),
            ss.strings.len()
        )));
    }
    for (k, ks) in ss.strings.iter().enumerate() {
        let len = (ss.boundaries[k + 1] - ss.boundaries[k]).abs().max(1e-9);
        out.push(Unit {
            prefix: format!("{prefix}s{}.", k + 1),
            kernel: ks,
            local_range: len,
            dim_range,
        });
    }
    Ok(())
}

/// Default search box for one named hyperparameter.
fn default_param(full_name: String, unit: &Unit, stats: &DataStats) -> ParamSpec {
    let leaf = full_name.rsplit('.').next().unwrap_or(&full_name);
    let vy = stats.y_var;
    let r = unit.local_range;
    let (lo, hi, seeds) = if leaf == "variance" || leaf.starts_with("weight_") {
        (1e-4 * vy, 1e3 * vy, vec![vy, 0.1 * vy])
    } else if leaf == "length_scale" {
        (1e-3 * r, 10.0 * r, vec![r / 5.0, r / 20.0])
    } else if leaf == "alpha" {
        (1e-2, 1e3, vec![1.0])
    } else if leaf == "period" {
        (1e-2 * r, 4.0 * r, vec![r / 3.0])
    } else if leaf.starts_with("scale_") {
        (1e-3 / r, 1e3 / r, vec![0.5 / r])
    } else if leaf.starts_with("frequency_") {
        let nyquist = (stats.n as f64 / (2.0 * unit.dim_range)).max(4.0 / r);
        (0.05 / unit.dim_range, nyquist, vec![2.0 / r])
    } else if leaf == "offset" {
        let x2 = stats
            .x_lo
            .iter()
            .chain(stats.x_hi.iter())
            .fold(1.0f64, |m, v| m.max(v * v));
        (1e-4, 1e4 * x2, vec![1.0, x2])
    } else {
        // Remaining positives (e.g. the linear kernel variance).
        (1e-8 * vy, 1e8 * vy, vec![vy])
    };
    ParamSpec {
        name: full_name,
        lo,
        hi,
        seeds,
        penalized: false,
    }
}

fn noise_param(name: String, vy: f64) -> ParamSpec {
    ParamSpec {
        name,
        lo: 1e-9 * vy,
        hi: 2.0 * vy,
        seeds: vec![0.05 * vy, 1e-4 * vy],
        penalized: false,
    }
}

/// A model shape plus noise structure, ready to be instantiated at any
/// point of its hyperparameter space.
#[derive(Debug, Clone)]
pub struct ModelTemplate {
    spec: ModelSpec,
    noise: NoiseKind,
}

impl ModelTemplate {
    pub fn new(spec: ModelSpec, noise: NoiseKind) -> Result<Self> {
        if noise == NoiseKind::PerString && !matches!(spec, ModelSpec::String(_)) {
            return Err(Error::Config(
                "per-string noise requires a string model".into(),
            ));
        }
        if matches!(spec, ModelSpec::Experts(_)) {
            return Err(Error::Config(
                "independent experts are handled by fit_experts".into(),
            ));
        }
        Ok(Self { spec, noise })
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    fn num_strings(&self) -> usize {
        match &self.spec {
            ModelSpec::String(ss) => ss.num_strings(),
            _ => 0,
        }
    }

    /// Search parameters: kernel hyperparameters in unit order, then noise.
    pub fn param_specs(&self, stats: &DataStats) -> Result<Vec<ParamSpec>> {
        let mut units = Vec::new();
        collect_units(&self.spec, stats, &mut units)?;
        let mut specs = Vec::new();
        for unit in &units {
            let family = unit.kernel.family()?;
            for pname in family.param_names() {
                specs.push(default_param(
                    format!("{}{pname}", unit.prefix),
                    unit,
                    stats,
                ));
            }
        }
        match self.noise {
            NoiseKind::Homoskedastic => {
                specs.push(noise_param("noise_variance".into(), stats.y_var))
            }
            NoiseKind::PerString => {
                for k in 1..=self.num_strings() {
                    specs.push(noise_param(format!("noise_variance.s{k}"), stats.y_var));
                }
            }
        }
        Ok(specs)
    }

    fn kernel_param_len(&self) -> Result<usize> {
        let stats = DataStats {
            n: 1,
            x_lo: vec![0.0; self.spec.input_dim()],
            x_hi: vec![1.0; self.spec.input_dim()],
            y_var: 1.0,
        };
        let mut units = Vec::new();
        collect_units(&self.spec, &stats, &mut units)?;
        let mut len = 0;
        for unit in &units {
            len += unit.kernel.family()?.param_len();
        }
        Ok(len)
    }

    /// Instantiate the kernel at a natural-space parameter vector.
    pub fn build_kernel(&self, vals: &[f64]) -> Result<Box<dyn Kernel>> {
        let mut cursor = 0;
        let kernel = build_spec(&self.spec, vals, &mut cursor)?;
        if cursor != vals.len() {
            return Err(Error::Config(format!(
                "kernel takes {cursor} parameters, got {}",
                vals.len()
            )));
        }
        Ok(kernel)
    }

    fn noise_model(&self, vals: &[f64]) -> Result<NoiseModel> {
        match self.noise {
            NoiseKind::Homoskedastic => {
                if vals.len() != 1 {
                    return Err(Error::Config(format!(
                        "homoskedastic noise takes 1 parameter, got {}",
                        vals.len()
                    )));
                }
                Ok(NoiseModel::Homoskedastic { variance: vals[0] })
            }
            NoiseKind::PerString => {
                if vals.len() != self.num_strings() {
                    return Err(Error::Config(format!(
                        "per-string noise takes {} parameters, got {}",
                        self.num_strings(),
                        vals.len()
                    )));
                }
                Ok(NoiseModel::PerString {
                    variances: vals.to_vec(),
                })
            }
        }
    }

    /// Condition on data at one natural-space point (kernel params
    /// followed by noise params).
    pub fn fit_at(
        &self,
        xs: &[Vec<f64>],
        ys: &[f64],
        vals: &[f64],
    ) -> Result<Posterior<Box<dyn Kernel>>> {
        let klen = self.kernel_param_len()?;
        if vals.len() < klen {
            return Err(Error::Config(format!(
                "expected at least {klen} parameters, got {}",
                vals.len()
            )));
        }
        let kernel = self.build_kernel(&vals[..klen])?;
        let noise = self.noise_model(&vals[klen..])?;
        Ok(fit(kernel, xs, ys, noise)?)
    }
}

fn build_spec(spec: &ModelSpec, vals: &[f64], cursor: &mut usize) -> Result<Box<dyn Kernel>> {
    match spec {
        ModelSpec::Kernel(ks) => Ok(Box::new(build_one(ks, vals, cursor)?)),
        ModelSpec::String(ss) => Ok(Box::new(build_string(ss, vals, cursor)?)),
        ModelSpec::Product(ps) => {
            let mut factors: Vec<Box<dyn Kernel>> = Vec::with_capacity(ps.dims.len());
            for dim in &ps.dims {
                match dim {
                    DimSpec::Kernel(ks) => factors.push(Box::new(build_one(ks, vals, cursor)?)),
                    DimSpec::String(ss) => factors.push(Box::new(build_string(ss, vals, cursor)?)),
                }
            }
            Ok(Box::new(ProductKernel::new(factors)?))
        }
        ModelSpec::Experts(_) => Err(Error::Config(
            "independent experts are handled by fit_experts".into(),
        )),
    }
}

fn build_one(
    ks: &KernelSpec,
    vals: &[f64],
    cursor: &mut usize,
) -> Result<stringgp::kernels::DerivativeKernel> {
    let len = ks.family()?.param_len();
    if *cursor + len > vals.len() {
        return Err(Error::Config("parameter vector too short".into()));
    }
    let k = ks.kernel_with(&vals[*cursor..*cursor + len])?;
    *cursor += len;
    Ok(k)
}

fn build_string(
    ss: &crate::config::StringSpec,
    vals: &[f64],
    cursor: &mut usize,
) -> Result<stringgp::string_gp::StringGp> {
    let mut slices: Vec<&[f64]> = Vec::with_capacity(ss.strings.len());
    for ks in &ss.strings {
        let len = ks.family()?.param_len();
        if *cursor + len > vals.len() {
            return Err(Error::Config("parameter vector too short".into()));
        }
        slices.push(&vals[*cursor..*cursor + len]);
        *cursor += len;
    }
    ss.string_gp_with(&slices)
}

/// A fitted model of any shape.
pub enum BuiltModel {
    Gp(Posterior<Box<dyn Kernel>>),
    Experts(IndependentExperts<Box<dyn Kernel>>),
}

impl BuiltModel {
    pub fn train_loglik(&self) -> f64 {
        match self {
            BuiltModel::Gp(p) => p.log_marginal_likelihood(),
            BuiltModel::Experts(e) => e.log_marginal_likelihood(),
        }
    }

    pub fn predict(&self, xs: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        Ok(match self {
            BuiltModel::Gp(p) => p.predict(xs)?,
            BuiltModel::Experts(e) => e.predict(xs)?,
        })
    }

    pub fn predictive_log_likelihood(&self, xs: &[Vec<f64>], ys: &[f64]) -> Result<f64> {
        Ok(match self {
            BuiltModel::Gp(p) => p.predictive_log_likelihood(xs, ys)?,
            BuiltModel::Experts(e) => e.predictive_log_likelihood(xs, ys)?,
        })
    }

    pub fn predict_gradient(&self, xs: &[Vec<f64>]) -> Result<Vec<GradientPrediction>> {
        match self {
            BuiltModel::Gp(p) => Ok(p.predict_gradient(xs)?),
            BuiltModel::Experts(_) => Err(Error::Config(
                "gradient prediction needs a joint model, not independent experts".into(),
            )),
        }
    }

    pub fn posterior(&self) -> Option<&Posterior<Box<dyn Kernel>>> {
        match self {
            BuiltModel::Gp(p) => Some(p),
            BuiltModel::Experts(_) => None,
        }
    }
}

/// Optimizer knobs, separate from the per-parameter search boxes.
#[derive(Debug, Clone)]
pub struct SearchTuning {
    pub restarts: usize,
    pub max_evals: usize,
    pub tol: f64,
    pub penalty: f64,
    pub seed: u64,
    pub gradient_polish: bool,
}

impl SearchTuning {
    /// Defaults scaled to the search dimension.
    pub fn for_dim(d: usize) -> Self {
        Self {
            restarts: 2,
            max_evals: 300 + 120 * d,
            tol: 1e-6,
            penalty: 0.0,
            seed: 0,
            gradient_polish: false,
        }
    }

    fn to_search_spec(&self, params: Vec<ParamSpec>) -> SearchSpec {
        let mut spec = SearchSpec::new(params);
        spec.restarts = self.restarts;
        spec.max_evals = self.max_evals;
        spec.tol = self.tol;
        spec.penalty = self.penalty;
        spec.seed = self.seed;
        spec.gradient_polish = self.gradient_polish;
        spec
    }
}

/// True when the override key addresses this parameter: exact name, or
/// bare leaf name applying to all parameters sharing that leaf.
fn name_matches(param: &str, key: &str) -> bool {
    if param == key {
        return true;
    }
    let leaf = param.rsplit('.').next().unwrap_or(param);
    leaf == key
}

/// Apply config-file search overrides to generated parameter specs and
/// tuning knobs.
pub fn apply_search_config(
    specs: &mut [ParamSpec],
    tuning: &mut SearchTuning,
    cfg: &SearchConfig,
) {
    if let Some(r) = cfg.restarts {
        tuning.restarts = r;
    }
    if let Some(m) = cfg.max_evals {
        tuning.max_evals = m;
    }
    if let Some(t) = cfg.tol {
        tuning.tol = t;
    }
    if let Some(p) = cfg.penalty {
        tuning.penalty = p;
    }
    if let Some(g) = cfg.gradient_polish {
        tuning.gradient_polish = g;
    }
    for spec in specs.iter_mut() {
        for (key, &(lo, hi)) in &cfg.bounds {
            if name_matches(&spec.name, key) {
                spec.lo = lo;
                spec.hi = hi;
            }
        }
        for (key, seeds) in &cfg.seeds {
            if name_matches(&spec.name, key) {
                spec.seeds = seeds.clone();
            }
        }
        if cfg.penalized.iter().any(|key| name_matches(&spec.name, key)) {
            spec.penalized = true;
        }
    }
}

/// A searched fit: the winning model plus named parameters and traces.
pub struct SearchedFit {
    pub model: BuiltModel,
    pub names: Vec<String>,
    pub result: FitResult,
}

impl SearchedFit {
    pub fn param_map(&self) -> BTreeMap<String, f64> {
        self.names
            .iter()
            .cloned()
            .zip(self.result.params.iter().copied())
            .collect()
    }
}

/// Maximize the log marginal likelihood of a (non-experts) template over
/// the given search box.
pub fn fit_searched(
    template: &ModelTemplate,
    xs: &[Vec<f64>],
    ys: &[f64],
    specs: Vec<ParamSpec>,
    tuning: &SearchTuning,
) -> Result<SearchedFit> {
    let names: Vec<String> = specs.iter().map(|p| p.name.clone()).collect();
    let spec = tuning.to_search_spec(specs);
    let objective = |v_log: &[f64]| -> f64 {
        let naturals: Vec<f64> = v_log.iter().map(|v| v.exp()).collect();
        match template.fit_at(xs, ys, &naturals) {
            Ok(p) => p.log_marginal_likelihood(),
            Err(_) => f64::NEG_INFINITY,
        }
    };
    let result = optimize(objective, &spec)?;
    let model = BuiltModel::Gp(template.fit_at(xs, ys, &result.params)?);
    Ok(SearchedFit {
        model,
        names,
        result,
    })
}

/// Fit independent experts: one searched GP per partition segment, each
/// with its own noise variance. Parameter names are prefixed `g{segment}.`.
pub fn fit_experts(
    spec: &ExpertsSpec,
    xs: &[Vec<f64>],
    ys: &[f64],
    search: Option<&SearchConfig>,
    base_tuning: &SearchTuning,
) -> Result<(BuiltModel, BTreeMap<String, f64>)> {
    let partition = Partition::new(spec.boundaries.clone())?;
    let family = spec.base.family()?;
    let d = family.param_len() + 1;
    let params = std::cell::RefCell::new(BTreeMap::new());
    let experts = fit_independent_experts(partition, xs, ys, |segment, seg_xs, seg_ys| {
        let stats = DataStats::new(seg_xs, seg_ys);
        let mut specs: Vec<ParamSpec> = Vec::with_capacity(d);
        let unit = Unit {
            prefix: String::new(),
            kernel: &spec.base,
            local_range: stats.range(0),
            dim_range: stats.range(0),
        };
        for pname in family.param_names() {
            specs.push(default_param(pname, &unit, &stats));
        }
        specs.push(noise_param("noise_variance".into(), stats.y_var));
        let mut tuning = base_tuning.clone();
        tuning.max_evals = base_tuning.max_evals.max(60 * d);
        if let Some(cfg) = search {
            apply_search_config(&mut specs, &mut tuning, cfg);
        }
        // Independent per-segment optimizer streams.
        tuning.seed = base_tuning
            .seed
            .wrapping_add((segment as u64).wrapping_mul(0x9E3779B97F4A7C15));
        let template = ModelTemplate::new(ModelSpec::Kernel(spec.base.clone()), NoiseKind::Homoskedastic)
            .map_err(config_to_core)?;
        let names: Vec<String> = specs.iter().map(|p| p.name.clone()).collect();
        let search_spec = tuning.to_search_spec(specs);
        let objective = |v_log: &[f64]| -> f64 {
            let naturals: Vec<f64> = v_log.iter().map(|v| v.exp()).collect();
            match template.fit_at(seg_xs, seg_ys, &naturals) {
                Ok(p) => p.log_marginal_likelihood(),
                Err(_) => f64::NEG_INFINITY,
            }
        };
        let result = optimize(objective, &search_spec)?;
        let posterior = template
            .fit_at(seg_xs, seg_ys, &result.params)
            .map_err(config_to_core)?;
        let mut map = params.borrow_mut();
        for (name, value) in names.iter().zip(&result.params) {
            map.insert(format!("g{segment}.{name}"), *value);
        }
        Ok(posterior)
    })?;
    Ok((BuiltModel::Experts(experts), params.into_inner()))
}

/// Flatten harness config errors into library errors for closures that
/// must return the library error type.
fn config_to_core(err: Error) -> stringgp::Error {
    match err {
        Error::Core(e) => e,
        other => stringgp::Error::Config(other.to_string()),
    }
}

/// Fit any model config: dispatches experts to the per-segment path.
/// `seed_hook` may adjust the generated parameter specs (bounds, seeds)
/// before the search runs; it is not called for experts models.
pub fn fit_model_config(
    cfg: &ModelConfig,
    xs: &[Vec<f64>],
    ys: &[f64],
    seed: u64,
    seed_hook: impl Fn(&mut Vec<ParamSpec>),
) -> Result<(BuiltModel, BTreeMap<String, f64>, f64)> {
    match &cfg.model {
        ModelSpec::Experts(es) => {
            let mut tuning = SearchTuning::for_dim(es.base.family()?.param_len() + 1);
            tuning.seed = seed;
            if let Some(search) = &cfg.search {
                let mut dummy: Vec<ParamSpec> = Vec::new();
                apply_search_config(&mut dummy, &mut tuning, search);
            }
            let (model, params) = fit_experts(es, xs, ys, cfg.search.as_ref(), &tuning)?;
            let lml = model.train_loglik();
            Ok((model, params, lml))
        }
        _ => {
            let template = ModelTemplate::new(cfg.model.clone(), cfg.noise)?;
            let stats = DataStats::new(xs, ys);
            let mut specs = template.param_specs(&stats)?;
            let mut tuning = SearchTuning::for_dim(specs.len());
            tuning.seed = seed;
            if let Some(search) = &cfg.search {
                apply_search_config(&mut specs, &mut tuning, search);
            }
            seed_hook(&mut specs);
            let fitted = fit_searched(&template, xs, ys, specs, &tuning)?;
            let params = fitted.param_map();
            Ok((fitted.model, params, fitted.result.log_marginal))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::StringSpec;

    fn se_spec() -> KernelSpec {
        KernelSpec::new(
            "squared_exponential",
            &[("variance", 1.0), ("length_scale", 0.5)],
        )
    }

    #[test]
    fn string_layout_names_and_order() {
        let spec = ModelSpec::String(StringSpec::uniform(vec![0.0, 0.5, 1.0], se_spec()));
        let template = ModelTemplate::new(spec, NoiseKind::PerString).unwrap();
        let stats = DataStats::new(&[vec![0.1], vec![0.9]], &[1.0, -1.0]);
        let specs = template.param_specs(&stats).unwrap();
        let names: Vec<&str> = specs.iter().map(|p| p.name.as_str()).collect();
        assert_eq!(
            names,
            vec![
                "s1.variance",
                "s1.length_scale",
                "s2.variance",
                "s2.length_scale",
                "noise_variance.s1",
                "noise_variance.s2",
            ]
        );
    }

    #[test]
    fn product_layout_prefixes_dimensions() {
        let spec = ModelSpec::Product(crate::config::ProductSpec {
            dims: vec![
                DimSpec::Kernel(se_spec()),
                DimSpec::String(StringSpec::uniform(vec![0.0, 1.0], se_spec())),
            ],
        });
        let template = ModelTemplate::new(spec, NoiseKind::Homoskedastic).unwrap();
        let stats = DataStats::new(&[vec![0.0, 0.0], vec![1.0, 1.0]], &[0.0, 1.0]);
        let names: Vec<String> = template
            .param_specs(&stats)
            .unwrap()
            .into_iter()
            .map(|p| p.name)
            .collect();
        assert_eq!(
            names,
            vec![
                "d1.variance",
                "d1.length_scale",
                "d2.s1.variance",
                "d2.s1.length_scale",
                "noise_variance",
            ]
        );
    }

    #[test]
    fn build_kernel_consumes_whole_vector() {
        let spec = ModelSpec::String(StringSpec::uniform(vec![0.0, 0.5, 1.0], se_spec()));
        let template = ModelTemplate::new(spec, NoiseKind::Homoskedastic).unwrap();
        let k = template.build_kernel(&[1.0, 0.3, 2.0, 0.2]).unwrap();
        assert_eq!(k.dim(), 1);
        assert!(template.build_kernel(&[1.0, 0.3, 2.0]).is_err());
    }

    #[test]
    fn per_string_noise_requires_string_model() {
        let err = ModelTemplate::new(ModelSpec::Kernel(se_spec()), NoiseKind::PerString)
            .err()
            .unwrap();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn search_overrides_match_full_and_leaf_names() {
        let spec = ModelSpec::String(StringSpec::uniform(vec![0.0, 0.5, 1.0], se_spec()));
        let template = ModelTemplate::new(spec, NoiseKind::Homoskedastic).unwrap();
        let stats = DataStats::new(&[vec![0.1], vec![0.9]], &[1.0, -1.0]);
        let mut specs = template.param_specs(&stats).unwrap();
        let mut tuning = SearchTuning::for_dim(specs.len());
        let cfg = SearchConfig {
            restarts: Some(5),
            bounds: [("length_scale".to_string(), (0.01, 0.2))].into(),
            seeds: [("s2.variance".to_string(), vec![3.0])].into(),
            penalized: vec!["length_scale".to_string()],
            ..SearchConfig::default()
        };
        apply_search_config(&mut specs, &mut tuning, &cfg);
        assert_eq!(tuning.restarts, 5);
        let ls1 = specs.iter().find(|p| p.name == "s1.length_scale").unwrap();
        assert_eq!((ls1.lo, ls1.hi), (0.01, 0.2));
        assert!(ls1.penalized);
        let v2 = specs.iter().find(|p| p.name == "s2.variance").unwrap();
        assert_eq!(v2.seeds, vec![3.0]);
        let v1 = specs.iter().find(|p| p.name == "s1.variance").unwrap();
        assert!(!v1.penalized);
    }

    #[test]
    fn searched_fit_recovers_simple_curve() {
        // Smooth sine on [0, 1]; a searched SE fit should interpolate well.
        let xs: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64 / 39.0]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (2.0 * std::f64::consts::PI * x[0]).sin())
            .collect();
        let cfg = ModelConfig {
            name: "se".into(),
            model: ModelSpec::Kernel(se_spec()),
            noise: NoiseKind::Homoskedastic,
            search: Some(SearchConfig {
                restarts: Some(2),
                max_evals: Some(300),
                ..SearchConfig::default()
            }),
        };
        let (model, params, lml) = fit_model_config(&cfg, &xs, &ys, 7, |_| {}).unwrap();
        assert!(lml.is_finite());
        assert!(params.contains_key("length_scale"));
        let preds = model.predict(&[vec![0.125]]).unwrap();
        assert!((preds[0].mean - (std::f64::consts::PI / 4.0).sin()).abs() < 0.05);
    }

    #[test]
    fn experts_fit_names_parameters_by_segment() {
        let xs: Vec<Vec<f64>> = (0..30).map(|i| vec![i as f64 / 29.0]).collect();
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| if x[0] < 0.5 { 1.0 + x[0] } else { -2.0 })
            .collect();
        let es = ExpertsSpec {
            boundaries: vec![0.0, 0.5, 1.0],
            base: se_spec(),
        };
        let tuning = SearchTuning {
            restarts: 1,
            max_evals: 150,
            tol: 1e-6,
            penalty: 0.0,
            seed: 3,
            gradient_polish: false,
        };
        let (model, params) = fit_experts(&es, &xs, &ys, None, &tuning).unwrap();
        assert!(params.contains_key("g1.noise_variance"));
        assert!(params.contains_key("g2.length_scale"));
        let preds = model.predict(&[vec![0.25], vec![0.75]]).unwrap();
        assert!((preds[0].mean - 1.25).abs() < 0.2);
        assert!((preds[1].mean + 2.0).abs() < 0.2);
    }
}
