//! Command-line interface: sampling, kernel evaluation, fitting,
//! prediction, experiments, and report re-emission.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use stringgp::sampler::PathSampler;

use crate::config::{
    check_schema, read_json, write_json, FitConfig, FitResultJson, KernelEvalConfig, ModelSpec,
    SampleConfig,
};
use crate::data::GridSpec;
use crate::error::{Error, Result};
use crate::experiment::{load_dataset, run_named, seed_overrides};
use crate::model::{
    apply_search_config, fit_searched, BuiltModel, DataStats, ModelTemplate, SearchTuning,
};
use crate::report::{emit_report, ExperimentReport, Format};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
    Plotdata,
    All,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Format {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
            FormatArg::Plotdata => Format::Plotdata,
            FormatArg::All => Format::All,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "stringgp",
    about = "String Gaussian process sampling, regression, and experiments",
    version
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Override the seed from the config or preset.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory for output files.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// Which output files to write.
    #[arg(long, global = true, value_enum, default_value_t = FormatArg::All)]
    format: FormatArg,

    /// JSON config file (sample, kernel-eval, fit, and predict need one).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Draw joint (value, derivative) sample paths of a string GP.
    Sample,
    /// Tabulate a kernel's value and derivative blocks over a grid.
    KernelEval,
    /// Search hyperparameters on a dataset and write the fit result.
    Fit,
    /// Fit (or take given parameters) and predict on a grid.
    Predict,
    /// Run a named preset (f0, f1, f2, f3, motorcycle, temperature,
    /// gradient) or an experiment config file.
    Experiment { target: String },
    /// Re-emit an existing report.json in the chosen format.
    Report { input: PathBuf },
}

/// Parse the process arguments and run the selected command.
pub fn run() -> Result<()> {
    let cli = Cli::parse();
    dispatch(cli)
}

fn dispatch(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out_dir).map_err(|e| Error::io(&cli.out_dir, e))?;
    match &cli.command {
        Command::Sample => sample_cmd(&cli),
        Command::KernelEval => kernel_eval_cmd(&cli),
        Command::Fit => fit_cmd(&cli),
        Command::Predict => predict_cmd(&cli),
        Command::Experiment { target } => {
            let report = run_named(target, cli.seed)?;
            let dir = cli.out_dir.join(&report.name);
            let files = emit_report(&report, &dir, cli.format.into())?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
        Command::Report { input } => {
            let report: ExperimentReport = read_json(input)?;
            check_schema(report.schema)?;
            let files = emit_report(&report, &cli.out_dir, cli.format.into())?;
            for f in files {
                println!("{}", f.display());
            }
            Ok(())
        }
    }
}

fn require_config<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<T> {
    let path = cli
        .config
        .as_ref()
        .ok_or_else(|| Error::Config("this subcommand needs --config <file.json>".into()))?;
    read_json(path)
}

fn line_grid(grid: &GridSpec) -> Result<Vec<f64>> {
    match grid {
        GridSpec::Line { lo, hi, step } => {
            let n = ((hi - lo) / step).round() as usize;
            if !(step > &0.0) || n == 0 {
                return Err(Error::Config("grid needs a positive step and span".into()));
            }
            Ok((0..=n).map(|i| lo + i as f64 * step).collect())
        }
        GridSpec::Mesh { .. } => Err(Error::Config("this subcommand needs a line grid".into())),
    }
}

fn grid_points(grid: &GridSpec, dim: usize) -> Result<Vec<Vec<f64>>> {
    match (grid, dim) {
        (GridSpec::Line { .. }, 1) => Ok(line_grid(grid)?.into_iter().map(|x| vec![x]).collect()),
        (GridSpec::Mesh { step }, 2) => {
            let axis = line_grid(&GridSpec::Line {
                lo: 0.0,
                hi: 1.0,
                step: *step,
            })?;
            Ok(axis
                .iter()
                .flat_map(|&u| axis.iter().map(move |&v| vec![u, v]))
                .collect())
        }
        _ => Err(Error::Config(format!(
            "grid kind does not match the model's {dim}-D input"
        ))),
    }
}

fn write_csv_file<F>(path: &Path, build: F) -> Result<()>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    build(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Config(format!("csv buffer: {e}")))?;
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn sample_cmd(cli: &Cli) -> Result<()> {
    let cfg: SampleConfig = require_config(cli)?;
    check_schema(cfg.schema)?;
    if cfg.draws == 0 {
        return Err(Error::Config("draws must be at least 1".into()));
    }
    let gp = cfg.string.to_string_gp()?;
    let xs = line_grid(&cfg.grid)?;
    let sampler = PathSampler::new(&gp, &xs)?;
    let mut rng = ChaCha12Rng::seed_from_u64(cli.seed.unwrap_or(cfg.seed));
    let path = cli.out_dir.join("samples.csv");
    write_csv_file(&path, |w| {
        w.write_record(["time", "z", "z_prime", "string_index", "draw_id"])?;
        for draw_id in 0..cfg.draws {
            let draw = sampler.draw(&mut rng);
            for ((t, z), zp) in draw.xs.iter().zip(&draw.values).zip(&draw.derivs) {
                let string = gp.partition().locate_string(*t)?;
                w.write_record([
                    t.to_string(),
                    z.to_string(),
                    zp.to_string(),
                    string.to_string(),
                    draw_id.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    println!("{}", path.display());
    Ok(())
}

fn kernel_eval_cmd(cli: &Cli) -> Result<()> {
    let cfg: KernelEvalConfig = require_config(cli)?;
    check_schema(cfg.schema)?;
    let xs = line_grid(&cfg.grid)?;
    let block: Box<dyn Fn(f64, f64) -> Result<[f64; 4]>> = match &cfg.model {
        ModelSpec::Kernel(ks) => {
            let k = ks.to_kernel()?;
            Box::new(move |x, y| {
                let b = k.eval_block(x, y)?;
                Ok([b[(0, 0)], b[(1, 0)], b[(0, 1)], b[(1, 1)]])
            })
        }
        ModelSpec::String(ss) => {
            let gp = ss.to_string_gp()?;
            Box::new(move |x, y| {
                let b = gp.cov_block(x, y)?;
                Ok([b[(0, 0)], b[(1, 0)], b[(0, 1)], b[(1, 1)]])
            })
        }
        ModelSpec::Product(_) | ModelSpec::Experts(_) => {
            return Err(Error::Config(
                "kernel-eval tabulates 1-D kernels and string GPs only".into(),
            ))
        }
    };
    let path = cli.out_dir.join("kernel.csv");
    write_csv_file(&path, |w| {
        w.write_record(["x", "y", "value", "dvalue_dx", "dvalue_dy", "d2value_dxdy"])?;
        for &x in &xs {
            for &y in &xs {
                let [v, dx, dy, dxy] = block(x, y)?;
                w.write_record([
                    x.to_string(),
                    y.to_string(),
                    v.to_string(),
                    dx.to_string(),
                    dy.to_string(),
                    dxy.to_string(),
                ])?;
            }
        }
        Ok(())
    })?;
    println!("{}", path.display());
    Ok(())
}

/// Shared search path for `fit` and `predict`: data-driven seeds plus
/// config overrides, then the multistart optimizer.
fn searched_fit_from_config(
    cfg: &FitConfig,
    xs: &[Vec<f64>],
    ys: &[f64],
    seed: u64,
) -> Result<(crate::model::SearchedFit, Vec<String>)> {
    if matches!(cfg.model, ModelSpec::Experts(_)) {
        return Err(Error::Config(
            "fit/predict cover kernel, string, and product models; experts run inside experiments"
                .into(),
        ));
    }
    let template = ModelTemplate::new(cfg.model.clone(), cfg.noise)?;
    let stats = DataStats::new(xs, ys);
    let mut specs = template.param_specs(&stats)?;
    let mut tuning = SearchTuning::for_dim(specs.len());
    tuning.seed = seed;
    if let Some(search) = &cfg.search {
        apply_search_config(&mut specs, &mut tuning, search);
    }
    let overrides = seed_overrides(&cfg.model, cfg.noise, xs, ys);
    for spec in specs.iter_mut() {
        if let Some(seeds) = overrides.get(&spec.name) {
            let mut merged = seeds.clone();
            merged.extend(spec.seeds.first().copied());
            spec.seeds = merged;
        }
    }
    let names: Vec<String> = specs.iter().map(|s| s.name.clone()).collect();
    let fitted = fit_searched(&template, xs, ys, specs, &tuning)?;
    Ok((fitted, names))
}

fn fit_cmd(cli: &Cli) -> Result<()> {
    let cfg: FitConfig = require_config(cli)?;
    check_schema(cfg.schema)?;
    let ds = load_dataset(&cfg.dataset)?;
    let seed = cli.seed.unwrap_or(cfg.seed);
    let (fitted, names) = searched_fit_from_config(&cfg, ds.inputs(), ds.targets(), seed)?;
    let path = cli.out_dir.join("fit.json");
    write_json(&path, &FitResultJson::new(&names, &fitted.result))?;
    println!("{}", path.display());
    Ok(())
}

fn predict_cmd(cli: &Cli) -> Result<()> {
    let cfg: FitConfig = require_config(cli)?;
    check_schema(cfg.schema)?;
    let ds = load_dataset(&cfg.dataset)?;
    let grid = cfg
        .predict_grid
        .as_ref()
        .ok_or_else(|| Error::Config("predict needs a predict_grid".into()))?;
    let points = grid_points(grid, cfg.model.input_dim())?;
    let model = match &cfg.params {
        Some(map) => {
            // Explicit parameters: condition directly, no search.
            let template = ModelTemplate::new(cfg.model.clone(), cfg.noise)?;
            let stats = DataStats::new(ds.inputs(), ds.targets());
            let specs = template.param_specs(&stats)?;
            let mut vals = Vec::with_capacity(specs.len());
            for spec in &specs {
                match map.get(&spec.name) {
                    Some(&v) => vals.push(v),
                    None => {
                        return Err(Error::Config(format!("missing parameter {}", spec.name)))
                    }
                }
            }
            if map.len() != specs.len() {
                let known: Vec<&String> = specs.iter().map(|s| &s.name).collect();
                return Err(Error::Config(format!(
                    "unknown parameters present; expected exactly {known:?}"
                )));
            }
            BuiltModel::Gp(template.fit_at(ds.inputs(), ds.targets(), &vals)?)
        }
        None => {
            let seed = cli.seed.unwrap_or(cfg.seed);
            searched_fit_from_config(&cfg, ds.inputs(), ds.targets(), seed)?
                .0
                .model
        }
    };
    let preds = model.predict(&points)?;
    let path = cli.out_dir.join("predictions.csv");
    let two_d = cfg.model.input_dim() == 2;
    write_csv_file(&path, |w| {
        if two_d {
            w.write_record(["x", "y", "mean", "latent_std", "predictive_std", "lo", "hi"])?;
        } else {
            w.write_record(["x", "mean", "latent_std", "predictive_std", "lo", "hi"])?;
        }
        for (p, pr) in points.iter().zip(&preds) {
            let std = pr.predictive_var().sqrt();
            let mut row = vec![p[0].to_string()];
            if two_d {
                row.push(p[1].to_string());
            }
            row.extend([
                pr.mean.to_string(),
                pr.latent_var.sqrt().to_string(),
                std.to_string(),
                (pr.mean - 2.0 * std).to_string(),
                (pr.mean + 2.0 * std).to_string(),
            ]);
            w.write_record(&row)?;
        }
        Ok(())
    })?;
    println!("{}", path.display());
    Ok(())
}
