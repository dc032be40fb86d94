//! Marginal-likelihood hyperparameter search.
//!
//! The search works in log space (all hyperparameters are positive) inside
//! a box, with a clamped Nelder-Mead simplex restarted from deterministic
//! seed points and log-uniform random starts. Restarts run in parallel but
//! each owns a fixed RNG stream, so results are reproducible regardless of
//! thread scheduling. Objectives return the log marginal likelihood and
//! may return -inf (or NaN, treated the same) for configurations that fail
//! to build or factorize.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::regression::{Kernel, Posterior, Prediction};
use crate::string_gp::Partition;

/// One searchable hyperparameter: natural-space bounds, optional seed
/// values for early restarts, and whether it enters the L2 penalty on log
/// values.
#[derive(Debug, Clone)]
pub struct ParamSpec {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub seeds: Vec<f64>,
    pub penalized: bool,
}

impl ParamSpec {
    pub fn new(name: impl Into<String>, lo: f64, hi: f64) -> Self {
        Self {
            name: name.into(),
            lo,
            hi,
            seeds: Vec::new(),
            penalized: false,
        }
    }

    pub fn with_seeds(mut self, seeds: Vec<f64>) -> Self {
        self.seeds = seeds;
        self
    }

    pub fn penalized(mut self) -> Self {
        self.penalized = true;
        self
    }
}

/// Search configuration.
#[derive(Debug, Clone)]
pub struct SearchSpec {
    pub params: Vec<ParamSpec>,
    pub restarts: usize,
    /// Objective evaluation budget per restart.
    pub max_evals: usize,
    /// Stop a restart when the simplex objective spread falls below this.
    pub tol: f64,
    /// Weight of the L2 penalty on penalized log parameters.
    pub penalty: f64,
    pub seed: u64,
    /// Polish the best point with finite-difference gradient ascent.
    pub gradient_polish: bool,
}

impl SearchSpec {
    pub fn new(params: Vec<ParamSpec>) -> Self {
        Self {
            params,
            restarts: 4,
            max_evals: 600,
            tol: 1e-7,
            penalty: 0.0,
            seed: 0,
            gradient_polish: false,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::Config("search space has no parameters".into()));
        }
        for p in &self.params {
            if !(p.lo.is_finite() && p.hi.is_finite()) || p.lo <= 0.0 || p.lo >= p.hi {
                return Err(Error::Config(format!(
                    "parameter {}: bounds must satisfy 0 < lo < hi, got [{}, {}]",
                    p.name, p.lo, p.hi
                )));
            }
            for &s in &p.seeds {
                if !s.is_finite() || s <= 0.0 {
                    return Err(Error::Config(format!(
                        "parameter {}: seed values must be positive, got {s}",
                        p.name
                    )));
                }
            }
        }
        if self.restarts == 0 {
            return Err(Error::Config("need at least one restart".into()));
        }
        if self.max_evals < self.params.len() + 2 {
            return Err(Error::Config("evaluation budget too small".into()));
        }
        Ok(())
    }
}

/// Outcome of one restart.
#[derive(Debug, Clone)]
pub struct RestartTrace {
    pub restart: usize,
    pub start: Vec<f64>,
    pub best: Vec<f64>,
    pub objective: f64,
    pub evals: usize,
}

/// Best point found by [`optimize`].
#[derive(Debug, Clone)]
pub struct FitResult {
    /// Best point in log space, aligned with the search parameters.
    pub log_params: Vec<f64>,
    /// The same point in natural space.
    pub params: Vec<f64>,
    /// Penalized objective at the best point.
    pub objective: f64,
    /// Raw objective (log marginal likelihood) at the best point.
    pub log_marginal: f64,
    pub traces: Vec<RestartTrace>,
}

fn clamp_into(x: &mut [f64], lo: &[f64], hi: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lo[i], hi[i]);
        debug_assert!(x[i].is_finite());
    }
}

/// Maximize `objective` (log-space arguments) over the search box.
pub fn optimize<F>(objective: F, spec: &SearchSpec) -> Result<FitResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    spec.validate()?;
    let d = spec.params.len();
    let log_lo: Vec<f64> = spec.params.iter().map(|p| p.lo.ln()).collect();
    let log_hi: Vec<f64> = spec.params.iter().map(|p| p.hi.ln()).collect();

    let penalized: Vec<bool> = spec.params.iter().map(|p| p.penalized).collect();
    let pen_obj = |v: &[f64]| -> f64 {
        let raw = objective(v);
        let raw = if raw.is_nan() { f64::NEG_INFINITY } else { raw };
        if spec.penalty == 0.0 {
            return raw;
        }
        let pen: f64 = v
            .iter()
            .zip(&penalized)
            .filter(|(_, &p)| p)
            .map(|(x, _)| x * x)
            .sum();
        raw - spec.penalty * pen
    };

    let traces: Vec<RestartTrace> = (0..spec.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
            rng.set_stream(r as u64 + 1);
            let mut start = Vec::with_capacity(d);
            for (j, p) in spec.params.iter().enumerate() {
                let v = if r < p.seeds.len() {
                    p.seeds[r].ln().clamp(log_lo[j], log_hi[j])
                } else {
                    rng.random_range(log_lo[j]..log_hi[j])
                };
                start.push(v);
            }
            let (best, objective_val, evals) = nelder_mead(
                &pen_obj,
                &start,
                &log_lo,
                &log_hi,
                spec.max_evals,
                spec.tol,
            );
            RestartTrace {
                restart: r,
                start,
                best,
                objective: objective_val,
                evals,
            }
        })
        .collect();

    let winner = traces
        .iter()
        .max_by(|a, b| {
            a.objective
                .partial_cmp(&b.objective)
                .unwrap()
                .then(b.restart.cmp(&a.restart))
        })
        .unwrap();
    let mut best = winner.best.clone();
    let mut best_obj = winner.objective;

    if spec.gradient_polish && best_obj.is_finite() {
        let (polished, polished_obj) =
            gradient_ascent(&pen_obj, &best, &log_lo, &log_hi, 40);
        if polished_obj > best_obj {
            best = polished;
            best_obj = polished_obj;
        }
    }

    if !best_obj.is_finite() {
        return Err(Error::OptimizationFailed(
            "no restart produced a finite objective".into(),
        ));
    }

    let raw = objective(&best);
    Ok(FitResult {
        params: best.iter().map(|v| v.exp()).collect(),
        log_params: best,
        objective: best_obj,
        log_marginal: raw,
        traces,
    })
}

/// Clamped Nelder-Mead maximization. Returns (best point, best objective,
/// evaluations used).
fn nelder_mead<F>(
    obj: &F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_evals: usize,
    tol: f64,
) -> (Vec<f64>, f64, usize)
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let (alpha, gamma, rho, sigma) = (1.0, 2.0, 0.5, 0.5);
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| -> f64 {
        *evals += 1;
        // Minimize the negated objective.
        let v = obj(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            -v
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(d + 1);
    simplex.push(x0.to_vec());
    for i in 0..d {
        let mut x = x0.to_vec();
        let h = 0.1 * (hi[i] - lo[i]);
        x[i] = if x[i] + h <= hi[i] { x[i] + h } else { x[i] - h };
        clamp_into(&mut x, lo, hi);
        simplex.push(x);
    }
    let mut fs: Vec<f64> = simplex.iter().map(|x| eval(x, &mut evals)).collect();

    while evals < max_evals {
        let mut order: Vec<usize> = (0..=d).collect();
        order.sort_by(|&a, &b| fs[a].partial_cmp(&fs[b]).unwrap());
        let best = order[0];
        let second_worst = order[d - 1];
        let worst = order[d];
        if fs[worst].is_finite() && (fs[worst] - fs[best]).abs() < tol {
            break;
        }

        let mut centroid = vec![0.0; d];
        for &i in order.iter().take(d) {
            for j in 0..d {
                centroid[j] += simplex[i][j] / d as f64;
            }
        }

        let mut xr = vec![0.0; d];
        for j in 0..d {
            xr[j] = centroid[j] + alpha * (centroid[j] - simplex[worst][j]);
        }
        clamp_into(&mut xr, lo, hi);
        let fr = eval(&xr, &mut evals);

        if fr < fs[best] {
            let mut xe = vec![0.0; d];
            for j in 0..d {
                xe[j] = centroid[j] + gamma * (centroid[j] - simplex[worst][j]);
            }
            clamp_into(&mut xe, lo, hi);
            let fe = eval(&xe, &mut evals);
            if fe < fr {
                simplex[worst] = xe;
                fs[worst] = fe;
            } else {
                simplex[worst] = xr;
                fs[worst] = fr;
            }
        } else if fr < fs[second_worst] {
            simplex[worst] = xr;
            fs[worst] = fr;
        } else {
            // Outside contraction against the reflected point when it
            // improved on the worst vertex, inside contraction otherwise.
            let (mut xc, f_ref) = if fr < fs[worst] {
                let mut xc = vec![0.0; d];
                for j in 0..d {
                    xc[j] = centroid[j] + rho * (xr[j] - centroid[j]);
                }
                (xc, fr)
            } else {
                let mut xc = vec![0.0; d];
                for j in 0..d {
                    xc[j] = centroid[j] + rho * (simplex[worst][j] - centroid[j]);
                }
                (xc, fs[worst])
            };
            clamp_into(&mut xc, lo, hi);
            let fc = eval(&xc, &mut evals);
            if fc < f_ref {
                simplex[worst] = xc;
                fs[worst] = fc;
            } else {
                for &i in order.iter().skip(1) {
                    for j in 0..d {
                        simplex[i][j] =
                            simplex[best][j] + sigma * (simplex[i][j] - simplex[best][j]);
                    }
                    let xi = simplex[i].clone();
                    fs[i] = eval(&xi, &mut evals);
                }
            }
        }
    }

    let mut best_i = 0;
    for i in 1..=d {
        if fs[i] < fs[best_i] {
            best_i = i;
        }
    }
    (simplex[best_i].clone(), -fs[best_i], evals)
}

/// Central finite-difference gradient ascent with halving line search.
fn gradient_ascent<F>(
    obj: &F,
    x0: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_steps: usize,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64,
{
    let d = x0.len();
    let h = 1e-4;
    let mut x = x0.to_vec();
    let mut fx = obj(&x);
    for _ in 0..max_steps {
        let mut g = vec![0.0; d];
        for j in 0..d {
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] = (xp[j] + h).min(hi[j]);
            xm[j] = (xm[j] - h).max(lo[j]);
            let denom = xp[j] - xm[j];
            if denom <= 0.0 {
                continue;
            }
            g[j] = (obj(&xp) - obj(&xm)) / denom;
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !gnorm.is_finite() || gnorm < 1e-10 {
            break;
        }
        let mut t = 1.0 / gnorm.max(1.0);
        let mut moved = false;
        for _ in 0..20 {
            let mut xt = x.clone();
            for j in 0..d {
                xt[j] += t * g[j];
            }
            clamp_into(&mut xt, lo, hi);
            let ft = obj(&xt);
            if ft > fx {
                x = xt;
                fx = ft;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

/// Independent GP experts on the segments of a partition, each trained
/// only on its own segment's data, with predictions routed by location.
pub struct IndependentExperts<K: Kernel> {
    partition: Partition,
    experts: Vec<Posterior<K>>,
}

/// Split 1-D data by segment and fit one expert per segment.
///
/// `fitter` receives the 1-based segment index and that segment's
/// training subset. Every segment must contain at least one point.
pub fn fit_independent_experts<K, F>(
    partition: Partition,
    xs: &[Vec<f64>],
    ys: &[f64],
    fitter: F,
) -> Result<IndependentExperts<K>>
where
    K: Kernel,
    F: Fn(usize, &[Vec<f64>], &[f64]) -> Result<Posterior<K>>,
{
    if xs.len() != ys.len() {
        return Err(Error::DimMismatch {
            context: "observations",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let n_seg = partition.num_strings();
    let mut seg_xs: Vec<Vec<Vec<f64>>> = vec![Vec::new(); n_seg];
    let mut seg_ys: Vec<Vec<f64>> = vec![Vec::new(); n_seg];
    for (u, &y) in xs.iter().zip(ys) {
        if u.len() != 1 {
            return Err(Error::DimMismatch {
                context: "independent experts input",
                expected: 1,
                got: u.len(),
            });
        }
        let s = partition.locate_string(u[0])?;
        seg_xs[s - 1].push(u.clone());
        seg_ys[s - 1].push(y);
    }
    let mut experts = Vec::with_capacity(n_seg);
    for s in 1..=n_seg {
        if seg_xs[s - 1].is_empty() {
            return Err(Error::Config(format!(
                "segment {s} has no training data; refit with fewer segments"
            )));
        }
        experts.push(fitter(s, &seg_xs[s - 1], &seg_ys[s - 1])?);
    }
    Ok(IndependentExperts { partition, experts })
}

impl<K: Kernel> IndependentExperts<K> {
    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn experts(&self) -> &[Posterior<K>] {
        &self.experts
    }

    /// Sum of the experts' marginal likelihoods; the experts are
    /// independent, so this is the model's joint marginal likelihood.
    pub fn log_marginal_likelihood(&self) -> f64 {
        self.experts
            .iter()
            .map(|e| e.log_marginal_likelihood())
            .sum()
    }

    /// Route each query to the expert owning its segment.
    pub fn predict(&self, xs_star: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        let mut out = Vec::with_capacity(xs_star.len());
        for u in xs_star {
            if u.len() != 1 {
                return Err(Error::DimMismatch {
                    context: "independent experts input",
                    expected: 1,
                    got: u.len(),
                });
            }
            let s = self.partition.locate_string(u[0])?;
            let p = self.experts[s - 1].predict(std::slice::from_ref(u))?;
            out.push(p[0]);
        }
        Ok(out)
    }

    /// Sum of pointwise predictive log densities, routed by segment.
    pub fn predictive_log_likelihood(&self, xs_star: &[Vec<f64>], ys_star: &[f64]) -> Result<f64> {
        if xs_star.len() != ys_star.len() {
            return Err(Error::DimMismatch {
                context: "held-out observations",
                expected: xs_star.len(),
                got: ys_star.len(),
            });
        }
        let preds = self.predict(xs_star)?;
        let mut total = 0.0;
        for (p, &y) in preds.iter().zip(ys_star) {
            let var = p.predictive_var();
            if var <= 0.0 {
                return Err(Error::IllConditioned {
                    context: "zero predictive variance",
                });
            }
            let z = y - p.mean;
            total += -0.5 * (z * z / var + var.ln() + (2.0 * std::f64::consts::PI).ln());
        }
        Ok(total)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DerivativeKernel;
    use crate::regression::{fit, NoiseModel};
    use approx::assert_relative_eq;

    fn quad_spec(restarts: usize) -> SearchSpec {
        let mut s = SearchSpec::new(vec![
            ParamSpec::new("a", 1e-3, 1e3),
            ParamSpec::new("b", 1e-3, 1e3),
        ]);
        s.restarts = restarts;
        s.max_evals = 400;
        s.seed = 17;
        s
    }

    #[test]
    fn finds_quadratic_maximum() {
        // Maximum at log params (1.0, -0.5), well inside the box.
        let f = |v: &[f64]| -((v[0] - 1.0).powi(2)) - 2.0 * (v[1] + 0.5).powi(2);
        let res = optimize(f, &quad_spec(4)).unwrap();
        assert_relative_eq!(res.log_params[0], 1.0, epsilon = 1e-3);
        assert_relative_eq!(res.log_params[1], -0.5, epsilon = 1e-3);
        assert!(res.objective > -1e-5);
    }

    #[test]
    fn clamps_to_bounds_when_optimum_outside() {
        let mut spec = SearchSpec::new(vec![ParamSpec::new("a", 0.5, 2.0)]);
        spec.restarts = 2;
        spec.max_evals = 200;
        // Increasing objective pushes to the upper bound.
        let f = |v: &[f64]| v[0];
        let res = optimize(f, &spec).unwrap();
        assert_relative_eq!(res.log_params[0], 2.0f64.ln(), epsilon = 1e-6);
    }

    #[test]
    fn deterministic_across_runs() {
        let f = |v: &[f64]| -(v[0].powi(2)) - (v[1] - 0.3).powi(2);
        let a = optimize(f, &quad_spec(6)).unwrap();
        let b = optimize(f, &quad_spec(6)).unwrap();
        assert_eq!(a.log_params, b.log_params);
        assert_eq!(a.objective, b.objective);
    }

    #[test]
    fn penalty_pulls_toward_unit_scale() {
        let f = |v: &[f64]| -((v[0] - 2.0).powi(2));
        let mut spec = SearchSpec::new(vec![ParamSpec::new("l", 1e-3, 1e3).penalized()]);
        spec.restarts = 2;
        spec.max_evals = 300;
        spec.penalty = 0.0;
        let free = optimize(f, &spec).unwrap();
        spec.penalty = 10.0;
        let pulled = optimize(f, &spec).unwrap();
        assert_relative_eq!(free.log_params[0], 2.0, epsilon = 1e-3);
        assert!(pulled.log_params[0] < 0.5, "penalty should shrink the scale");
        // Raw objective is reported unpenalized.
        assert_relative_eq!(
            pulled.log_marginal,
            f(&pulled.log_params),
            epsilon = 1e-12
        );
    }

    #[test]
    fn seeds_drive_early_restarts() {
        // Objective with a sharp basin only a seeded start will find
        // within the tiny budget.
        let f = |v: &[f64]| -((v[0] - 4.0).powi(2)) * 100.0;
        let mut spec = SearchSpec::new(vec![
            ParamSpec::new("p", 1e-3, 1e3).with_seeds(vec![4.0f64.exp()]),
        ]);
        spec.restarts = 1;
        spec.max_evals = 60;
        let res = optimize(f, &spec).unwrap();
        assert_relative_eq!(res.log_params[0], 4.0, epsilon = 1e-2);
    }

    #[test]
    fn failing_configurations_are_skipped() {
        // Objective is -inf on half the box; the optimizer must still
        // land in the feasible half.
        let f = |v: &[f64]| {
            if v[0] > 0.0 {
                f64::NEG_INFINITY
            } else {
                -(v[0] + 1.0).powi(2)
            }
        };
        let mut spec = SearchSpec::new(vec![ParamSpec::new("a", 1e-2, 1e2)]);
        spec.restarts = 4;
        spec.max_evals = 300;
        spec.seed = 3;
        let res = optimize(f, &spec).unwrap();
        assert!(res.log_params[0] <= 0.0);
        assert!(res.objective > -0.1);
    }

    #[test]
    fn independent_experts_route_by_segment() {
        let partition = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let xs: Vec<Vec<f64>> = [0.1, 0.2, 0.4, 0.6, 0.8, 0.95]
            .iter()
            .map(|&v| vec![v])
            .collect();
        // Left segment near -1, right segment near +1.
        let ys = [-1.0, -1.1, -0.9, 1.0, 1.1, 0.9];
        let experts = fit_independent_experts(partition, &xs, &ys, |_, sx, sy| {
            fit(
                DerivativeKernel::squared_exponential(1.0, 0.2).unwrap(),
                sx,
                sy,
                NoiseModel::Homoskedastic { variance: 0.01 },
            )
        })
        .unwrap();
        let preds = experts.predict(&[vec![0.3], vec![0.7]]).unwrap();
        assert!(preds[0].mean < -0.5, "left expert should dominate: {}", preds[0].mean);
        assert!(preds[1].mean > 0.5, "right expert should dominate: {}", preds[1].mean);
        let pll = experts
            .predictive_log_likelihood(&[vec![0.3], vec![0.7]], &[-1.0, 1.0])
            .unwrap();
        assert!(pll.is_finite());
    }

    #[test]
    fn empty_segment_is_an_error() {
        let partition = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        let xs: Vec<Vec<f64>> = vec![vec![0.1], vec![0.2]];
        let ys = [1.0, 2.0];
        let res = fit_independent_experts(partition, &xs, &ys, |_, sx, sy| {
            fit(
                DerivativeKernel::squared_exponential(1.0, 0.2).unwrap(),
                sx,
                sy,
                NoiseModel::Homoskedastic { variance: 0.01 },
            )
        });
        assert!(matches!(res.err(), Some(Error::Config(_))));
    }
}
