//! Exact Gaussian process regression against any covariance that exposes a
//! gram interface, including posterior gradients for kernels that carry
//! analytic derivative information.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernels::DerivativeKernel;
use crate::linalg::cholesky_jittered;
use crate::string_gp::StringGp;

/// Covariance interface consumed by the regression layer.
///
/// Points are slices of length [`Kernel::dim`]. Derivative queries follow
/// the convention `value_deriv(u, v, j) = d k(u, v) / d v_j` and
/// `deriv_deriv(u, v, i, j) = d^2 k(u, v) / (d u_i d v_j)`.
pub trait Kernel: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, u: &[f64], v: &[f64]) -> Result<f64>;

    fn value_deriv(&self, u: &[f64], v: &[f64], j: usize) -> Result<f64>;

    fn deriv_deriv(&self, u: &[f64], v: &[f64], i: usize, j: usize) -> Result<f64>;

    fn derivatives_supported(&self) -> bool {
        true
    }

    fn mean(&self, _u: &[f64]) -> Result<f64> {
        Ok(0.0)
    }

    fn mean_deriv(&self, _u: &[f64], _j: usize) -> Result<f64> {
        Ok(0.0)
    }

    /// 1-based string index for partitioned kernels, None otherwise.
    fn string_index(&self, _u: &[f64]) -> Result<Option<usize>> {
        Ok(None)
    }

    /// Dense gram matrix over `xs`. Implementations with cheap batched
    /// structure should override this.
    fn gram(&self, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let v = self.value(&xs[i], &xs[j])?;
                g[(i, j)] = v;
                g[(j, i)] = v;
            }
        }
        Ok(g)
    }

    /// Cross gram: entry (i, j) is k(xs[i], ys[j]).
    fn cross_gram(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let mut g = DMatrix::zeros(xs.len(), ys.len());
        for (i, u) in xs.iter().enumerate() {
            for (j, v) in ys.iter().enumerate() {
                g[(i, j)] = self.value(u, v)?;
            }
        }
        Ok(g)
    }
}

impl<T: Kernel + ?Sized> Kernel for Box<T> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        (**self).value(u, v)
    }
    fn value_deriv(&self, u: &[f64], v: &[f64], j: usize) -> Result<f64> {
        (**self).value_deriv(u, v, j)
    }
    fn deriv_deriv(&self, u: &[f64], v: &[f64], i: usize, j: usize) -> Result<f64> {
        (**self).deriv_deriv(u, v, i, j)
    }
    fn derivatives_supported(&self) -> bool {
        (**self).derivatives_supported()
    }
    fn mean(&self, u: &[f64]) -> Result<f64> {
        (**self).mean(u)
    }
    fn mean_deriv(&self, u: &[f64], j: usize) -> Result<f64> {
        (**self).mean_deriv(u, j)
    }
    fn string_index(&self, u: &[f64]) -> Result<Option<usize>> {
        (**self).string_index(u)
    }
    fn gram(&self, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        (**self).gram(xs)
    }
    fn cross_gram(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        (**self).cross_gram(xs, ys)
    }
}

fn expect_1d(u: &[f64], context: &'static str) -> Result<f64> {
    if u.len() != 1 {
        return Err(Error::DimMismatch {
            context,
            expected: 1,
            got: u.len(),
        });
    }
    Ok(u[0])
}

/// A base kernel used directly as a stationary (or plain nonstationary)
/// GP covariance on the real line.
impl Kernel for DerivativeKernel {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.eval(expect_1d(u, "kernel input")?, expect_1d(v, "kernel input")?)
    }
    fn value_deriv(&self, u: &[f64], v: &[f64], _j: usize) -> Result<f64> {
        let b = self.eval_block(expect_1d(u, "kernel input")?, expect_1d(v, "kernel input")?)?;
        Ok(b[(0, 1)])
    }
    fn deriv_deriv(&self, u: &[f64], v: &[f64], _i: usize, _j: usize) -> Result<f64> {
        let b = self.eval_block(expect_1d(u, "kernel input")?, expect_1d(v, "kernel input")?)?;
        Ok(b[(1, 1)])
    }
}

impl Kernel for StringGp {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.cov_value(expect_1d(u, "string input")?, expect_1d(v, "string input")?)
    }
    fn value_deriv(&self, u: &[f64], v: &[f64], _j: usize) -> Result<f64> {
        let b = self.cov_block(expect_1d(u, "string input")?, expect_1d(v, "string input")?)?;
        Ok(b[(0, 1)])
    }
    fn deriv_deriv(&self, u: &[f64], v: &[f64], _i: usize, _j: usize) -> Result<f64> {
        let b = self.cov_block(expect_1d(u, "string input")?, expect_1d(v, "string input")?)?;
        Ok(b[(1, 1)])
    }
    fn mean(&self, u: &[f64]) -> Result<f64> {
        Ok(self.mean_pair(expect_1d(u, "string input")?)?[0])
    }
    fn mean_deriv(&self, u: &[f64], _j: usize) -> Result<f64> {
        Ok(self.mean_pair(expect_1d(u, "string input")?)?[1])
    }
    fn string_index(&self, u: &[f64]) -> Result<Option<usize>> {
        Ok(Some(
            self.partition()
                .locate_string(expect_1d(u, "string input")?)?,
        ))
    }
    fn gram(&self, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        let flat: Vec<f64> = xs
            .iter()
            .map(|u| expect_1d(u, "string input"))
            .collect::<Result<_>>()?;
        StringGp::gram(self, &flat)
    }
}

/// Observation noise attached to the training data.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Homoskedastic { variance: f64 },
    /// One variance per string of a partitioned kernel, keyed by the
    /// 1-based string index of each input.
    PerString { variances: Vec<f64> },
}

impl NoiseModel {
    fn validate(&self) -> Result<()> {
        let all = match self {
            NoiseModel::Homoskedastic { variance } => std::slice::from_ref(variance),
            NoiseModel::PerString { variances } => variances.as_slice(),
        };
        for &v in all {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParam {
                    name: "noise variance".into(),
                    reason: format!("must be finite and non-negative, got {v}"),
                });
            }
        }
        Ok(())
    }

    fn variance_at<K: Kernel>(&self, kernel: &K, u: &[f64]) -> Result<f64> {
        match self {
            NoiseModel::Homoskedastic { variance } => Ok(*variance),
            NoiseModel::PerString { variances } => {
                let s = kernel.string_index(u)?.ok_or_else(|| {
                    Error::Config(
                        "per-string noise requires a partitioned kernel".into(),
                    )
                })?;
                variances.get(s - 1).copied().ok_or_else(|| {
                    Error::Config(format!(
                        "per-string noise has {} entries but input lies in string {s}",
                        variances.len()
                    ))
                })
            }
        }
    }
}

/// Point prediction of the latent function and the observation it
/// generates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    /// Posterior variance of the latent function value.
    pub latent_var: f64,
    /// Observation noise variance at the point.
    pub noise_var: f64,
}

impl Prediction {
    pub fn predictive_var(&self) -> f64 {
        self.latent_var + self.noise_var
    }
}

/// Posterior gradient of the latent function at one input.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientPrediction {
    pub mean: Vec<f64>,
    pub var: Vec<f64>,
}

/// Exact GP posterior: factorized training covariance plus the pieces
/// needed for prediction.
pub struct Posterior<K: Kernel> {
    kernel: K,
    noise: NoiseModel,
    xs: Vec<Vec<f64>>,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
    jitter: f64,
    lml: f64,
}

/// Maximum allowed relative residual of the training solve.
const SOLVE_RESIDUAL_TOL: f64 = 1e-8;

/// Fit an exact GP posterior to observations `(xs, ys)`.
pub fn fit<K: Kernel>(kernel: K, xs: &[Vec<f64>], ys: &[f64], noise: NoiseModel) -> Result<Posterior<K>> {
    if xs.is_empty() {
        return Err(Error::InvalidParam {
            name: "xs".into(),
            reason: "need at least one observation".into(),
        });
    }
    if xs.len() != ys.len() {
        return Err(Error::DimMismatch {
            context: "observations",
            expected: xs.len(),
            got: ys.len(),
        });
    }
    for u in xs {
        if u.len() != kernel.dim() {
            return Err(Error::DimMismatch {
                context: "input dimension",
                expected: kernel.dim(),
                got: u.len(),
            });
        }
    }
    if ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::NonFinite {
            context: "training targets",
        });
    }
    noise.validate()?;

    let n = xs.len();
    let mut k_noisy = kernel.gram(xs)?;
    for (i, u) in xs.iter().enumerate() {
        k_noisy[(i, i)] += noise.variance_at(&kernel, u)?;
    }
    let (chol, jitter) = cholesky_jittered(&k_noisy, "training covariance")?;

    let mut resid = DVector::zeros(n);
    for i in 0..n {
        resid[i] = ys[i] - kernel.mean(&xs[i])?;
    }
    let alpha = chol.solve(&resid);

    // The factorization may have been rescued by jitter; make sure the
    // solution still solves the operator we claim it does.
    let mut op_alpha = &k_noisy * &alpha;
    op_alpha.axpy(jitter, &alpha, 1.0);
    let rel = (&op_alpha - &resid).norm() / resid.norm().max(1e-300);
    if rel > SOLVE_RESIDUAL_TOL {
        return Err(Error::IllConditioned {
            context: "training solve residual",
        });
    }

    let log_det_half: f64 = (0..n).map(|i| chol.l_dirty()[(i, i)].ln()).sum();
    let lml = -0.5 * resid.dot(&alpha)
        - log_det_half
        - 0.5 * n as f64 * (2.0 * std::f64::consts::PI).ln();

    Ok(Posterior {
        kernel,
        noise,
        xs: xs.to_vec(),
        chol,
        alpha,
        jitter,
        lml,
    })
}

impl<K: Kernel> Posterior<K> {
    pub fn kernel(&self) -> &K {
        &self.kernel
    }

    pub fn noise(&self) -> &NoiseModel {
        &self.noise
    }

    /// Jitter added to make the training covariance factorizable.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    pub fn log_marginal_likelihood(&self) -> f64 {
        self.lml
    }

    /// Posterior mean and variance at each query point.
    pub fn predict(&self, xs_star: &[Vec<f64>]) -> Result<Vec<Prediction>> {
        let ks = self.kernel.cross_gram(&self.xs, xs_star)?;
        let v = self.chol.solve(&ks);
        let mut out = Vec::with_capacity(xs_star.len());
        for (j, u) in xs_star.iter().enumerate() {
            let col = ks.column(j);
            let mean = self.kernel.mean(u)? + col.dot(&self.alpha);
            let prior = self.kernel.value(u, u)?;
            let latent_var = (prior - col.dot(&v.column(j))).max(0.0);
            let noise_var = self.noise.variance_at(&self.kernel, u)?;
            out.push(Prediction {
                mean,
                latent_var,
                noise_var,
            });
        }
        Ok(out)
    }

    /// Posterior mean and variance of each partial derivative of the
    /// latent function at each query point.
    pub fn predict_gradient(&self, xs_star: &[Vec<f64>]) -> Result<Vec<GradientPrediction>> {
        if !self.kernel.derivatives_supported() {
            return Err(Error::DerivativesUnsupported {
                kernel: "posterior kernel".into(),
            });
        }
        let d = self.kernel.dim();
        let n = self.xs.len();
        let mut out = Vec::with_capacity(xs_star.len());
        for u in xs_star {
            let mut mean = Vec::with_capacity(d);
            let mut var = Vec::with_capacity(d);
            for j in 0..d {
                let mut c = DVector::zeros(n);
                for (i, x) in self.xs.iter().enumerate() {
                    c[i] = self.kernel.value_deriv(x, u, j)?;
                }
                let mj = self.kernel.mean_deriv(u, j)? + c.dot(&self.alpha);
                let prior = self.kernel.deriv_deriv(u, u, j, j)?;
                let w = self.chol.solve(&c);
                mean.push(mj);
                var.push((prior - c.dot(&w)).max(0.0));
            }
            out.push(GradientPrediction { mean, var });
        }
        Ok(out)
    }

    /// Sum of pointwise predictive log densities of held-out observations.
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
    use crate::string_gp::StringKernel;
    use approx::assert_relative_eq;

    fn xs1(vals: &[f64]) -> Vec<Vec<f64>> {
        vals.iter().map(|&v| vec![v]).collect()
    }

    #[test]
    fn near_interpolation_with_tiny_noise() {
        let k = DerivativeKernel::squared_exponential(1.0, 0.4).unwrap();
        let xs = xs1(&[0.0, 0.3, 0.6, 1.0]);
        let ys = [0.5, -0.2, 0.8, 0.1];
        let post = fit(
            k,
            &xs,
            &ys,
            NoiseModel::Homoskedastic { variance: 1e-10 },
        )
        .unwrap();
        for (p, &y) in post.predict(&xs).unwrap().iter().zip(&ys) {
            assert_relative_eq!(p.mean, y, epsilon = 1e-4);
            assert!(p.latent_var < 1e-4);
        }
    }

    #[test]
    fn variance_reverts_to_prior_far_from_data() {
        let k = DerivativeKernel::squared_exponential(2.0, 0.1).unwrap();
        let xs = xs1(&[0.0, 0.1]);
        let ys = [1.0, -1.0];
        let post = fit(k, &xs, &ys, NoiseModel::Homoskedastic { variance: 0.01 }).unwrap();
        let far = post.predict(&xs1(&[5.0])).unwrap();
        assert_relative_eq!(far[0].mean, 0.0, epsilon = 1e-6);
        assert_relative_eq!(far[0].latent_var, 2.0, epsilon = 1e-6);
        assert_relative_eq!(far[0].noise_var, 0.01, epsilon = 1e-15);
    }

    #[test]
    fn gradient_mean_matches_slope_of_mean_curve() {
        let k = DerivativeKernel::squared_exponential(1.0, 0.5).unwrap();
        let xs = xs1(&[0.0, 0.25, 0.5, 0.75, 1.0]);
        let ys: Vec<f64> = xs.iter().map(|u| (2.0 * u[0]).sin()).collect();
        let post = fit(k, &xs, &ys, NoiseModel::Homoskedastic { variance: 1e-6 }).unwrap();
        let at = 0.4;
        let h = 1e-5;
        let around = post.predict(&xs1(&[at - h, at + h])).unwrap();
        let fd = (around[1].mean - around[0].mean) / (2.0 * h);
        let grad = post.predict_gradient(&xs1(&[at])).unwrap();
        assert_relative_eq!(grad[0].mean[0], fd, epsilon = 1e-5);
        assert!(grad[0].var[0] >= 0.0);
    }

    #[test]
    fn per_string_noise_requires_partitioned_kernel() {
        let k = DerivativeKernel::squared_exponential(1.0, 0.5).unwrap();
        let xs = xs1(&[0.0, 0.5]);
        let ys = [0.0, 1.0];
        let err = fit(
            k,
            &xs,
            &ys,
            NoiseModel::PerString {
                variances: vec![0.1, 0.2],
            },
        )
        .err();
        assert!(matches!(err, Some(Error::Config(_))));
    }

    #[test]
    fn per_string_noise_keyed_by_location() {
        let sk = StringKernel::uniform(
            0.0,
            1.0,
            2,
            DerivativeKernel::squared_exponential(1.0, 0.2).unwrap(),
        )
        .unwrap();
        let gp = StringGp::new(sk).unwrap();
        let xs = xs1(&[0.1, 0.4, 0.6, 0.9]);
        let ys = [0.3, 0.1, -0.4, 0.2];
        let post = fit(
            gp,
            &xs,
            &ys,
            NoiseModel::PerString {
                variances: vec![0.01, 0.5],
            },
        )
        .unwrap();
        let preds = post.predict(&xs1(&[0.25, 0.75])).unwrap();
        assert_relative_eq!(preds[0].noise_var, 0.01, epsilon = 1e-15);
        assert_relative_eq!(preds[1].noise_var, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let k = DerivativeKernel::squared_exponential(1.0, 0.5).unwrap();
        assert!(fit(
            k,
            &xs1(&[0.0, 1.0]),
            &[1.0],
            NoiseModel::Homoskedastic { variance: 0.1 }
        )
        .is_err());
    }
}
