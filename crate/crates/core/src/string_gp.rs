//! Global covariance of a string Gaussian process.
//!
//! A string GP chains K local GP experts over a partition
//! a_0 < a_1 < ... < a_K. Each expert k owns the open interval
//! (a_{k-1}, a_k) and its own base kernel; experts communicate only through
//! the value/derivative pairs at their shared boundaries. Conditioning each
//! string on its two boundary pairs and chaining the boundary pairs as a
//! Markov chain yields a C^1 (in mean square) global process whose
//! covariance is computed here in closed form.
//!
//! Boundary indexing is 1-based for strings: string k spans
//! (a_{k-1}, a_k]. An interior boundary belongs to the string on its left;
//! both sides give identical covariances there, so the choice is a
//! convention, not a modelling decision.

use nalgebra::{DMatrix, Matrix2, Matrix2x4, Matrix4, Matrix4x2, Vector2, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::{check_degeneracy, DerivativeKernel, DEFAULT_RCOND_THRESHOLD};

/// Strictly increasing partition a_0 < a_1 < ... < a_K of an interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Partition {
    knots: Vec<f64>,
}

impl Partition {
    pub fn new(knots: Vec<f64>) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidParam {
                name: "knots".into(),
                reason: "need at least two boundary points".into(),
            });
        }
        for w in knots.windows(2) {
            if !w[0].is_finite() || !w[1].is_finite() || w[0] >= w[1] {
                return Err(Error::InvalidParam {
                    name: "knots".into(),
                    reason: format!("must be finite and strictly increasing, got {w:?}"),
                });
            }
        }
        Ok(Self { knots })
    }

    /// Equally spaced partition of [lo, hi] into `n_strings` strings.
    pub fn uniform(lo: f64, hi: f64, n_strings: usize) -> Result<Self> {
        if n_strings == 0 {
            return Err(Error::InvalidParam {
                name: "n_strings".into(),
                reason: "need at least one string".into(),
            });
        }
        let knots = (0..=n_strings)
            .map(|i| lo + (hi - lo) * i as f64 / n_strings as f64)
            .collect();
        Self::new(knots)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn num_strings(&self) -> usize {
        self.knots.len() - 1
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    /// Boundaries (a_{k-1}, a_k) of string k (1-based).
    pub fn bounds(&self, k: usize) -> (f64, f64) {
        (self.knots[k - 1], self.knots[k])
    }

    /// 1-based index of the string owning `t`. Interior boundaries belong
    /// to the string on their left; a_0 belongs to string 1.
    pub fn locate_string(&self, t: f64) -> Result<usize> {
        let (lo, hi) = self.domain();
        if !t.is_finite() || t < lo || t > hi {
            return Err(Error::OutOfDomain { t, lo, hi });
        }
        let below = self.knots[1..].partition_point(|&a| a < t);
        Ok((below + 1).min(self.num_strings()))
    }
}

/// Per-string mean function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MeanFn {
    Zero,
    Affine { intercept: f64, slope: f64 },
}

impl MeanFn {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            MeanFn::Zero => 0.0,
            MeanFn::Affine { intercept, slope } => intercept + slope * t,
        }
    }

    pub fn deriv(&self) -> f64 {
        match self {
            MeanFn::Zero => 0.0,
            MeanFn::Affine { slope, .. } => *slope,
        }
    }

    /// Value/derivative pair at `t`.
    pub fn pair(&self, t: f64) -> Vector2<f64> {
        Vector2::new(self.value(t), self.deriv())
    }
}

/// Model configuration of a string GP: partition, one base kernel per
/// string, per-string means, and the degeneracy threshold used to validate
/// boundary conditioning.
#[derive(Debug, Clone)]
pub struct StringKernel {
    partition: Partition,
    kernels: Vec<DerivativeKernel>,
    means: Vec<MeanFn>,
    rcond_threshold: f64,
}

impl StringKernel {
    pub fn new(partition: Partition, kernels: Vec<DerivativeKernel>) -> Result<Self> {
        let means = vec![MeanFn::Zero; partition.num_strings()];
        Self::with_config(partition, kernels, means, DEFAULT_RCOND_THRESHOLD)
    }

    pub fn with_config(
        partition: Partition,
        kernels: Vec<DerivativeKernel>,
        means: Vec<MeanFn>,
        rcond_threshold: f64,
    ) -> Result<Self> {
        if kernels.len() != partition.num_strings() {
            return Err(Error::DimMismatch {
                context: "one kernel per string",
                expected: partition.num_strings(),
                got: kernels.len(),
            });
        }
        if means.len() != partition.num_strings() {
            return Err(Error::DimMismatch {
                context: "one mean per string",
                expected: partition.num_strings(),
                got: means.len(),
            });
        }
        let sk = Self {
            partition,
            kernels,
            means,
            rcond_threshold,
        };
        sk.validate()?;
        Ok(sk)
    }

    /// Same kernel on every string of an equally spaced partition.
    pub fn uniform(lo: f64, hi: f64, n_strings: usize, kernel: DerivativeKernel) -> Result<Self> {
        let partition = Partition::uniform(lo, hi, n_strings)?;
        let kernels = vec![kernel; n_strings];
        Self::new(partition, kernels)
    }

    /// Every string's boundary conditioning must be well posed: the 2x2
    /// block at the left boundary invertible and the right boundary not
    /// fully determined by the left one.
    fn validate(&self) -> Result<()> {
        for k in 1..=self.partition.num_strings() {
            let (lo, hi) = self.partition.bounds(k);
            let rep = check_degeneracy(&self.kernels[k - 1], lo, hi, self.rcond_threshold)?;
            if !rep.is_non_degenerate() {
                return Err(Error::Degenerate {
                    string: k,
                    reason: format!(
                        "{:?} (rcond at {lo}: {:.3e}, schur rcond at {hi}: {:.3e})",
                        rep.status, rep.rcond_at_a, rep.rcond_schur
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    pub fn kernels(&self) -> &[DerivativeKernel] {
        &self.kernels
    }

    pub fn means(&self) -> &[MeanFn] {
        &self.means
    }

    pub fn rcond_threshold(&self) -> f64 {
        self.rcond_threshold
    }

    /// Unconditional 2x2 block of string k's own kernel.
    fn local_block(&self, k: usize, u: f64, v: f64) -> Result<Matrix2<f64>> {
        self.kernels[k - 1].eval_block(u, v)
    }

    /// Run the boundary-moment recursion for this configuration.
    pub fn boundary_moments(&self) -> Result<BoundaryMoments> {
        BoundaryMoments::build(self)
    }
}

/// Propagation matrices, innovation covariances, boundary means, and the
/// full set of global boundary covariance blocks of a string GP.
#[derive(Debug, Clone)]
pub struct BoundaryMoments {
    /// m[k-1] propagates the pair at a_{k-1} to the mean of the pair at a_k.
    m: Vec<Matrix2<f64>>,
    /// sigma[k-1] is the innovation covariance of the pair at a_k.
    sigma: Vec<Matrix2<f64>>,
    /// cov[k][l] (l <= k) is the global covariance of pairs at (a_k, a_l).
    cov: Vec<Vec<Matrix2<f64>>>,
    /// Marginal means of the boundary pairs.
    means: Vec<Vector2<f64>>,
}

impl BoundaryMoments {
    pub fn build(sk: &StringKernel) -> Result<Self> {
        let knots = sk.partition.knots();
        let big_k = sk.partition.num_strings();
        let mut m = Vec::with_capacity(big_k);
        let mut sigma = Vec::with_capacity(big_k);
        let mut cov: Vec<Vec<Matrix2<f64>>> = Vec::with_capacity(big_k + 1);
        let mut means = Vec::with_capacity(big_k + 1);

        cov.push(vec![symmetrize2(&sk.local_block(1, knots[0], knots[0])?)]);
        means.push(sk.means[0].pair(knots[0]));

        for k in 1..=big_k {
            let (lo, hi) = (knots[k - 1], knots[k]);
            let kaa = sk.local_block(k, lo, lo)?;
            let kba = sk.local_block(k, hi, lo)?;
            let kab = sk.local_block(k, lo, hi)?;
            let kbb = sk.local_block(k, hi, hi)?;
            let inv = kaa.try_inverse().ok_or(Error::IllConditioned {
                context: "boundary block inversion",
            })?;
            let mk = kba * inv;
            let sk_cov = symmetrize2(&(kbb - mk * kab));

            let prev_diag = cov[k - 1][k - 1];
            let mut row: Vec<Matrix2<f64>> = (0..k).map(|l| mk * cov[k - 1][l]).collect();
            row.push(symmetrize2(&(sk_cov + mk * prev_diag * mk.transpose())));
            cov.push(row);

            let mean_k = sk.means[k - 1].pair(hi)
                + mk * (means[k - 1] - sk.means[k - 1].pair(lo));
            means.push(mean_k);
            m.push(mk);
            sigma.push(sk_cov);
        }
        Ok(Self {
            m,
            sigma,
            cov,
            means,
        })
    }

    /// Propagation matrix of string k (1-based).
    pub fn propagation(&self, k: usize) -> &Matrix2<f64> {
        &self.m[k - 1]
    }

    /// Innovation covariance of string k (1-based).
    pub fn innovation(&self, k: usize) -> &Matrix2<f64> {
        &self.sigma[k - 1]
    }

    /// Global covariance of the boundary pairs at (a_k, a_l), 0-based in
    /// the boundary index.
    pub fn cov(&self, k: usize, l: usize) -> Matrix2<f64> {
        if l <= k {
            self.cov[k][l]
        } else {
            self.cov[l][k].transpose()
        }
    }

    /// Marginal mean of the boundary pair at a_k.
    pub fn mean(&self, k: usize) -> &Vector2<f64> {
        &self.means[k]
    }

    pub fn num_boundaries(&self) -> usize {
        self.cov.len()
    }
}

/// Interpolation weights tying a point to its string's boundary pairs.
///
/// `weights` is 2x4: rows are (value, derivative) of the point, columns are
/// (value, derivative) at the left then right boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaWeights {
    pub string: usize,
    pub weights: Matrix2x4<f64>,
}

/// A string kernel together with its cached boundary moments. This is the
/// object the rest of the crate evaluates covariances against.
#[derive(Debug, Clone)]
pub struct StringGp {
    kernel: StringKernel,
    moments: BoundaryMoments,
}

impl StringGp {
    pub fn new(kernel: StringKernel) -> Result<Self> {
        let moments = kernel.boundary_moments()?;
        Ok(Self { kernel, moments })
    }

    pub fn kernel(&self) -> &StringKernel {
        &self.kernel
    }

    pub fn moments(&self) -> &BoundaryMoments {
        &self.moments
    }

    pub fn partition(&self) -> &Partition {
        self.kernel.partition()
    }

    /// Conditional-expectation weights of the pair at `t` given its
    /// string's boundary pairs. Boundary points get exact selection
    /// weights, which keeps the construction consistent across the seam.
    pub fn lambda(&self, t: f64) -> Result<LambdaWeights> {
        let string = self.partition().locate_string(t)?;
        let (lo, hi) = self.partition().bounds(string);
        let mut weights = Matrix2x4::zeros();
        if t == lo {
            weights[(0, 0)] = 1.0;
            weights[(1, 1)] = 1.0;
            return Ok(LambdaWeights { string, weights });
        }
        if t == hi {
            weights[(0, 2)] = 1.0;
            weights[(1, 3)] = 1.0;
            return Ok(LambdaWeights { string, weights });
        }
        let g = self.local_boundary_gram(string)?;
        let inv = g.try_inverse().ok_or(Error::IllConditioned {
            context: "string boundary gram inversion",
        })?;
        let k_tu = self.kernel.local_block(string, t, lo)?;
        let k_tv = self.kernel.local_block(string, t, hi)?;
        let mut rhs = Matrix2x4::zeros();
        rhs.fixed_view_mut::<2, 2>(0, 0).copy_from(&k_tu);
        rhs.fixed_view_mut::<2, 2>(0, 2).copy_from(&k_tv);
        Ok(LambdaWeights {
            string,
            weights: rhs * inv,
        })
    }

    /// Unconditional 4x4 gram of string k's kernel at its two boundaries.
    fn local_boundary_gram(&self, k: usize) -> Result<Matrix4<f64>> {
        let (lo, hi) = self.partition().bounds(k);
        let mut g = Matrix4::zeros();
        g.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&self.kernel.local_block(k, lo, lo)?);
        g.fixed_view_mut::<2, 2>(0, 2)
            .copy_from(&self.kernel.local_block(k, lo, hi)?);
        g.fixed_view_mut::<2, 2>(2, 0)
            .copy_from(&self.kernel.local_block(k, hi, lo)?);
        g.fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&self.kernel.local_block(k, hi, hi)?);
        Ok(g)
    }

    /// Global 4x4 covariance of the boundary pairs of strings (k, l).
    fn boundary_cov4(&self, k: usize, l: usize) -> Matrix4<f64> {
        let mut b = Matrix4::zeros();
        b.fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&self.moments.cov(k - 1, l - 1));
        b.fixed_view_mut::<2, 2>(0, 2)
            .copy_from(&self.moments.cov(k - 1, l));
        b.fixed_view_mut::<2, 2>(2, 0)
            .copy_from(&self.moments.cov(k, l - 1));
        b.fixed_view_mut::<2, 2>(2, 2)
            .copy_from(&self.moments.cov(k, l));
        b
    }

    /// Covariance of the pair at `u` with the pair at `v` under the global
    /// string GP, conditional structure and boundary chain included.
    pub fn cov_block(&self, u: f64, v: f64) -> Result<Matrix2<f64>> {
        let lu = self.lambda(u)?;
        let lv = self.lambda(v)?;
        self.cov_block_from(&lu, u, &lv, v)
    }

    /// Covariance of function values only.
    pub fn cov_value(&self, u: f64, v: f64) -> Result<f64> {
        Ok(self.cov_block(u, v)?[(0, 0)])
    }

    fn cov_block_from(
        &self,
        lu: &LambdaWeights,
        u: f64,
        lv: &LambdaWeights,
        v: f64,
    ) -> Result<Matrix2<f64>> {
        let b = self.boundary_cov4(lu.string, lv.string);
        let mut c = lu.weights * b * lv.weights.transpose();
        if lu.string == lv.string {
            c += self.conditional_residual(lu, u, v)?;
        }
        Ok(c)
    }

    /// Conditional covariance of the pairs at (u, v) inside one string,
    /// given the string's boundary pairs. Both points must belong to
    /// `lu.string`. Zero when either point sits on a boundary.
    pub fn conditional_residual(
        &self,
        lu: &LambdaWeights,
        u: f64,
        v: f64,
    ) -> Result<Matrix2<f64>> {
        let k = lu.string;
        let (lo, hi) = self.partition().bounds(k);
        // Boundary pairs are reproduced exactly by the selection weights,
        // so their conditional residual vanishes identically.
        if u == lo || u == hi || v == lo || v == hi {
            return Ok(Matrix2::zeros());
        }
        let kuv = self.kernel.local_block(k, u, v)?;
        let mut stack = Matrix4x2::zeros();
        stack
            .fixed_view_mut::<2, 2>(0, 0)
            .copy_from(&self.kernel.local_block(k, lo, v)?);
        stack
            .fixed_view_mut::<2, 2>(2, 0)
            .copy_from(&self.kernel.local_block(k, hi, v)?);
        Ok(kuv - lu.weights * stack)
    }

    /// Mean of the (value, derivative) pair at `t` under the global
    /// process, honouring per-string mean functions.
    pub fn mean_pair(&self, t: f64) -> Result<Vector2<f64>> {
        let lw = self.lambda(t)?;
        let k = lw.string;
        let (lo, hi) = self.partition().bounds(k);
        let mk = &self.kernel.means()[k - 1];
        let mut boundary = Vector4::zeros();
        let dl = self.moments.mean(k - 1) - mk.pair(lo);
        let dr = self.moments.mean(k) - mk.pair(hi);
        boundary.fixed_rows_mut::<2>(0).copy_from(&dl);
        boundary.fixed_rows_mut::<2>(2).copy_from(&dr);
        Ok(mk.pair(t) + lw.weights * boundary)
    }

    /// Value-channel gram matrix over `xs`.
    pub fn gram(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let lams: Vec<LambdaWeights> =
            xs.iter().map(|&t| self.lambda(t)).collect::<Result<_>>()?;
        let mut g = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let c = self.cov_block_from(&lams[i], xs[i], &lams[j], xs[j])?;
                g[(i, j)] = c[(0, 0)];
                g[(j, i)] = c[(0, 0)];
            }
        }
        Ok(g)
    }

    /// Full 2n x 2n gram over `xs` in interleaved layout
    /// [z(x_1), z'(x_1), z(x_2), z'(x_2), ...].
    pub fn gram_blocks(&self, xs: &[f64]) -> Result<DMatrix<f64>> {
        let n = xs.len();
        let lams: Vec<LambdaWeights> =
            xs.iter().map(|&t| self.lambda(t)).collect::<Result<_>>()?;
        let mut g = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for j in i..n {
                let c = self.cov_block_from(&lams[i], xs[i], &lams[j], xs[j])?;
                for a in 0..2 {
                    for b in 0..2 {
                        g[(2 * i + a, 2 * j + b)] = c[(a, b)];
                        g[(2 * j + b, 2 * i + a)] = c[(a, b)];
                    }
                }
            }
        }
        Ok(g)
    }
}

fn symmetrize2(m: &Matrix2<f64>) -> Matrix2<f64> {
    0.5 * (m + m.transpose())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DerivativeKernel;
    use approx::assert_relative_eq;

    fn se(var: f64, ell: f64) -> DerivativeKernel {
        DerivativeKernel::squared_exponential(var, ell).unwrap()
    }

    fn three_string_gp() -> StringGp {
        let partition = Partition::new(vec![0.0, 0.4, 1.1, 2.0]).unwrap();
        let kernels = vec![
            se(1.0, 0.3),
            DerivativeKernel::matern52(1.4, 0.5).unwrap(),
            DerivativeKernel::rational_quadratic(0.8, 0.4, 1.5).unwrap(),
        ];
        StringGp::new(StringKernel::new(partition, kernels).unwrap()).unwrap()
    }

    #[test]
    fn locate_string_edges() {
        let p = Partition::new(vec![0.0, 0.5, 1.0]).unwrap();
        assert_eq!(p.locate_string(0.0).unwrap(), 1);
        assert_eq!(p.locate_string(0.25).unwrap(), 1);
        assert_eq!(p.locate_string(0.5).unwrap(), 1);
        assert_eq!(p.locate_string(0.75).unwrap(), 2);
        assert_eq!(p.locate_string(1.0).unwrap(), 2);
        assert!(p.locate_string(-0.1).is_err());
        assert!(p.locate_string(1.1).is_err());
    }

    #[test]
    fn partition_rejects_unsorted() {
        assert!(Partition::new(vec![0.0, 1.0, 0.5]).is_err());
        assert!(Partition::new(vec![0.0, 0.0]).is_err());
        assert!(Partition::new(vec![1.0]).is_err());
    }

    #[test]
    fn single_string_reduces_to_base_kernel() {
        let k = se(1.3, 0.45);
        let gp = StringGp::new(StringKernel::uniform(0.0, 1.0, 1, k.clone()).unwrap()).unwrap();
        for &(u, v) in &[(0.1, 0.7), (0.0, 0.3), (0.5, 1.0), (0.33, 0.33), (0.0, 1.0)] {
            let got = gp.cov_block(u, v).unwrap();
            let want = k.eval_block(u, v).unwrap();
            for i in 0..2 {
                for j in 0..2 {
                    assert!(
                        (got[(i, j)] - want[(i, j)]).abs() <= 1e-10,
                        "({u},{v}) entry ({i},{j}): {} vs {}",
                        got[(i, j)],
                        want[(i, j)]
                    );
                }
            }
        }
    }

    #[test]
    fn boundary_covariance_continuous_from_both_sides() {
        let gp = three_string_gp();
        let a1 = 0.4;
        let probe = 1.6;
        let at = gp.cov_block(a1, probe).unwrap();
        let left = gp.cov_block(a1 - 1e-9, probe).unwrap();
        let right = gp.cov_block(a1 + 1e-9, probe).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(at[(i, j)], left[(i, j)], epsilon = 1e-6);
                assert_relative_eq!(at[(i, j)], right[(i, j)], epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn cov_block_is_symmetric_under_swap() {
        let gp = three_string_gp();
        for &(u, v) in &[(0.1, 0.9), (0.2, 0.2), (0.4, 1.7), (1.2, 1.9)] {
            let uv = gp.cov_block(u, v).unwrap();
            let vu = gp.cov_block(v, u).unwrap().transpose();
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(uv[(i, j)], vu[(i, j)], epsilon = 1e-10);
                }
            }
        }
    }

    #[test]
    fn gram_blocks_matches_cov_block_and_is_psd() {
        let gp = three_string_gp();
        let xs = [0.05, 0.3, 0.4, 0.77, 1.1, 1.55, 2.0];
        let g = gp.gram_blocks(&xs).unwrap();
        for (i, &u) in xs.iter().enumerate() {
            for (j, &v) in xs.iter().enumerate() {
                let c = gp.cov_block(u, v).unwrap();
                for a in 0..2 {
                    for b in 0..2 {
                        assert_relative_eq!(
                            g[(2 * i + a, 2 * j + b)],
                            c[(a, b)],
                            epsilon = 1e-12
                        );
                    }
                }
            }
        }
        let min = crate::linalg::min_eigenvalue(&g);
        assert!(min >= -1e-8, "min eig {min}");
        let gv = gp.gram(&xs).unwrap();
        for (i, &u) in xs.iter().enumerate() {
            for (j, &v) in xs.iter().enumerate() {
                assert_relative_eq!(gv[(i, j)], gp.cov_value(u, v).unwrap(), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn degenerate_string_rejected_at_construction() {
        // Periodic kernel whose period equals the string length: the right
        // boundary pair is a copy of the left one.
        let k = DerivativeKernel::periodic(1.0, 1.0, 0.5).unwrap();
        let err = StringKernel::uniform(0.0, 1.0, 2, k).unwrap_err();
        match err {
            Error::Degenerate { string, .. } => assert_eq!(string, 1),
            other => panic!("expected Degenerate, got {other:?}"),
        }
    }

    #[test]
    fn affine_means_propagate_through_boundaries() {
        let partition = Partition::new(vec![0.0, 1.0, 2.0]).unwrap();
        let kernels = vec![se(1.0, 0.5), se(1.0, 0.5)];
        let means = vec![
            MeanFn::Affine {
                intercept: 2.0,
                slope: 1.0,
            },
            MeanFn::Affine {
                intercept: 2.0,
                slope: 1.0,
            },
        ];
        let sk = StringKernel::with_config(partition, kernels, means, 1e-8).unwrap();
        let gp = StringGp::new(sk).unwrap();
        // With a globally consistent affine mean the process mean is that
        // same affine function everywhere.
        for &t in &[0.0, 0.3, 1.0, 1.5, 2.0] {
            let m = gp.mean_pair(t).unwrap();
            assert_relative_eq!(m[0], 2.0 + t, epsilon = 1e-9);
            assert_relative_eq!(m[1], 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn boundary_moment_diag_matches_base_kernel_for_shared_kernel() {
        // With identical stationary kernels on every string, the marginal
        // law of each boundary pair equals the base kernel's at zero lag.
        let k = se(1.2, 0.35);
        let gp = StringGp::new(StringKernel::uniform(0.0, 2.0, 4, k.clone()).unwrap()).unwrap();
        let want = k.eval_block(0.0, 0.0).unwrap();
        for b in 0..=4 {
            let got = gp.moments().cov(b, b);
            for i in 0..2 {
                for j in 0..2 {
                    assert_relative_eq!(got[(i, j)], want[(i, j)], epsilon = 1e-9);
                }
            }
        }
    }
}
