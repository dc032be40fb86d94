//! Product kernels over multivariate inputs.
//!
//! A d-dimensional covariance is built as the product of d univariate
//! factors, one per input coordinate. Factors may be base kernels
//! (a global length scale per dimension) or string GP covariances (local
//! structure along each dimension). Because the product is separable,
//! every partial derivative of the product reduces to derivatives of
//! single factors times the remaining values.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regression::Kernel;

/// Product of univariate kernels, one per input dimension.
pub struct ProductKernel<F: Kernel> {
    factors: Vec<F>,
}

impl<F: Kernel> ProductKernel<F> {
    pub fn new(factors: Vec<F>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidParam {
                name: "factors".into(),
                reason: "need at least one factor".into(),
            });
        }
        for (i, f) in factors.iter().enumerate() {
            if f.dim() != 1 {
                return Err(Error::DimMismatch {
                    context: "product factor dimension",
                    expected: 1,
                    got: factors[i].dim(),
                });
            }
        }
        Ok(Self { factors })
    }

    pub fn factors(&self) -> &[F] {
        &self.factors
    }

    fn check_dim(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.factors.len() {
            return Err(Error::DimMismatch {
                context: "product kernel input",
                expected: self.factors.len(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// Per-factor value, d/dv, d/du, and d2/du dv at (u_m, v_m).
    fn factor_parts(&self, u: &[f64], v: &[f64]) -> Result<Vec<[f64; 4]>> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let mut parts = Vec::with_capacity(self.factors.len());
        for (m, f) in self.factors.iter().enumerate() {
            let um = &u[m..=m];
            let vm = &v[m..=m];
            let val = f.value(um, vm)?;
            let dv = f.value_deriv(um, vm, 0)?;
            // d/du k(u, v) equals d/dv k(v, u) for a symmetric kernel.
            let du = f.value_deriv(vm, um, 0)?;
            let dd = f.deriv_deriv(um, vm, 0, 0)?;
            parts.push([val, dv, du, dd]);
        }
        Ok(parts)
    }

    /// Product kernel value.
    pub fn eval_product(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let mut p = 1.0;
        for (m, f) in self.factors.iter().enumerate() {
            p *= f.value(&u[m..=m], &v[m..=m])?;
        }
        Ok(p)
    }

    /// Full (1+d) x (1+d) covariance block of (value, gradient) pairs:
    /// row/column 0 is the value channel, row/column 1+i is d/du_i
    /// (respectively d/dv_j).
    pub fn eval_product_gradient_blocks(&self, u: &[f64], v: &[f64]) -> Result<DMatrix<f64>> {
        let parts = self.factor_parts(u, v)?;
        let d = parts.len();
        let prod_except = |skip: &[usize]| -> f64 {
            parts
                .iter()
                .enumerate()
                .filter(|(m, _)| !skip.contains(m))
                .map(|(_, p)| p[0])
                .product()
        };
        let mut b = DMatrix::zeros(d + 1, d + 1);
        b[(0, 0)] = prod_except(&[]);
        for j in 0..d {
            b[(0, 1 + j)] = parts[j][1] * prod_except(&[j]);
            b[(1 + j, 0)] = parts[j][2] * prod_except(&[j]);
        }
        for i in 0..d {
            for j in 0..d {
                b[(1 + i, 1 + j)] = if i == j {
                    parts[j][3] * prod_except(&[j])
                } else {
                    parts[i][2] * parts[j][1] * prod_except(&[i, j])
                };
            }
        }
        Ok(b)
    }
}

impl<F: Kernel> Kernel for ProductKernel<F> {
    fn dim(&self) -> usize {
        self.factors.len()
    }

    fn value(&self, u: &[f64], v: &[f64]) -> Result<f64> {
        self.eval_product(u, v)
    }

    fn value_deriv(&self, u: &[f64], v: &[f64], j: usize) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let mut p = self.factors[j].value_deriv(&u[j..=j], &v[j..=j], 0)?;
        for (m, f) in self.factors.iter().enumerate() {
            if m != j {
                p *= f.value(&u[m..=m], &v[m..=m])?;
            }
        }
        Ok(p)
    }

    fn deriv_deriv(&self, u: &[f64], v: &[f64], i: usize, j: usize) -> Result<f64> {
        self.check_dim(u)?;
        self.check_dim(v)?;
        let mut p = if i == j {
            self.factors[j].deriv_deriv(&u[j..=j], &v[j..=j], 0, 0)?
        } else {
            self.factors[i].value_deriv(&v[i..=i], &u[i..=i], 0)?
                * self.factors[j].value_deriv(&u[j..=j], &v[j..=j], 0)?
        };
        for (m, f) in self.factors.iter().enumerate() {
            if m != i && m != j {
                p *= f.value(&u[m..=m], &v[m..=m])?;
            }
        }
        Ok(p)
    }

    fn derivatives_supported(&self) -> bool {
        self.factors.iter().all(|f| f.derivatives_supported())
    }

    /// Hadamard product of the per-dimension factor grams; lets factors
    /// with batched structure (string GPs) keep their fast path.
    fn gram(&self, xs: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        for u in xs {
            self.check_dim(u)?;
        }
        let n = xs.len();
        let mut g = DMatrix::from_element(n, n, 1.0);
        for (m, f) in self.factors.iter().enumerate() {
            let col: Vec<Vec<f64>> = xs.iter().map(|u| vec![u[m]]).collect();
            let gm = f.gram(&col)?;
            g.component_mul_assign(&gm);
        }
        Ok(g)
    }

    fn cross_gram(&self, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        for u in xs.iter().chain(ys.iter()) {
            self.check_dim(u)?;
        }
        let mut g = DMatrix::from_element(xs.len(), ys.len(), 1.0);
        for (m, f) in self.factors.iter().enumerate() {
            let cx: Vec<Vec<f64>> = xs.iter().map(|u| vec![u[m]]).collect();
            let cy: Vec<Vec<f64>> = ys.iter().map(|u| vec![u[m]]).collect();
            let gm = f.cross_gram(&cx, &cy)?;
            g.component_mul_assign(&gm);
        }
        Ok(g)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::DerivativeKernel;
    use crate::string_gp::{StringGp, StringKernel};
    use approx::assert_relative_eq;

    fn se(var: f64, ell: f64) -> DerivativeKernel {
        DerivativeKernel::squared_exponential(var, ell).unwrap()
    }

    #[test]
    fn two_dim_se_product_is_isotropic_se() {
        let pk = ProductKernel::new(vec![se(2.0, 0.7), se(0.5, 0.7)]).unwrap();
        let u: [f64; 2] = [0.3, -0.2];
        let v: [f64; 2] = [1.0, 0.4];
        let r2 = (u[0] - v[0]).powi(2) + (u[1] - v[1]).powi(2);
        let want = 2.0 * 0.5 * (-r2 / (2.0 * 0.7 * 0.7)).exp();
        assert_relative_eq!(pk.eval_product(&u, &v).unwrap(), want, epsilon = 1e-13);
    }

    #[test]
    fn gradient_blocks_match_finite_differences() {
        let pk = ProductKernel::new(vec![
            se(1.2, 0.5),
            DerivativeKernel::matern52(0.9, 0.6).unwrap(),
            DerivativeKernel::rational_quadratic(1.1, 0.7, 1.5).unwrap(),
        ])
        .unwrap();
        let u = [0.2, -0.1, 0.5];
        let v = [0.7, 0.3, -0.2];
        let b = pk.eval_product_gradient_blocks(&u, &v).unwrap();
        let h = 1e-5;
        let f = |u: &[f64], v: &[f64]| pk.eval_product(u, v).unwrap();
        for j in 0..3 {
            let mut vp = v.to_vec();
            let mut vm = v.to_vec();
            vp[j] += h;
            vm[j] -= h;
            let fd = (f(&u, &vp) - f(&u, &vm)) / (2.0 * h);
            assert!(
                (b[(0, 1 + j)] - fd).abs() <= 1e-4 * fd.abs().max(1.0) + 1e-6,
                "d/dv_{j}: {} vs fd {fd}",
                b[(0, 1 + j)]
            );
        }
        for i in 0..3 {
            for j in 0..3 {
                let mut up = u.to_vec();
                let mut um = u.to_vec();
                up[i] += h;
                um[i] -= h;
                let mut vp = v.to_vec();
                let mut vm = v.to_vec();
                vp[j] += h;
                vm[j] -= h;
                let fd = (f(&up, &vp) - f(&up, &vm) - f(&um, &vp) + f(&um, &vm))
                    / (4.0 * h * h);
                assert!(
                    (b[(1 + i, 1 + j)] - fd).abs() <= 1e-4 * fd.abs().max(1.0) + 1e-5,
                    "d2/du_{i} dv_{j}: {} vs fd {fd}",
                    b[(1 + i, 1 + j)]
                );
            }
        }
    }

    #[test]
    fn trait_derivs_agree_with_gradient_blocks() {
        let pk = ProductKernel::new(vec![se(1.0, 0.4), se(1.5, 0.8)]).unwrap();
        let u = [0.1, 0.9];
        let v = [-0.4, 0.3];
        let b = pk.eval_product_gradient_blocks(&u, &v).unwrap();
        for j in 0..2 {
            assert_relative_eq!(
                pk.value_deriv(&u, &v, j).unwrap(),
                b[(0, 1 + j)],
                epsilon = 1e-13
            );
            for i in 0..2 {
                assert_relative_eq!(
                    pk.deriv_deriv(&u, &v, i, j).unwrap(),
                    b[(1 + i, 1 + j)],
                    epsilon = 1e-13
                );
            }
        }
    }

    #[test]
    fn hadamard_gram_matches_pairwise_values() {
        let sk = StringKernel::uniform(0.0, 1.0, 2, se(1.0, 0.3)).unwrap();
        let gp = StringGp::new(sk).unwrap();
        let pk = ProductKernel::new(vec![
            Box::new(gp) as Box<dyn Kernel>,
            Box::new(se(0.8, 0.5)) as Box<dyn Kernel>,
        ])
        .unwrap();
        let xs: Vec<Vec<f64>> = vec![
            vec![0.1, -0.5],
            vec![0.5, 0.0],
            vec![0.52, 1.3],
            vec![0.9, 0.4],
        ];
        let g = pk.gram(&xs).unwrap();
        for i in 0..xs.len() {
            for j in 0..xs.len() {
                assert_relative_eq!(
                    g[(i, j)],
                    pk.value(&xs[i], &xs[j]).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
        let min = crate::linalg::min_eigenvalue(&g);
        assert!(min >= -1e-10, "min eig {min}");
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let pk = ProductKernel::new(vec![se(1.0, 0.5), se(1.0, 0.5)]).unwrap();
        assert!(pk.eval_product(&[0.0], &[0.0, 1.0]).is_err());
        assert!(pk.eval_product(&[0.0, 1.0, 2.0], &[0.0, 1.0, 2.0]).is_err());
    }
}
