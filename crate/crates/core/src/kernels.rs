//! Base kernel families with analytic first and second cross-derivatives.
//!
//! Every family exposes the full 2x2 derivative block
//!
//! ```text
//! [ k(x,y)        dk/dy(x,y)      ]
//! [ dk/dx(x,y)    d2k/dxdy(x,y)   ]
//! ```
//!
//! which is the covariance structure of a process jointly with its
//! mean-square derivative. Hyperparameters are stored in log space so that
//! optimizers always work in unconstrained coordinates.

use nalgebra::Matrix2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigvals_2x2, rcond_2x2};

/// 2x2 covariance block of a kernel and its cross-derivatives.
pub type Block2 = Matrix2<f64>;

/// Default reciprocal-condition threshold for degeneracy classification.
pub const DEFAULT_RCOND_THRESHOLD: f64 = 1e-8;

/// Supported base kernel families.
///
/// All are at least C^2 on the real line, so the derivative block is well
/// defined everywhere. Matern 3/2 is only C^2 (not C^3); it is admitted
/// anyway and the shared jitter policy absorbs the resulting borderline
/// conditioning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum KernelFamily {
    SquaredExponential,
    RationalQuadratic,
    Matern32,
    Matern52,
    Periodic,
    /// Sum of `A` damped-cosine spectral components.
    SpectralMixture(usize),
    /// Second-order polynomial kernel sigma^2 (x y + c)^2 with c > 0.
    Polynomial2,
    /// Linear kernel sigma^2 (x - center)(y - center); degenerate at `center`.
    Linear { center: f64 },
}

impl KernelFamily {
    /// Number of log-space hyperparameters the family expects.
    pub fn param_len(&self) -> usize {
        match self {
            KernelFamily::SquaredExponential
            | KernelFamily::Matern32
            | KernelFamily::Matern52 => 2,
            KernelFamily::RationalQuadratic | KernelFamily::Periodic => 3,
            KernelFamily::SpectralMixture(a) => 3 * a,
            KernelFamily::Polynomial2 => 2,
            KernelFamily::Linear { .. } => 1,
        }
    }

    /// Hyperparameter names, aligned with the log-space vector.
    pub fn param_names(&self) -> Vec<String> {
        match self {
            KernelFamily::SquaredExponential
            | KernelFamily::Matern32
            | KernelFamily::Matern52 => {
                vec!["variance".into(), "length_scale".into()]
            }
            KernelFamily::RationalQuadratic => {
                vec!["variance".into(), "length_scale".into(), "alpha".into()]
            }
            KernelFamily::Periodic => {
                vec!["variance".into(), "length_scale".into(), "period".into()]
            }
            KernelFamily::SpectralMixture(a) => (0..*a)
                .flat_map(|i| {
                    vec![
                        format!("weight_{i}"),
                        format!("scale_{i}"),
                        format!("frequency_{i}"),
                    ]
                })
                .collect(),
            KernelFamily::Polynomial2 => vec!["variance".into(), "offset".into()],
            KernelFamily::Linear { .. } => vec!["variance".into()],
        }
    }
}

/// Strictly positive hyperparameters stored as logarithms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    log_values: Vec<f64>,
}

impl Hyperparams {
    /// Build from natural-space values; all must be finite and > 0.
    pub fn from_natural(values: &[f64]) -> Result<Self> {
        let mut log_values = Vec::with_capacity(values.len());
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParam {
                    name: format!("param[{i}]"),
                    reason: format!("must be finite and positive, got {v}"),
                });
            }
            log_values.push(v.ln());
        }
        Ok(Self { log_values })
    }

    /// Build directly from log-space values; all must be finite.
    pub fn from_log(log_values: Vec<f64>) -> Result<Self> {
        for (i, &v) in log_values.iter().enumerate() {
            if !v.is_finite() {
                return Err(Error::InvalidParam {
                    name: format!("log_param[{i}]"),
                    reason: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(Self { log_values })
    }

    pub fn log(&self) -> &[f64] {
        &self.log_values
    }

    /// Natural-space value of the i-th parameter.
    pub fn natural(&self, i: usize) -> f64 {
        self.log_values[i].exp()
    }

    pub fn len(&self) -> usize {
        self.log_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_values.is_empty()
    }
}

/// A base kernel together with its derivative blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeKernel {
    family: KernelFamily,
    params: Hyperparams,
}

/// The four entries of a derivative block before packing into a matrix.
struct Parts {
    value: f64,
    dx: f64,
    dy: f64,
    dxdy: f64,
}

impl DerivativeKernel {
    pub fn new(family: KernelFamily, params: Hyperparams) -> Result<Self> {
        if params.len() != family.param_len() {
            return Err(Error::DimMismatch {
                context: "kernel hyperparameters",
                expected: family.param_len(),
                got: params.len(),
            });
        }
        if let KernelFamily::SpectralMixture(a) = family {
            if a == 0 {
                return Err(Error::InvalidParam {
                    name: "components".into(),
                    reason: "spectral mixture needs at least one component".into(),
                });
            }
        }
        if let KernelFamily::Linear { center } = family {
            if !center.is_finite() {
                return Err(Error::InvalidParam {
                    name: "center".into(),
                    reason: "must be finite".into(),
                });
            }
        }
        Ok(Self { family, params })
    }

    pub fn squared_exponential(variance: f64, length_scale: f64) -> Result<Self> {
        Self::new(
            KernelFamily::SquaredExponential,
            Hyperparams::from_natural(&[variance, length_scale])?,
        )
    }

    pub fn rational_quadratic(variance: f64, length_scale: f64, alpha: f64) -> Result<Self> {
        Self::new(
            KernelFamily::RationalQuadratic,
            Hyperparams::from_natural(&[variance, length_scale, alpha])?,
        )
    }

    pub fn matern32(variance: f64, length_scale: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Matern32,
            Hyperparams::from_natural(&[variance, length_scale])?,
        )
    }

    pub fn matern52(variance: f64, length_scale: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Matern52,
            Hyperparams::from_natural(&[variance, length_scale])?,
        )
    }

    pub fn periodic(variance: f64, length_scale: f64, period: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Periodic,
            Hyperparams::from_natural(&[variance, length_scale, period])?,
        )
    }

    /// Each component is (weight variance, bandwidth, frequency).
    pub fn spectral_mixture(components: &[(f64, f64, f64)]) -> Result<Self> {
        let flat: Vec<f64> = components
            .iter()
            .flat_map(|&(w, s, f)| [w, s, f])
            .collect();
        Self::new(
            KernelFamily::SpectralMixture(components.len()),
            Hyperparams::from_natural(&flat)?,
        )
    }

    pub fn polynomial2(variance: f64, offset: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Polynomial2,
            Hyperparams::from_natural(&[variance, offset])?,
        )
    }

    pub fn linear(variance: f64, center: f64) -> Result<Self> {
        Self::new(
            KernelFamily::Linear { center },
            Hyperparams::from_natural(&[variance])?,
        )
    }

    pub fn family(&self) -> &KernelFamily {
        &self.family
    }

    pub fn params(&self) -> &Hyperparams {
        &self.params
    }

    /// Same family, new log-space hyperparameters.
    pub fn with_log_params(&self, log_values: &[f64]) -> Result<Self> {
        Self::new(
            self.family.clone(),
            Hyperparams::from_log(log_values.to_vec())?,
        )
    }

    /// Kernel value k(x, y).
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        Ok(self.parts(x, y)?.value)
    }

    /// Full 2x2 derivative block at (x, y).
    pub fn eval_block(&self, x: f64, y: f64) -> Result<Block2> {
        let p = self.parts(x, y)?;
        Ok(Block2::new(p.value, p.dy, p.dx, p.dxdy))
    }

    fn parts(&self, x: f64, y: f64) -> Result<Parts> {
        if !x.is_finite() || !y.is_finite() {
            return Err(Error::NonFinite {
                context: "kernel evaluation",
            });
        }
        let p = &self.params;
        let r = x - y;
        match &self.family {
            KernelFamily::SquaredExponential => {
                let (var, ell) = (p.natural(0), p.natural(1));
                let l2 = ell * ell;
                let g = var * (-0.5 * r * r / l2).exp();
                let gp = -(r / l2) * g;
                let gpp = g * (r * r / (l2 * l2) - 1.0 / l2);
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::RationalQuadratic => {
                let (var, ell, alpha) = (p.natural(0), p.natural(1), p.natural(2));
                let l2 = ell * ell;
                let u = 1.0 + r * r / (2.0 * alpha * l2);
                let g = var * u.powf(-alpha);
                let um1 = u.powf(-alpha - 1.0);
                let um2 = u.powf(-alpha - 2.0);
                let gp = -var * (r / l2) * um1;
                let gpp =
                    -var / l2 * (um1 - (alpha + 1.0) * r * r / (alpha * l2) * um2);
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::Matern32 => {
                let (var, ell) = (p.natural(0), p.natural(1));
                let s = 3f64.sqrt() / ell;
                let t = r.abs();
                let e = (-s * t).exp();
                let g = var * (1.0 + s * t) * e;
                let gp = -var * s * s * r * e;
                let gpp = -var * s * s * e * (1.0 - s * t);
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::Matern52 => {
                let (var, ell) = (p.natural(0), p.natural(1));
                let s = 5f64.sqrt() / ell;
                let t = r.abs();
                let e = (-s * t).exp();
                let g = var * (1.0 + s * t + s * s * t * t / 3.0) * e;
                let gp = -(var * s * s / 3.0) * r * (1.0 + s * t) * e;
                let gpp = -(var * s * s / 3.0) * e * (1.0 + s * t - s * s * t * t);
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::Periodic => {
                let (var, ell, period) = (p.natural(0), p.natural(1), p.natural(2));
                let l2 = ell * ell;
                let w = 2.0 * std::f64::consts::PI / period;
                // 2 sin^2(pi r / T) = 1 - cos(2 pi r / T)
                let g = var * (-(1.0 - (w * r).cos()) / l2).exp();
                let gp = -(w / l2) * (w * r).sin() * g;
                let gpp = -(w * w / l2) * (w * r).cos() * g
                    + (w / l2).powi(2) * (w * r).sin().powi(2) * g;
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::SpectralMixture(a) => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let pi2 = std::f64::consts::PI * std::f64::consts::PI;
                let (mut g, mut gp, mut gpp) = (0.0, 0.0, 0.0);
                for i in 0..*a {
                    let w2 = p.natural(3 * i);
                    let s = p.natural(3 * i + 1);
                    let mu = p.natural(3 * i + 2);
                    let e = (-2.0 * pi2 * s * s * r * r).exp();
                    let c = (two_pi * mu * r).cos();
                    let sn = (two_pi * mu * r).sin();
                    g += w2 * e * c;
                    gp += w2 * e * (-4.0 * pi2 * s * s * r * c - two_pi * mu * sn);
                    gpp += w2
                        * e
                        * ((16.0 * pi2 * pi2 * s.powi(4) * r * r
                            - 4.0 * pi2 * s * s
                            - 4.0 * pi2 * mu * mu)
                            * c
                            + 16.0 * pi2 * std::f64::consts::PI * s * s * mu * r * sn);
                }
                Ok(Parts::stationary(g, gp, gpp))
            }
            KernelFamily::Polynomial2 => {
                let (var, c) = (p.natural(0), p.natural(1));
                let inner = x * y + c;
                Ok(Parts {
                    value: var * inner * inner,
                    dx: 2.0 * var * inner * y,
                    dy: 2.0 * var * inner * x,
                    dxdy: 2.0 * var * (2.0 * x * y + c),
                })
            }
            KernelFamily::Linear { center } => {
                let var = p.natural(0);
                Ok(Parts {
                    value: var * (x - center) * (y - center),
                    dx: var * (y - center),
                    dy: var * (x - center),
                    dxdy: var,
                })
            }
        }
    }
}

impl Parts {
    /// Map stationary derivatives g'(r), g''(r) with r = x - y onto the
    /// block entries: dk/dx = g', dk/dy = -g', d2k/dxdy = -g''.
    fn stationary(g: f64, gp: f64, gpp: f64) -> Self {
        Parts {
            value: g,
            dx: gp,
            dy: -gp,
            dxdy: -gpp,
        }
    }
}

/// Classification of a kernel's boundary Gaussian at a pair of points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DegeneracyStatus {
    NonDegenerate,
    /// The value/derivative pair at `a` is perfectly correlated.
    DegenerateAtA,
    /// The pair at `b` is fully determined by the pair at `a`.
    DegenerateAtBGivenA,
}

/// Diagnostics from [`check_degeneracy`].
#[derive(Debug, Clone, PartialEq)]
pub struct DegeneracyReport {
    pub status: DegeneracyStatus,
    /// Reciprocal condition estimate of the 2x2 block at `a`.
    pub rcond_at_a: f64,
    /// Smallest eigenvalue of the Schur complement at `b`, measured against
    /// the scale of the unconditional block at `b`. The scaling keeps the
    /// fully-determined case (Schur complement ~ 0 in every entry) away
    /// from a 0/0 ratio.
    pub rcond_schur: f64,
}

impl DegeneracyReport {
    pub fn is_non_degenerate(&self) -> bool {
        self.status == DegeneracyStatus::NonDegenerate
    }
}

/// Classify whether `kernel` is degenerate at `a`, or at `b` given `a`.
pub fn check_degeneracy(
    kernel: &DerivativeKernel,
    a: f64,
    b: f64,
    rcond_threshold: f64,
) -> Result<DegeneracyReport> {
    if a == b {
        return Err(Error::InvalidParam {
            name: "b".into(),
            reason: "degeneracy check needs two distinct points".into(),
        });
    }
    let kaa = kernel.eval_block(a, a)?;
    let kaa_d = nalgebra::DMatrix::from_row_slice(2, 2, kaa.as_slice());
    // Matrix2::as_slice is column-major but the block is symmetric up to
    // roundoff, so row/column order does not matter for eigenvalues.
    let rcond_a = rcond_2x2(&kaa_d);
    if rcond_a < rcond_threshold {
        return Ok(DegeneracyReport {
            status: DegeneracyStatus::DegenerateAtA,
            rcond_at_a: rcond_a,
            rcond_schur: 0.0,
        });
    }
    let kbb = kernel.eval_block(b, b)?;
    let kab = kernel.eval_block(a, b)?;
    let inv = kaa.try_inverse().ok_or(Error::IllConditioned {
        context: "degeneracy check at a",
    })?;
    let schur = kbb - kab.transpose() * inv * kab;
    let schur_d = nalgebra::DMatrix::from_row_slice(2, 2, schur.as_slice());
    let (lo, _) = eigvals_2x2(&schur_d);
    let kbb_d = nalgebra::DMatrix::from_row_slice(2, 2, kbb.as_slice());
    let (_, bmax) = eigvals_2x2(&kbb_d);
    let rcond_schur = if bmax > 0.0 { lo.max(0.0) / bmax } else { 0.0 };
    let status = if rcond_schur < rcond_threshold {
        DegeneracyStatus::DegenerateAtBGivenA
    } else {
        DegeneracyStatus::NonDegenerate
    };
    Ok(DegeneracyReport {
        status,
        rcond_at_a: rcond_a,
        rcond_schur,
    })
}
