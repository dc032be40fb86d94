//! Exact sampling from a string GP.
//!
//! Draws follow the generative definition: boundary pairs are drawn along
//! the Markov chain (propagation matrix times previous pair plus an
//! innovation), then each string's interior points are drawn from their
//! conditional Gaussian given the two enclosing boundary pairs. A path
//! sampler precomputes every factorization so that repeated draws cost a
//! handful of small matrix-vector products.

use nalgebra::{DMatrix, DVector, Matrix2, Vector2, Vector4};
use rand::{Rng, RngExt};
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::cholesky_jittered;
use crate::string_gp::StringGp;

/// One joint draw of the (value, derivative) pairs at every partition
/// boundary, indexed 0..=K.
#[derive(Debug, Clone)]
pub struct BoundaryDraw {
    pub pairs: Vec<Vector2<f64>>,
}

/// One joint draw of the process at a fixed set of inputs.
#[derive(Debug, Clone)]
pub struct PathDraw {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub derivs: Vec<f64>,
}

/// Precomputed factorizations for drawing boundary pairs.
struct BoundaryPlan {
    root_mean: Vector2<f64>,
    root_chol: Matrix2<f64>,
    /// Per string: propagation matrix, innovation Cholesky factor, and the
    /// string's own mean pairs at its left and right boundary.
    steps: Vec<(Matrix2<f64>, Matrix2<f64>, Vector2<f64>, Vector2<f64>)>,
}

impl BoundaryPlan {
    fn build(gp: &StringGp) -> Result<Self> {
        let sk = gp.kernel();
        let moments = gp.moments();
        let knots = sk.partition().knots();
        let root_cov = moments.cov(0, 0);
        let root_chol = chol2(&root_cov, "boundary root covariance")?;
        let mut steps = Vec::with_capacity(sk.partition().num_strings());
        for k in 1..=sk.partition().num_strings() {
            let m = *moments.propagation(k);
            let l = chol2(moments.innovation(k), "boundary innovation")?;
            let mean = &sk.means()[k - 1];
            steps.push((m, l, mean.pair(knots[k - 1]), mean.pair(knots[k])));
        }
        Ok(Self {
            root_mean: *moments.mean(0),
            root_chol,
            steps,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> BoundaryDraw {
        let mut pairs = Vec::with_capacity(self.steps.len() + 1);
        let xi = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
        pairs.push(self.root_mean + self.root_chol * xi);
        for (m, l, mean_lo, mean_hi) in &self.steps {
            let prev = *pairs.last().unwrap();
            let xi = Vector2::new(rng.sample(StandardNormal), rng.sample(StandardNormal));
            pairs.push(mean_hi + m * (prev - mean_lo) + l * xi);
        }
        BoundaryDraw { pairs }
    }
}

/// Lower Cholesky factor of a 2x2 covariance, with the shared jitter
/// policy as fallback for semidefinite innovations.
fn chol2(c: &Matrix2<f64>, context: &'static str) -> Result<Matrix2<f64>> {
    let d = DMatrix::from_row_slice(2, 2, &[c[(0, 0)], c[(0, 1)], c[(1, 0)], c[(1, 1)]]);
    let (chol, _) = cholesky_jittered(&d, context)?;
    let l = chol.l();
    Ok(Matrix2::new(l[(0, 0)], 0.0, l[(1, 0)], l[(1, 1)]))
}

/// Interior points of one string, with everything needed to draw them
/// given the enclosing boundary pairs.
struct StringPlan {
    string: usize,
    /// Positions in the caller's `xs` of this string's interior points.
    idx: Vec<usize>,
    /// 2m x 4 stack of interpolation weights.
    lam: DMatrix<f64>,
    /// Mean pairs of the string's own mean function at the points.
    mean_pts: DVector<f64>,
    /// Mean pairs of the string's own mean function at its boundaries.
    mean_bnd: Vector4<f64>,
    /// Lower Cholesky factor of the conditional residual gram.
    resid_l: DMatrix<f64>,
}

/// Repeated exact draws at a fixed set of inputs. All factorizations are
/// done at construction; `draw` only does matrix-vector work.
pub struct PathSampler {
    xs: Vec<f64>,
    boundary: BoundaryPlan,
    strings: Vec<StringPlan>,
    /// (position in xs, boundary index) for points lying on a knot.
    on_boundary: Vec<(usize, usize)>,
}

impl PathSampler {
    pub fn new(gp: &StringGp, xs: &[f64]) -> Result<Self> {
        let partition = gp.partition();
        let knots = partition.knots();
        let n_strings = partition.num_strings();
        let boundary = BoundaryPlan::build(gp)?;

        let mut on_boundary = Vec::new();
        let mut per_string: Vec<Vec<usize>> = vec![Vec::new(); n_strings];
        for (i, &t) in xs.iter().enumerate() {
            if let Some(b) = knots.iter().position(|&a| a == t) {
                on_boundary.push((i, b));
            } else {
                let s = partition.locate_string(t)?;
                per_string[s - 1].push(i);
            }
        }

        let mut strings = Vec::new();
        for (s0, idx) in per_string.into_iter().enumerate() {
            if idx.is_empty() {
                continue;
            }
            let string = s0 + 1;
            let (lo, hi) = partition.bounds(string);
            let mean_fn = &gp.kernel().means()[string - 1];
            let m = idx.len();
            let mut lam = DMatrix::zeros(2 * m, 4);
            let mut mean_pts = DVector::zeros(2 * m);
            let lams: Vec<_> = idx
                .iter()
                .map(|&i| gp.lambda(xs[i]))
                .collect::<Result<_>>()?;
            for (r, (&i, lw)) in idx.iter().zip(&lams).enumerate() {
                for a in 0..2 {
                    for b in 0..4 {
                        lam[(2 * r + a, b)] = lw.weights[(a, b)];
                    }
                }
                let mp = mean_fn.pair(xs[i]);
                mean_pts[2 * r] = mp[0];
                mean_pts[2 * r + 1] = mp[1];
            }
            let mut mean_bnd = Vector4::zeros();
            mean_bnd.fixed_rows_mut::<2>(0).copy_from(&mean_fn.pair(lo));
            mean_bnd.fixed_rows_mut::<2>(2).copy_from(&mean_fn.pair(hi));

            let mut resid = DMatrix::zeros(2 * m, 2 * m);
            for (r, (&i, lw)) in idx.iter().zip(&lams).enumerate() {
                for (c, &j) in idx.iter().enumerate() {
                    let blk = gp.conditional_residual(lw, xs[i], xs[j])?;
                    for a in 0..2 {
                        for b in 0..2 {
                            resid[(2 * r + a, 2 * c + b)] = blk[(a, b)];
                        }
                    }
                }
            }
            let (chol, _) = cholesky_jittered(&resid, "string conditional residual")?;
            strings.push(StringPlan {
                string,
                idx,
                lam,
                mean_pts,
                mean_bnd,
                resid_l: chol.l(),
            });
        }

        Ok(Self {
            xs: xs.to_vec(),
            boundary,
            strings,
            on_boundary,
        })
    }

    /// One joint draw at the planned inputs.
    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> PathDraw {
        let bd = self.boundary.draw(rng);
        let mut values = vec![0.0; self.xs.len()];
        let mut derivs = vec![0.0; self.xs.len()];

        for &(i, b) in &self.on_boundary {
            values[i] = bd.pairs[b][0];
            derivs[i] = bd.pairs[b][1];
        }
        for plan in &self.strings {
            let mut bnd = Vector4::zeros();
            bnd.fixed_rows_mut::<2>(0)
                .copy_from(&bd.pairs[plan.string - 1]);
            bnd.fixed_rows_mut::<2>(2).copy_from(&bd.pairs[plan.string]);
            let centered = bnd - plan.mean_bnd;
            let m = plan.idx.len();
            let xi = DVector::from_fn(2 * m, |_, _| rng.sample(StandardNormal));
            let vals = &plan.mean_pts + &plan.lam * centered + &plan.resid_l * xi;
            for (r, &i) in plan.idx.iter().enumerate() {
                values[i] = vals[2 * r];
                derivs[i] = vals[2 * r + 1];
            }
        }
        PathDraw {
            xs: self.xs.clone(),
            values,
            derivs,
        }
    }
}

/// Draw `n_draws` independent realizations of the boundary pairs.
pub fn sample_boundaries<R: Rng + ?Sized>(
    gp: &StringGp,
    n_draws: usize,
    rng: &mut R,
) -> Result<Vec<BoundaryDraw>> {
    let plan = BoundaryPlan::build(gp)?;
    Ok((0..n_draws).map(|_| plan.draw(rng)).collect())
}

/// One joint draw of the process at `xs`.
pub fn sample_path<R: Rng + ?Sized>(
    gp: &StringGp,
    xs: &[f64],
    rng: &mut R,
) -> Result<PathDraw> {
    if xs.is_empty() {
        return Err(Error::InvalidParam {
            name: "xs".into(),
            reason: "need at least one input".into(),
        });
    }
    Ok(PathSampler::new(gp, xs)?.draw(rng))
}
