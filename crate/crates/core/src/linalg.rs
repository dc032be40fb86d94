//! Shared dense-matrix helpers: jittered Cholesky solves and small symmetric
//! eigenvalue utilities.
//!
//! All positive-definite solves in the crate go through [`cholesky_jittered`]
//! so every module shares one failure policy: on a failed factorization, add
//! `1e-10 * trace/dim` to the diagonal and retry over three decades of jitter
//! before giving up.

use nalgebra::{Cholesky, DMatrix, Dyn};

use crate::error::{Error, Result};

/// Base relative jitter added on the first failed factorization attempt.
pub const BASE_JITTER: f64 = 1e-10;
/// Number of decades of jitter escalation before the solve is abandoned.
pub const JITTER_DECADES: u32 = 3;

/// Cholesky factorization with the shared escalating-jitter policy.
///
/// Returns the factorization together with the jitter that was actually
/// added (0.0 on a clean first attempt).
pub fn cholesky_jittered(
    mat: &DMatrix<f64>,
    context: &'static str,
) -> Result<(Cholesky<f64, Dyn>, f64)> {
    let n = mat.nrows();
    if let Some(ch) = Cholesky::new(mat.clone()) {
        return Ok((ch, 0.0));
    }
    let scale = mat.trace() / n as f64;
    let unit = if scale > 1e-300 { scale } else { 1.0 };
    for decade in 0..=JITTER_DECADES {
        let jitter = BASE_JITTER * 10f64.powi(decade as i32) * unit;
        let mut jittered = mat.clone();
        for i in 0..n {
            jittered[(i, i)] += jitter;
        }
        if let Some(ch) = Cholesky::new(jittered) {
            return Ok((ch, jitter));
        }
    }
    Err(Error::IllConditioned { context })
}

/// Solve `mat * x = rhs` for symmetric positive-definite `mat`.
pub fn solve_spd(
    mat: &DMatrix<f64>,
    rhs: &DMatrix<f64>,
    context: &'static str,
) -> Result<DMatrix<f64>> {
    let (ch, _) = cholesky_jittered(mat, context)?;
    Ok(ch.solve(rhs))
}

/// Force exact symmetry by averaging with the transpose.
pub fn symmetrize(mat: &mut DMatrix<f64>) {
    let n = mat.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = 0.5 * (mat[(i, j)] + mat[(j, i)]);
            mat[(i, j)] = avg;
            mat[(j, i)] = avg;
        }
    }
}

/// Eigenvalues of a symmetric 2x2 matrix, ascending.
pub fn eigvals_2x2(m: &DMatrix<f64>) -> (f64, f64) {
    debug_assert_eq!(m.nrows(), 2);
    let a = m[(0, 0)];
    let b = 0.5 * (m[(0, 1)] + m[(1, 0)]);
    let d = m[(1, 1)];
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b * b).sqrt();
    (mean - disc, mean + disc)
}

/// Reciprocal condition number |lambda_min| / |lambda_max| of a symmetric
/// 2x2 matrix. Returns 0 for the zero matrix.
pub fn rcond_2x2(m: &DMatrix<f64>) -> f64 {
    let (lo, hi) = eigvals_2x2(m);
    let amax = lo.abs().max(hi.abs());
    if amax == 0.0 {
        return 0.0;
    }
    lo.abs().min(hi.abs()) / amax
}

/// Minimum eigenvalue of a symmetric matrix.
pub fn min_eigenvalue(mat: &DMatrix<f64>) -> f64 {
    let mut sym = mat.clone();
    symmetrize(&mut sym);
    sym.symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn jitter_rescues_semidefinite_matrix() {
        // Rank-1 PSD matrix: plain Cholesky fails, jitter succeeds.
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let (ch, jitter) = cholesky_jittered(&m, "test").unwrap();
        assert!(jitter > 0.0);
        let l = ch.l();
        let back = &l * l.transpose();
        assert_relative_eq!(back[(0, 0)], 1.0, epsilon = 1e-8);
    }

    #[test]
    fn indefinite_matrix_is_rejected() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(
            cholesky_jittered(&m, "test"),
            Err(Error::IllConditioned { .. })
        ));
    }

    #[test]
    fn eig_2x2_matches_trace_det() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 1.0, 1.0, 2.0]);
        let (lo, hi) = eigvals_2x2(&m);
        assert_relative_eq!(lo + hi, 5.0, epsilon = 1e-12);
        assert_relative_eq!(lo * hi, 5.0, epsilon = 1e-12);
    }

    #[test]
    fn rcond_of_identity_is_one() {
        let m = DMatrix::identity(2, 2);
        assert_relative_eq!(rcond_2x2(&m), 1.0, epsilon = 1e-15);
    }
}
