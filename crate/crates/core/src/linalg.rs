//! Small dense kernels: Cholesky solves for the LM normal equations and
//! power iteration for the dominant covariance direction.

use alloc::vec;
use alloc::vec::Vec;

use crate::math;

/// Solves `A x = b` for symmetric positive-definite `A` (row-major, `n x n`).
/// Returns `None` if the factorization meets a non-positive pivot.
pub(crate) fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    debug_assert_eq!(a.len(), n * n);
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) || !s.is_finite() {
                    return None;
                }
                l[i * n + i] = math::sqrt(s);
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i * n + k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k * n + i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Population covariance (divides by the number of points), row-major.
pub(crate) fn covariance<const D: usize>(points: &[[f64; D]], mean: &[f64; D]) -> Vec<f64> {
    let mut cov = vec![0.0; D * D];
    for p in points {
        for i in 0..D {
            let di = p[i] - mean[i];
            for j in i..D {
                cov[i * D + j] += di * (p[j] - mean[j]);
            }
        }
    }
    let n = points.len() as f64;
    for i in 0..D {
        for j in i..D {
            let v = cov[i * D + j] / n;
            cov[i * D + j] = v;
            cov[j * D + i] = v;
        }
    }
    cov
}

pub(crate) const POWER_MAX_ITERS: usize = 100;
pub(crate) const POWER_REL_TOL: f64 = 1e-10;

/// Dominant eigenpair of a symmetric positive semi-definite matrix.
///
/// Starts from the column of largest norm, which lies in the range of the
/// matrix. The eigenvector is returned with unit norm and its largest
/// component positive. Returns `(0, e_0)` for the zero matrix.
pub(crate) fn dominant_eigen(m: &[f64], n: usize) -> (f64, Vec<f64>) {
    let col_norm = |j: usize| (0..n).map(|i| m[i * n + j] * m[i * n + j]).sum::<f64>();
    let start = (0..n)
        .max_by(|&a, &b| col_norm(a).total_cmp(&col_norm(b)).then(b.cmp(&a)))
        .unwrap_or(0);
    let mut v: Vec<f64> = (0..n).map(|i| m[i * n + start]).collect();
    let norm = math::sqrt(v.iter().map(|x| x * x).sum());
    if !(norm > 0.0) {
        let mut e = vec![0.0; n];
        e[0] = 1.0;
        return (0.0, e);
    }
    v.iter_mut().for_each(|x| *x /= norm);

    let mut lambda = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let w: Vec<f64> = (0..n)
            .map(|i| (0..n).map(|j| m[i * n + j] * v[j]).sum())
            .collect();
        let norm = math::sqrt(w.iter().map(|x| x * x).sum());
        if !(norm > 0.0) {
            break;
        }
        let next: Vec<f64> = w.iter().map(|x| x / norm).collect();
        let change = math::sqrt(next.iter().zip(&v).map(|(a, b)| (a - b) * (a - b)).sum());
        let new_lambda: f64 = (0..n)
            .map(|i| next[i] * (0..n).map(|j| m[i * n + j] * next[j]).sum::<f64>())
            .sum();
        v = next;
        let rel = (new_lambda - lambda).abs() / new_lambda.abs().max(f64::MIN_POSITIVE);
        lambda = new_lambda;
        if change < POWER_REL_TOL || rel < POWER_REL_TOL * 1e-2 {
            break;
        }
    }
    let (imax, _) = v.iter().enumerate().fold((0, 0.0f64), |(bi, bv), (i, x)| {
        if x.abs() > bv {
            (i, x.abs())
        } else {
            (bi, bv)
        }
    });
    if v[imax] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    (lambda, v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cholesky_solves_small_system() {
        let a = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&a, &[2.0, 1.0], 2).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 2.0).abs() < 1e-12);
        assert!((2.0 * x[0] + 3.0 * x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cholesky_rejects_indefinite() {
        assert!(cholesky_solve(&[1.0, 2.0, 2.0, 1.0], &[1.0, 1.0], 2).is_none());
    }

    #[test]
    fn power_iteration_on_diagonal() {
        let (l, v) = dominant_eigen(&[1.0, 0.0, 0.0, 3.0], 2);
        assert!((l - 3.0).abs() < 1e-12);
        assert!((v[1] - 1.0).abs() < 1e-12);
    }
}
