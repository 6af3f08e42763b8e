//! Reference implementations that share no code with `spkid-core`.
//!
//! Each routine takes the slow, obvious route (exhaustive scans, dense
//! eigensolvers, FFTs, finite differences) so that tests can compare the
//! production code against something written independently.

use nalgebra::{DMatrix, DVector, SMatrix, SVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::num_complex::Complex64;
use rustfft::FftPlanner;

/// `sum_n x[n] x[n+k]` by a double loop.
pub fn autocorrelation(x: &[f64], max_lag: usize) -> Vec<f64> {
    let mut r = vec![0.0; max_lag + 1];
    for (k, rk) in r.iter_mut().enumerate() {
        for n in 0..x.len() {
            if n + k < x.len() {
                *rk += x[n] * x[n + k];
            }
        }
    }
    r
}

pub fn mean_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += (a[i] - b[i]).abs();
    }
    s / a.len() as f64
}

/// Exhaustive nearest centroid under mean absolute difference; the first of
/// equally near centroids wins.
pub fn nearest(v: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let dists: Vec<f64> = centroids.iter().map(|c| mean_abs_diff(v, c)).collect();
    let mut best = 0;
    for i in 1..dists.len() {
        if dists[i] < dists[best] {
            best = i;
        }
    }
    (best, dists[best])
}

/// Per-dimension standard deviation via `E[x^2] - E[x]^2` on centred data
/// (a single formula, unlike the two-pass production code).
pub fn stddev_per_dim(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let n = points.len() as f64;
    (0..dim)
        .map(|d| {
            let shift = points[0][d];
            let s1: f64 = points.iter().map(|p| p[d] - shift).sum();
            let s2: f64 = points.iter().map(|p| (p[d] - shift).powi(2)).sum();
            ((s2 / n) - (s1 / n).powi(2)).max(0.0).sqrt()
        })
        .collect()
}

/// Dominant eigenpair of the population covariance, by full symmetric
/// eigendecomposition.
pub fn dominant_covariance_eigen(points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let dim = points[0].len();
    let n = points.len();
    let data = DMatrix::from_fn(n, dim, |i, j| points[i][j]);
    let mean = data.row_mean();
    let centred = DMatrix::from_fn(n, dim, |i, j| data[(i, j)] - mean[j]);
    let cov = centred.transpose() * &centred / n as f64;
    let eig = cov.symmetric_eigen();
    let imax = eig.eigenvalues.imax();
    let v: Vec<f64> = eig.eigenvectors.column(imax).iter().copied().collect();
    (eig.eigenvalues[imax], v)
}

/// Predictor polynomial from reflection coefficients (step-up), in the
/// `x^[n] = sum a_k x[n-k]` convention.
pub fn lpc_from_reflection(k: &[f64]) -> Vec<f64> {
    let mut a: Vec<f64> = Vec::new();
    for &ki in k {
        let prev = a.clone();
        let i = prev.len() + 1;
        a = (1..i).map(|j| prev[j - 1] - ki * prev[i - j - 1]).collect();
        a.push(ki);
    }
    a
}

/// Random stable order-`p` predictor: reflection coefficients uniform in
/// `(-kmax, kmax)`.
pub fn random_stable_lpc<R: Rng>(rng: &mut R, p: usize, kmax: f64) -> Vec<f64> {
    let k: Vec<f64> = (0..p).map(|_| rng.gen_range(-kmax..kmax)).collect();
    lpc_from_reflection(&k)
}

/// Cepstrum `c_1..c_order` of `1 / A(z)`, `A(z) = 1 - sum a_k z^-k`, from the
/// log-magnitude spectrum. For a minimum-phase model the complex cepstrum is
/// causal, so `c_n = 2 * real_cepstrum[n]` for `n >= 1`.
pub fn fft_cepstrum(lpc: &[f64], order: usize, nfft: usize) -> Vec<f64> {
    let mut planner = FftPlanner::<f64>::new();
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    buf[0] = Complex64::new(1.0, 0.0);
    for (k, a) in lpc.iter().enumerate() {
        buf[k + 1] = Complex64::new(-a, 0.0);
    }
    planner.plan_fft_forward(nfft).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex64::new(-z.norm().ln(), 0.0);
    }
    planner.plan_fft_inverse(nfft).process(&mut buf);
    (1..=order).map(|n| 2.0 * buf[n].re / nfft as f64).collect()
}

/// Samples of `x[n] = sum a_k x[n-k] + g * w[n]` with Gaussian `w`, after a
/// burn-in of 1000 samples.
pub fn ar_process<R: Rng>(rng: &mut R, a: &[f64], n: usize, gain: f64) -> Vec<f64> {
    let p = a.len();
    let burn = 1000;
    let mut x = vec![0.0; n + burn + p];
    for t in p..x.len() {
        let w: f64 = StandardNormal.sample(rng);
        let mut s = gain * w;
        for k in 1..=p {
            s += a[k - 1] * x[t - k];
        }
        x[t] = s;
    }
    x.split_off(burn + p)
}

/// 10-4-2-1 network evaluated with explicit matrices. Parameter order:
/// `W1 (4x10 row-major), b1, W2 (2x4), b2, w3, b3`.
pub fn mlp_forward(params: &[f64], x: &[f64]) -> f64 {
    assert_eq!(params.len(), 57);
    let w1 = SMatrix::<f64, 4, 10>::from_row_slice(&params[0..40]);
    let b1 = SVector::<f64, 4>::from_column_slice(&params[40..44]);
    let w2 = SMatrix::<f64, 2, 4>::from_row_slice(&params[44..52]);
    let b2 = SVector::<f64, 2>::from_column_slice(&params[52..54]);
    let w3 = SVector::<f64, 2>::from_column_slice(&params[54..56]);
    let b3 = params[56];
    let xin = SVector::<f64, 10>::from_column_slice(x);
    let h1 = (w1 * xin + b1).map(f64::tanh);
    let h2 = (w2 * h1 + b2).map(f64::tanh);
    w3.dot(&h2) + b3
}

/// Central differences of `f` around `params`.
pub fn central_difference_gradient(f: impl Fn(&[f64]) -> f64, params: &[f64], h: f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..params.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + h;
            let up = f(&p);
            p[i] = orig - h;
            let down = f(&p);
            p[i] = orig;
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Least-squares linear predictor of order `p` fitted by the covariance
/// method on `x`, and its residual MSE over the same span.
pub fn least_squares_predictor(x: &[f64], p: usize) -> (Vec<f64>, f64) {
    let rows = x.len() - p;
    let a = DMatrix::from_fn(rows, p, |r, k| x[r + p - 1 - k]);
    let b = DVector::from_fn(rows, |r, _| x[r + p]);
    let sol = a
        .clone()
        .svd(true, true)
        .solve(&b, 1e-12)
        .expect("svd solve");
    let resid = &b - &a * &sol;
    let mse = resid.norm_squared() / rows as f64;
    (sol.iter().copied().collect(), mse)
}

/// One standard normal draw.
pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    StandardNormal.sample(rng)
}

/// Predictor coefficients of `A(z) = prod (1 - p_i z^-1)` for `order / 2`
/// conjugate pole pairs with radius uniform in `[rmin, rmax]` and angle
/// uniform in `(0, pi)`. `order` must be even.
pub fn random_lpc_from_poles<R: Rng>(rng: &mut R, order: usize, rmin: f64, rmax: f64) -> Vec<f64> {
    assert!(order.is_multiple_of(2));
    // polynomial coefficients of A(z) in powers of z^-1, starting at 1
    let mut poly = vec![1.0];
    for _ in 0..order / 2 {
        let r: f64 = rng.gen_range(rmin..=rmax);
        let theta: f64 = rng.gen_range(0.05..std::f64::consts::PI - 0.05);
        // (1 - 2 r cos(theta) z^-1 + r^2 z^-2)
        let quad = [1.0, -2.0 * r * theta.cos(), r * r];
        let mut next = vec![0.0; poly.len() + 2];
        for (i, p) in poly.iter().enumerate() {
            for (j, q) in quad.iter().enumerate() {
                next[i + j] += p * q;
            }
        }
        poly = next;
    }
    poly[1..].iter().map(|c| -c).collect()
}
