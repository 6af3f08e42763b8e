//! 10-4-2-1 multilayer perceptron sample predictor and its
//! Levenberg-Marquardt trainer.
//!
//! Both hidden layers use `tanh`; the output neuron is linear. Parameters are
//! stored flat in the order `W1 (4x10, row-major), b1, W2 (2x4), b2, w3, b3`.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::linalg;
use crate::math;
use crate::predictor::{SamplePredictor, HISTORY_LEN};

pub const INPUTS: usize = HISTORY_LEN;
pub const HIDDEN1: usize = 4;
pub const HIDDEN2: usize = 2;
pub const PARAM_COUNT: usize =
    (INPUTS * HIDDEN1 + HIDDEN1) + (HIDDEN1 * HIDDEN2 + HIDDEN2) + (HIDDEN2 + 1);

const W1: usize = 0;
const B1: usize = W1 + INPUTS * HIDDEN1;
const W2: usize = B1 + HIDDEN1;
const B2: usize = W2 + HIDDEN1 * HIDDEN2;
const W3: usize = B2 + HIDDEN2;
const B3: usize = W3 + HIDDEN2;

/// Offset of the output bias in the flat parameter vector.
pub const OUTPUT_BIAS: usize = B3;
/// Offsets of the first-layer input weights.
pub const INPUT_WEIGHTS: core::ops::Range<usize> = W1..B1;

/// Ten past samples, oldest first.
pub type History = [f64; INPUTS];

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(try_from = "Vec<f64>", into = "Vec<f64>"))]
pub struct MlpPredictor {
    params: [f64; PARAM_COUNT],
}

impl From<MlpPredictor> for Vec<f64> {
    fn from(m: MlpPredictor) -> Self {
        m.params.to_vec()
    }
}

impl TryFrom<Vec<f64>> for MlpPredictor {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        MlpPredictor::from_params(&v)
    }
}

struct Activations {
    h1: [f64; HIDDEN1],
    h2: [f64; HIDDEN2],
    out: f64,
}

impl MlpPredictor {
    pub fn zeros() -> Self {
        Self {
            params: [0.0; PARAM_COUNT],
        }
    }

    pub fn from_params(p: &[f64]) -> Result<Self> {
        let params: [f64; PARAM_COUNT] = p
            .try_into()
            .map_err(|_| Error::InvalidArgument("MLP needs exactly 57 parameters"))?;
        if params.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("MLP parameters must be finite"));
        }
        Ok(Self { params })
    }

    /// Every parameter drawn uniformly from [-0.5, 0.5].
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut params = [0.0; PARAM_COUNT];
        params
            .iter_mut()
            .for_each(|p| *p = rng.gen_range(-0.5..=0.5));
        Self { params }
    }

    pub fn params(&self) -> &[f64; PARAM_COUNT] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64; PARAM_COUNT] {
        &mut self.params
    }

    #[inline]
    fn forward(&self, x: &[f64]) -> Activations {
        let p = &self.params;
        let mut h1 = [0.0; HIDDEN1];
        for (j, h) in h1.iter_mut().enumerate() {
            let row = &p[W1 + j * INPUTS..W1 + (j + 1) * INPUTS];
            let z: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + p[B1 + j];
            *h = math::tanh(z);
        }
        let mut h2 = [0.0; HIDDEN2];
        for (m, h) in h2.iter_mut().enumerate() {
            let row = &p[W2 + m * HIDDEN1..W2 + (m + 1) * HIDDEN1];
            let z: f64 = row.iter().zip(&h1).map(|(w, a)| w * a).sum::<f64>() + p[B2 + m];
            *h = math::tanh(z);
        }
        let out = p[W3] * h2[0] + p[W3 + 1] * h2[1] + p[B3];
        Activations { h1, h2, out }
    }

    /// Predicted next sample.
    #[inline]
    pub fn predict(&self, history: &[f64]) -> f64 {
        debug_assert_eq!(history.len(), INPUTS);
        self.forward(history).out
    }

    /// Output and its gradient with respect to every parameter.
    pub fn output_gradient(&self, x: &[f64], grad: &mut [f64; PARAM_COUNT]) -> f64 {
        let p = &self.params;
        let a = self.forward(x);
        grad[B3] = 1.0;
        let mut delta2 = [0.0; HIDDEN2];
        for m in 0..HIDDEN2 {
            grad[W3 + m] = a.h2[m];
            delta2[m] = p[W3 + m] * (1.0 - a.h2[m] * a.h2[m]);
            grad[B2 + m] = delta2[m];
            for j in 0..HIDDEN1 {
                grad[W2 + m * HIDDEN1 + j] = delta2[m] * a.h1[j];
            }
        }
        for j in 0..HIDDEN1 {
            let back: f64 = (0..HIDDEN2)
                .map(|m| delta2[m] * p[W2 + m * HIDDEN1 + j])
                .sum();
            let delta1 = back * (1.0 - a.h1[j] * a.h1[j]);
            grad[B1 + j] = delta1;
            for i in 0..INPUTS {
                grad[W1 + j * INPUTS + i] = delta1 * x[i];
            }
        }
        a.out
    }
}

impl SamplePredictor for MlpPredictor {
    #[inline]
    fn predict(&self, history: &[f64]) -> f64 {
        MlpPredictor::predict(self, history)
    }

    fn units_per_prediction(&self, c_tg: u64) -> u64 {
        PARAM_COUNT as u64 + c_tg * (HIDDEN1 + HIDDEN2) as u64
    }
}

/// Rows of `d output / d parameter`, one per input history.
pub fn jacobian(mlp: &MlpPredictor, inputs: &[History]) -> Vec<[f64; PARAM_COUNT]> {
    inputs
        .iter()
        .map(|x| {
            let mut g = [0.0; PARAM_COUNT];
            mlp.output_gradient(x, &mut g);
            g
        })
        .collect()
}

// ---------------------------------------------------------------------------
// Training data
// ---------------------------------------------------------------------------

/// `(history, target)` pairs for one predictor.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingSet {
    pub histories: Vec<History>,
    pub targets: Vec<f64>,
}

impl TrainingSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn push(&mut self, history: History, target: f64) {
        self.histories.push(history);
        self.targets.push(target);
    }

    /// Adds every in-frame pair `(raw[n-10..n], raw[n])`, `n = 10..len`.
    pub fn extend_from_frame(&mut self, raw: &[f64]) {
        for n in INPUTS..raw.len() {
            let h: History = raw[n - INPUTS..n].try_into().expect("window of 10");
            self.push(h, raw[n]);
        }
    }

    /// Keeps `cap` pairs chosen uniformly without replacement, in their
    /// original order. No-op when already within the cap.
    pub fn subsample<R: Rng + ?Sized>(&mut self, cap: usize, rng: &mut R) {
        if self.len() <= cap {
            return;
        }
        let mut idx = rand::seq::index::sample(rng, self.len(), cap).into_vec();
        idx.sort_unstable();
        self.histories = idx.iter().map(|&i| self.histories[i]).collect();
        self.targets = idx.iter().map(|&i| self.targets[i]).collect();
    }

    pub fn mse(&self, mlp: &MlpPredictor) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.histories
            .iter()
            .zip(&self.targets)
            .map(|(h, t)| {
                let e = t - mlp.predict(h);
                e * e
            })
            .sum::<f64>()
            / self.len() as f64
    }
}

// ---------------------------------------------------------------------------
// Levenberg-Marquardt
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub epochs_per_start: usize,
    pub num_random_starts: usize,
    pub lm_lambda_init: f64,
    pub lm_lambda_factor: f64,
    /// Damping increases tried within one epoch before giving up on it.
    pub max_lambda_escalations: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_per_start: 8,
            num_random_starts: 4,
            lm_lambda_init: 1e-3,
            lm_lambda_factor: 10.0,
            max_lambda_escalations: 10,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs_per_start == 0
            || self.num_random_starts == 0
            || !(self.lm_lambda_init > 0.0)
            || !(self.lm_lambda_factor > 1.0)
            || self.max_lambda_escalations == 0
        {
            return Err(Error::InvalidArgument(
                "training configuration values must be positive",
            ));
        }
        Ok(())
    }
}

const LAMBDA_CEILING: f64 = 1e16;

#[derive(Debug, Clone, PartialEq)]
pub struct LmOutcome {
    pub predictor: MlpPredictor,
    pub mse: f64,
    /// Training MSE at the start and after every accepted step.
    pub accepted_mse: Vec<f64>,
    /// Set when the damped normal equations stayed singular at the largest
    /// damping tried; the returned parameters are the last accepted ones.
    pub convergence_warning: bool,
}

/// Accumulates `J^T J` (row-major, full) and `J^T e` with `e = target - out`,
/// returning the MSE at the current parameters.
fn normal_equations(mlp: &MlpPredictor, samples: &TrainingSet) -> (Vec<f64>, Vec<f64>, f64) {
    const P: usize = PARAM_COUNT;
    let mut jtj = vec![0.0; P * P];
    let mut jte = vec![0.0; P];
    let mut sse = 0.0;
    let mut g = [0.0; P];
    for (x, &t) in samples.histories.iter().zip(&samples.targets) {
        let out = mlp.output_gradient(x, &mut g);
        let e = t - out;
        sse += e * e;
        for i in 0..P {
            let gi = g[i];
            if gi == 0.0 {
                continue;
            }
            jte[i] += gi * e;
            let row = &mut jtj[i * P..(i + 1) * P];
            for j in i..P {
                row[j] += gi * g[j];
            }
        }
    }
    for i in 0..P {
        for j in 0..i {
            jtj[i * P + j] = jtj[j * P + i];
        }
    }
    (jtj, jte, sse / samples.len() as f64)
}

/// Runs `epochs_per_start` Levenberg-Marquardt epochs from `mlp`.
///
/// Each epoch solves `(J^T J + lambda I) delta = J^T e`. A step is kept only
/// if it lowers the training MSE, after which `lambda` is divided by the
/// factor; otherwise `lambda` is multiplied and the solve retried, at most
/// `max_lambda_escalations` times per epoch.
pub fn lm_train(
    mlp: &MlpPredictor,
    samples: &TrainingSet,
    config: &TrainConfig,
) -> Result<LmOutcome> {
    config.validate()?;
    if samples.is_empty() {
        return Err(Error::InsufficientData { have: 0, need: 1 });
    }
    const P: usize = PARAM_COUNT;
    let mut theta = mlp.clone();
    let mut lambda = config.lm_lambda_init;
    let mut system: Option<(Vec<f64>, Vec<f64>)> = None;
    let mut mse = samples.mse(&theta);
    let mut accepted_mse = vec![mse];
    let mut warning = false;
    let mut a = vec![0.0; P * P];

    for _ in 0..config.epochs_per_start {
        let (jtj, jte) = system.get_or_insert_with(|| {
            let (jtj, jte, m) = normal_equations(&theta, samples);
            debug_assert!((m - mse).abs() <= 1e-9 * (1.0 + mse));
            (jtj, jte)
        });
        let mut accepted = false;
        let mut last_singular = false;
        for _ in 0..config.max_lambda_escalations {
            a.copy_from_slice(jtj);
            for i in 0..P {
                a[i * P + i] += lambda;
            }
            let Some(delta) = linalg::cholesky_solve(&a, jte, P) else {
                last_singular = true;
                lambda = (lambda * config.lm_lambda_factor).min(LAMBDA_CEILING);
                continue;
            };
            last_singular = false;
            let mut trial = theta.clone();
            trial
                .params
                .iter_mut()
                .zip(&delta)
                .for_each(|(p, d)| *p += d);
            let trial_mse = samples.mse(&trial);
            if trial_mse.is_finite() && trial_mse < mse {
                theta = trial;
                mse = trial_mse;
                accepted_mse.push(mse);
                lambda = (lambda / config.lm_lambda_factor).max(f64::MIN_POSITIVE);
                accepted = true;
                break;
            }
            lambda = (lambda * config.lm_lambda_factor).min(LAMBDA_CEILING);
        }
        if accepted {
            system = None;
        } else {
            if last_singular {
                warning = true;
                log::debug!("LM normal equations singular at lambda {lambda:e}");
            }
            if lambda >= LAMBDA_CEILING {
                break;
            }
        }
    }
    Ok(LmOutcome {
        predictor: theta,
        mse,
        accepted_mse,
        convergence_warning: warning,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultistartOutcome {
    pub predictor: MlpPredictor,
    pub mse: f64,
    /// Final MSE of each candidate; the warm start, when given, comes first.
    pub candidate_mse: Vec<f64>,
    pub winner: usize,
}

/// Trains `num_random_starts` random initializations plus the warm start (or
/// one more random start without it) and keeps the lowest final MSE. Ties go
/// to the earlier candidate.
pub fn train_multistart(
    samples: &TrainingSet,
    config: &TrainConfig,
    warm_start: Option<&MlpPredictor>,
) -> Result<MultistartOutcome> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let random_count = config.num_random_starts + usize::from(warm_start.is_none());
    let inits = warm_start
        .cloned()
        .into_iter()
        .chain((0..random_count).map(|_| MlpPredictor::random(&mut rng)));
    let mut best: Option<(usize, LmOutcome)> = None;
    let mut candidate_mse = Vec::with_capacity(random_count + 1);
    for (i, init) in inits.enumerate() {
        let out = lm_train(&init, samples, config)?;
        candidate_mse.push(out.mse);
        if best.as_ref().is_none_or(|(_, b)| out.mse < b.mse) {
            best = Some((i, out));
        }
    }
    let (winner, out) = best.expect("at least one candidate");
    Ok(MultistartOutcome {
        predictor: out.predictor,
        mse: out.mse,
        candidate_mse,
        winner,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parameter_layout() {
        assert_eq!(PARAM_COUNT, 57);
        assert_eq!(OUTPUT_BIAS, 56);
    }

    #[test]
    fn zero_network_predicts_zero() {
        let m = MlpPredictor::zeros();
        assert_eq!(m.predict(&[0.7; 10]), 0.0);
    }

    #[test]
    fn output_bias_passes_through() {
        let mut m = MlpPredictor::zeros();
        m.params_mut()[OUTPUT_BIAS] = 0.25;
        assert_eq!(m.predict(&[-0.3; 10]), 0.25);
    }

    #[test]
    fn jacobian_trivial_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = MlpPredictor::random(&mut rng);
        let j = jacobian(&m, &[[0.0; 10]]);
        assert_eq!(j[0][OUTPUT_BIAS], 1.0);
        assert!(j[0][INPUT_WEIGHTS].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn rejects_wrong_parameter_count() {
        assert!(MlpPredictor::from_params(&[0.0; 56]).is_err());
        assert!(MlpPredictor::from_params(&[f64::NAN; 57]).is_err());
    }

    #[test]
    fn self_generated_targets_stay_put() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = MlpPredictor::random(&mut rng);
        let mut set = TrainingSet::default();
        for _ in 0..300 {
            let h: History = core::array::from_fn(|_| rng.gen_range(-1.0..1.0));
            set.push(h, m.predict(&h));
        }
        let out = lm_train(&m, &set, &TrainConfig::default()).unwrap();
        assert!(out.mse < 1e-20);
        let moved = out
            .predictor
            .params()
            .iter()
            .zip(m.params())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(moved < 1e-6, "{moved}");
    }

    #[test]
    fn empty_training_set_is_an_error() {
        assert!(lm_train(
            &MlpPredictor::zeros(),
            &TrainingSet::default(),
            &TrainConfig::default()
        )
        .is_err());
    }

    #[test]
    fn subsample_keeps_order_and_size() {
        let mut set = TrainingSet::default();
        for i in 0..100 {
            set.push([i as f64; 10], i as f64);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        set.subsample(10, &mut rng);
        assert_eq!(set.len(), 10);
        assert!(set.targets.windows(2).all(|w| w[0] < w[1]));
    }
}
