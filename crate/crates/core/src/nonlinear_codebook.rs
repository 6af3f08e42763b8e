//! Codebooks of MLP predictors.
//!
//! Iteration 0 clusters the training frames with an LPCC codebook of the same
//! size and trains one predictor per cluster with multi-start LM. Each further
//! generalized Lloyd iteration reassigns every frame to the predictor with the
//! lowest residual MAE and retrains each predictor on its new cluster, warm
//! started from its previous weights.

use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::frontend::{Frame, LpccVector};
use crate::linear_codebook::LinearCodebook;
use crate::mlp::{train_multistart, MlpPredictor, TrainConfig, TrainingSet};
use crate::predictor::{frame_residual, ResidualMeasure};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NonlinearCodebook {
    predictors: Vec<MlpPredictor>,
    size_bits: u32,
    lloyd_iterations_done: usize,
    distortion_history: Vec<f64>,
}

impl NonlinearCodebook {
    /// Wraps already trained predictors; their count must be a power of two.
    pub fn from_predictors(predictors: Vec<MlpPredictor>) -> Result<Self> {
        if predictors.is_empty() || !predictors.len().is_power_of_two() {
            return Err(Error::InvalidArgument(
                "codebook size must be a power of two",
            ));
        }
        Ok(Self {
            size_bits: predictors.len().trailing_zeros(),
            predictors,
            lloyd_iterations_done: 0,
            distortion_history: Vec::new(),
        })
    }

    pub fn predictors(&self) -> &[MlpPredictor] {
        &self.predictors
    }

    pub fn len(&self) -> usize {
        self.predictors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predictors.is_empty()
    }

    pub fn size_bits(&self) -> u32 {
        self.size_bits
    }

    pub fn lloyd_iterations_done(&self) -> usize {
        self.lloyd_iterations_done
    }

    /// Mean per-frame residual MAE after iteration 0, 1, ...
    pub fn distortion_history(&self) -> &[f64] {
        &self.distortion_history
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct NonlinearConfig {
    pub lloyd_iters: usize,
    pub mlp: TrainConfig,
    /// Training pairs per cluster beyond this are uniformly subsampled.
    pub max_pairs_per_cluster: usize,
}

impl Default for NonlinearConfig {
    fn default() -> Self {
        Self {
            lloyd_iters: 0,
            mlp: TrainConfig::default(),
            max_pairs_per_cluster: 20_000,
        }
    }
}

/// Partition of frame indices by nearest LPCC centroid.
pub fn cluster_by_linear(lpcc: &[LpccVector], cb: &LinearCodebook) -> Vec<Vec<usize>> {
    let mut clusters = vec![Vec::new(); cb.len()];
    for (i, v) in lpcc.iter().enumerate() {
        clusters[cb.quantize(v).nearest_index].push(i);
    }
    clusters
}

/// Index of the predictor with the lowest residual MAE on `raw` (ties go
/// low), with that residual.
pub fn nearest_predictor(predictors: &[MlpPredictor], raw: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in predictors.iter().enumerate() {
        let r = frame_residual(p, raw, ResidualMeasure::Mae);
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

/// Partition of frame indices by lowest-residual predictor.
pub fn assign_by_residual(frames: &[Frame], ncb: &NonlinearCodebook) -> Vec<Vec<usize>> {
    assign_with_residuals(frames, &ncb.predictors).0
}

fn assign_with_residuals(
    frames: &[Frame],
    predictors: &[MlpPredictor],
) -> (Vec<Vec<usize>>, Vec<f64>) {
    let mut clusters = vec![Vec::new(); predictors.len()];
    let mut residuals = Vec::with_capacity(frames.len());
    for (i, f) in frames.iter().enumerate() {
        let (best, r) = nearest_predictor(predictors, f.raw());
        clusters[best].push(i);
        residuals.push(r);
    }
    (clusters, residuals)
}

fn cluster_training_set(frames: &[Frame], members: &[usize], cap: usize, seed: u64) -> TrainingSet {
    let mut set = TrainingSet::default();
    for &i in members {
        set.extend_from_frame(frames[i].raw());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    set.subsample(cap, &mut rng);
    set
}

fn cluster_mae(frames: &[Frame], members: &[usize], p: &MlpPredictor) -> f64 {
    members
        .iter()
        .map(|&i| frame_residual(p, frames[i].raw(), ResidualMeasure::Mae))
        .sum()
}

fn mean_assigned_mae(
    frames: &[Frame],
    clusters: &[Vec<usize>],
    predictors: &[MlpPredictor],
) -> f64 {
    let total: f64 = clusters
        .iter()
        .zip(predictors)
        .map(|(m, p)| cluster_mae(frames, m, p))
        .sum();
    total / frames.len() as f64
}

/// Trains a predictor codebook with `linear_cb.len()` entries.
///
/// Iterations after the first keep a cluster's previous predictor when the
/// cluster is empty or when retraining did not lower the cluster's residual
/// MAE, so the recorded distortion never increases.
pub fn train_nonlinear_codebook(
    frames: &[Frame],
    lpcc: &[LpccVector],
    linear_cb: &LinearCodebook,
    config: &NonlinearConfig,
) -> Result<NonlinearCodebook> {
    if frames.is_empty() {
        return Err(Error::NoFrames);
    }
    if frames.len() != lpcc.len() {
        return Err(Error::InvalidArgument(
            "frames and LPCC vectors differ in length",
        ));
    }
    config.mlp.validate()?;
    let size = linear_cb.len();
    let stream = |iteration: usize, cell: usize| {
        derive_seed(config.mlp.seed, ((iteration as u64) << 32) | cell as u64)
    };

    let mut clusters = cluster_by_linear(lpcc, linear_cb);
    let all: Vec<usize> = (0..frames.len()).collect();
    let mut predictors = Vec::with_capacity(size);
    for (cell, members) in clusters.iter().enumerate() {
        let members: &[usize] = if members.is_empty() {
            log::warn!("LPCC cell {cell} is empty; training its predictor on all frames");
            &all
        } else {
            members
        };
        let seed = stream(0, cell);
        let set = cluster_training_set(frames, members, config.max_pairs_per_cluster, seed);
        let cfg = TrainConfig { seed, ..config.mlp };
        predictors.push(train_multistart(&set, &cfg, None)?.predictor);
    }
    let mut history = vec![mean_assigned_mae(frames, &clusters, &predictors)];
    log::debug!(
        "nonlinear codebook iteration 0: distortion {:.6}",
        history[0]
    );

    for iteration in 1..=config.lloyd_iters {
        clusters = assign_with_residuals(frames, &predictors).0;
        for (cell, members) in clusters.iter().enumerate() {
            if members.is_empty() {
                continue;
            }
            let seed = stream(iteration, cell);
            let set = cluster_training_set(frames, members, config.max_pairs_per_cluster, seed);
            let cfg = TrainConfig { seed, ..config.mlp };
            let candidate = train_multistart(&set, &cfg, Some(&predictors[cell]))?.predictor;
            if cluster_mae(frames, members, &candidate)
                <= cluster_mae(frames, members, &predictors[cell])
            {
                predictors[cell] = candidate;
            }
        }
        let d = mean_assigned_mae(frames, &clusters, &predictors);
        log::debug!("nonlinear codebook iteration {iteration}: distortion {d:.6}");
        history.push(d);
    }

    Ok(NonlinearCodebook {
        predictors,
        size_bits: linear_cb.size_bits(),
        lloyd_iterations_done: config.lloyd_iters,
        distortion_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linear_codebook::{Distance, SplitMethod};

    fn lp(x: f64) -> LpccVector {
        LpccVector([x; 12])
    }

    #[test]
    fn cluster_by_linear_on_centroids() {
        let cb = LinearCodebook::from_centroids(
            vec![lp(0.0), lp(1.0), lp(2.0), lp(3.0)],
            SplitMethod::StdDev,
            Distance::Mae,
        )
        .unwrap();
        let data = [lp(2.0), lp(0.0), lp(3.0), lp(2.0)];
        assert_eq!(
            cluster_by_linear(&data, &cb),
            vec![vec![1], vec![], vec![0, 3], vec![2]]
        );

        let one = LinearCodebook::from_centroids(vec![lp(9.0)], SplitMethod::StdDev, Distance::Mae)
            .unwrap();
        assert_eq!(cluster_by_linear(&data, &one), vec![vec![0, 1, 2, 3]]);
    }

    #[test]
    fn single_predictor_gets_everything() {
        let frames: Vec<Frame> = (0..3)
            .map(|k| Frame::from_raw(&[0.1 * k as f64; 240], 0).unwrap())
            .collect();
        let ncb = NonlinearCodebook::from_predictors(vec![MlpPredictor::zeros()]).unwrap();
        assert_eq!(assign_by_residual(&frames, &ncb), vec![vec![0, 1, 2]]);
    }

    #[test]
    fn no_frames_is_an_error() {
        let cb = LinearCodebook::from_centroids(vec![lp(0.0)], SplitMethod::StdDev, Distance::Mae)
            .unwrap();
        assert_eq!(
            train_nonlinear_codebook(&[], &[], &cb, &NonlinearConfig::default()),
            Err(Error::NoFrames)
        );
    }
}
