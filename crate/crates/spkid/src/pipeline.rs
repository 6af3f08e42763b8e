//! Per-speaker model training.

use rayon::prelude::*;
use spkid_core::linear_codebook::train_codebook_stages;
use spkid_core::nonlinear_codebook::train_nonlinear_codebook;
use spkid_core::predictor::train_lpc_codebook;
use spkid_core::{
    derive_seed, Distance, NonlinearConfig, SentenceFeatures, SpeakerModel, SplitMethod,
    TrainConfig, VqConfig,
};

use crate::corpus::{Corpus, SpeakerData};
use crate::error::{Error, Result};

/// Every hyperparameter of a training run; stored with the models.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TrainingConfig {
    pub linear_bits: u32,
    pub nonlinear_bits: u32,
    pub lloyd_iters: usize,
    pub seed: u64,
    pub split_method: SplitMethod,
    pub distance: Distance,
    pub vq_rel_tolerance: f64,
    pub vq_max_lloyd_iters: usize,
    /// When false, models carry no MLP codebook.
    pub nonlinear: bool,
    pub epochs_per_start: usize,
    pub num_random_starts: usize,
    pub lm_lambda_init: f64,
    pub lm_lambda_factor: f64,
    pub max_lambda_escalations: usize,
    pub max_pairs_per_cluster: usize,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let mlp = TrainConfig::default();
        let vq = VqConfig::new(5, SplitMethod::Hyperplane);
        Self {
            linear_bits: 5,
            nonlinear_bits: 4,
            lloyd_iters: 0,
            seed: 0,
            split_method: vq.split_method,
            distance: vq.distance,
            vq_rel_tolerance: vq.rel_tolerance,
            vq_max_lloyd_iters: vq.max_lloyd_iters,
            nonlinear: true,
            epochs_per_start: mlp.epochs_per_start,
            num_random_starts: mlp.num_random_starts,
            lm_lambda_init: mlp.lm_lambda_init,
            lm_lambda_factor: mlp.lm_lambda_factor,
            max_lambda_escalations: mlp.max_lambda_escalations,
            max_pairs_per_cluster: NonlinearConfig::default().max_pairs_per_cluster,
        }
    }
}

impl TrainingConfig {
    fn vq(&self) -> VqConfig {
        VqConfig {
            size_bits: self.linear_bits.max(self.nonlinear_bits),
            split_method: self.split_method,
            distance: self.distance,
            rel_tolerance: self.vq_rel_tolerance,
            max_lloyd_iters: self.vq_max_lloyd_iters,
        }
    }

    fn nonlinear_config(&self, seed: u64) -> NonlinearConfig {
        NonlinearConfig {
            lloyd_iters: self.lloyd_iters,
            mlp: TrainConfig {
                epochs_per_start: self.epochs_per_start,
                num_random_starts: self.num_random_starts,
                lm_lambda_init: self.lm_lambda_init,
                lm_lambda_factor: self.lm_lambda_factor,
                max_lambda_escalations: self.max_lambda_escalations,
                seed,
            },
            max_pairs_per_cluster: self.max_pairs_per_cluster,
        }
    }
}

/// Frames and LPCC of all of a speaker's training utterances, in order.
pub fn training_features(speaker: &SpeakerData) -> Result<SentenceFeatures> {
    let mut all = SentenceFeatures::default();
    for u in &speaker.train {
        all.extend(u.features()?);
    }
    Ok(all)
}

/// Trains one speaker. `stream` decorrelates the MLP seeds of different
/// speakers.
///
/// The LPCC codebook and the codebook that clusters frames for the MLP
/// codebook come from the same splitting run. The linear-residue codebook
/// has one LPC predictor per cell of that clustering codebook.
pub fn train_speaker(
    speaker: &SpeakerData,
    config: &TrainingConfig,
    stream: u64,
) -> Result<SpeakerModel> {
    let ctx = |what: &str| format!("speaker {}: {what}", speaker.id);
    let features = training_features(speaker)?;
    if features.is_empty() {
        return Err(Error::core(
            ctx("feature extraction"),
            spkid_core::Error::NoFrames,
        ));
    }
    let stages = train_codebook_stages(&features.lpcc, &config.vq())
        .map_err(|e| Error::core(ctx("LPCC codebook"), e))?;
    let linear_cb = stages[config.linear_bits as usize].clone();
    let cluster_cb = &stages[config.nonlinear_bits as usize];
    let lpc_cb = train_lpc_codebook(&features.frames, &features.lpcc, cluster_cb)
        .map_err(|e| Error::core(ctx("LPC codebook"), e))?;
    let nonlinear_cb = if config.nonlinear {
        let cfg = config.nonlinear_config(derive_seed(config.seed, stream));
        Some(
            train_nonlinear_codebook(&features.frames, &features.lpcc, cluster_cb, &cfg)
                .map_err(|e| Error::core(ctx("MLP codebook"), e))?,
        )
    } else {
        None
    };
    log::info!(
        "trained {}: {} frames ({} skipped), LPCC distortion {:.5}",
        speaker.id,
        features.len(),
        features.skipped,
        linear_cb.training_distortion()
    );
    Ok(SpeakerModel {
        speaker_id: speaker.id.clone(),
        linear_cb,
        nonlinear_cb,
        lpc_cb: Some(lpc_cb),
    })
}

/// One model per corpus speaker, in corpus order. Speakers train in
/// parallel; the result does not depend on the thread count.
pub fn train_models(corpus: &Corpus, config: &TrainingConfig) -> Result<Vec<SpeakerModel>> {
    corpus
        .speakers()
        .par_iter()
        .enumerate()
        .map(|(i, s)| train_speaker(s, config, i as u64))
        .collect()
}
