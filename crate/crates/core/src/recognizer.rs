//! Sentence scoring, score fusion and K-preselection.
//!
//! A sentence is first quantized with every speaker's LPCC codebook. The `k`
//! speakers with the lowest accumulated LPCC distortion are kept, and only
//! their predictor codebooks filter the frames. The decision minimizes
//! `lpcc + alpha * residue` among the kept speakers; ties fall back to the
//! lower LPCC score and then to the lexicographically smaller id.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::cost::{CostModel, OpCounter, DEFAULT_C_TG};
use crate::error::{Error, Result};
use crate::frontend::{Frame, LpccVector, SentenceFeatures, CEPSTRUM_ORDER, FRAME_LEN};
use crate::linear_codebook::LinearCodebook;
use crate::mlp::{HIDDEN1, HIDDEN2, INPUTS};
use crate::nonlinear_codebook::NonlinearCodebook;
use crate::predictor::{best_residual, LpcCodebook, ResidualMeasure, SamplePredictor};

/// Everything enrolled for one speaker.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpeakerModel {
    pub speaker_id: String,
    pub linear_cb: LinearCodebook,
    pub nonlinear_cb: Option<NonlinearCodebook>,
    /// Linear predictors per LPCC cell, for the linear-residue baseline.
    #[cfg_attr(feature = "serde", serde(default))]
    pub lpc_cb: Option<LpcCodebook>,
}

/// Which predictor codebook produces the residue term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ResidualSource {
    #[default]
    Mlp,
    Lpc,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentifyConfig {
    pub alpha: f64,
    pub k: usize,
    pub measure: ResidualMeasure,
    pub source: ResidualSource,
    /// Units charged per `tanh` by the runtime counter.
    pub c_tg: u64,
}

impl IdentifyConfig {
    pub fn new(alpha: f64, k: usize) -> Self {
        Self {
            alpha,
            k,
            measure: ResidualMeasure::Mae,
            source: ResidualSource::Mlp,
            c_tg: DEFAULT_C_TG,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecognitionResult {
    pub decided_speaker: String,
    pub lpcc_scores: BTreeMap<String, f64>,
    /// Only preselected speakers; empty when `alpha == 0`.
    pub residual_scores: BTreeMap<String, f64>,
    /// Only preselected speakers.
    pub combined_scores: BTreeMap<String, f64>,
    /// Ascending LPCC score order.
    pub preselected: Vec<String>,
    pub alpha: f64,
    pub k: usize,
    pub instruction_count: u64,
    pub frames_scored: usize,
}

/// Accumulated (summed) nearest-centroid distortion of a sentence.
pub fn score_lpcc(sentence: &[LpccVector], cb: &LinearCodebook, counter: &mut OpCounter) -> f64 {
    sentence
        .iter()
        .map(|v| cb.quantize_counted(v, counter).distortion)
        .sum()
}

/// Sum over frames of the lowest frame residual in the codebook.
pub fn score_residual<P: SamplePredictor>(
    frames: &[Frame],
    predictors: &[P],
    measure: ResidualMeasure,
    counter: &mut OpCounter,
    c_tg: u64,
) -> f64 {
    frames
        .iter()
        .map(|f| best_residual(predictors, f.raw(), measure, counter, c_tg).1)
        .sum()
}

/// `lpcc_err + alpha * residue_err`.
#[inline]
pub fn combine(lpcc_err: f64, residue_err: f64, alpha: f64) -> f64 {
    lpcc_err + alpha * residue_err
}

/// Indices of the `k` lowest LPCC scores, ordered by score then id.
pub fn preselect(lpcc_scores: &[f64], ids: &[&str], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..lpcc_scores.len()).collect();
    order.sort_by(|&a, &b| {
        lpcc_scores[a]
            .total_cmp(&lpcc_scores[b])
            .then_with(|| ids[a].cmp(ids[b]))
    });
    order.truncate(k);
    order
}

/// Winner among `candidates` by `key`, then LPCC score, then id.
fn argmin_by(
    candidates: &[usize],
    key: impl Fn(usize) -> f64,
    lpcc_scores: &[f64],
    ids: &[&str],
) -> usize {
    let cmp = |a: usize, b: usize| -> Ordering {
        key(a)
            .total_cmp(&key(b))
            .then_with(|| lpcc_scores[a].total_cmp(&lpcc_scores[b]))
            .then_with(|| ids[a].cmp(ids[b]))
    };
    candidates
        .iter()
        .copied()
        .reduce(|best, c| {
            if cmp(c, best) == Ordering::Less {
                c
            } else {
                best
            }
        })
        .expect("nonempty candidate set")
}

/// Fused decision among `candidates`. `residual_scores[i]` is only read for
/// candidates and only when `alpha != 0`.
pub fn decide(
    candidates: &[usize],
    lpcc_scores: &[f64],
    residual_scores: &[f64],
    alpha: f64,
    ids: &[&str],
) -> usize {
    if alpha == 0.0 {
        return argmin_by(candidates, |i| lpcc_scores[i], lpcc_scores, ids);
    }
    argmin_by(
        candidates,
        |i| combine(lpcc_scores[i], residual_scores[i], alpha),
        lpcc_scores,
        ids,
    )
}

/// Decision by residue alone among `candidates` (the pure predictor-VQ
/// baseline).
pub fn decide_residual_only(
    candidates: &[usize],
    lpcc_scores: &[f64],
    residual_scores: &[f64],
    ids: &[&str],
) -> usize {
    argmin_by(candidates, |i| residual_scores[i], lpcc_scores, ids)
}

fn residual_for(
    model: &SpeakerModel,
    frames: &[Frame],
    cfg: &IdentifyConfig,
    counter: &mut OpCounter,
) -> Result<f64> {
    match cfg.source {
        ResidualSource::Mlp => {
            let ncb = model
                .nonlinear_cb
                .as_ref()
                .ok_or_else(|| Error::MissingNonlinearCodebook(model.speaker_id.clone()))?;
            Ok(score_residual(
                frames,
                ncb.predictors(),
                cfg.measure,
                counter,
                cfg.c_tg,
            ))
        }
        ResidualSource::Lpc => {
            let lcb = model
                .lpc_cb
                .as_ref()
                .ok_or_else(|| Error::MissingLpcCodebook(model.speaker_id.clone()))?;
            Ok(score_residual(
                frames,
                &lcb.predictors,
                cfg.measure,
                counter,
                cfg.c_tg,
            ))
        }
    }
}

fn check_residual_codebooks(models: &[SpeakerModel], source: ResidualSource) -> Result<()> {
    for m in models {
        match source {
            ResidualSource::Mlp if m.nonlinear_cb.is_none() => {
                return Err(Error::MissingNonlinearCodebook(m.speaker_id.clone()))
            }
            ResidualSource::Lpc if m.lpc_cb.is_none() => {
                return Err(Error::MissingLpcCodebook(m.speaker_id.clone()))
            }
            _ => {}
        }
    }
    Ok(())
}

fn check_inputs(
    features: &SentenceFeatures,
    models: &[SpeakerModel],
    cfg: &IdentifyConfig,
) -> Result<()> {
    if models.is_empty() {
        return Err(Error::InvalidArgument("no speaker models"));
    }
    if features.is_empty() {
        return Err(Error::NoFrames);
    }
    if features.frames.len() != features.lpcc.len() {
        return Err(Error::InvalidArgument(
            "frames and LPCC vectors differ in length",
        ));
    }
    if cfg.k == 0 || cfg.k > models.len() {
        return Err(Error::InvalidK {
            k: cfg.k,
            n: models.len(),
        });
    }
    if !(cfg.alpha >= 0.0) || !cfg.alpha.is_finite() {
        return Err(Error::InvalidArgument(
            "alpha must be finite and non-negative",
        ));
    }
    Ok(())
}

/// Closed-set identification of one sentence with K-preselection.
///
/// With `alpha == 0` no residual is computed and the decision is the LPCC
/// argmin. The returned `instruction_count` is the number of accounting units
/// actually spent; see [`CostModel`].
pub fn identify(
    features: &SentenceFeatures,
    models: &[SpeakerModel],
    cfg: &IdentifyConfig,
) -> Result<RecognitionResult> {
    check_inputs(features, models, cfg)?;
    if cfg.alpha > 0.0 {
        check_residual_codebooks(models, cfg.source)?;
    }
    let ids: Vec<&str> = models.iter().map(|m| m.speaker_id.as_str()).collect();
    let mut counter = OpCounter::default();
    let lpcc: Vec<f64> = models
        .iter()
        .map(|m| score_lpcc(&features.lpcc, &m.linear_cb, &mut counter))
        .collect();
    let chosen = preselect(&lpcc, &ids, cfg.k);

    let mut residual = alloc::vec![0.0; models.len()];
    if cfg.alpha > 0.0 {
        for &i in &chosen {
            residual[i] = residual_for(&models[i], &features.frames, cfg, &mut counter)?;
        }
    }
    let winner = decide(&chosen, &lpcc, &residual, cfg.alpha, &ids);

    let name = |i: usize| String::from(ids[i]);
    Ok(RecognitionResult {
        decided_speaker: name(winner),
        lpcc_scores: (0..models.len()).map(|i| (name(i), lpcc[i])).collect(),
        residual_scores: if cfg.alpha > 0.0 {
            chosen.iter().map(|&i| (name(i), residual[i])).collect()
        } else {
            BTreeMap::new()
        },
        combined_scores: chosen
            .iter()
            .map(|&i| (name(i), combine(lpcc[i], residual[i], cfg.alpha)))
            .collect(),
        preselected: chosen.iter().map(|&i| name(i)).collect(),
        alpha: cfg.alpha,
        k: cfg.k,
        instruction_count: counter.total(),
        frames_scored: features.len(),
    })
}

/// LPCC and residual scores of every speaker for one sentence. Fused or
/// preselected decisions for any `(alpha, k)` can then be read off without
/// rescoring; they coincide with what [`identify`] decides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSheet {
    pub lpcc: Vec<f64>,
    /// `None` when residual scoring was not requested.
    pub residual: Option<Vec<f64>>,
    pub frames_scored: usize,
}

impl ScoreSheet {
    /// Scores every speaker. Residuals are computed only when `with_residual`.
    pub fn compute(
        features: &SentenceFeatures,
        models: &[SpeakerModel],
        measure: ResidualMeasure,
        source: ResidualSource,
        with_residual: bool,
    ) -> Result<Self> {
        let cfg = IdentifyConfig {
            measure,
            source,
            ..IdentifyConfig::new(0.0, models.len().max(1))
        };
        check_inputs(features, models, &cfg)?;
        if with_residual {
            check_residual_codebooks(models, source)?;
        }
        let mut counter = OpCounter::default();
        let lpcc = models
            .iter()
            .map(|m| score_lpcc(&features.lpcc, &m.linear_cb, &mut counter))
            .collect();
        let residual = if with_residual {
            Some(
                models
                    .iter()
                    .map(|m| residual_for(m, &features.frames, &cfg, &mut counter))
                    .collect::<Result<Vec<_>>>()?,
            )
        } else {
            None
        };
        Ok(Self {
            lpcc,
            residual,
            frames_scored: features.len(),
        })
    }

    /// Index of the fused decision for `(alpha, k)`.
    pub fn decide(&self, ids: &[&str], alpha: f64, k: usize) -> Result<usize> {
        let n = self.lpcc.len();
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        let chosen = preselect(&self.lpcc, ids, k);
        if alpha == 0.0 {
            return Ok(decide(&chosen, &self.lpcc, &self.lpcc, 0.0, ids));
        }
        let residual = self
            .residual
            .as_ref()
            .ok_or(Error::InvalidArgument("score sheet has no residual scores"))?;
        Ok(decide(&chosen, &self.lpcc, residual, alpha, ids))
    }

    /// Index of the residual-only decision among the `k` preselected.
    pub fn decide_residual_only(&self, ids: &[&str], k: usize) -> Result<usize> {
        let n = self.lpcc.len();
        if k == 0 || k > n {
            return Err(Error::InvalidK { k, n });
        }
        let residual = self
            .residual
            .as_ref()
            .ok_or(Error::InvalidArgument("score sheet has no residual scores"))?;
        let chosen = preselect(&self.lpcc, ids, k);
        Ok(decide_residual_only(&chosen, &self.lpcc, residual, ids))
    }
}

/// Per-frame cost model matching a set of models that share codebook sizes.
/// Returns `None` if the models disagree on sizes or lack MLP codebooks.
pub fn cost_model_for(models: &[SpeakerModel], k: usize, c_tg: u64) -> Option<CostModel> {
    let first = models.first()?;
    let t_cl = first.linear_cb.len();
    let t_cnl = first.nonlinear_cb.as_ref()?.len();
    let uniform = models.iter().all(|m| {
        m.linear_cb.len() == t_cl && m.nonlinear_cb.as_ref().is_some_and(|n| n.len() == t_cnl)
    });
    uniform.then_some(CostModel {
        t_cl: t_cl as u64,
        t_cnl: t_cnl as u64,
        k: k as u64,
        l_t: FRAME_LEN as u64,
        n_i: INPUTS as u64,
        n_h1: HIDDEN1 as u64,
        n_h2: HIDDEN2 as u64,
        c_tg,
        p: CEPSTRUM_ORDER as u64,
        n: models.len() as u64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn combine_arithmetic() {
        assert_eq!(combine(2.0, 0.5, 4.0), 4.0);
        assert_eq!(combine(2.0, 0.5, 0.0), 2.0);
    }

    #[test]
    fn preselect_orders_by_score_then_id() {
        let ids = ["c", "a", "b"];
        assert_eq!(preselect(&[1.0, 1.0, 0.5], &ids, 2), vec![2, 1]);
        assert_eq!(preselect(&[1.0, 1.0, 0.5], &ids, 3), vec![2, 1, 0]);
    }

    #[test]
    fn decide_tie_chain() {
        let ids = ["b", "a", "c"];
        // equal combined; lower lpcc wins
        let lpcc = [1.0, 2.0, 3.0];
        let res = [1.0, 0.5, 0.0];
        assert_eq!(decide(&[0, 1, 2], &lpcc, &res, 2.0, &ids), 0);
        // equal combined and lpcc; id decides
        let lpcc = [1.0, 1.0, 5.0];
        let res = [0.0, 0.0, 0.0];
        assert_eq!(decide(&[0, 1, 2], &lpcc, &res, 1.0, &ids), 1);
    }

    #[test]
    fn alpha_zero_ignores_residue() {
        let ids = ["a", "b"];
        assert_eq!(decide(&[0, 1], &[1.0, 2.0], &[100.0, 0.0], 0.0, &ids), 0);
        assert_eq!(decide(&[0, 1], &[1.0, 2.0], &[100.0, 0.0], 1.0, &ids), 1);
    }
}
