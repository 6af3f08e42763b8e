//! Sample predictors and frame residual scoring.
//!
//! A predictor maps the previous 10 raw samples (oldest first) to an estimate
//! of the next one. Within a 240-sample frame the residual is taken for
//! `n = 10..240`, i.e. 230 predictions per frame; histories never reach into
//! the neighbouring frame.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::frontend::{autocorrelate, levinson_durbin, Frame, LpccVector};
use crate::linear_codebook::LinearCodebook;
use crate::nonlinear_codebook::cluster_by_linear;
use crate::OpCounter;

/// Number of past samples a predictor sees.
pub const HISTORY_LEN: usize = 10;

/// Magnitude used to summarise a residual signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ResidualMeasure {
    #[default]
    Mae,
    Mse,
}

pub trait SamplePredictor {
    /// `history` holds exactly [`HISTORY_LEN`] samples, oldest first.
    fn predict(&self, history: &[f64]) -> f64;

    /// Accounting units charged per prediction, given the cost of one
    /// nonlinear transfer function evaluation.
    fn units_per_prediction(&self, c_tg: u64) -> u64;
}

/// Number of residual samples a frame of `len` samples yields.
pub fn residual_count(len: usize) -> usize {
    len.saturating_sub(HISTORY_LEN)
}

/// Mean absolute (or squared) prediction error over one frame's raw samples.
pub fn frame_residual<P: SamplePredictor + ?Sized>(
    predictor: &P,
    raw: &[f64],
    measure: ResidualMeasure,
) -> f64 {
    let count = residual_count(raw.len());
    if count == 0 {
        return 0.0;
    }
    let total: f64 = (HISTORY_LEN..raw.len())
        .map(|n| {
            let e = raw[n] - predictor.predict(&raw[n - HISTORY_LEN..n]);
            match measure {
                ResidualMeasure::Mae => e.abs(),
                ResidualMeasure::Mse => e * e,
            }
        })
        .sum();
    total / count as f64
}

/// Lowest frame residual over a codebook of predictors, with the winning
/// index (ties go to the lower index). Charges every prediction to `counter`.
pub fn best_residual<P: SamplePredictor>(
    predictors: &[P],
    raw: &[f64],
    measure: ResidualMeasure,
    counter: &mut OpCounter,
    c_tg: u64,
) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, p) in predictors.iter().enumerate() {
        let r = frame_residual(p, raw, measure);
        counter.add(residual_count(raw.len()) as u64 * p.units_per_prediction(c_tg));
        if r < best.1 {
            best = (i, r);
        }
    }
    best
}

// ---------------------------------------------------------------------------
// Linear predictors
// ---------------------------------------------------------------------------

/// Order-10 linear predictor `x^[n] = sum_k a_k x[n-k]`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpcPredictor {
    pub coeffs: [f64; HISTORY_LEN],
}

impl SamplePredictor for LpcPredictor {
    #[inline]
    fn predict(&self, history: &[f64]) -> f64 {
        // history[HISTORY_LEN - k] is x[n - k]
        self.coeffs
            .iter()
            .zip(history.iter().rev())
            .map(|(a, x)| a * x)
            .sum()
    }

    fn units_per_prediction(&self, _c_tg: u64) -> u64 {
        HISTORY_LEN as u64
    }
}

/// Codebook of linear predictors, one per cell of a speaker's LPCC codebook.
/// Used for the linear-residue baseline.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LpcCodebook {
    pub predictors: Vec<LpcPredictor>,
}

/// Fits one order-10 predictor per LPCC cell, pooling the autocorrelation of
/// the raw frames assigned to the cell. Cells that receive no usable frames
/// get the all-zero predictor.
pub fn train_lpc_codebook(
    frames: &[Frame],
    lpcc: &[LpccVector],
    cb: &LinearCodebook,
) -> Result<LpcCodebook> {
    if frames.len() != lpcc.len() {
        return Err(Error::InvalidArgument(
            "frames and LPCC vectors differ in length",
        ));
    }
    let clusters = cluster_by_linear(lpcc, cb);
    let predictors = clusters
        .iter()
        .map(|members| {
            let mut r = [0.0; HISTORY_LEN + 1];
            for &i in members {
                let fr = autocorrelate(frames[i].raw(), HISTORY_LEN)?;
                r.iter_mut().zip(fr).for_each(|(acc, v)| *acc += v);
            }
            let coeffs = match levinson_durbin(&r, HISTORY_LEN) {
                Ok(a) => a.lpc.try_into().expect("order 10"),
                Err(_) => [0.0; HISTORY_LEN],
            };
            Ok(LpcPredictor { coeffs })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(LpcCodebook { predictors })
}
