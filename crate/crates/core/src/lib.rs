//! Text-independent speaker identification from LPCC vector-quantization
//! codebooks fused with codebooks of nonlinear MLP sample predictors.
//!
//! Each enrolled speaker carries two models:
//!
//! - a [`LinearCodebook`] of 12-dimensional LPCC centroids, designed with the
//!   splitting algorithm and Lloyd refinement;
//! - a [`NonlinearCodebook`] of 10-4-2-1 [`MlpPredictor`]s, initialised by
//!   clustering frames with a linear codebook of the same size and refined by
//!   a generalized Lloyd iteration that reassigns frames by residual error.
//!
//! Recognition quantizes a sentence with every LPCC codebook, keeps the `K`
//! speakers with lowest accumulated distortion, and only for those filters the
//! frames through the predictor codebook. The decision minimizes
//! `lpcc_error + alpha * residue_error` among the preselected speakers. The
//! [`CostModel`] gives the per-frame operation count of that procedure, and
//! [`identify`] counts the same units at runtime.
//!
//! The crate is `no_std` and needs only `alloc`.

#![no_std]
#![forbid(unsafe_code)]
// `!(x > 0.0)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod cost;
pub mod error;
pub mod frontend;
mod linalg;
pub mod linear_codebook;
mod math;
pub mod mlp;
pub mod nonlinear_codebook;
pub mod predictor;
pub mod recognizer;
mod seed;

pub use cost::{CostModel, OpCounter};
pub use error::{Error, Result};
pub use frontend::{
    extract_features, prepare, AudioSignal, Frame, LpcAnalysis, LpccVector, SentenceFeatures,
};
pub use linear_codebook::{Distance, LinearCodebook, QuantizationResult, SplitMethod, VqConfig};
pub use mlp::{MlpPredictor, TrainConfig, TrainingSet};
pub use nonlinear_codebook::{NonlinearCodebook, NonlinearConfig};
pub use predictor::{LpcCodebook, LpcPredictor, ResidualMeasure, SamplePredictor};
pub use recognizer::{identify, IdentifyConfig, RecognitionResult, ResidualSource, SpeakerModel};
pub use seed::derive_seed;
